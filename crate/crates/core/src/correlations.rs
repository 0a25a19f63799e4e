//! Empirical correlations for bubbly pipe flow: Eötvös and Reynolds numbers,
//! Besagni aspect ratio, Hibiki Sauter mean diameter and Zeitoun interfacial
//! area concentration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidProperties {
    /// Liquid density, kg/m^3.
    pub rho_l: f64,
    /// Gas density, kg/m^3.
    pub rho_g: f64,
    /// Surface tension, N/m.
    pub sigma: f64,
    /// Liquid dynamic viscosity, Pa s.
    pub mu_l: f64,
    /// Gravitational acceleration, m/s^2.
    pub g: f64,
}

impl FluidProperties {
    /// Water and air at room temperature and atmospheric pressure.
    pub const WATER_AIR: FluidProperties = FluidProperties {
        rho_l: 997.0,
        rho_g: 1.2,
        sigma: 0.0718,
        mu_l: 1.0e-3,
        g: 9.81,
    };

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rho_l", self.rho_l),
            ("rho_g", self.rho_g),
            ("sigma", self.sigma),
            ("mu_l", self.mu_l),
            ("g", self.g),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::FluidProperties(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.rho_l <= self.rho_g {
            return Err(Error::FluidProperties(format!(
                "rho_l ({}) must exceed rho_g ({})",
                self.rho_l, self.rho_g
            )));
        }
        Ok(())
    }

    pub fn delta_rho(&self) -> f64 {
        self.rho_l - self.rho_g
    }

    /// Looks up a named property profile.
    pub fn profile(name: &str) -> Option<FluidProperties> {
        match name {
            "water-air" | "water_air" => Some(Self::WATER_AIR),
            _ => None,
        }
    }
}

impl Default for FluidProperties {
    fn default() -> Self {
        Self::WATER_AIR
    }
}

/// Inputs to the SMD correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationInputs {
    /// Equivalent bubble diameter, m.
    pub d_eq: f64,
    /// Laplace length, m.
    pub lo: f64,
    pub alpha: f64,
    /// Bubble Reynolds number, supplied by the caller.
    pub n_re_b: f64,
    /// Pipe diameter, m.
    pub pipe_diameter: f64,
}

/// `g (rho_l - rho_g) d_eq^2 / sigma`.
pub fn eotvos(props: &FluidProperties, d_eq: f64) -> f64 {
    props.g * (props.rho_l - props.rho_g) * d_eq * d_eq / props.sigma
}

/// `j_f rho_l D / mu_l`.
pub fn reynolds(props: &FluidProperties, j_f: f64, pipe_diameter: f64) -> f64 {
    j_f * props.rho_l * pipe_diameter / props.mu_l
}

/// `1 / (1 + 0.45 Eo Re)^0.08`.
pub fn besagni_aspect_ratio(eo: f64, re: f64) -> Result<f64> {
    let x = eo * re;
    if !(x >= 0.0) {
        return Err(Error::CorrelationInput(format!("Eo*Re must be >= 0, got {x}")));
    }
    Ok(1.0 / (1.0 + 0.45 * x).powf(0.08))
}

/// `sqrt(sigma / (g (rho_l - rho_g)))`.
pub fn laplace_length(props: &FluidProperties) -> f64 {
    (props.sigma / (props.g * props.delta_rho())).sqrt()
}

/// Bare SMD correlation
/// `1.63 (Lo/D)^-0.335 alpha^0.170 Re_b^-0.239 (rho_l/rho_g)^0.138 Lo`
/// with the density ratio passed directly.
pub fn hibiki_smd_raw(lo: f64, pipe_diameter: f64, alpha: f64, n_re_b: f64, density_ratio: f64) -> Result<f64> {
    if !(lo > 0.0 && pipe_diameter > 0.0) {
        return Err(Error::CorrelationInput(format!(
            "Lo and D must be > 0, got Lo={lo}, D={pipe_diameter}"
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::CorrelationInput(format!("alpha must lie in [0,1], got {alpha}")));
    }
    if !(n_re_b > 0.0) {
        return Err(Error::CorrelationInput(format!("N_Re_b must be > 0, got {n_re_b}")));
    }
    if !(density_ratio > 0.0) {
        return Err(Error::CorrelationInput(format!("density ratio must be > 0, got {density_ratio}")));
    }
    Ok(1.63
        * (lo / pipe_diameter).powf(-0.335)
        * alpha.powf(0.170)
        * n_re_b.powf(-0.239)
        * density_ratio.powf(0.138)
        * lo)
}

pub fn hibiki_smd(inputs: &CorrelationInputs, props: &FluidProperties) -> Result<f64> {
    if !(0.0..1.0).contains(&inputs.alpha) {
        return Err(Error::CorrelationInput(format!(
            "alpha must lie in [0,1), got {}",
            inputs.alpha
        )));
    }
    hibiki_smd_raw(
        inputs.lo,
        inputs.pipe_diameter,
        inputs.alpha,
        inputs.n_re_b,
        props.rho_l / props.rho_g,
    )
}

/// `3.24 alpha^0.757 (g drho / sigma)^0.55 (mu_l / (j_f rho_l))^0.1`,
/// evaluated exactly as written.
pub fn zeitoun_iac(alpha: f64, j_f: f64, props: &FluidProperties) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::CorrelationInput(format!("alpha must lie in [0,1), got {alpha}")));
    }
    if !(j_f > 0.0) {
        return Err(Error::CorrelationInput(format!("j_f must be > 0, got {j_f}")));
    }
    Ok(3.24
        * alpha.powf(0.757)
        * (props.g * props.delta_rho() / props.sigma).powf(0.55)
        * (props.mu_l / (j_f * props.rho_l)).powf(0.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rel_diff;
    use proptest::prelude::*;

    const W: FluidProperties = FluidProperties::WATER_AIR;

    #[test]
    fn default_profile_is_valid() {
        W.validate().unwrap();
        assert_eq!(FluidProperties::profile("water-air"), Some(W));
        let bad = FluidProperties { rho_g: 2000.0, ..W };
        assert!(bad.validate().is_err());
        let bad = FluidProperties { sigma: 0.0, ..W };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn eotvos_examples() {
        let same = FluidProperties { rho_g: W.rho_l, ..W };
        assert_eq!(eotvos(&same, 5e-3), 0.0);
        let eo = eotvos(&W, 3.92e-3);
        assert!((eo - 2.09).abs() < 0.005, "{eo}");
        // The worked example uses a density difference of 996.6.
        let lit = FluidProperties { rho_l: 997.8, ..W };
        assert!(rel_diff(eotvos(&lit, 3.92e-3), 9.81 * 996.6 * 3.92e-3f64.powi(2) / 0.0718) < 1e-12);
        assert!(rel_diff(eotvos(&W, 2.0 * 3.92e-3), 4.0 * eo) < 1e-14);
    }

    #[test]
    fn reynolds_examples() {
        assert_eq!(reynolds(&W, 0.0, 0.0254), 0.0);
        let re = reynolds(&W, 0.215, 0.0254);
        assert!(rel_diff(re, 5446.0) < 1e-3, "{re}");
        assert!(rel_diff(reynolds(&W, 0.43, 0.0254), 2.0 * re) < 1e-14);
        assert!(rel_diff(reynolds(&W, 0.215, 0.0508), 2.0 * re) < 1e-14);
    }

    #[test]
    fn besagni_examples() {
        assert_eq!(besagni_aspect_ratio(0.0, 1234.0).unwrap(), 1.0);
        let e = besagni_aspect_ratio(1.0, 1000.0).unwrap();
        assert!((e - 0.6133).abs() < 5e-5, "{e}");
        assert!(besagni_aspect_ratio(-1.0, 10.0).is_err());
        assert!(besagni_aspect_ratio(f64::NAN, 10.0).is_err());
    }

    #[test]
    fn laplace_examples() {
        let lit = FluidProperties { rho_l: 997.8, ..W };
        assert!((laplace_length(&lit) - 2.710e-3).abs() < 5e-7);
        let quad = FluidProperties { sigma: 4.0 * W.sigma, ..W };
        assert!(rel_diff(laplace_length(&quad), 2.0 * laplace_length(&W)) < 1e-14);
        let heavy = FluidProperties { rho_l: 1e30, ..W };
        assert!(laplace_length(&heavy) < 1e-15);
    }

    #[test]
    fn hibiki_examples() {
        assert_eq!(hibiki_smd_raw(2.7e-3, 0.0254, 0.0, 100.0, 830.0).unwrap(), 0.0);
        assert!(rel_diff(hibiki_smd_raw(2.7e-3, 2.7e-3, 1.0, 1.0, 1.0).unwrap(), 1.63 * 2.7e-3) < 1e-15);
        let inputs = CorrelationInputs {
            d_eq: 3.92e-3,
            lo: 2.7e-3,
            alpha: 0.088,
            n_re_b: 800.0,
            pipe_diameter: 0.0254,
        };
        let oracle = 1.63
            * f64::exp(-0.335 * (2.7e-3f64 / 0.0254).ln())
            * f64::exp(0.170 * 0.088f64.ln())
            * f64::exp(-0.239 * 800f64.ln())
            * f64::exp(0.138 * (997.0f64 / 1.2).ln())
            * 2.7e-3;
        assert!(rel_diff(hibiki_smd(&inputs, &W).unwrap(), oracle) < 1e-12);
        let zero_lo = CorrelationInputs { lo: 0.0, ..inputs };
        assert!(hibiki_smd(&zero_lo, &W).is_err());
        let zero_d = CorrelationInputs { pipe_diameter: 0.0, ..inputs };
        assert!(hibiki_smd(&zero_d, &W).is_err());
    }

    #[test]
    fn zeitoun_examples() {
        assert_eq!(zeitoun_iac(0.0, 0.215, &W).unwrap(), 0.0);
        let oracle = 3.24
            * f64::exp(0.757 * 0.088f64.ln())
            * f64::exp(0.55 * (9.81 * 995.8 / 0.0718f64).ln())
            * f64::exp(0.1 * (1.0e-3 / (0.215 * 997.0f64)).ln());
        assert!(rel_diff(zeitoun_iac(0.088, 0.215, &W).unwrap(), oracle) < 1e-12);
        assert!(zeitoun_iac(0.088, 0.0, &W).is_err());
        assert!(zeitoun_iac(1.0, 0.2, &W).is_err());
    }

    proptest! {
        #[test]
        fn besagni_in_unit_interval_and_decreasing(x in 0.0f64..1e7, dx in 1e-3f64..1e3) {
            let e1 = besagni_aspect_ratio(x, 1.0).unwrap();
            let e2 = besagni_aspect_ratio(x + dx, 1.0).unwrap();
            prop_assert!(e1 > 0.0 && e1 <= 1.0);
            prop_assert!(e2 < e1);
        }

        #[test]
        fn alpha_homogeneity(alpha in 1e-3f64..0.4, k in 0.1f64..2.0, re_b in 1.0f64..1e4) {
            let base = CorrelationInputs { d_eq: 3e-3, lo: 2.7e-3, alpha, n_re_b: re_b, pipe_diameter: 0.0254 };
            let scaled = CorrelationInputs { alpha: alpha * k, ..base };
            let h0 = hibiki_smd(&base, &W).unwrap();
            let h1 = hibiki_smd(&scaled, &W).unwrap();
            prop_assert!(rel_diff(h1, h0 * k.powf(0.170)) < 1e-12);
            let z0 = zeitoun_iac(alpha, 0.2, &W).unwrap();
            let z1 = zeitoun_iac(alpha * k, 0.2, &W).unwrap();
            prop_assert!(rel_diff(z1, z0 * k.powf(0.757)) < 1e-12);
            prop_assert!(z1 > z0 || k <= 1.0);
        }

        #[test]
        fn evaluations_are_pure(alpha in 0.0f64..0.5, jf in 0.01f64..3.0, d in 1e-4f64..1e-2) {
            prop_assert_eq!(zeitoun_iac(alpha, jf, &W).unwrap().to_bits(), zeitoun_iac(alpha, jf, &W).unwrap().to_bits());
            prop_assert_eq!(eotvos(&W, d).to_bits(), eotvos(&W, d).to_bits());
            prop_assert_eq!(reynolds(&W, jf, d).to_bits(), reynolds(&W, jf, d).to_bits());
        }
    }
}
