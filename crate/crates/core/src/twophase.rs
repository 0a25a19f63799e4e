//! Void fraction, aspect ratio, Sauter mean diameter and interfacial area
//! concentration of an ellipsoidal bubble population.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BubbleEllipsoid, PipeGeometry};
use crate::numeric::compensated_sum;

/// Thomsen exponent with the smallest maximum relative error.
pub const THOMSEN_P: f64 = 1.6075;

/// Prefactor of the bubble volume.
///
/// `Geometric` is the true ellipsoid volume `4/3 pi abc`. `PrintedThreeQuarters`
/// reproduces the `3/4 pi abc` coefficient as it appears in the printed formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolumeCoefficient {
    #[default]
    Geometric,
    PrintedThreeQuarters,
}

impl VolumeCoefficient {
    fn factor(self) -> f64 {
        match self {
            VolumeCoefficient::Geometric => 4.0 / 3.0,
            VolumeCoefficient::PrintedThreeQuarters => 3.0 / 4.0,
        }
    }
}

/// Denominator of the Sauter mean diameter. `Standard` is `6 sum V / sum A`;
/// `PrintedPerBubble` divides additionally by the bubble count, as printed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SauterDenominator {
    #[default]
    Standard,
    PrintedPerBubble,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionOptions {
    pub volume: VolumeCoefficient,
    pub sauter: SauterDenominator,
    pub thomsen_p: f64,
}

impl Default for ExtractionOptions {
    fn default() -> Self {
        Self {
            volume: VolumeCoefficient::Geometric,
            sauter: SauterDenominator::Standard,
            thomsen_p: THOMSEN_P,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BubblePopulation {
    pub bubbles: Vec<BubbleEllipsoid>,
    pub geometry: PipeGeometry,
}

impl BubblePopulation {
    pub fn new(bubbles: Vec<BubbleEllipsoid>, geometry: PipeGeometry) -> Self {
        Self { bubbles, geometry }
    }

    pub fn is_empty(&self) -> bool {
        self.bubbles.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPhaseParams {
    pub void_fraction: f64,
    pub aspect_ratio: f64,
    /// Sauter mean diameter, m.
    pub smd: f64,
    /// Interfacial area concentration, 1/m.
    pub iac: f64,
}

pub fn ellipsoid_volume_axes(a: f64, b: f64, c: f64, coefficient: VolumeCoefficient) -> f64 {
    coefficient.factor() * PI * a * b * c
}

pub fn ellipsoid_volume(e: &BubbleEllipsoid) -> f64 {
    ellipsoid_volume_axes(e.a(), e.b(), e.c(), VolumeCoefficient::Geometric)
}

/// Thomsen surface approximation
/// `4 pi ((a^p b^p + a^p c^p + b^p c^p) / 3)^(1/p)` for arbitrary semi-axes.
pub fn thomsen_area_axes(a: f64, b: f64, c: f64, p: f64) -> f64 {
    if a == b && b == c {
        // The formula reduces to 4 pi r^2; skip the pow round trip.
        return 4.0 * PI * a * a;
    }
    let (ap, bp, cp) = (a.powf(p), b.powf(p), c.powf(p));
    4.0 * PI * ((ap * bp + ap * cp + bp * cp) / 3.0).powf(1.0 / p)
}

pub fn thomsen_area(e: &BubbleEllipsoid, p: f64) -> f64 {
    thomsen_area_axes(e.a(), e.b(), e.c(), p)
}

fn total_volume(pop: &BubblePopulation, coefficient: VolumeCoefficient) -> f64 {
    compensated_sum(
        pop.bubbles
            .iter()
            .map(|e| ellipsoid_volume_axes(e.a(), e.b(), e.c(), coefficient)),
    )
}

fn total_area(pop: &BubblePopulation, p: f64) -> f64 {
    compensated_sum(pop.bubbles.iter().map(|e| thomsen_area(e, p)))
}

pub fn void_fraction(pop: &BubblePopulation) -> Result<f64> {
    void_fraction_with(pop, VolumeCoefficient::Geometric)
}

/// `sum V_n / (pi D^2 L / 4)`. A result of 1 or more means the annotation
/// cannot describe a physical frame and is reported as an error.
pub fn void_fraction_with(pop: &BubblePopulation, coefficient: VolumeCoefficient) -> Result<f64> {
    let alpha = total_volume(pop, coefficient) / pop.geometry.volume();
    if alpha >= 1.0 {
        return Err(Error::InconsistentVoidFraction(alpha));
    }
    Ok(alpha)
}

/// Mean over bubbles of `a / b`.
pub fn mean_aspect_ratio(pop: &BubblePopulation) -> Result<f64> {
    if pop.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let s = compensated_sum(pop.bubbles.iter().map(|e| e.a() / e.b()));
    Ok(s / pop.bubbles.len() as f64)
}

pub fn sauter_mean_diameter(pop: &BubblePopulation) -> Result<f64> {
    sauter_mean_diameter_with(pop, &ExtractionOptions::default())
}

pub fn sauter_mean_diameter_with(pop: &BubblePopulation, opts: &ExtractionOptions) -> Result<f64> {
    if pop.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let d = 6.0 * total_volume(pop, opts.volume) / total_area(pop, opts.thomsen_p);
    Ok(match opts.sauter {
        SauterDenominator::Standard => d,
        SauterDenominator::PrintedPerBubble => d / pop.bubbles.len() as f64,
    })
}

pub fn interfacial_area_concentration(pop: &BubblePopulation) -> f64 {
    interfacial_area_concentration_with(pop, THOMSEN_P)
}

/// `sum A_n / V_total`.
pub fn interfacial_area_concentration_with(pop: &BubblePopulation, p: f64) -> f64 {
    total_area(pop, p) / pop.geometry.volume()
}

/// All four parameters of a nonempty population.
pub fn extract_params(pop: &BubblePopulation, opts: &ExtractionOptions) -> Result<TwoPhaseParams> {
    Ok(TwoPhaseParams {
        void_fraction: void_fraction_with(pop, opts.volume)?,
        aspect_ratio: mean_aspect_ratio(pop)?,
        smd: sauter_mean_diameter_with(pop, opts)?,
        iac: interfacial_area_concentration_with(pop, opts.thomsen_p),
    })
}

/// Per-condition aggregate: arithmetic mean of per-frame parameters.
pub fn average_frames(frames: &[TwoPhaseParams]) -> Result<TwoPhaseParams> {
    if frames.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let n = frames.len() as f64;
    let avg = |f: fn(&TwoPhaseParams) -> f64| compensated_sum(frames.iter().map(f)) / n;
    Ok(TwoPhaseParams {
        void_fraction: avg(|p| p.void_fraction),
        aspect_ratio: avg(|p| p.aspect_ratio),
        smd: avg(|p| p.smd),
        iac: avg(|p| p.iac),
    })
}
