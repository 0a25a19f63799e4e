//! Adversarial losses over batches of discriminator probabilities.

use crate::error::{Error, Result};

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before logs.
pub const PROB_EPS: f64 = 1e-7;

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

fn check(ps: &[f64]) -> Result<()> {
    if ps.is_empty() {
        return Err(Error::Shape("empty probability batch".into()));
    }
    match ps.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        Some(&p) => Err(Error::ProbabilityRange(p)),
        None => Ok(()),
    }
}

/// `-mean ln p`.
fn neg_log(ps: &[f64]) -> f64 {
    -ps.iter().map(|&p| clamp_prob(p).ln()).sum::<f64>() / ps.len() as f64
}

/// `-mean ln (1 - p)`.
fn neg_log1m(ps: &[f64]) -> f64 {
    -ps.iter().map(|&p| (1.0 - clamp_prob(p)).ln()).sum::<f64>() / ps.len() as f64
}

fn in_clamp(p: f64) -> bool {
    (PROB_EPS..=1.0 - PROB_EPS).contains(&p)
}

/// `d/dp_i` of `-mean ln p`; zero where the clamp is active.
pub fn neg_log_grad(ps: &[f64]) -> Vec<f64> {
    let n = ps.len() as f64;
    ps.iter()
        .map(|&p| if in_clamp(p) { -1.0 / (n * p) } else { 0.0 })
        .collect()
}

/// `d/dp_i` of `-mean ln (1 - p)`; zero where the clamp is active.
pub fn neg_log1m_grad(ps: &[f64]) -> Vec<f64> {
    let n = ps.len() as f64;
    ps.iter()
        .map(|&p| if in_clamp(p) { 1.0 / (n * (1.0 - p)) } else { 0.0 })
        .collect()
}

/// Generator loss `-mean ln D(G(z, c), c)`.
pub fn loss_g(d_on_fake: &[f64]) -> Result<f64> {
    check(d_on_fake)?;
    Ok(neg_log(d_on_fake))
}

/// The four terms of the mismatch discriminator loss, each a batch mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MismatchTerms {
    /// `-mean ln D(x, c_t)`
    pub real_true: f64,
    /// `-mean ln (1 - D(x, c_f))`
    pub real_false: f64,
    /// `-mean ln (1 - D(G(z, c_t), c_t))`
    pub fake_true: f64,
    /// `-mean ln (1 - D(G(z, c_f), c_f))`
    pub fake_false: f64,
}

impl MismatchTerms {
    pub fn total(&self) -> f64 {
        self.real_true + self.real_false + self.fake_true + self.fake_false
    }
}

pub fn loss_d_terms(d_real_true: &[f64], d_real_false: &[f64], d_fake_true: &[f64], d_fake_false: &[f64]) -> Result<MismatchTerms> {
    for b in [d_real_true, d_real_false, d_fake_true, d_fake_false] {
        check(b)?;
    }
    if d_real_true.len() != d_real_false.len() || d_fake_true.len() != d_fake_false.len() {
        return Err(Error::Shape("paired probability batches differ in length".into()));
    }
    Ok(MismatchTerms {
        real_true: neg_log(d_real_true),
        real_false: neg_log1m(d_real_false),
        fake_true: neg_log1m(d_fake_true),
        fake_false: neg_log1m(d_fake_false),
    })
}

/// Discriminator loss with mismatched conditions:
/// `-mean[ln D(x,c_t) + ln(1 - D(x,c_f))] - mean[ln(1 - D(G(z,c_t),c_t)) + ln(1 - D(G(z,c_f),c_f))]`.
pub fn loss_d_mismatch(d_real_true: &[f64], d_real_false: &[f64], d_fake_true: &[f64], d_fake_false: &[f64]) -> Result<f64> {
    Ok(loss_d_terms(d_real_true, d_real_false, d_fake_true, d_fake_false)?.total())
}

/// Plain conditional discriminator loss `-mean ln D(x,c) - mean ln(1 - D(G(z,c),c))`.
pub fn loss_d_plain(d_real: &[f64], d_fake: &[f64]) -> Result<f64> {
    check(d_real)?;
    check(d_fake)?;
    Ok(neg_log(d_real) + neg_log1m(d_fake))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn loss_g_examples() {
        assert!((loss_g(&[0.5; 8]).unwrap() - LN2).abs() < 1e-15);
        assert!(loss_g(&[1.0 - 1e-12; 4]).unwrap() < 2e-7);
        assert!(matches!(loss_g(&[0.5, 1.5]), Err(Error::ProbabilityRange(_))));
        assert!(loss_g(&[0.0]).is_err());
        assert!(loss_g(&[f64::NAN]).is_err());
    }

    #[test]
    fn loss_g_matches_summation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d: Vec<f64> = (0..33).map(|_| rng.random_range(0.01..0.99)).collect();
        let mut s = 0.0;
        for &p in &d {
            s -= f64::ln(p);
        }
        assert!((loss_g(&d).unwrap() - s / 33.0).abs() < 1e-15);
    }

    #[test]
    fn mismatch_examples() {
        let h = [0.5; 4];
        assert!((loss_d_mismatch(&h, &h, &h, &h).unwrap() - 4.0 * LN2).abs() < 1e-14);
        let one = [1.0 - 1e-12; 3];
        let zero = [1e-12; 3];
        assert!(loss_d_mismatch(&one, &zero, &zero, &zero).unwrap() < 1e-6);
        assert!(loss_d_mismatch(&h, &h[..3], &h, &h).is_err());
    }

    #[test]
    fn mismatch_matches_summation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut draw = || -> Vec<f64> { (0..16).map(|_| rng.random_range(0.01..0.99)).collect() };
        let (rt, rf, ft, ff) = (draw(), draw(), draw(), draw());
        let (mut a, mut b) = (0.0, 0.0);
        for i in 0..16 {
            a += f64::ln(rt[i]) + f64::ln(1.0 - rf[i]);
            b += f64::ln(1.0 - ft[i]) + f64::ln(1.0 - ff[i]);
        }
        let oracle = -a / 16.0 - b / 16.0;
        assert!((loss_d_mismatch(&rt, &rf, &ft, &ff).unwrap() - oracle).abs() < 1e-14);
    }

    #[test]
    fn plain_loss_is_the_true_condition_terms() {
        let rt = [0.9, 0.7, 0.6];
        let ft = [0.2, 0.4, 0.1];
        let t = loss_d_terms(&rt, &[0.3; 3], &ft, &[0.5; 3]).unwrap();
        assert_eq!(loss_d_plain(&rt, &ft).unwrap(), t.real_true + t.fake_true);
    }

    #[test]
    fn gradient_helpers() {
        let ps = [0.2, 0.9, 1e-9];
        let g = neg_log_grad(&ps);
        assert!((g[0] + 1.0 / (3.0 * 0.2)).abs() < 1e-15);
        assert_eq!(g[2], 0.0);
        let g = neg_log1m_grad(&ps);
        assert!((g[1] - 1.0 / (3.0 * 0.1)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn loss_g_decreases_as_d_rises(ps in prop::collection::vec(0.01f64..0.9, 1..20), bump in 0.001f64..0.09) {
            let up: Vec<f64> = ps.iter().map(|p| p + bump).collect();
            prop_assert!(loss_g(&up).unwrap() < loss_g(&ps).unwrap());
        }
    }
}
