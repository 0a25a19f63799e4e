//! Feature maps for the generator's L1 + L2 feature loss.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::net::{backward, forward, NetSpec, OutputSquash, ParamBundle};
use crate::error::{Error, Result};

/// Deterministic map from a sample to a fixed-length feature vector, with
/// its vector-Jacobian product.
pub trait FeatureExtractor {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn features(&self, x: &[f64]) -> Result<Vec<f64>>;
    /// `J(x)^T grad` where `J` is the Jacobian of [`Self::features`] at `x`.
    fn pullback(&self, x: &[f64], grad: &[f64]) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentityFeatures {
    pub dim: usize,
}

impl FeatureExtractor for IdentityFeatures {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn output_dim(&self) -> usize {
        self.dim
    }

    fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(x, self.dim)?;
        Ok(x.to_vec())
    }

    fn pullback(&self, x: &[f64], grad: &[f64]) -> Result<Vec<f64>> {
        check_len(x, self.dim)?;
        check_len(grad, self.dim)?;
        Ok(grad.to_vec())
    }
}

fn check_len(v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::Shape(format!("feature input has length {}, expected {dim}", v.len())));
    }
    Ok(())
}

/// Frozen random two-layer network: linear, leaky ReLU, linear.
#[derive(Debug, Clone)]
pub struct RandomFeatures {
    spec: NetSpec,
    params: ParamBundle,
}

impl RandomFeatures {
    pub fn new(input_dim: usize, hidden: usize, output_dim: usize, seed: u64) -> Result<Self> {
        let spec = NetSpec::new(vec![input_dim, hidden, output_dim], 0.2, OutputSquash::Linear)?;
        let params = ParamBundle::init(&spec, &mut ChaCha8Rng::seed_from_u64(seed));
        Ok(Self { spec, params })
    }
}

impl FeatureExtractor for RandomFeatures {
    fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    fn output_dim(&self) -> usize {
        self.spec.output_dim()
    }

    fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(forward(&self.spec, &self.params, x)?.output)
    }

    fn pullback(&self, x: &[f64], grad: &[f64]) -> Result<Vec<f64>> {
        let trace = forward(&self.spec, &self.params, x)?;
        let mut scratch = vec![0.0; self.params.len()];
        backward(&self.spec, &self.params, &trace, grad, &mut scratch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FeatureKind {
    Identity,
    Random { hidden: usize, dim: usize, seed: u64 },
}

impl FeatureKind {
    pub fn build(self, input_dim: usize) -> Result<Box<dyn FeatureExtractor>> {
        Ok(match self {
            FeatureKind::Identity => Box::new(IdentityFeatures { dim: input_dim }),
            FeatureKind::Random { hidden, dim, seed } => Box::new(RandomFeatures::new(input_dim, hidden, dim, seed)?),
        })
    }
}

/// Subgradient of `|d|`, zero at the kink.
fn sign(d: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        d.signum()
    }
}

fn check_batches(real: &[Vec<f64>], fake: &[Vec<f64>]) -> Result<()> {
    if real.is_empty() || real.len() != fake.len() {
        return Err(Error::Shape(format!(
            "feature loss needs equal nonempty batches, got {} and {}",
            real.len(),
            fake.len()
        )));
    }
    Ok(())
}

/// `mean_i |F(x_i) - F(x^_i)|_1 + mean_i |F(x_i) - F(x^_i)|_2^2`.
pub fn feature_loss(f: &dyn FeatureExtractor, real: &[Vec<f64>], fake: &[Vec<f64>]) -> Result<f64> {
    Ok(feature_loss_grad(f, real, fake)?.0)
}

/// Feature loss and its gradient with respect to each fake sample.
pub fn feature_loss_grad(f: &dyn FeatureExtractor, real: &[Vec<f64>], fake: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
    check_batches(real, fake)?;
    let n = real.len() as f64;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(fake.len());
    for (x, xh) in real.iter().zip(fake) {
        let (fx, fh) = (f.features(x)?, f.features(xh)?);
        if fx.len() != fh.len() {
            return Err(Error::Shape("feature dimensions differ".into()));
        }
        let mut g = Vec::with_capacity(fx.len());
        for (a, b) in fx.iter().zip(&fh) {
            let d = b - a;
            loss += d.abs() + d * d;
            g.push((sign(d) + 2.0 * d) / n);
        }
        grads.push(f.pullback(xh, &g)?);
    }
    Ok((loss / n, grads))
}
