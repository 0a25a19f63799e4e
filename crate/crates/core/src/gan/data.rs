//! Conditioning vectors, condition domains and training data sources.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FlowCondition;
use crate::synth::{synthesize, RenderSpec};

/// Affine map of `(j_g, j_f)` from a box onto `[-1, 1]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionScaler {
    pub j_g: (f64, f64),
    pub j_f: (f64, f64),
}

impl ConditionScaler {
    pub fn new(j_g: (f64, f64), j_f: (f64, f64)) -> Result<Self> {
        for (name, (lo, hi)) in [("j_g", j_g), ("j_f", j_f)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::DegenerateDomain(format!("{name} range ({lo}, {hi}) is empty")));
            }
        }
        Ok(Self { j_g, j_f })
    }

    pub fn to_vector(&self, c: &FlowCondition) -> Vec<f64> {
        let s = |v: f64, (lo, hi): (f64, f64)| 2.0 * (v - lo) / (hi - lo) - 1.0;
        vec![s(c.j_g(), self.j_g), s(c.j_f(), self.j_f)]
    }

    pub fn to_condition(&self, v: &[f64]) -> Result<FlowCondition> {
        let s = |v: f64, (lo, hi): (f64, f64)| lo + (v + 1.0) / 2.0 * (hi - lo);
        FlowCondition::new(s(v[0], self.j_g), s(v[1], self.j_f))
    }

    pub fn center(&self) -> FlowCondition {
        FlowCondition::new((self.j_g.0 + self.j_g.1) / 2.0, (self.j_f.0 + self.j_f.1) / 2.0)
            .expect("positive ranges give a positive centre")
    }
}

/// Where false conditions are drawn from.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionDomain {
    Discrete(Vec<Vec<f64>>),
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl ConditionDomain {
    pub fn dim(&self) -> usize {
        match self {
            ConditionDomain::Discrete(p) => p.first().map_or(0, Vec::len),
            ConditionDomain::Box { lo, .. } => lo.len(),
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            ConditionDomain::Discrete(points) => {
                let first = points
                    .first()
                    .ok_or_else(|| Error::DegenerateDomain("no condition points".into()))?;
                if points.iter().all(|p| p == first) {
                    return Err(Error::DegenerateDomain("a single condition point".into()));
                }
                if points.iter().any(|p| p.len() != first.len()) {
                    return Err(Error::Shape("condition points differ in length".into()));
                }
            }
            ConditionDomain::Box { lo, hi } => {
                if lo.len() != hi.len() || lo.is_empty() {
                    return Err(Error::Shape("box bounds differ in length".into()));
                }
                if lo.iter().zip(hi).any(|(a, b)| !(a <= b)) {
                    return Err(Error::DegenerateDomain("box lower bound exceeds upper".into()));
                }
                if lo == hi {
                    return Err(Error::DegenerateDomain("box collapses to a point".into()));
                }
            }
        }
        Ok(())
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            ConditionDomain::Discrete(points) => points.choose(rng).expect("checked nonempty").clone(),
            ConditionDomain::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(&a, &b)| if a == b { a } else { rng.random_range(a..b) })
                .collect(),
        }
    }
}

/// One false condition per true condition, uniform over the domain and
/// resampled until it differs from its partner.
pub fn sample_false_conditions<R: Rng + ?Sized>(true_c: &[Vec<f64>], domain: &ConditionDomain, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if true_c.is_empty() {
        return Err(Error::Shape("empty condition batch".into()));
    }
    domain.check()?;
    true_c
        .iter()
        .map(|c| {
            if c.len() != domain.dim() {
                return Err(Error::Shape(format!("condition of length {} in a {}-d domain", c.len(), domain.dim())));
            }
            loop {
                let f = domain.draw(rng);
                if &f != c {
                    return Ok(f);
                }
            }
        })
        .collect()
}

/// Labelled samples for training.
pub trait DataSource {
    fn sample_dim(&self) -> usize;
    fn cond_dim(&self) -> usize;
    fn domain(&self) -> &ConditionDomain;
    /// `n` pairs `(x, c)` with `c` drawn uniformly from the domain's points.
    fn sample(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<(Vec<f64>, Vec<f64>)>;
}

/// Isotropic Gaussian whose mean shifts linearly with the condition:
/// `mean_k(c) = shift * c[k mod cond_dim]`. At `c = 0` the target is the
/// standard normal.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianToy {
    dim: usize,
    shift: f64,
    std: f64,
    domain: ConditionDomain,
}

impl GaussianToy {
    pub fn new(dim: usize, conditions: Vec<Vec<f64>>, shift: f64, std: f64) -> Result<Self> {
        if dim == 0 || !(std > 0.0) || !shift.is_finite() {
            return Err(Error::TrainConfig("toy target needs dim >= 1, std > 0, finite shift".into()));
        }
        let domain = ConditionDomain::Discrete(conditions);
        domain.check()?;
        Ok(Self { dim, shift, std, domain })
    }

    /// Three-dimensional target over the 3x3 grid `{-1, 0, 1}^2` of
    /// normalized conditions.
    pub fn grid3(shift: f64) -> Self {
        let mut conditions = Vec::new();
        for a in [-1.0, 0.0, 1.0] {
            for b in [-1.0, 0.0, 1.0] {
                conditions.push(vec![a, b]);
            }
        }
        Self::new(3, conditions, shift, 1.0).expect("valid grid")
    }

    pub fn mean(&self, c: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|k| self.shift * c[k % c.len()]).collect()
    }

    pub fn std(&self) -> f64 {
        self.std
    }
}

impl DataSource for GaussianToy {
    fn sample_dim(&self) -> usize {
        self.dim
    }

    fn cond_dim(&self) -> usize {
        self.domain.dim()
    }

    fn domain(&self) -> &ConditionDomain {
        &self.domain
    }

    fn sample(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..n)
            .map(|_| {
                let c = self.domain.draw(rng);
                let x = self
                    .mean(&c)
                    .into_iter()
                    .map(|m| {
                        let z: f64 = StandardNormal.sample(rng);
                        m + self.std * z
                    })
                    .collect();
                (x, c)
            })
            .collect()
    }
}

/// Pool of rendered fixture images per condition, pixels scaled to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct SynthImageSource {
    width: usize,
    height: usize,
    pool: Vec<(Vec<f64>, Vec<Vec<f64>>)>,
    domain: ConditionDomain,
}

impl SynthImageSource {
    pub fn new(template: &RenderSpec, conditions: &[FlowCondition], scaler: &ConditionScaler, per_condition: usize) -> Result<Self> {
        if per_condition == 0 {
            return Err(Error::TrainConfig("need >= 1 image per condition".into()));
        }
        let mut pool = Vec::with_capacity(conditions.len());
        for (k, cond) in conditions.iter().enumerate() {
            let mut images = Vec::with_capacity(per_condition);
            for i in 0..per_condition {
                let spec = RenderSpec {
                    condition: *cond,
                    seed: template.seed.wrapping_add((k * per_condition + i) as u64),
                    ..template.clone()
                };
                let (_, img) = synthesize(&spec)?;
                images.push(img.pixels().iter().map(|&p| p as f64 / 255.0).collect());
            }
            pool.push((scaler.to_vector(cond), images));
        }
        let domain = ConditionDomain::Discrete(pool.iter().map(|(c, _)| c.clone()).collect());
        domain.check()?;
        Ok(Self {
            width: template.width,
            height: template.height,
            pool,
            domain,
        })
    }

    pub fn image_size(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

impl DataSource for SynthImageSource {
    fn sample_dim(&self) -> usize {
        self.width * self.height
    }

    fn cond_dim(&self) -> usize {
        self.domain.dim()
    }

    fn domain(&self) -> &ConditionDomain {
        &self.domain
    }

    fn sample(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..n)
            .map(|_| {
                let (c, images) = self.pool.choose(rng).expect("nonempty pool");
                (images.choose(rng).expect("nonempty images").clone(), c.clone())
            })
            .collect()
    }
}
