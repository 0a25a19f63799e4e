//! Alternating conditional adversarial training.
//!
//! Each step updates the discriminator on real and generated samples paired
//! with true and false conditions, then updates the generator on the
//! adversarial loss plus a weighted feature loss.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::data::{sample_false_conditions, DataSource};
use super::feature::{feature_loss_grad, FeatureExtractor, FeatureKind};
use super::loss::{clamp_prob, loss_d_plain, loss_d_terms, loss_g, neg_log1m_grad, neg_log_grad};
use super::net::{backward, forward, NetSpec, OutputSquash, ParamBundle};
use super::optim::{Adam, AdamConfig, Ema};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr_g: f64,
    pub lr_d: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub seed: u64,
    pub feature_weight: f64,
    /// Train the discriminator on false-condition pairs as well.
    pub mismatch: bool,
    /// Add `-mean ln D(G(z, c_f), c_f)` to the generator loss.
    pub generator_false_condition: bool,
    pub ema_decay: Option<f64>,
    pub z_dim: usize,
    pub hidden: Vec<usize>,
    pub leaky_slope: f64,
    pub generator_output: OutputSquash,
    pub features: FeatureKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_g: 0.0025,
            lr_d: 0.002,
            beta1: 0.0,
            beta2: 0.99,
            weight_decay: 0.0,
            batch_size: 32,
            epochs: 10,
            steps_per_epoch: 100,
            seed: 0,
            feature_weight: 1.0,
            mismatch: true,
            generator_false_condition: false,
            ema_decay: None,
            z_dim: 8,
            hidden: vec![32, 32],
            leaky_slope: 0.2,
            generator_output: OutputSquash::Linear,
            features: FeatureKind::Random {
                hidden: 32,
                dim: 16,
                seed: 0,
            },
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::TrainConfig(m));
        if !(self.lr_g > 0.0 && self.lr_d > 0.0) {
            return bad(format!("learning rates must be > 0, got {} and {}", self.lr_g, self.lr_d));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return bad("betas must lie in [0, 1)".into());
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight decay must be >= 0".into());
        }
        if self.batch_size < 2 {
            return bad(format!("batch size must be >= 2, got {}", self.batch_size));
        }
        if !(self.feature_weight >= 0.0 && self.feature_weight.is_finite()) {
            return bad("feature weight must be finite and >= 0".into());
        }
        if let Some(d) = self.ema_decay {
            if !(0.0..1.0).contains(&d) {
                return bad(format!("EMA decay must lie in [0, 1), got {d}"));
            }
        }
        if self.z_dim == 0 || self.hidden.is_empty() {
            return bad("need z_dim >= 1 and at least one hidden layer".into());
        }
        Ok(())
    }

    fn adam(&self, lr: f64) -> AdamConfig {
        AdamConfig {
            weight_decay: self.weight_decay,
            ..AdamConfig::new(lr, self.beta1, self.beta2)
        }
    }
}

/// Generator and discriminator with their parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gan {
    pub g_spec: NetSpec,
    pub g: ParamBundle,
    pub d_spec: NetSpec,
    pub d: ParamBundle,
}

impl Gan {
    pub fn init(cfg: &TrainConfig, sample_dim: usize, cond_dim: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let g_spec = NetSpec::generator(cfg.z_dim, cond_dim, &cfg.hidden, sample_dim, cfg.leaky_slope, cfg.generator_output)?;
        let d_spec = NetSpec::discriminator(sample_dim, cond_dim, &cfg.hidden, cfg.leaky_slope)?;
        let g = ParamBundle::init(&g_spec, rng);
        let d = ParamBundle::init(&d_spec, rng);
        Ok(Self { g_spec, g, d_spec, d })
    }

    fn sample_dim(&self) -> usize {
        self.g_spec.output_dim()
    }
}

/// One minibatch: real samples, their true conditions, false conditions
/// and generator noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub x: Vec<Vec<f64>>,
    pub c_true: Vec<Vec<f64>>,
    pub c_false: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
}

impl Batch {
    fn len(&self) -> usize {
        self.x.len()
    }
}

pub fn normal_noise(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| StandardNormal.sample(rng)).collect())
        .collect()
}

fn generate(gan: &Gan, z: &[Vec<f64>], c: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    z.iter()
        .zip(c)
        .map(|(z, c)| Ok(forward(&gan.g_spec, &gan.g, &[z.as_slice(), c].concat())?.output))
        .collect()
}

#[derive(Clone, Copy)]
enum Target {
    /// `-mean ln D`
    Real,
    /// `-mean ln (1 - D)`
    Fake,
}

/// Evaluates D on `(x_i, c_i)` and back-propagates the chosen log term.
/// Returns the clamped probabilities, and either accumulates parameter
/// gradients into `grad_d` or returns input gradients for the samples.
fn d_pass(gan: &Gan, x: &[Vec<f64>], c: &[Vec<f64>], target: Target, grad_d: Option<&mut [f64]>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let traces = x
        .iter()
        .zip(c)
        .map(|(x, c)| forward(&gan.d_spec, &gan.d, &[x.as_slice(), c].concat()))
        .collect::<Result<Vec<_>>>()?;
    let raw: Vec<f64> = traces.iter().map(|t| t.output[0]).collect();
    let dl_dp = match target {
        Target::Real => neg_log_grad(&raw),
        Target::Fake => neg_log1m_grad(&raw),
    };
    let mut scratch;
    let grad = match grad_d {
        Some(g) => g,
        None => {
            scratch = vec![0.0; gan.d.len()];
            &mut scratch[..]
        }
    };
    let mut input_grads = Vec::with_capacity(x.len());
    for (t, g) in traces.iter().zip(&dl_dp) {
        let gi = backward(&gan.d_spec, &gan.d, t, &[*g], grad)?;
        input_grads.push(gi[..gan.sample_dim()].to_vec());
    }
    Ok((raw.into_iter().map(clamp_prob).collect(), input_grads))
}

/// Discriminator loss on a fixed batch and its gradient with respect to the
/// discriminator parameters. With `mismatch` off only the true-condition
/// terms are used.
pub fn discriminator_objective(gan: &Gan, batch: &Batch, mismatch: bool) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; gan.d.len()];
    let fake_t = generate(gan, &batch.z, &batch.c_true)?;
    let (rt, _) = d_pass(gan, &batch.x, &batch.c_true, Target::Real, Some(&mut grad))?;
    let (ft, _) = d_pass(gan, &fake_t, &batch.c_true, Target::Fake, Some(&mut grad))?;
    if !mismatch {
        return Ok((loss_d_plain(&rt, &ft)?, grad));
    }
    let fake_f = generate(gan, &batch.z, &batch.c_false)?;
    let (rf, _) = d_pass(gan, &batch.x, &batch.c_false, Target::Fake, Some(&mut grad))?;
    let (ff, _) = d_pass(gan, &fake_f, &batch.c_false, Target::Fake, Some(&mut grad))?;
    Ok((loss_d_terms(&rt, &rf, &ft, &ff)?.total(), grad))
}

/// Which generator terms to include.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorTerms {
    pub adversarial: bool,
    pub false_condition: bool,
    pub feature_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct GeneratorLoss {
    pub adversarial: f64,
    pub false_condition: f64,
    pub feature: f64,
    pub total: f64,
}

/// Generator loss on a fixed batch and its gradient with respect to the
/// generator parameters.
pub fn generator_objective(gan: &Gan, batch: &Batch, features: &dyn FeatureExtractor, terms: GeneratorTerms) -> Result<(GeneratorLoss, Vec<f64>)> {
    let n = batch.len();
    let traces = batch
        .z
        .iter()
        .zip(&batch.c_true)
        .map(|(z, c)| forward(&gan.g_spec, &gan.g, &[z.as_slice(), c].concat()))
        .collect::<Result<Vec<_>>>()?;
    let fakes: Vec<Vec<f64>> = traces.iter().map(|t| t.output.clone()).collect();
    let mut dx: Vec<Vec<f64>> = vec![vec![0.0; gan.sample_dim()]; n];
    let mut out = GeneratorLoss::default();
    let mut grad = vec![0.0; gan.g.len()];

    if terms.adversarial {
        let (p, gx) = d_pass(gan, &fakes, &batch.c_true, Target::Real, None)?;
        out.adversarial = loss_g(&p)?;
        accumulate(&mut dx, &gx, 1.0);
    }
    if terms.feature_weight > 0.0 {
        let (fl, gx) = feature_loss_grad(features, &batch.x, &fakes)?;
        out.feature = fl;
        accumulate(&mut dx, &gx, terms.feature_weight);
    }
    for (t, g) in traces.iter().zip(&dx) {
        backward(&gan.g_spec, &gan.g, t, g, &mut grad)?;
    }

    if terms.false_condition {
        let f_traces = batch
            .z
            .iter()
            .zip(&batch.c_false)
            .map(|(z, c)| forward(&gan.g_spec, &gan.g, &[z.as_slice(), c].concat()))
            .collect::<Result<Vec<_>>>()?;
        let f_fakes: Vec<Vec<f64>> = f_traces.iter().map(|t| t.output.clone()).collect();
        let (p, gx) = d_pass(gan, &f_fakes, &batch.c_false, Target::Real, None)?;
        out.false_condition = loss_g(&p)?;
        for (t, g) in f_traces.iter().zip(&gx) {
            backward(&gan.g_spec, &gan.g, t, g, &mut grad)?;
        }
    }
    out.total = out.adversarial + out.false_condition + terms.feature_weight * out.feature;
    Ok((out, grad))
}

fn accumulate(dst: &mut [Vec<f64>], src: &[Vec<f64>], w: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        for (a, b) in d.iter_mut().zip(s) {
            *a += w * b;
        }
    }
}

/// Per-epoch means of the step losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss_d: f64,
    pub loss_g: f64,
    pub loss_feature: f64,
    pub loss_g_total: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub gan: Gan,
    /// Generator weights to sample from: the EMA shadow when enabled.
    pub generator: ParamBundle,
    pub history: Vec<EpochRecord>,
}

pub fn train(cfg: &TrainConfig, source: &dyn DataSource) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut gan = Gan::init(cfg, source.sample_dim(), source.cond_dim(), &mut rng)?;
    let features = cfg.features.build(source.sample_dim())?;
    let terms = GeneratorTerms {
        adversarial: true,
        false_condition: cfg.generator_false_condition,
        feature_weight: cfg.feature_weight,
    };
    let mut adam_g = Adam::new(cfg.adam(cfg.lr_g), gan.g.len());
    let mut adam_d = Adam::new(cfg.adam(cfg.lr_d), gan.d.len());
    let mut ema = cfg.ema_decay.map(|d| Ema::new(d, gan.g.values()));
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut sums = [0.0; 4];
        for step in 0..cfg.steps_per_epoch {
            let (x, c_true): (Vec<_>, Vec<_>) = source.sample(&mut rng, cfg.batch_size).into_iter().unzip();
            let c_false = sample_false_conditions(&c_true, source.domain(), &mut rng)?;
            let z = normal_noise(&mut rng, cfg.batch_size, cfg.z_dim);
            let mut batch = Batch { x, c_true, c_false, z };

            let (ld, gd) = discriminator_objective(&gan, &batch, cfg.mismatch)?;
            adam_d.step(gan.d.values_mut(), &gd)?;

            batch.z = normal_noise(&mut rng, cfg.batch_size, cfg.z_dim);
            let (lg, gg) = generator_objective(&gan, &batch, features.as_ref(), terms)?;
            adam_g.step(gan.g.values_mut(), &gg)?;
            if let Some(e) = ema.as_mut() {
                e.update(gan.g.values());
            }

            let vals = [ld, lg.adversarial + lg.false_condition, lg.feature, lg.total];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("loss at epoch {epoch}, step {step}")));
            }
            for (s, v) in sums.iter_mut().zip(vals) {
                *s += v;
            }
        }
        let k = cfg.steps_per_epoch.max(1) as f64;
        history.push(EpochRecord {
            epoch,
            loss_d: sums[0] / k,
            loss_g: sums[1] / k,
            loss_feature: sums[2] / k,
            loss_g_total: sums[3] / k,
        });
    }
    let generator = match ema {
        Some(e) => ParamBundle::new(gan.g.schema().to_vec(), e.shadow().to_vec())?,
        None => gan.g.clone(),
    };
    Ok(TrainOutcome { gan, generator, history })
}

/// Draws `n` generator samples at one condition vector.
pub fn sample_generator(spec: &NetSpec, params: &ParamBundle, condition: &[f64], n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let z_dim = spec
        .input_dim()
        .checked_sub(condition.len())
        .filter(|d| *d > 0)
        .ok_or_else(|| Error::Shape("condition is wider than the generator input".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    normal_noise(&mut rng, n, z_dim)
        .into_iter()
        .map(|z| Ok(forward(spec, params, &[z.as_slice(), condition].concat())?.output))
        .collect()
}

pub fn history_to_csv(history: &[EpochRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in history {
        w.serialize(r)?;
    }
    if history.is_empty() {
        w.write_record(["epoch", "loss_d", "loss_g", "loss_feature", "loss_g_total"])?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits UTF-8"))
}
