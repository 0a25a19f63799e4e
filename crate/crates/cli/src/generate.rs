use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use bubbleflow_core::annotation::save_annotation;
use bubbleflow_core::gan::checkpoint::{Checkpoint, SampleMode};
use bubbleflow_core::gan::data::{ConditionScaler, DataSource, GaussianToy, SynthImageSource};
use bubbleflow_core::gan::train::{history_to_csv, sample_generator, train, TrainConfig};
use bubbleflow_core::genai::{embed, fid, inception_score_with, kid, precision_recall, Embedder, SoftmaxProbe};
use bubbleflow_core::manifest::parse_manifest;
use bubbleflow_core::pgm::{load_gray_image, save_gray_image};
use bubbleflow_core::synth::{synthesize, RenderSpec};
use bubbleflow_core::{FlowCondition, GrayImage};

use crate::files::{ensure_dir, list_with_extension, read_toml, write_text};
use crate::Output;

#[derive(Args)]
pub struct SynthArgs {
    /// TOML render spec; unset fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Conditions CSV (`num, j_g, j_f`) for batch rendering.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    j_g: Option<f64>,
    #[arg(long)]
    j_f: Option<f64>,
    /// Images per condition; image k uses seed `seed + k`.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let mut base: RenderSpec = match &a.config {
        Some(p) => read_toml(p)?,
        None => RenderSpec::default(),
    };
    if let Some(s) = a.seed {
        base.seed = s;
    }
    let conditions: Vec<(String, FlowCondition)> = match (&a.grid, a.j_g, a.j_f) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => bail!("use either --grid or --j-g/--j-f"),
        (Some(g), None, None) => parse_manifest(g)?
            .records
            .iter()
            .map(|r| (format!("c{:04}", r.num), r.condition))
            .collect(),
        (None, jg, jf) => {
            let c = FlowCondition::new(jg.unwrap_or(base.condition.j_g()), jf.unwrap_or(base.condition.j_f()))?;
            vec![("c0001".to_string(), c)]
        }
    };
    ensure_dir(&a.out_dir)?;
    let single = conditions.len() == 1 && a.count == 1 && base.image_id.is_some();
    let mut written = 0;
    for (tag, condition) in &conditions {
        for k in 0..a.count {
            let mut spec = RenderSpec {
                condition: *condition,
                seed: base.seed.wrapping_add(k as u64),
                ..base.clone()
            };
            if !single {
                spec.image_id = Some(format!("{tag}_{k:03}"));
            }
            let (set, img) = synthesize(&spec)?;
            save_gray_image(a.out_dir.join(format!("{}.pgm", set.image_id)), &img)?;
            save_annotation(a.out_dir.join(format!("{}.json", set.image_id)), &set)?;
            written += 1;
        }
    }
    eprintln!("wrote {written} image/annotation pairs to {}", a.out_dir.display());
    Ok(())
}

fn default_per_condition() -> usize {
    32
}

fn default_image_render() -> RenderSpec {
    RenderSpec { width: 16, height: 16, mm_per_pixel: 0.5, ..RenderSpec::default() }
}

#[derive(Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
enum DataConfig {
    /// Three-dimensional Gaussian whose mean moves with the condition.
    Vector {
        #[serde(default = "one")]
        shift: f64,
    },
    /// Procedural images rendered at each listed condition.
    Image {
        conditions: Vec<FlowCondition>,
        #[serde(default = "default_per_condition")]
        per_condition: usize,
        #[serde(default = "default_image_render")]
        render: RenderSpec,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig::Vector { shift: 1.0 }
    }
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct ToyConfig {
    train: TrainConfig,
    data: DataConfig,
    /// `j_g` and `j_f` ranges mapped onto `[-1, 1]`. Image mode defaults to
    /// the extent of its conditions.
    j_g_range: Option<(f64, f64)>,
    j_f_range: Option<(f64, f64)>,
}

#[derive(Args)]
pub struct TrainArgs {
    /// TOML with `[train]` and `[data]` tables.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `train.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `train.epochs`.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Per-epoch loss CSV.
    #[arg(long)]
    history: PathBuf,
}

fn extent(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

pub fn train_toy(a: TrainArgs) -> Result<()> {
    let mut cfg: ToyConfig = match &a.config {
        Some(p) => read_toml(p)?,
        None => ToyConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.train.seed = s;
    }
    if let Some(e) = a.epochs {
        cfg.train.epochs = e;
    }
    let (source, mode, scaler): (Box<dyn DataSource>, SampleMode, ConditionScaler) = match &cfg.data {
        DataConfig::Vector { shift } => {
            let scaler = ConditionScaler::new(cfg.j_g_range.unwrap_or((0.01, 0.3)), cfg.j_f_range.unwrap_or((0.2, 2.0)))?;
            (Box::new(GaussianToy::grid3(*shift)), SampleMode::Vector, scaler)
        }
        DataConfig::Image { conditions, per_condition, render } => {
            let scaler = ConditionScaler::new(
                cfg.j_g_range.unwrap_or_else(|| extent(conditions.iter().map(|c| c.j_g()))),
                cfg.j_f_range.unwrap_or_else(|| extent(conditions.iter().map(|c| c.j_f()))),
            )
            .context("image mode needs conditions spanning a range in both j_g and j_f, or explicit ranges")?;
            let src = SynthImageSource::new(render, conditions, &scaler, *per_condition)?;
            let (width, height) = src.image_size();
            (Box::new(src), SampleMode::Image { width, height }, scaler)
        }
    };
    let out = train(&cfg.train, source.as_ref())?;
    let ck = Checkpoint::new(cfg.train.seed, mode, scaler, out.gan.g_spec.clone(), source.cond_dim(), out.generator)?;
    ck.save(&a.checkpoint)?;
    fs::write(&a.history, history_to_csv(&out.history)?).with_context(|| format!("writing {}", a.history.display()))?;
    if let Some(last) = out.history.last() {
        eprintln!(
            "epoch {}: loss_d {:.4}, loss_g {:.4}, feature {:.4}",
            last.epoch, last.loss_d, last.loss_g, last.loss_feature
        );
    }
    Ok(())
}

#[derive(Args)]
pub struct SampleArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    j_g: f64,
    #[arg(long)]
    j_f: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long, default_value_t = 100)]
    n: usize,
    /// CSV file for vector checkpoints (stdout when absent), directory for
    /// image checkpoints.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

pub fn sample(a: SampleArgs) -> Result<()> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let c = ck.scaler.to_vector(&FlowCondition::new(a.j_g, a.j_f)?);
    let samples = sample_generator(&ck.spec, &ck.params, &c, a.n, a.seed)?;
    match ck.mode {
        SampleMode::Vector => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record((0..ck.spec.output_dim()).map(|k| format!("x{k}")))?;
            for s in &samples {
                w.write_record(s.iter().map(|v| v.to_string()))?;
            }
            let text = String::from_utf8(w.into_inner().map_err(|e| anyhow!("{}", e.error()))?)?;
            write_text(&Output { output: a.output }, &text)
        }
        SampleMode::Image { width, height } => {
            let dir = a.output.ok_or_else(|| anyhow!("image checkpoints need --output <dir>"))?;
            ensure_dir(&dir)?;
            for (k, s) in samples.iter().enumerate() {
                let px = s.iter().map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8).collect();
                save_gray_image(dir.join(format!("sample_{k:05}.pgm")), &GrayImage::new(width, height, px)?)?;
            }
            eprintln!("wrote {} images to {}", samples.len(), dir.display());
            Ok(())
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum EmbedKind {
    Identity,
    RandomProjection,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    real: PathBuf,
    #[arg(long)]
    fake: PathBuf,
    #[arg(long, value_enum, default_value = "random-projection")]
    embedder: EmbedKind,
    /// Projection width for the random-projection embedder.
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// KID block size; defaults to min(100, n).
    #[arg(long)]
    kid_block: Option<usize>,
    /// Neighbour rank for precision and recall.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Classes of the random softmax probe used for IS.
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Serialize)]
struct EvalReport {
    fid: f64,
    kid: f64,
    is: f64,
    precision: f64,
    recall: f64,
    n_real: usize,
    n_fake: usize,
    embedder: Embedder,
    seed: u64,
    note: &'static str,
}

fn load_dir(dir: &Path) -> Result<Vec<GrayImage>> {
    list_with_extension(dir, "pgm")?.iter().map(|p| Ok(load_gray_image(p)?)).collect()
}

pub fn eval_gen(a: EvalArgs) -> Result<()> {
    let embedder = match a.embedder {
        EmbedKind::Identity => Embedder::Identity,
        EmbedKind::RandomProjection => Embedder::RandomProjection { dim: a.dim, seed: a.seed },
    };
    let real = embed(&load_dir(&a.real)?, embedder)?;
    let fake = embed(&load_dir(&a.fake)?, embedder)?;
    let block = a.kid_block.unwrap_or_else(|| real.n().min(fake.n()).min(100));
    let probe = SoftmaxProbe::new(fake.d(), a.classes, a.seed)?;
    let (precision, recall) = precision_recall(&real, &fake, a.k)?;
    let report = EvalReport {
        fid: fid(&real, &fake)?,
        kid: kid(&real, &fake, block)?,
        is: inception_score_with(&probe, &fake)?,
        precision,
        recall,
        n_real: real.n(),
        n_fake: fake.n(),
        embedder,
        seed: a.seed,
        note: "computed in a desk-scale embedding; not comparable to Inception-network scores",
    };
    write_text(&a.out, &(serde_json::to_string_pretty(&report)? + "\n"))
}
