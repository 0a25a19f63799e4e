use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Deserialize;

use bubbleflow_core::annotation::load_annotation;
use bubbleflow_core::correlations::{
    besagni_aspect_ratio, eotvos, hibiki_smd, laplace_length, reynolds, zeitoun_iac, CorrelationInputs, FluidProperties,
};
use bubbleflow_core::harness::{compare_column, condition_grid, mre_map, rows_to_csv, shared_columns, summarize, MapConfig};
use bubbleflow_core::image_metrics::{metric_vector, GlcmConfig, MetricConfig, SobelAggregation};
use bubbleflow_core::manifest::parse_manifest;
use bubbleflow_core::pgm::{load_gray_image, save_gray_image};
use bubbleflow_core::twophase::{average_frames, extract_params, BubblePopulation, ExtractionOptions, TwoPhaseParams};
use bubbleflow_core::{FlowCondition, PipeGeometry};

use crate::files::{ensure_dir, expand_inputs, list_with_extension, read_toml, stem, write_text};
use crate::Output;

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{}", e.error()))?)?)
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Aggregation {
    Mean,
    Sum,
}

#[derive(Args)]
pub struct MetricsArgs {
    /// Directory of binary PGM images.
    dir: PathBuf,
    /// Gray levels of the co-occurrence matrix.
    #[arg(long, default_value_t = 256)]
    levels: usize,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    dx: i32,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    dy: i32,
    /// Count each pixel pair once instead of in both orders.
    #[arg(long)]
    asymmetric: bool,
    #[arg(long, value_enum, default_value = "mean")]
    sobel: Aggregation,
    #[command(flatten)]
    out: Output,
}

pub fn metrics(a: MetricsArgs) -> Result<()> {
    let cfg = MetricConfig {
        glcm: GlcmConfig { dx: a.dx, dy: a.dy, symmetric: !a.asymmetric, levels: a.levels },
        sobel: match a.sobel {
            Aggregation::Mean => SobelAggregation::Mean,
            Aggregation::Sum => SobelAggregation::Sum,
        },
    };
    let mut rows = Vec::new();
    for path in list_with_extension(&a.dir, "pgm")? {
        let img = load_gray_image(&path)?;
        let m = metric_vector(&img, &cfg).with_context(|| format!("metrics for {}", path.display()))?;
        rows.push(vec![
            stem(&path),
            m.luminance.to_string(),
            m.contrast.to_string(),
            m.magnitude.to_string(),
            m.homogeneity.to_string(),
            m.correlation.map(|c| c.to_string()).unwrap_or_default(),
        ]);
    }
    let header = ["image_id", "luminance", "contrast", "magnitude", "homogeneity", "correlation"];
    write_text(&a.out, &csv_string(&header, rows)?)
}

/// Pipe geometry and extraction conventions for `extract`.
#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct GeometryConfig {
    pipe_diameter: Option<f64>,
    /// Used when an annotation does not record its image height.
    image_height: Option<usize>,
    options: Option<ExtractionOptions>,
}

#[derive(Args)]
pub struct ExtractArgs {
    /// Annotation JSON files or directories of them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// TOML with `pipe_diameter`, optional `image_height` and `[options]`.
    #[arg(long)]
    geometry: Option<PathBuf>,
    /// Pipe diameter in metres; overrides the geometry file.
    #[arg(long)]
    pipe_diameter: Option<f64>,
    /// Average frames sharing a condition and emit a numbered manifest.
    #[arg(long)]
    per_condition: bool,
    #[command(flatten)]
    out: Output,
}

fn param_cells(p: &TwoPhaseParams) -> [String; 4] {
    [p.void_fraction.to_string(), p.aspect_ratio.to_string(), p.smd.to_string(), p.iac.to_string()]
}

pub fn extract(a: ExtractArgs) -> Result<()> {
    let geo: GeometryConfig = match &a.geometry {
        Some(p) => read_toml(p)?,
        None => GeometryConfig::default(),
    };
    let diameter = a
        .pipe_diameter
        .or(geo.pipe_diameter)
        .ok_or_else(|| anyhow!("pipe diameter missing: pass --pipe-diameter or set it in --geometry"))?;
    let opts = geo.options.unwrap_or_default();

    let mut frames: Vec<(String, FlowCondition, TwoPhaseParams)> = Vec::new();
    for path in expand_inputs(&a.inputs, "json")? {
        let set = load_annotation(&path)?;
        let geometry = match (set.image_size, geo.image_height) {
            (Some(_), _) => set.frame_geometry(diameter)?,
            (None, Some(h)) => PipeGeometry::for_frame(diameter, h, set.mm_per_pixel)?,
            (None, None) => bail!("{}: no image height recorded; set image_height in --geometry", path.display()),
        };
        let pop = BubblePopulation::new(set.ellipsoids()?, geometry);
        let params = extract_params(&pop, &opts).with_context(|| format!("extracting {}", path.display()))?;
        frames.push((set.image_id, set.condition, params));
    }

    let text = if a.per_condition {
        let mut groups: Vec<(FlowCondition, Vec<TwoPhaseParams>)> = Vec::new();
        for (_, c, p) in &frames {
            match groups.iter_mut().find(|(g, _)| g == c) {
                Some((_, v)) => v.push(*p),
                None => groups.push((*c, vec![*p])),
            }
        }
        let mut rows = Vec::new();
        for (k, (c, ps)) in groups.iter().enumerate() {
            let mut row = vec![(k + 1).to_string(), c.j_g().to_string(), c.j_f().to_string()];
            row.extend(param_cells(&average_frames(ps)?));
            rows.push(row);
        }
        csv_string(&["num", "j_g", "j_f", "void_fraction", "aspect_ratio", "smd", "iac"], rows)?
    } else {
        let rows = frames.iter().map(|(id, c, p)| {
            let mut row = vec![id.clone(), c.j_g().to_string(), c.j_f().to_string()];
            row.extend(param_cells(p));
            row
        });
        csv_string(&["image_id", "j_g", "j_f", "void_fraction", "aspect_ratio", "smd", "iac"], rows)?
    };
    write_text(&a.out, &text)
}

#[derive(Args)]
pub struct CorrelateArgs {
    /// Manifest with `num, j_g, j_f, void_fraction, smd` columns.
    manifest: PathBuf,
    /// Named fluid property profile.
    #[arg(long, default_value = "water-air")]
    profile: String,
    /// TOML file of fluid properties; overrides --profile.
    #[arg(long)]
    properties: Option<PathBuf>,
    /// Pipe diameter in metres.
    #[arg(long)]
    pipe_diameter: f64,
    /// Bubble Reynolds number for the SMD correlation when the manifest has
    /// no `re_b` column. Without either, the SMD correlation is skipped.
    #[arg(long)]
    re_b: Option<f64>,
    /// Column used as the equivalent diameter in the Eötvös number.
    #[arg(long, default_value = "smd")]
    d_eq_column: String,
    #[command(flatten)]
    out: Output,
}

pub fn correlate(a: CorrelateArgs) -> Result<()> {
    let props = match &a.properties {
        Some(p) => read_toml::<FluidProperties>(p)?,
        None => FluidProperties::profile(&a.profile).ok_or_else(|| anyhow!("unknown property profile {:?}", a.profile))?,
    };
    props.validate()?;
    let m = parse_manifest(&a.manifest)?;
    let col = |name: &str| m.column_index(name).ok_or_else(|| anyhow!("manifest lacks column `{name}`"));
    let i_alpha = col("void_fraction")?;
    let i_deq = col(&a.d_eq_column)?;
    let i_reb = m.column_index("re_b");
    let with_smd = i_reb.is_some() || a.re_b.is_some();
    let lo = laplace_length(&props);

    let mut header = vec!["num", "j_g", "j_f", "eotvos", "reynolds", "aspect_ratio"];
    if with_smd {
        header.push("smd");
    }
    header.push("iac");
    let mut rows = Vec::new();
    for r in &m.records {
        let (j_f, alpha) = (r.condition.j_f(), r.values[i_alpha]);
        let eo = eotvos(&props, r.values[i_deq]);
        let re = reynolds(&props, j_f, a.pipe_diameter);
        let ctx = || format!("condition {}", r.num);
        let mut row = vec![
            r.num.to_string(),
            r.condition.j_g().to_string(),
            j_f.to_string(),
            eo.to_string(),
            re.to_string(),
            besagni_aspect_ratio(eo, re).with_context(ctx)?.to_string(),
        ];
        if with_smd {
            let n_re_b = i_reb.map(|i| r.values[i]).or(a.re_b).expect("checked above");
            let inputs = CorrelationInputs { d_eq: r.values[i_deq], lo, alpha, n_re_b, pipe_diameter: a.pipe_diameter };
            row.push(hibiki_smd(&inputs, &props).with_context(ctx)?.to_string());
        }
        row.push(zeitoun_iac(alpha, j_f, &props).with_context(ctx)?.to_string());
        rows.push(row);
    }
    write_text(&a.out, &csv_string(&header, rows)?)
}

#[derive(Args)]
pub struct CompareArgs {
    /// Reference manifest (e.g. measured values).
    #[arg(long)]
    reference: PathBuf,
    /// Candidate manifest (e.g. generated or predicted values).
    #[arg(long)]
    candidate: PathBuf,
    /// Indicators to compare; defaults to every shared column.
    #[arg(long, value_delimiter = ',')]
    columns: Vec<String>,
    /// Directory receiving one CSV per indicator and `summary.csv`.
    #[arg(long)]
    out_dir: PathBuf,
    /// Also write a PGM MRE map per indicator.
    #[arg(long)]
    heatmaps: bool,
    /// MRE mapped to black and white in the heatmaps.
    #[arg(long, default_value_t = 0.2)]
    map_range: f64,
}

pub fn compare(a: CompareArgs) -> Result<()> {
    let reference = parse_manifest(&a.reference)?;
    let candidate = parse_manifest(&a.candidate)?;
    let columns = if a.columns.is_empty() { shared_columns(&reference, &candidate) } else { a.columns.clone() };
    if columns.is_empty() {
        bail!("the manifests share no indicator columns");
    }
    ensure_dir(&a.out_dir)?;
    let map_cfg = MapConfig { range: (-a.map_range, a.map_range), ..MapConfig::default() };
    let mut summary = Vec::new();
    for col in &columns {
        let rows = compare_column(&reference, &candidate, col)?;
        fs::write(a.out_dir.join(format!("{col}.csv")), rows_to_csv(&rows)?)?;
        let s = summarize(&rows)?;
        if a.heatmaps {
            save_gray_image(a.out_dir.join(format!("{col}_mre.pgm")), &mre_map(&rows, &map_cfg)?)?;
        }
        summary.push(vec![col.clone(), s.n.to_string(), s.mamre.to_string(), s.max_abs_mre.to_string()]);
    }
    let text = csv_string(&["indicator", "n", "mamre", "max_abs_mre"], summary)?;
    fs::write(a.out_dir.join("summary.csv"), &text)?;
    print!("{text}");
    Ok(())
}

#[derive(Args)]
pub struct GridArgs {
    /// JSON array of `[j_g, j_f]` polygon vertices.
    boundary: PathBuf,
    #[arg(long)]
    j_g0: f64,
    #[arg(long)]
    j_f0: f64,
    #[arg(long, default_value_t = 1.05)]
    ratio: f64,
    #[command(flatten)]
    out: Output,
}

pub fn grid(a: GridArgs) -> Result<()> {
    let text = fs::read_to_string(&a.boundary).with_context(|| format!("reading {}", a.boundary.display()))?;
    let poly: Vec<(f64, f64)> = serde_json::from_str(&text).context("boundary must be a JSON array of [j_g, j_f] pairs")?;
    let g = condition_grid(&poly, a.j_g0, a.j_f0, a.ratio)?;
    eprintln!("{} conditions", g.points.len());
    write_text(&a.out, &bubbleflow_core::harness::grid_to_csv(&g)?)
}
