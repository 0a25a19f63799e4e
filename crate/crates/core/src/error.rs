use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed PGM header: {0}")]
    PgmHeader(String),

    #[error("truncated PGM payload: expected {expected} bytes, found {found}")]
    PgmTruncated { expected: usize, found: usize },

    #[error("unsupported PGM max-value {0} (only 255 is accepted)")]
    PgmMaxValue(u32),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("image {width}x{height} is smaller than the 3x3 kernel")]
    ImageTooSmall { width: usize, height: usize },

    #[error("invalid flow condition: {0}")]
    InvalidCondition(String),

    #[error("invalid bubble box {box_:?}: {reason}")]
    InvalidBox { box_: [i64; 4], reason: String },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("annotation error: {0}")]
    Annotation(String),

    #[error("manifest {what} at row {row}: {detail}")]
    Manifest {
        what: &'static str,
        row: usize,
        detail: String,
    },

    #[error("manifest is missing required column `{0}`")]
    MissingColumn(String),

    #[error("GLCM has no valid pixel pairs for offset ({dx},{dy})")]
    NoPixelPairs { dx: i32, dy: i32 },

    #[error("invalid GLCM configuration: {0}")]
    GlcmConfig(String),

    #[error("degenerate texture: GLCM marginal standard deviation is zero")]
    DegenerateTexture,

    #[error("empty bubble population")]
    EmptyPopulation,

    #[error("inconsistent annotation: void fraction {0} is not below 1")]
    InconsistentVoidFraction(f64),

    #[error("invalid correlation input: {0}")]
    CorrelationInput(String),

    #[error("invalid fluid properties: {0}")]
    FluidProperties(String),

    #[error("invalid render spec: {0}")]
    RenderSpec(String),

    #[error("could not place bubble {placed} of {requested} within {attempts} attempts")]
    PlacementExhausted {
        placed: usize,
        requested: usize,
        attempts: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("probability {0} outside (0,1)")]
    ProbabilityRange(f64),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid training configuration: {0}")]
    TrainConfig(String),

    #[error("degenerate condition domain: {0}")]
    DegenerateDomain(String),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("invalid sample set: {0}")]
    SampleSet(String),

    #[error("invalid probe output: {0}")]
    Probe(String),

    #[error("MRE undefined: reference value is zero")]
    ZeroReference,

    #[error("empty row set")]
    EmptyRows,

    #[error("MRE map extent undefined: all rows share one condition")]
    UndefinedExtent,

    #[error("invalid grid request: {0}")]
    Grid(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
