use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Pipeline stage an error originated from. Used for CLI diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Dataset,
    Encoder,
    Cluster,
    Metrics,
    Harness,
    Report,
    Pipeline,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Dataset => "dataset_core",
            Stage::Encoder => "encoder",
            Stage::Cluster => "cluster_engine",
            Stage::Metrics => "leakage_metrics",
            Stage::Harness => "synth_harness",
            Stage::Report => "audit_report",
            Stage::Pipeline => "audit",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("header mismatch: expected {expected:?}, found {found:?}")]
    HeaderMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    /// `row` is the 1-based data row (header excluded).
    #[error("row {row}, column {column}: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("table has no data rows")]
    EmptyTable,

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("encoding model mismatch: {0} vs {1}")]
    ModelMismatch(String, String),

    #[error("pca target dimension {requested} out of range 1..={max}")]
    PcaDimension { requested: usize, max: usize },

    #[error("invalid dbscan parameters: {0}")]
    DbscanParams(String),

    #[error("degenerate geometry, supply eps")]
    DegenerateGeometry,

    #[error("need more than {min_samples} rows for automatic eps, got {n}")]
    TooFewRows { n: usize, min_samples: usize },

    #[error("invalid threshold grid: {0}")]
    Grid(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid generator spec: {0}")]
    Generator(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("threshold {0} is not on the curve grid")]
    TauNotOnGrid(f64),

    #[error("report invariant violated: {0}")]
    Report(String),

    #[error("{0}")]
    Config(String),

    #[error("verification failed: {0}")]
    Verify(String),

    #[error("[{stage}] {source}")]
    Staged {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn at(self, stage: Stage) -> Self {
        match self {
            Error::Staged { .. } => self,
            other => Error::Staged {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// The error without its stage wrapper.
    pub fn root(&self) -> &Error {
        match self {
            Error::Staged { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Staged { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Attach a stage to any error in a result.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
