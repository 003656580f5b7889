use std::path::PathBuf;

/// Errors of the benchmark / experiment layer. Sampler-level failures are
/// wrapped transparently.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("expected {expected} inputs, got {got}")]
    WrongArity { got: usize, expected: usize },

    #[error("input {name} = {value} outside its range [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("degenerate bounds [{lo}, {hi}] in dimension {dim}")]
    DegenerateBounds { dim: usize, lo: f64, hi: f64 },

    #[error("bounds give {got} dimensions, data has {expected}")]
    BoundsDimensionMismatch { got: usize, expected: usize },

    #[error("{path}: line {line}, column {col}: {what}")]
    CsvCell {
        path: PathBuf,
        line: u64,
        col: usize,
        what: String,
    },

    #[error("{path}: {what}")]
    CsvLayout { path: PathBuf, what: String },

    #[error("dataset has {rows} rows, need {need} (train {train} + test {test})")]
    NotEnoughRows {
        rows: usize,
        need: usize,
        train: usize,
        test: usize,
    },

    #[error("rescaled input {value} in dimension {dim} falls outside [0, 1]")]
    OutsideUnitCube { dim: usize, value: f64 },

    #[error("bad experiment setup: {0}")]
    BadSpec(String),

    #[error("io ({path}): {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] ta2s2::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
