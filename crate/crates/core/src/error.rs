use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image: {0}")]
    CorruptImage(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid image dimensions: {0}")]
    InvalidDimensions(String),
    #[error("invalid sigma {0}: must be positive and finite")]
    InvalidSigma(f64),
    #[error("image too small: {0}")]
    ImageTooSmall(String),
    #[error("non-finite value at index {0}")]
    NonFiniteValue(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("width mismatch: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("no overlap between images (heights {0} and {1}, max shift {2})")]
    NoOverlap(usize, usize, usize),
    #[error("grid {rows}x{cols} too fine for {width}x{height} image")]
    GridTooFine {
        rows: usize,
        cols: usize,
        width: usize,
        height: usize,
    },
    #[error("extractor mismatch: {0} vs {1}")]
    ExtractorMismatch(String, String),
    #[error("empty training set: {0}")]
    EmptyTrainingSet(&'static str),
    #[error("degenerate scores: all {0} scores equal {1}")]
    DegenerateScores(usize, f64),
    #[error("invalid fusion weight {0}: must lie in [0, 1]")]
    InvalidAlpha(f64),
    #[error("empty score set: {0}")]
    EmptyScores(&'static str),
    #[error("empty dataset under {0}")]
    EmptyDataset(PathBuf),
    #[error("cannot parse sample path {path}: {reason}")]
    UnparsablePath { path: PathBuf, reason: String },
    #[error("need at least two classes, found {0}")]
    InsufficientClasses(usize),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {message}")]
    TypeError { key: String, message: String },
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("malformed {what} at line {line}: {message}")]
    Parse {
        what: &'static str,
        line: usize,
        message: String,
    },
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Read-side I/O failure; a missing file maps to `FileNotFound`.
    pub(crate) fn read_io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub(crate) fn write_io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn type_error(key: &str, message: impl Into<String>) -> Self {
        Error::TypeError {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

/// Attaches a pipeline stage name to errors.
pub trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
