use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    /// Bad arguments or configuration supplied by the caller.
    Usage,
    /// Unreadable, malformed or degenerate input data.
    Data,
    /// The numerics could not produce a result (e.g. zero variance).
    Numeric,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Usage => "usage",
            Category::Data => "data",
            Category::Numeric => "numeric",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Category::Usage => 1,
            Category::Data => 2,
            Category::Numeric => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: invalid PGM: {detail}", path.display())]
    Pgm { path: PathBuf, detail: String },

    #[error("{}: invalid landmarks: {detail}", path.display())]
    LandmarkFile { path: PathBuf, detail: String },

    #[error("landmark set needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("duplicate landmark point at indices {first} and {second}")]
    DuplicatePoint { first: usize, second: usize },

    #[error("all points are collinear")]
    Collinear,

    #[error("triangle inequality violated for edge lengths ({0}, {1}, {2})")]
    TriangleInequality(f64, f64, f64),

    #[error("all triangle areas are zero")]
    ZeroAreas,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{}: invalid manifest: {detail}", path.display())]
    Manifest { path: PathBuf, detail: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("at least 2 training images are required, got {0}")]
    TooFewImages(usize),

    #[error("training set has zero variance")]
    ZeroVariance,

    #[error("landmark scheme mismatch: gallery uses {expected} points, got {found}")]
    SchemeMismatch { expected: usize, found: usize },

    #[error("dt_pca mode requires landmarks: {0}")]
    MissingLandmarks(String),

    #[error("invalid eigen model: {0}")]
    Model(String),

    #[error("invalid gallery file: {0}")]
    Gallery(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Error::ZeroVariance => Category::Numeric,
            Error::InvalidArgument(_) | Error::MissingLandmarks(_) => Category::Usage,
            _ => Category::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
