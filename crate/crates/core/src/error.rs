use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("a polygon needs at least 3 sides, got {0}")]
    TooFewSides(u32),
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("{field} must be positive and finite, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("rotation must lie in [0, 2π), got {0}")]
    RotationOutOfRange(f64),
    #[error("degradation proportion must lie in [0, 1), got {0}")]
    ProportionOutOfRange(f64),
    #[error("kind `none` carries no proportion, got {0}")]
    NoneWithProportion(f64),
    #[error("unknown degradation kind `{0}`")]
    UnknownKind(String),
    #[error("stroked polygon (reach {reach}) around {center:?} leaves the {canvas_size}px canvas")]
    OutOfCanvas {
        canvas_size: u32,
        reach: f64,
        center: Point,
    },
    #[error("r_min {r_min} with stroke {stroke_width} does not fit a {canvas_size}px canvas")]
    InfeasibleRadius {
        r_min: f64,
        stroke_width: f64,
        canvas_size: u32,
    },
}

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("canvas dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((u32, u32), (u32, u32)),
    #[error("reference canvas has no black pixels")]
    BlankReference,
    #[error("pixel buffer of {len} bytes does not match {width}x{height}")]
    BufferSize { len: usize, width: u32, height: u32 },
    #[error("pixel value {0} is neither 0 nor 255")]
    NotBinary(u8),
    #[error("png encode failed: {0}")]
    Encode(#[from] png::EncodingError),
    #[error("png decode failed: {0}")]
    Decode(#[from] png::DecodingError),
    #[error("unsupported png layout: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Failures while producing or reading a dataset on disk.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("worker pool: {0}")]
    Pool(String),
}

impl DatasetError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the filesystem rather than of the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, DatasetError::Io { .. } | DatasetError::Pool(_))
    }
}

/// One offending line in a predictions file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("{} invalid prediction row(s): {}", .0.len(), summarize(.0))]
    Rows(Vec<LineError>),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("top-{k} needs {k} ranked labels, row for `{image_id}` has {available}")]
    RankTooShort {
        image_id: String,
        k: usize,
        available: usize,
    },
    #[error("image_id `{0}` is not in the manifest")]
    UnknownImage(String),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("report is empty")]
    EmptyReport,
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn summarize(errors: &[LineError]) -> String {
    let shown: Vec<String> = errors
        .iter()
        .take(10)
        .map(|e| format!("line {}: {}", e.line, e.message))
        .collect();
    let more = errors.len().saturating_sub(shown.len());
    if more > 0 {
        format!("{}; and {more} more", shown.join("; "))
    } else {
        shown.join("; ")
    }
}
