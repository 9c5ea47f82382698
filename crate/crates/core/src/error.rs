use std::fmt;
use std::path::PathBuf;

/// Where in an input a parse problem was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// 1-based text line.
    Line(usize),
    /// Byte offset into a binary payload.
    Byte(u64),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(l) => write!(f, "line {l}"),
            Location::Byte(b) => write!(f, "byte {b}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{file}:{at}: format error: {msg}")]
    Format {
        file: String,
        at: Location,
        msg: String,
    },

    #[error("{file}:{at}: face {face} references vertex {index} but only {count} vertices exist")]
    Index {
        file: String,
        at: Location,
        face: usize,
        index: i64,
        count: usize,
    },

    #[error("{file}:{at}: truncated binary payload: {msg}")]
    Truncated {
        file: String,
        at: Location,
        msg: String,
    },

    #[error("{file}:{at}: frame {frame_id}: quaternion norm {norm} is not within 1e-3 of 1")]
    Pose {
        file: String,
        at: Location,
        frame_id: u64,
        norm: f64,
    },

    #[error("{file}:{at}: duplicate frame_id {frame_id}")]
    Duplicate {
        file: String,
        at: Location,
        frame_id: u64,
    },

    #[error("{file}:{at}: value out of range: {msg}")]
    Range {
        file: String,
        at: Location,
        msg: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{} detection frame(s) have no pose in the trajectory: {}", .0.len(), fmt_ids(.0))]
    OrphanFrames(Vec<u64>),

    #[error("no frames in common between predictions and ground truth")]
    NoCommonFrames,

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn fmt_ids(ids: &[u64]) -> String {
    let shown: Vec<String> = ids.iter().take(10).map(|i| i.to_string()).collect();
    if ids.len() > 10 {
        format!("{}, ...", shown.join(", "))
    } else {
        shown.join(", ")
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
