// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed annotation document: {0}")]
    MalformedDocument(String),

    #[error("dangling image reference: annotation {annotation} points at image {image_id}")]
    DanglingImageReference { annotation: u64, image_id: u64 },

    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),

    #[error("invalid image dimensions {width}x{height} for image {image_id}")]
    InvalidDimensions { image_id: u64, width: u32, height: u32 },

    #[error("{what} bound exceeded: {value} (maximum {max})")]
    BoundExceeded { what: &'static str, value: f64, max: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: (u32, u32), found: (u32, u32) },

    #[error("empty ground-truth mask")]
    EmptyGroundTruth,

    #[error("missing mask file for frame {frame}: {path}")]
    MissingMask { frame: usize, path: PathBuf },

    #[error("window [{start}, {end}) exceeds video of {frames} frames")]
    WindowOutOfBounds { start: usize, end: usize, frames: usize },

    #[error("unknown category `{0}`")]
    UnknownCategory(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("overlapping intervals for `{label}`: [{a_start}, {a_end}) and [{b_start}, {b_end})")]
    OverlappingIntervals {
        label: String,
        a_start: f64,
        a_end: f64,
        b_start: f64,
        b_end: f64,
    },

    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },

    #[error("job {index} failed: {source}")]
    Job {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("augmentation of image {image_id} copy {copy} failed: {source}")]
    Augment {
        image_id: u64,
        copy: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn image(path: impl Into<PathBuf>, source: image::ImageError) -> Self {
        Error::Image { path: path.into(), source }
    }

    pub fn format(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Format { path: path.into(), line, message: message.into() }
    }

    /// True when the failure came from the filesystem rather than from the data.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } | Error::MissingMask { .. } => true,
            Error::Image { source, .. } => matches!(source, image::ImageError::IoError(_)),
            Error::Csv(e) => e.is_io_error(),
            Error::Job { source, .. } | Error::Augment { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
