use std::io;

use thiserror::Error;

/// Errors produced by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum SnnError {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("negative radius: {0}")]
    NegativeRadius(f64),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("matrix shape {rows}x{cols} does not match {len} values")]
    Shape { rows: usize, cols: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot normalize zero vector (row {0})")]
    ZeroVector(usize),

    #[error("undefined ratio: P1 is zero")]
    UndefinedRatio,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },

    #[error("parse error at row {row}, column {col}: {field:?}")]
    Parse { row: usize, col: usize, field: String },

    #[error("empty file")]
    EmptyFile,

    #[error("bad magic: {0:?}")]
    BadMagic([u8; 4]),

    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated file: need {needed} bytes, have {available}")]
    Truncated { needed: u64, available: u64 },

    #[error("trailing bytes after payload: {0}")]
    TrailingBytes(u64),

    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = SnnError> = std::result::Result<T, E>;
