use alloc::string::String;

/// Errors raised by the core pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("frame_count < 2 (got {0})")]
    TooFewFrames(usize),
    #[error("sequence has no frames")]
    EmptySequence,
    #[error("frame {frame} has {actual} pixels, expected {expected}")]
    FrameSize {
        frame: usize,
        expected: usize,
        actual: usize,
    },
    #[error("non-binary mask value {value} in frame {frame}")]
    NonBinaryMask { frame: usize, value: u8 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("pixel ({x}, {y}) out of bounds for {width}x{height} image")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("barcode length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("unknown region label {label} (region count {count})")]
    UnknownLabel { label: u32, count: u32 },
    #[error("{regions} regions requested for an image of {pixels} pixels")]
    TooManyRegions { regions: usize, pixels: usize },
    #[error("signature of clip {0} has no barcodes")]
    EmptySignature(String),
    #[error("duplicate clip id {0}")]
    DuplicateClip(String),
    #[error("clip {clip} has {actual} frames, index uses {expected}")]
    FrameCountMismatch {
        clip: String,
        expected: usize,
        actual: usize,
    },
    #[error("unknown clip {0}")]
    UnknownClip(String),
    #[error("query {0} has no relevant clips")]
    EmptyRelevant(String),
    #[error("no results to average")]
    NoResults,
    #[error("degenerate view transform (determinant {0})")]
    DegenerateTransform(f64),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
