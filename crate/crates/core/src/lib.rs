//! Motion barcodes for video event retrieval across extreme viewpoint changes.
//!
//! A motion barcode records, for one pixel (or one superpixel), whether there
//! was motion at each frame of a clip. Motion *existence* survives changes of
//! viewpoint that destroy appearance and motion direction, so clips showing the
//! same event can be matched by correlating their barcodes.
//!
//! The pipeline, end to end:
//!
//! 1. [`detect`] turns grayscale frames into binary motion masks.
//! 2. [`barcode`] reads per-pixel barcodes and the motion image (ones-count
//!    per pixel).
//! 3. [`slic`] segments the motion image into superpixels.
//! 4. [`pooling`] reduces every superpixel to one representative barcode and
//!    assembles a [`ClipSignature`].
//! 5. [`similarity`] scores signature pairs, either with the fast
//!    threshold-fraction score or with an optimal assignment
//!    ([`matching`]).
//! 6. [`retrieval`] ranks a database against a query and computes mean AP.
//!
//! [`synth`] renders synthetic multi-view scenes with known correspondence.
//!
//! The crate is `no_std` (it needs `alloc`). File formats and the CLI live in
//! the `mbarcode` crate.

#![no_std]

extern crate alloc;

pub mod barcode;
pub mod detect;
mod error;
pub mod matching;
pub mod pooling;
pub mod retrieval;
pub mod rng;
mod sequence;
pub mod similarity;
pub mod slic;
pub mod synth;

pub use barcode::{MotionBarcode, MotionImage, SourceId};
pub use detect::BackgroundModelParams;
pub use error::{Error, Result};
pub use pooling::{ClipSignature, SignatureParams};
pub use retrieval::{RankedResult, Relevance, RetrievalSettings, SignatureIndex};
pub use sequence::{FrameSequence, MotionMaskSequence};
pub use similarity::{Method, SimilarityScore};
pub use slic::{SlicParams, SuperpixelLabelMap};
