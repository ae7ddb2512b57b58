//! File formats, synthetic corpora and the command-line front end for
//! motion-barcode retrieval. The algorithms live in [`mbarcode_core`].

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod labels;
pub mod pgm;
pub mod relevance;
pub mod report;
pub mod signature;
pub mod video_io;

pub use error::{Error, Result};
pub use mbarcode_core as core;
