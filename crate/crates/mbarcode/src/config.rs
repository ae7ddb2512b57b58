//! Pipeline settings. Values come from built-in defaults, then an optional
//! `key = value` file, then command-line flags, later sources winning.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use mbarcode_core::{
    BackgroundModelParams, Method, RetrievalSettings, SignatureParams, SlicParams,
};

use crate::error::{self, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Detector {
    #[default]
    Vibe,
    Framediff,
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Detector::Vibe => "vibe",
            Detector::Framediff => "framediff",
        })
    }
}

impl FromStr for Detector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "vibe" => Ok(Detector::Vibe),
            "framediff" => Ok(Detector::Framediff),
            other => Err(format!(
                "unknown detector {other:?} (expected vibe or framediff)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub detector: Detector,
    pub samples_per_pixel: u32,
    pub match_radius: u8,
    pub min_matches: u32,
    pub subsample_factor: u32,
    /// Intensity change above which the frame-difference detector fires.
    pub framediff_threshold: u8,
    pub min_motion_fraction: f64,
    pub min_barcodes: usize,
    pub target_regions: usize,
    pub compactness: f64,
    pub slic_iterations: usize,
    pub threshold: f64,
    pub method: Method,
    /// Seeds the background model and the synthetic corpus generator.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let bg = BackgroundModelParams::default();
        let slic = SlicParams::default();
        let retrieval = RetrievalSettings::default();
        Self {
            detector: Detector::Vibe,
            samples_per_pixel: bg.samples_per_pixel,
            match_radius: bg.match_radius,
            min_matches: bg.min_matches,
            subsample_factor: bg.subsample_factor,
            framediff_threshold: 15,
            min_motion_fraction: retrieval.min_motion_fraction,
            min_barcodes: retrieval.min_barcodes,
            target_regions: slic.target_regions,
            compactness: slic.compactness,
            slic_iterations: slic.iterations,
            threshold: retrieval.threshold,
            method: retrieval.method,
            seed: bg.rng_seed,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value {value:?} for {key}"))
}

impl PipelineConfig {
    pub const KEYS: [&'static str; 14] = [
        "detector",
        "samples_per_pixel",
        "match_radius",
        "min_matches",
        "subsample_factor",
        "framediff_threshold",
        "min_motion_fraction",
        "min_barcodes",
        "target_regions",
        "compactness",
        "slic_iterations",
        "threshold",
        "method",
        "seed",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "detector" => self.detector = value.parse()?,
            "samples_per_pixel" => self.samples_per_pixel = parse(key, value)?,
            "match_radius" => self.match_radius = parse(key, value)?,
            "min_matches" => self.min_matches = parse(key, value)?,
            "subsample_factor" => self.subsample_factor = parse(key, value)?,
            "framediff_threshold" => self.framediff_threshold = parse(key, value)?,
            "min_motion_fraction" => self.min_motion_fraction = parse(key, value)?,
            "min_barcodes" => self.min_barcodes = parse(key, value)?,
            "target_regions" => self.target_regions = parse(key, value)?,
            "compactness" => self.compactness = parse(key, value)?,
            "slic_iterations" => self.slic_iterations = parse(key, value)?,
            "threshold" => self.threshold = parse(key, value)?,
            "method" => {
                self.method = value
                    .parse()
                    .map_err(|_| format!("unknown method {value:?}"))?
            }
            "seed" => self.seed = parse(key, value)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Applies a `key = value` file on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let usage = |msg: String| Error::Usage(format!("{}:{}: {msg}", path.display(), i + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage("expected `key = value`".into()))?;
            self.set(key.trim(), value.trim()).map_err(usage)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        self.apply_text(&error::read_to_string(path)?, path)
    }

    /// Every key with its current value, in `key = value` form.
    pub fn to_text(&self) -> String {
        format!(
            "detector = {}\nsamples_per_pixel = {}\nmatch_radius = {}\nmin_matches = {}\n\
             subsample_factor = {}\nframediff_threshold = {}\nmin_motion_fraction = {}\n\
             min_barcodes = {}\ntarget_regions = {}\ncompactness = {}\nslic_iterations = {}\n\
             threshold = {}\nmethod = {}\nseed = {}\n",
            self.detector,
            self.samples_per_pixel,
            self.match_radius,
            self.min_matches,
            self.subsample_factor,
            self.framediff_threshold,
            self.min_motion_fraction,
            self.min_barcodes,
            self.target_regions,
            self.compactness,
            self.slic_iterations,
            self.threshold,
            self.method,
            self.seed,
        )
    }

    pub fn background_model(&self) -> BackgroundModelParams {
        BackgroundModelParams {
            samples_per_pixel: self.samples_per_pixel,
            match_radius: self.match_radius,
            min_matches: self.min_matches,
            subsample_factor: self.subsample_factor,
            rng_seed: self.seed,
        }
    }

    pub fn signature_params(&self) -> SignatureParams {
        SignatureParams {
            slic: SlicParams {
                target_regions: self.target_regions,
                compactness: self.compactness,
                iterations: self.slic_iterations,
            },
            min_motion_fraction: self.min_motion_fraction,
            min_barcodes: self.min_barcodes,
        }
    }

    pub fn retrieval_settings(&self) -> RetrievalSettings {
        RetrievalSettings {
            method: self.method,
            threshold: self.threshold,
            min_motion_fraction: self.min_motion_fraction,
            min_barcodes: self.min_barcodes,
        }
    }
}
