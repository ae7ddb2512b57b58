//! The `mbarcode` command line.

use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mbarcode_core::detect::{detect_motion, detect_motion_framediff};
use mbarcode_core::pooling::extract_signature;
use mbarcode_core::retrieval::{self, Evaluation, SweepParameter};
use mbarcode_core::synth::{plan_corpus, CorpusParams, SceneParams, ViewParams};
use mbarcode_core::{Method, MotionMaskSequence};

use crate::config::{Detector, PipelineConfig};
use crate::error::{self, Error, Result};
use crate::{corpus, labels, relevance, report, signature, video_io};

#[derive(Debug, Parser)]
#[command(
    name = "mbarcode",
    version,
    about = "Motion-barcode video event retrieval"
)]
pub struct Cli {
    #[command(flatten)]
    pub options: Options,
    #[command(subcommand)]
    pub command: Command,
}

/// Pipeline settings shared by every command. Flags override `--config`.
#[derive(Debug, Default, Args)]
pub struct Options {
    /// `key = value` settings file
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub detector: Option<Detector>,
    /// Correlation threshold of the heuristic score
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Target superpixel count
    #[arg(long, global = true)]
    pub regions: Option<usize>,
    /// Minimum fraction of frames with motion for a barcode to be kept
    #[arg(long, global = true)]
    pub min_motion: Option<f64>,
    /// Barcodes below which a clip is flagged low-motion
    #[arg(long, global = true)]
    pub min_barcodes: Option<usize>,
    /// heuristic or assignment
    #[arg(long, global = true, value_parser = parse_method)]
    pub method: Option<Method>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// More log output (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frames manifest to motion masks
    Detect {
        manifest: PathBuf,
        /// Directory for mask frames and their manifest
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Mask manifests to `.mbsig` signature files
    Signature {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        /// Also write the superpixel label map of each clip
        #[arg(long)]
        labels: bool,
    },
    /// Rank a database of signatures against one query signature
    Query { query: PathBuf, database: PathBuf },
    /// Per-query AP and mean AP over a signature directory
    Eval {
        signatures: PathBuf,
        relevance: PathBuf,
        /// Write the full rankings here
        #[arg(long)]
        results: Option<PathBuf>,
        /// Write the summary here instead of standard output
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Mean AP as a function of one parameter
    Sweep {
        /// Signature directory; for region_count, a clip list of mask manifests
        input: PathBuf,
        relevance: PathBuf,
        /// threshold, temporal_length or region_count
        #[arg(long, value_parser = parse_parameter)]
        parameter: SweepParameter,
        /// `start:stop:step` or a comma separated list
        #[arg(long, value_parser = parse_values, allow_hyphen_values = true)]
        values: Values,
    },
    /// Generate a synthetic multi-view corpus
    Synth {
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        scenes: usize,
        #[arg(long, default_value_t = 2)]
        views: usize,
        #[arg(long, default_value_t = 20)]
        distractors: usize,
        /// Bit-flip probability per pixel and frame
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Largest area fraction of the occluder in each view
        #[arg(long, default_value_t = 0.0)]
        occluder: f64,
        #[arg(long, default_value_t = 128)]
        width: usize,
        #[arg(long, default_value_t = 96)]
        height: usize,
        #[arg(long, default_value_t = 200)]
        frames: usize,
        /// Also render grayscale frames
        #[arg(long)]
        with_frames: bool,
        /// Re-render an existing plan file instead of drawing a new one
        #[arg(long, conflicts_with_all = ["scenes", "views", "distractors", "noise", "occluder"])]
        plan: Option<PathBuf>,
    },
}

/// Parsed `--values`.
#[derive(Clone, Debug, PartialEq)]
pub struct Values(pub Vec<f64>);

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse()
        .map_err(|_| format!("unknown method {s:?} (expected heuristic or assignment)"))
}

fn parse_parameter(s: &str) -> std::result::Result<SweepParameter, String> {
    s.parse()
        .map_err(|_| format!("unknown sweep parameter {s:?}"))
}

fn round12(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

/// `start:stop:step` (inclusive of `stop` when it lands on the grid) or
/// `a,b,c`.
pub fn parse_values(s: &str) -> std::result::Result<Values, String> {
    let number = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("bad number {t:?}"))
    };
    let parts: Vec<&str> = s.split(':').collect();
    let values = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
            let valid = step > 0.0 && stop >= start;
            if !valid {
                return Err(format!("range {s:?} needs step > 0 and stop >= start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count)
                .map(|i| round12(start + i as f64 * step))
                .collect()
        }
        [_] => s
            .split(',')
            .map(number)
            .collect::<std::result::Result<_, _>>()?,
        _ => return Err(format!("expected start:stop:step or a list, got {s:?}")),
    };
    Ok(Values(values))
}

impl Options {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut config = PipelineConfig::default();
        if let Some(path) = &self.config {
            config.apply_file(path)?;
        }
        if let Some(d) = self.detector {
            config.detector = d;
        }
        if let Some(t) = self.threshold {
            config.threshold = t;
        }
        if let Some(r) = self.regions {
            config.target_regions = r;
        }
        if let Some(m) = self.min_motion {
            config.min_motion_fraction = m;
        }
        if let Some(b) = self.min_barcodes {
            config.min_barcodes = b;
        }
        if let Some(m) = self.method {
            config.method = m;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        Ok(config)
    }
}

fn stdout_error(e: io::Error) -> Error {
    Error::io("<stdout>", e)
}

/// Sends CSV to `path`, or to standard output when `path` is `None`.
fn emit(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = std::fs::File::create(p).map_err(|e| Error::io(p, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| Error::io(p, e))
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            f(&mut w).and_then(|_| w.flush()).map_err(stdout_error)
        }
    }
}

fn load_index(dir: &Path) -> Result<retrieval::SignatureIndex> {
    let signatures = signature::read_dir(dir)?;
    retrieval::build_index(signatures).map_err(|e| Error::pipeline(dir, e))
}

/// Mask manifests listed one per line in `list`, relative to its directory.
fn load_clip_list(list: &Path) -> Result<Vec<MotionMaskSequence>> {
    video_io::read_manifest(list)?
        .into_iter()
        .map(|(_, manifest)| video_io::load_mask_sequence(&manifest))
        .collect()
}

/// Low-motion queries are summarised on standard error so that CSV output
/// stays clean.
fn report_low_motion(index: &retrieval::SignatureIndex, eval: &Evaluation) {
    let flagged: Vec<&str> = index
        .entries()
        .iter()
        .filter(|s| s.low_motion)
        .map(|s| s.clip_id.as_str())
        .collect();
    if flagged.is_empty() {
        return;
    }
    eprintln!("low-motion clips: {} of {}", flagged.len(), index.len());
    let (low, normal): (Vec<f64>, Vec<f64>) = {
        let mut low = Vec::new();
        let mut normal = Vec::new();
        for r in &eval.results {
            let sig = index.get(&r.query_id);
            if sig.is_some_and(|s| s.low_motion) {
                low.push(r.average_precision);
            } else {
                normal.push(r.average_precision);
            }
        }
        (low, normal)
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    if !low.is_empty() {
        eprintln!(
            "mean AP over {} low-motion queries: {:.6}",
            low.len(),
            mean(&low)
        );
    }
    if !normal.is_empty() {
        eprintln!(
            "mean AP over {} other queries: {:.6}",
            normal.len(),
            mean(&normal)
        );
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let config = cli.options.resolve()?;
    match &cli.command {
        Command::Detect { manifest, out } => {
            let frames = video_io::load_frame_sequence(manifest)?;
            let masks = match config.detector {
                Detector::Vibe => detect_motion(&frames, &config.background_model())
                    .map_err(|e| Error::pipeline(manifest, e))?,
                Detector::Framediff => detect_motion_framediff(&frames, config.framediff_threshold),
            };
            let written = video_io::write_mask_sequence(&masks, out)?;
            println!("{}", written.display());
        }
        Command::Signature {
            manifests,
            out,
            labels: with_labels,
        } => {
            error::create_dir_all(out)?;
            let params = config.signature_params();
            for manifest in manifests {
                let masks = video_io::load_mask_sequence(manifest)?;
                let (sig, map) =
                    extract_signature(&masks, &params).map_err(|e| Error::pipeline(manifest, e))?;
                log::info!(
                    "{}: {} of {} regions kept",
                    sig.clip_id,
                    sig.len(),
                    sig.region_count
                );
                signature::write(
                    &sig,
                    &out.join(format!("{}.{}", sig.clip_id, signature::EXTENSION)),
                )?;
                if *with_labels {
                    labels::write_raw(&map, &out.join(format!("{}.labels", sig.clip_id)))?;
                    labels::write_pgm(&map, &out.join(format!("{}.labels.pgm", sig.clip_id)))?;
                }
            }
        }
        Command::Query { query, database } => {
            let q = signature::read(query)?;
            let index = load_index(database)?;
            let ranking = retrieval::query(&index, &q, config.method, config.threshold)
                .map_err(|e| Error::pipeline(query, e))?;
            emit(None, |w| report::write_ranking(w, &q.clip_id, &ranking))?;
        }
        Command::Eval {
            signatures,
            relevance: rel_path,
            results,
            summary,
        } => {
            let index = load_index(signatures)?;
            let rel = relevance::read(rel_path)?;
            let eval = retrieval::evaluate(&index, &rel, &config.retrieval_settings())
                .map_err(|e| Error::pipeline(rel_path, e))?;
            if let Some(path) = results {
                emit(Some(path), |w| report::write_results(w, &eval.results))?;
            }
            emit(summary.as_deref(), |w| report::write_summary(w, &eval))?;
            report_low_motion(&index, &eval);
        }
        Command::Sweep {
            input,
            relevance: rel_path,
            parameter,
            values,
        } => {
            let rel = relevance::read(rel_path)?;
            let settings = config.retrieval_settings();
            let rows = match parameter {
                SweepParameter::RegionCount => {
                    let masks = load_clip_list(input)?;
                    retrieval::sweep_region_count(
                        &masks,
                        &rel,
                        &values.0,
                        &config.signature_params(),
                        &settings,
                    )
                }
                _ => retrieval::sweep(&load_index(input)?, &rel, *parameter, &values.0, &settings),
            }
            .map_err(|e| Error::pipeline(input, e))?;
            emit(None, |w| report::write_sweep(w, *parameter, &rows))?;
        }
        Command::Synth {
            out,
            scenes,
            views,
            distractors,
            noise,
            occluder,
            width,
            height,
            frames,
            with_frames,
            plan,
        } => {
            let plan = match plan {
                Some(path) => corpus::read_plan(path)?,
                None => plan_corpus(&CorpusParams {
                    scenes: *scenes,
                    views_per_scene: *views,
                    distractors: *distractors,
                    scene: SceneParams {
                        duration: *frames,
                        width: *width,
                        height: *height,
                        ..SceneParams::default()
                    },
                    view: ViewParams {
                        noise_p: *noise,
                        occluder_fraction: *occluder,
                    },
                    seed: config.seed,
                })
                .map_err(|e| Error::Usage(e.to_string()))?,
            };
            let manifests = corpus::write_corpus(&plan, out, *with_frames)?;
            log::info!("wrote {} clips to {}", manifests.len(), out.display());
        }
    }
    Ok(())
}

/// Process exit status for an error: 2 for usage errors, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Usage(_) => 2,
        _ => 1,
    }
}
