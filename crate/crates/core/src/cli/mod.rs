//! Batch orchestration behind the `berrymorph` binary.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error
//! (including a batch with no input files), 3 partial failure.

mod config;
mod metadata;
mod output;
mod pipeline;
mod plot;
mod report;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

pub use config::{RunConfig, SCHEMA_VERSION};
pub use metadata::{apply_roi, load_metadata, ImageMeta};
pub use output::CLUSTER_COLUMNS;
pub use pipeline::{
    angle_series, cluster_key, cluster_label, cmd_pipeline, discover_inputs, fit_count_correction, BerryRow, ClusterKey,
    ClusterRecord, ImageEntry, ImageStatus, PipelineRun, RunManifest, HULL_PCS,
};
pub use plot::{cmd_plot, ecdf_svg, hulls_svg, staircase_d, PlotKind, Svg, HULL_SWEEP};
pub use report::cmd_report;

use crate::berry_filter::{decode_masks, detect_reference, Candidate, ReferenceSpec};
use crate::error::{Error, Result};
use crate::mask_io::{load_mask_file, write_atomic, write_mask_file};
use crate::synth::{gen_scene_2d, gen_scene_3d, view_scene, SceneSpec, SynthScene, VIEW_ANGLES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "berrymorph", version, about = "Grape-cluster berry morphometrics from instance masks")]
pub struct Cli {
    /// Log verbosity (error, warn, info, debug).
    #[arg(long, global = true, default_value = "warn")]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthMode {
    /// Labelled 2D scenes with decoy masks.
    #[value(name = "2d")]
    TwoD,
    /// Sphere-packed clusters viewed from 0/90/180/270 degrees.
    #[value(name = "3d")]
    ThreeD,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter masks and compute berry and cluster descriptors for a batch.
    Pipeline {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured worker count.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Generate synthetic mask files with truth sidecars.
    Synth {
        /// TOML scene spec; defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Number of consecutive seeds starting at the scene seed.
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, value_enum, default_value = "2d")]
        mode: SynthMode,
    },
    /// Draw SVG plots from a pipeline output directory.
    Plot {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
        /// Defaults to `<results>/plots`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a summary of a pipeline output directory.
    Report {
        #[arg(long)]
        results: PathBuf,
    },
    /// Detect the reference circle in one mask file and print the scale.
    Calibrate {
        mask_file: PathBuf,
        #[arg(long, default_value_t = ReferenceSpec::default().diameter_mm)]
        diameter_mm: f64,
        #[arg(long, default_value_t = ReferenceSpec::default().min_diameter_px)]
        min_diameter_px: f64,
        #[arg(long, default_value_t = ReferenceSpec::default().max_diameter_px)]
        max_diameter_px: f64,
    },
}

/// Error class to exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

pub fn load_scene_spec(path: Option<&Path>) -> Result<SceneSpec> {
    let spec = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => SceneSpec::default(),
    };
    spec.validate()?;
    Ok(spec)
}

fn write_scene(out: &Path, scene: &SynthScene) -> Result<()> {
    let id = &scene.truth.scene_id;
    write_mask_file(&out.join(format!("{id}.json")), &scene.mask_file)?;
    write_atomic(&out.join(format!("{id}.truth.json")), &serde_json::to_vec_pretty(&scene.truth)?)
}

/// Writes `count` scenes (2D) or four views per cluster (3D) plus a
/// `metadata.csv` keyed by image id. Returns the image ids written.
pub fn cmd_synth(spec: &SceneSpec, count: u64, mode: SynthMode, out: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(out)?;
    let mut meta = csv::Writer::from_writer(Vec::new());
    meta.write_record(["image", "genotype", "block", "vine", "cluster", "angle", "true_count"])?;
    let mut ids = Vec::new();
    for k in 0..count {
        let s = SceneSpec {
            seed: spec.seed + k,
            ..spec.clone()
        };
        let vine = format!("v{}", s.seed);
        let views: Vec<(u32, SynthScene)> = match mode {
            SynthMode::TwoD => vec![(0, gen_scene_2d(&s)?)],
            SynthMode::ThreeD => {
                let scene = gen_scene_3d(&s)?;
                VIEW_ANGLES
                    .iter()
                    .map(|&a| view_scene(&scene, a, &s).map(|v| (a, v)))
                    .collect::<Result<_>>()?
            }
        };
        for (angle, v) in views {
            write_scene(out, &v)?;
            meta.write_record([
                v.truth.scene_id.as_str(),
                s.layout.name(),
                "b1",
                &vine,
                "c1",
                &angle.to_string(),
                &v.truth.true_count.to_string(),
            ])?;
            ids.push(v.truth.scene_id.clone());
        }
    }
    let bytes = meta.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(&out.join("metadata.csv"), &bytes)?;
    Ok(ids)
}

pub fn cmd_calibrate(path: &Path, spec: &ReferenceSpec) -> Result<String> {
    spec.validate()?;
    let file = load_mask_file(path)?;
    let cands = decode_masks(&file)?;
    let refs: Vec<&Candidate> = cands.iter().collect();
    let cal = detect_reference(&refs, spec)?;
    Ok(serde_json::to_string_pretty(&cal)?)
}

fn init_logging(level: &str) {
    let _ = env_logger::Builder::new().parse_filters(level).format_timestamp(None).try_init();
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging(&cli.log);
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Pipeline { config, threads } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(t) = threads {
                cfg.threads = t;
            }
            let run = cmd_pipeline(&cfg)?;
            let m = &run.manifest;
            eprintln!(
                "{} images: {} ok, {} warning, {} error; outputs in {}",
                m.images.len(),
                m.ok,
                m.warning,
                m.error,
                cfg.output.display()
            );
            Ok(if m.images.is_empty() || m.error == m.images.len() {
                EXIT_DATA
            } else if m.has_errors() {
                EXIT_PARTIAL
            } else {
                EXIT_OK
            })
        }
        Command::Synth { spec, out, count, mode } => {
            let spec = load_scene_spec(spec.as_deref())?;
            let ids = cmd_synth(&spec, count, mode, &out)?;
            eprintln!("{} mask files written to {}", ids.len(), out.display());
            Ok(EXIT_OK)
        }
        Command::Plot { results, kind, out } => {
            let out = out.unwrap_or_else(|| results.join("plots"));
            for p in cmd_plot(&results, kind, &out)? {
                println!("{}", p.display());
            }
            Ok(EXIT_OK)
        }
        Command::Report { results } => {
            print!("{}", cmd_report(&results)?);
            Ok(EXIT_OK)
        }
        Command::Calibrate {
            mask_file,
            diameter_mm,
            min_diameter_px,
            max_diameter_px,
        } => {
            let spec = ReferenceSpec {
                diameter_mm,
                min_diameter_px,
                max_diameter_px,
                ..ReferenceSpec::default()
            };
            println!("{}", cmd_calibrate(&mask_file, &spec)?);
            Ok(EXIT_OK)
        }
    }
}
