use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gazetrace::analytics::{build_network, export_network, pool_timeline, timeline_csv, NetworkFormat, TimelineParams};
use gazetrace::io::{read_events, run_session, validate_inputs, RunConfig, WORKERS_ENV};
use gazetrace::synth::ScenarioScript;
use gazetrace::Error;

#[derive(Parser)]
#[command(name = "gazetrace", version, about = "Gaze-target attribution and attention analytics for recorded sessions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline over a session and write all artifacts.
    Run(RunArgs),
    /// Generate a synthetic session with ground truth.
    Synth(SynthArgs),
    /// Pool a gaze event file into a per-participant timeline CSV.
    Timeline(TimelineArgs),
    /// Build the attention network from a gaze event file.
    Network(NetworkArgs),
    /// Check scene, gallery and (optionally) frame files without running.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML or JSON file supplying any of the options below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long)]
    gallery: Option<PathBuf>,
    #[arg(long)]
    frames: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Maximum centroid distance for frame-to-frame association.
    #[arg(long)]
    max_distance_px: Option<f64>,
    /// Frames a tracklet may go unmatched before it is lost.
    #[arg(long)]
    max_gap_frames: Option<u64>,
    /// Cosine-similarity threshold overriding the gallery's own.
    #[arg(long)]
    reid_threshold: Option<f64>,
    /// Leading detections searched for an embedding per tracklet.
    #[arg(long)]
    embedding_search: Option<usize>,
    #[arg(long)]
    interval_s: Option<f64>,
    #[arg(long)]
    threshold_s: Option<f64>,
    /// Frame rate used for the duration of the last frame.
    #[arg(long)]
    nominal_fps: Option<f64>,
    /// Worker threads for per-frame encoding.
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    /// Built-in scenario.
    #[arg(long, conflicts_with = "script", required_unless_present = "script")]
    preset: Option<String>,
    /// JSON scenario script.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write one depth raster file per frame instead of inline depth.
    #[arg(long)]
    rasters: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TimelineArgs {
    /// gaze_events.jsonl produced by `run`.
    events: PathBuf,
    #[arg(long, default_value_t = TimelineParams::default().interval_s)]
    interval_s: f64,
    #[arg(long, default_value_t = TimelineParams::default().threshold_s)]
    threshold_s: f64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Json,
}

#[derive(Args)]
struct NetworkArgs {
    events: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Dot)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long)]
    gallery: Option<PathBuf>,
    #[arg(long)]
    frames: Option<PathBuf>,
}

fn base_config(path: Option<&Path>) -> Result<RunConfig, Error> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn run_config(a: RunArgs) -> Result<RunConfig, Error> {
    let mut cfg = base_config(a.config.as_deref())?;
    if let Some(v) = a.scene {
        cfg.scene = v;
    }
    if let Some(v) = a.gallery {
        cfg.gallery = v;
    }
    if let Some(v) = a.frames {
        cfg.frames = v;
    }
    if let Some(v) = a.output {
        cfg.output = v;
    }
    if let Some(v) = a.max_distance_px {
        cfg.tracking.max_distance_px = v;
    }
    if let Some(v) = a.max_gap_frames {
        cfg.tracking.max_gap_frames = v;
    }
    if let Some(v) = a.reid_threshold {
        cfg.reid_threshold = Some(v);
    }
    if let Some(v) = a.embedding_search {
        cfg.embedding_search = v;
    }
    if let Some(v) = a.interval_s {
        cfg.timeline.interval_s = v;
    }
    if let Some(v) = a.threshold_s {
        cfg.timeline.threshold_s = v;
    }
    if let Some(v) = a.nominal_fps {
        cfg.nominal_fps = v;
    }
    if let Some(v) = a.workers {
        cfg.workers = Some(v);
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p.display().to_string(), e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run(a) => {
            let cfg = run_config(a)?;
            let s = run_session(&cfg)?;
            println!(
                "{} frames, {} events, {} dropped detections -> {} ({:.2} s, {} workers)",
                s.frames,
                s.events,
                s.dropped,
                s.output.display(),
                s.timings.total_s,
                s.timings.workers
            );
        }
        Command::Synth(a) => {
            let mut script = match (&a.preset, &a.script) {
                (Some(name), _) => ScenarioScript::preset(name).ok_or_else(|| {
                    Error::Config(format!("unknown preset {name}; choose one of {}", ScenarioScript::PRESETS.join(", ")))
                })?,
                (None, Some(p)) => ScenarioScript::load(p)?,
                (None, None) => unreachable!("clap requires one of --preset/--script"),
            };
            if a.rasters {
                script.depth_mode = gazetrace::synth::DepthMode::Raster;
            }
            let ds = script.generate(a.seed).map_err(|e| Error::Config(e.to_string()))?;
            ds.write_to(&a.out)?;
            println!(
                "{} frames, {} detections -> {} (run with: gazetrace run --config {})",
                ds.frames.len(),
                ds.ground_truth.len(),
                a.out.display(),
                a.out.join("run.json").display()
            );
        }
        Command::Timeline(a) => {
            let events = read_events(&a.events)?;
            let params = TimelineParams { interval_s: a.interval_s, threshold_s: a.threshold_s };
            let intervals = pool_timeline(&events, &params, None)?;
            emit(a.out.as_deref(), &timeline_csv(&intervals))?;
        }
        Command::Network(a) => {
            let events = read_events(&a.events)?;
            let format = match a.format {
                Format::Dot => NetworkFormat::Dot,
                Format::Json => NetworkFormat::Json,
            };
            emit(a.out.as_deref(), &export_network(&build_network(&events), format))?;
        }
        Command::Validate(a) => {
            let mut cfg = base_config(a.config.as_deref())?;
            if let Some(v) = a.scene {
                cfg.scene = v;
            }
            if let Some(v) = a.gallery {
                cfg.gallery = v;
            }
            if let Some(v) = a.frames {
                cfg.frames = v;
            }
            let frames = (!cfg.frames.as_os_str().is_empty()).then_some(cfg.frames.as_path());
            let report = validate_inputs(&cfg.scene, &cfg.gallery, frames)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
