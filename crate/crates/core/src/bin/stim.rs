//! Command-line harness: synthetic clip generation, experiment runs, cost
//! accounting, analyses, and merge-map export.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error. The
//! `STIM_THREADS` environment variable overrides the worker thread count.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use stim_core::cost::schedule_cost;
use stim_core::error::Error;
use stim_core::experiment::{run_experiment, save_video, ExperimentConfig};
use stim_core::report;
use stim_core::synth::{synth_generate, SyntheticVideoSpec};
use stim_core::{MergeSchedule, ModelConfig};

#[derive(Parser)]
#[command(name = "stim", about = "Token-merging engine and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Dotted-path overrides, e.g. `--set seed=42` or `--set model.frames=8`.
    /// Values parse as JSON first, falling back to plain strings.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic clip and its dynamic-mask ground truth.
    Synth {
        /// JSON file holding the clip recipe.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output clip path (binary tensor record).
        #[arg(long)]
        out: PathBuf,
        /// Optional CSV of per-step dynamic patch masks.
        #[arg(long)]
        mask_out: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Run a full experiment and print its JSON report.
    Run(ConfigArgs),
    /// Evaluate the analytic cost model only (no forward pass).
    Cost(ConfigArgs),
    /// Run an experiment whose config requests at least one analysis.
    Analyze(ConfigArgs),
    /// Run an experiment and export per-layer merge maps.
    ExportMaps {
        #[command(flatten)]
        config: ConfigArgs,
        /// Directory for the per-layer CSV files.
        #[arg(long)]
        out_dir: PathBuf,
    },
}

/// Apply `key=value` overrides onto a JSON tree. Keys are dotted paths;
/// values parse as JSON with a plain-string fallback.
fn set_path(node: &mut Value, parts: &[&str], value: Value, full: &str) -> Result<(), Error> {
    let obj = node
        .as_object_mut()
        .ok_or_else(|| Error::InvalidConfig(format!("--set path {full} crosses a non-object")))?;
    match parts {
        [leaf] => {
            obj.insert(leaf.to_string(), value);
            Ok(())
        }
        [head, rest @ ..] => {
            let child = obj.entry(head.to_string()).or_insert_with(|| json!({}));
            set_path(child, rest, value, full)
        }
        [] => Err(Error::InvalidConfig(format!("--set path {full} is empty"))),
    }
}

fn apply_sets(doc: &mut Value, sets: &[String]) -> Result<(), Error> {
    for entry in sets {
        let (path, raw) = entry
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("--set needs KEY=VALUE, got {entry}")))?;
        let value: Value =
            serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let parts: Vec<&str> = path.split('.').collect();
        set_path(doc, &parts, value, path)?;
    }
    Ok(())
}

fn load_config<T: serde::de::DeserializeOwned>(
    path: &PathBuf,
    sets: &[String],
) -> Result<T, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut doc: Value = serde_json::from_str(&text)?;
    apply_sets(&mut doc, sets)?;
    Ok(serde_json::from_value(doc)?)
}

fn is_config_error(err: &Error) -> bool {
    matches!(
        err,
        Error::InvalidConfig(_)
            | Error::InvalidSchedule(_)
            | Error::InvalidSynthSpec(_)
            | Error::Json(_)
    )
}

fn fail(err: Error) -> ExitCode {
    // Error stub in the report schema, so scripted consumers see a uniform shape.
    let stub = report::finalize(
        [("error".to_string(), json!(err.to_string()))]
            .into_iter()
            .collect(),
    );
    eprintln!("error: {err}");
    println!(
        "{}",
        String::from_utf8_lossy(&report::to_bytes(&stub)).trim_end()
    );
    if is_config_error(&err) {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

fn cmd_synth(
    spec_path: PathBuf,
    seed: u64,
    out: PathBuf,
    mask_out: Option<PathBuf>,
    sets: Vec<String>,
) -> Result<(), Error> {
    let spec: SyntheticVideoSpec = load_config(&spec_path, &sets)?;
    let (video, masks) = synth_generate(&spec, seed)?;
    save_video(&out, &video)?;
    if let Some(path) = mask_out {
        let (gh, gw) = spec.mask_grid();
        let mut body = String::from("step,gy,gx,dynamic\n");
        for (step, mask) in masks.iter().enumerate() {
            for gy in 0..gh {
                for gx in 0..gw {
                    body.push_str(&format!(
                        "{step},{gy},{gx},{}\n",
                        u8::from(mask[gy * gw + gx])
                    ));
                }
            }
        }
        std::fs::write(path, body)?;
    }
    println!(
        "{}",
        json!({
            "frames": video.frames,
            "height": video.height,
            "width": video.width,
            "clip": out.display().to_string(),
        })
    );
    Ok(())
}

/// Config subset for the cost-only command.
#[derive(serde::Deserialize)]
struct CostConfig {
    model: ModelConfig,
    schedule: MergeSchedule,
}

fn cmd_cost(args: ConfigArgs) -> Result<(), Error> {
    let cfg: CostConfig = load_config(&args.config, &args.sets)?;
    let cost = schedule_cost(&cfg.model, &cfg.schedule)?;
    let body = serde_json::to_value(&cost)?
        .as_object()
        .cloned()
        .expect("cost report is an object");
    let out = report::finalize(body);
    print!("{}", String::from_utf8_lossy(&report::to_bytes(&out)));
    Ok(())
}

fn cmd_run(args: ConfigArgs, require_analysis: bool) -> Result<(), Error> {
    let cfg: ExperimentConfig = load_config(&args.config, &args.sets)?;
    if require_analysis
        && cfg.analysis.similarity.is_none()
        && !cfg.analysis.static_dynamic
        && cfg.analysis.ib.is_none()
    {
        return Err(Error::InvalidConfig(
            "analyze requires at least one analysis request".into(),
        ));
    }
    let out = run_experiment(&cfg)?;
    print!("{}", String::from_utf8_lossy(&report::to_bytes(&out)));
    Ok(())
}

fn cmd_export_maps(args: ConfigArgs, out_dir: PathBuf) -> Result<(), Error> {
    let mut cfg: ExperimentConfig = load_config(&args.config, &args.sets)?;
    cfg.outputs.merge_map_dir = Some(out_dir);
    let out = run_experiment(&cfg)?;
    print!("{}", String::from_utf8_lossy(&report::to_bytes(&out)));
    Ok(())
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("STIM_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                eprintln!("error: STIM_THREADS must be a positive integer");
                return ExitCode::from(1);
            }
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth {
            spec,
            seed,
            out,
            mask_out,
            sets,
        } => cmd_synth(spec, seed, out, mask_out, sets),
        Command::Run(args) => cmd_run(args, false),
        Command::Cost(args) => cmd_cost(args),
        Command::Analyze(args) => cmd_run(args, true),
        Command::ExportMaps { config, out_dir } => cmd_export_maps(config, out_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => fail(err),
    }
}
