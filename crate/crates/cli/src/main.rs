use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use docshift::dataset::validate_dataset;
use docshift::pipeline::{self, PipelineConfig, ShiftManifest, ShiftParams, MANIFEST_FILE};
use docshift::{ShiftKind, Task};

#[derive(Parser)]
#[command(name = "docshift", version, about = "Out-of-distribution shifts and scoring for document image datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Write a shifted copy of a dataset split plus its manifest
    Shift(ShiftArgs),
    /// Check a split for schema, box and id problems
    Validate {
        path: PathBuf,
        #[arg(long, default_value = "ie")]
        task: Task,
    },
    /// Print document, entity and label counts
    Stats {
        path: PathBuf,
        #[arg(long, default_value = "ie")]
        task: Task,
    },
    /// Score a prediction file against a gold split
    Score {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, default_value = "ie")]
        task: Task,
        #[arg(long, default_value_t = docshift::metrics::DEFAULT_TAU)]
        tau: f64,
        /// Where to write the JSON report (default: next to the predictions)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerun a manifest and compare output digests
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Keep the regenerated split here instead of a temporary directory
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
}

#[derive(Args)]
struct ShiftArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    task: Option<Task>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    shift: Option<ShiftKind>,
    /// Word swap mode for `text_swap`
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda1: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    lambda2: Option<i32>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    wavelength: Option<f64>,
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long)]
    strength_threshold: Option<f64>,
    /// Entities to move per page for `layout_move`
    #[arg(long)]
    count: Option<usize>,
    /// Oracle endpoint for the selected shift (masked-LM or predictor)
    #[arg(long)]
    oracle: Option<String>,
    /// Any config field as a dotted key, e.g. `--set resources.natural_images=coco`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn quoted(s: impl AsRef<str>) -> String {
    serde_json::to_string(s.as_ref()).expect("string serializes")
}

fn path_value(p: &Path) -> String {
    quoted(p.to_string_lossy())
}

impl ShiftArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>> {
        let mut ov: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                ov.push((k.to_string(), v));
            }
        };
        put("task", self.task.map(|t| quoted(t.to_string())));
        put("input", self.input.as_deref().map(path_value));
        put("output", self.output.as_deref().map(path_value));
        put("seed", self.seed.map(|v| v.to_string()));
        put("workers", self.workers.map(|v| v.to_string()));
        put("shift.kind", self.shift.map(|s| quoted(s.as_str())));
        put("shift.mode", self.mode.as_deref().map(quoted));
        put("shift.lambda1", self.lambda1.map(|v| v.to_string()));
        put("shift.lambda2", self.lambda2.map(|v| v.to_string()));
        put("shift.rate", self.rate.map(|v| format!("{v:?}")));
        put("shift.k", self.k.map(|v| v.to_string()));
        put("shift.amplitude", self.amplitude.map(|v| format!("{v:?}")));
        put("shift.wavelength", self.wavelength.map(|v| format!("{v:?}")));
        put("shift.trials", self.trials.map(|v| v.to_string()));
        put("shift.strength_threshold", self.strength_threshold.map(|v| format!("{v:?}")));
        put("shift.count", self.count.map(|v| v.to_string()));
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got `{s}`"))?;
            ov.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(ov)
    }

    fn config(&self) -> Result<PipelineConfig> {
        let ov = self.overrides()?;
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p, &ov)?,
            None => PipelineConfig::from_parts(None, &ov)?,
        };
        if let Some(ep) = &self.oracle {
            match cfg.shift {
                ShiftParams::TextBert { .. } => cfg.oracle.masked_lm = Some(ep.clone()),
                ShiftParams::LayoutMove { .. } => cfg.oracle.predictor = Some(ep.clone()),
                _ => bail!("shift `{}` does not use an oracle", cfg.shift.kind()),
            }
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Shift(args) => {
            let cfg = args.config()?;
            let m = pipeline::run_shift(&cfg)?;
            let s = &m.summary;
            println!(
                "{}: {} documents, {} shifted, {} unchanged, {} failed, {} flagged",
                m.shift.kind(),
                s.documents,
                s.shifted,
                s.unchanged,
                s.failed,
                s.flagged
            );
            for item in m.items.iter().filter(|i| i.error.is_some()) {
                eprintln!("failed {}: {}", item.id, item.error.as_deref().unwrap_or_default());
            }
            println!("output digest {}", m.output_digest);
            println!("manifest {}", cfg.output.join(MANIFEST_FILE).display());
            Ok(s.failed == 0)
        }
        Command::Validate { path, task } => {
            let report = validate_dataset(&path, task)?;
            for v in &report.violations {
                if v.path.is_empty() {
                    println!("{}: {}", v.file, v.message);
                } else {
                    println!("{}: {}: {}", v.file, v.path, v.message);
                }
            }
            println!(
                "{} files checked, {} violations",
                report.files_checked,
                report.violations.len()
            );
            Ok(report.is_valid())
        }
        Command::Stats { path, task } => {
            let stats = pipeline::stats(&path, task)?;
            println!("{}", serde_json::to_string_pretty(&stats)?);
            Ok(true)
        }
        Command::Score {
            gold,
            predictions,
            task,
            tau,
            out,
        } => {
            let report = pipeline::score_files(&gold, &predictions, task, tau)?;
            print!("{}", report.render_table());
            let out = out.unwrap_or_else(|| predictions.with_extension("score.json"));
            let mut json = serde_json::to_vec_pretty(&report)?;
            json.push(b'\n');
            std::fs::write(&out, json).with_context(|| format!("writing {}", out.display()))?;
            println!("report {}", out.display());
            Ok(true)
        }
        Command::Replay {
            manifest,
            input,
            output,
            workers,
        } => {
            let m = ShiftManifest::read(&manifest)?;
            let tmp;
            let output = match output {
                Some(o) => o,
                None => {
                    tmp = tempfile::tempdir()?;
                    tmp.path().join("replay")
                }
            };
            let report = pipeline::replay(&m, input.as_deref(), &output, workers)?;
            println!("expected {}", report.expected);
            println!("actual   {}", report.actual);
            println!("{}", if report.matches() { "replay matches" } else { "replay DIFFERS" });
            Ok(report.matches())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DOCSHIFT_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
