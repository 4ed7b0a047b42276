//! Command-line front end: run sweeps, compare strategies in result files and
//! print the derived physical-layer profile.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use noma_lpwa::experiment::{
    compare_strategies, read_trial_rows, run_experiment_with, write_metadata, CsvSink,
    ExperimentConfig, Metric, Selector,
};

#[derive(Debug, Parser)]
#[command(name = "noma-lpwa", version, about = "Uplink NOMA resource allocation for LPWA networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte-Carlo sweep and write per-trial and aggregate CSV rows.
    Run(RunArgs),
    /// Paired comparison of two strategies across one or more result files.
    Compare(CompareArgs),
    /// Print noise power, airtimes and sensitivity thresholds.
    PrintProfile(ProfileArgs),
}

/// Settings shared by `run` and `print-profile`. Flags override the file.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` setting using the config file grammar; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got {kv:?}");
            };
            config.set(k, v)?;
        }
        Ok(config)
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output CSV path; stdout when omitted. A `.meta.json` sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated node counts.
    #[arg(long)]
    nodes: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// roundrobin and/or random, comma-separated.
    #[arg(long)]
    channel_strategy: Option<String>,
    /// unfair, fair, random and/or distance, comma-separated.
    #[arg(long)]
    time_strategy: Option<String>,
    /// max_power and/or optimal, comma-separated.
    #[arg(long)]
    power_strategy: Option<String>,
    /// noma_sic, plain and/or oma, comma-separated.
    #[arg(long)]
    models: Option<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut config = self.config.load()?;
        let flags: [(&str, Option<String>); 9] = [
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("workers", self.workers.map(|v| v.to_string())),
            ("nodes", self.nodes.clone()),
            ("trials", self.trials.map(|v| v.to_string())),
            ("channel-strategy", self.channel_strategy.clone()),
            ("time-strategy", self.time_strategy.clone()),
            ("power-strategy", self.power_strategy.clone()),
            ("models", self.models.clone()),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                config.set(key, &v).with_context(|| format!("--{key}"))?;
            }
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Result CSV files written by `run`.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// First strategy, e.g. `time=unfair`.
    #[arg(long)]
    a: Selector,
    /// Second strategy, e.g. `time=fair`.
    #[arg(long)]
    b: Selector,
    /// min_rate or mean_rate.
    #[arg(long, default_value = "min_rate")]
    metric: Metric,
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Emit JSON instead of a table.
    #[arg(long)]
    json: bool,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(&args),
        Command::Compare(args) => compare(&args),
        Command::PrintProfile(args) => print_profile(&args),
    }
}

fn run(args: &RunArgs) -> Result<()> {
    let config = args.resolve()?;
    for w in config.network(config.node_counts[0], 0).warnings() {
        eprintln!("warning: {w}");
    }
    let started = Instant::now();
    let table = match &config.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
            }
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut sink = CsvSink::new(BufWriter::new(file), path, config.seed)?;
            let table = run_experiment_with(&config, |p| {
                eprintln!("N={} done ({} rows)", p.nodes, p.rows.len());
                sink.write_point(p)
            })?;
            sink.into_inner()?
                .flush()
                .with_context(|| format!("writing {}", path.display()))?;
            let meta = write_metadata(path, &config, &table.points, started.elapsed())?;
            eprintln!("wrote {} and {}", path.display(), meta.display());
            table
        }
        None => {
            let mut sink = CsvSink::new(io::stdout().lock(), "<stdout>", config.seed)?;
            run_experiment_with(&config, |p| sink.write_point(p))?
        }
    };
    let infeasible = table
        .rows()
        .filter(|r| r.status != noma_lpwa::experiment::RowStatus::Ok)
        .count();
    if infeasible > 0 {
        eprintln!("{infeasible} rows were structurally infeasible and are excluded from aggregates");
    }
    eprintln!("elapsed {:.3?}", started.elapsed());
    Ok(())
}

fn compare(args: &CompareArgs) -> Result<()> {
    let mut rows = Vec::new();
    for f in &args.files {
        rows.extend(read_trial_rows(f)?);
    }
    let summaries = compare_strategies(&rows, &args.a, &args.b, args.metric)?;
    let mut out = io::stdout().lock();
    if args.json {
        serde_json::to_writer_pretty(&mut out, &summaries)?;
        writeln!(out)?;
    } else {
        writeln!(out, "a: {}  b: {}", args.a, args.b)?;
        for s in &summaries {
            writeln!(out, "{s}")?;
        }
    }
    Ok(())
}

fn print_profile(args: &ProfileArgs) -> Result<()> {
    let profile = args.config.load()?.profile()?;
    let audit = profile.audit();
    if args.json {
        println!("{}", serde_json::to_string_pretty(&audit)?);
    } else {
        print!("{audit}");
    }
    Ok(())
}
