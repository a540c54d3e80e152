mod settings;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::Serialize;
use teggcn::control::DiagnosticLog;
use teggcn::data::{load_dataset, DatasetName, DatasetSpec, SynthSpec};
use teggcn::model::save_checkpoint;
use teggcn::train::{
    benchmark, save_report, train_with_log, write_csv, BenchmarkSource, Precision, RunResult,
    TrainConfig,
};
use teggcn::verify::{estimator_suite, gradient_suite};
use teggcn::Scalar;

use settings::Settings;

/// Signed-attention GNN training with transfer-entropy feature control.
#[derive(Parser, Debug)]
#[command(name = "teggcn", version)]
struct Cli {
    /// Flat `key = value` file of options; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train on one dataset split and write the run summary.
    Train(TrainArgs),
    /// Train every dataset with and without TE control over several runs.
    Benchmark(BenchArgs),
    /// Run the gradient-check and estimator self-tests.
    Verify(VerifyArgs),
}

/// Training options shared by `train` and `benchmark`.
#[derive(Args, Debug)]
struct Hyper {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Epochs without validation improvement before stopping
    /// (default: min(100, epochs)).
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    degree_scaling: Option<bool>,
    #[arg(long, value_parser = ["f32", "f64"])]
    precision: Option<String>,
    /// Checkpoint selection metric.
    #[arg(long, value_parser = ["val_loss", "val_accuracy"])]
    select_by: Option<String>,
    /// Train the plain signed-attention model.
    #[arg(long)]
    no_te: bool,
    /// Epochs between TE recomputations.
    #[arg(long)]
    te_period: Option<usize>,
    /// Fraction of nodes kept by heterophily ranking.
    #[arg(long)]
    te_het_frac: Option<f64>,
    /// Fraction of the heterophilic nodes kept by degree ranking.
    #[arg(long)]
    te_deg_frac: Option<f64>,
    /// Highest-degree neighbours evaluated per selected node.
    #[arg(long)]
    te_max_neighbors: Option<usize>,
    /// KSG neighbour count.
    #[arg(long)]
    te_k: Option<usize>,
    /// History length of the TE embedding.
    #[arg(long)]
    te_lag: Option<usize>,
    #[arg(long)]
    te_seed: Option<u64>,
    /// Where the correction is added.
    #[arg(long, value_parser = ["output", "last_hidden"])]
    te_site: Option<String>,
    /// Labels used for heterophily at TE steps.
    #[arg(long, value_parser = ["train_plus_predictions", "full_labels"])]
    te_labels: Option<String>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Dataset name (cora, citeseer, pubmed, texas, wisconsin, cornell,
    /// chameleon, squirrel, actor).
    #[arg(long)]
    dataset: Option<String>,
    /// Directory holding one sub-directory per dataset [default: data].
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Split index in 0..10 [default: 0].
    #[arg(long)]
    split: Option<usize>,
    /// Run summary destination (`.json`, or `.csv` for a single CSV row).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the per-step TE diagnostics as JSON lines.
    #[arg(long)]
    te_log: Option<PathBuf>,
    /// Save the parameters of the selected checkpoint.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[command(flatten)]
    hyper: Hyper,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Comma-separated dataset names; `synthetic:<h>` adds a generated
    /// 1000-node graph with edge homophily `h`.
    #[arg(long)]
    datasets: Option<String>,
    /// Runs per dataset [default: 10].
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// First split index; run `r` uses split `(split + r) mod 10` [default: 0].
    #[arg(long)]
    split: Option<usize>,
    /// Per-run CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary table destination.
    #[arg(long)]
    markdown: Option<PathBuf>,
    #[command(flatten)]
    hyper: Hyper,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Seeds for the gradient checks [default: 20].
    #[arg(long)]
    seeds: Option<u64>,
}

fn required<'a>(s: &'a Settings, key: &str) -> Result<&'a str> {
    s.get(key)
        .with_context(|| format!("--{key} is required (on the command line or in --config)"))
}

fn data_dir(s: &Settings) -> PathBuf {
    s.get("data-dir").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("data"))
}

#[derive(Serialize)]
struct TrainOutput<'a> {
    config: &'a TrainConfig,
    result: &'a RunResult,
}

fn run_train_typed<T: Scalar>(s: &Settings, cfg: &TrainConfig) -> Result<()> {
    let name: DatasetName = required(s, "dataset")?.parse()?;
    let out = PathBuf::from(required(s, "out")?);
    let split = s.parsed("split")?.unwrap_or(0);
    let spec = DatasetSpec::new(name, data_dir(s), split)?;
    let data = load_dataset::<T>(&spec, cfg.seed)
        .with_context(|| format!("loading {name} from {}", spec.dir().display()))?;
    let log = match s.get("te-log") {
        Some(p) => DiagnosticLog::to_file(Path::new(p))?,
        None => DiagnosticLog::in_memory(),
    };
    let artifacts = train_with_log(&data.graph, cfg, log)?;
    let result = artifacts.result.labelled(name.to_string(), split);
    if let Some(p) = s.get("checkpoint") {
        save_checkpoint(&artifacts.best_params, Path::new(p))?;
    }

    let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
    if out.extension().is_some_and(|e| e == "csv") {
        write_csv(std::slice::from_ref(&result), file)?;
    } else {
        let output = TrainOutput {
            config: cfg,
            result: &result,
        };
        serde_json::to_writer_pretty(BufWriter::new(file), &output)?;
    }
    println!(
        "{name} split {split}: test accuracy {:.4} (best epoch {}, {:.1}s, {} TE pair requests)",
        result.test_accuracy, result.best_val_epoch, result.total_wall_time, result.te_invocation_count
    );
    Ok(())
}

fn run_train(s: &Settings) -> Result<()> {
    let cfg = s.train_config()?;
    match cfg.precision {
        Precision::F32 => run_train_typed::<f32>(s, &cfg),
        Precision::F64 => run_train_typed::<f64>(s, &cfg),
    }
}

fn parse_source(token: &str, root: &Path, split: usize, seed: u64) -> Result<BenchmarkSource> {
    if let Some(h) = token.strip_prefix("synthetic:") {
        let h: f64 = h.parse().with_context(|| format!("bad homophily in {token:?}"))?;
        if !(0.0..=1.0).contains(&h) {
            bail!("homophily in {token:?} must lie in [0, 1]");
        }
        return Ok(BenchmarkSource::Synthetic {
            name: token.to_string(),
            spec: SynthSpec {
                num_nodes: 1000,
                target_homophily: h,
                seed,
                ..SynthSpec::default()
            },
        });
    }
    Ok(BenchmarkSource::Dataset(DatasetSpec::new(token.parse()?, root, split)?))
}

fn run_benchmark(s: &Settings) -> Result<()> {
    let cfg = s.train_config()?;
    let out = PathBuf::from(required(s, "out")?);
    let runs = s.parsed("runs")?.unwrap_or(10);
    let split = s.parsed("split")?.unwrap_or(0);
    let root = data_dir(s);
    let sources = required(s, "datasets")?
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_source(t, &root, split, cfg.seed))
        .collect::<Result<Vec<_>>>()?;
    if sources.is_empty() {
        bail!("--datasets lists no datasets");
    }
    let report = benchmark(&sources, &cfg, runs)?;
    let md = s.get("markdown").map(PathBuf::from);
    save_report(&report, &out, md.as_deref())?;
    for sm in &report.summaries {
        println!(
            "{}: GGCN {:.2} ± {:.2}, TE-GGCN {:.2} ± {:.2}, overhead {:.2}x",
            sm.dataset,
            100.0 * sm.baseline_mean,
            100.0 * sm.baseline_std,
            100.0 * sm.te_mean,
            100.0 * sm.te_std,
            sm.overhead_ratio
        );
    }
    for sk in &report.skipped {
        println!("{}: skipped ({})", sk.dataset, sk.reason);
    }
    Ok(())
}

fn run_verify(s: &Settings) -> Result<bool> {
    let seeds = s.parsed("seeds")?.unwrap_or(20);
    let mut checks = gradient_suite(seeds)?;
    checks.extend(estimator_suite()?);
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", checks.len());
    Ok(failed == 0)
}

/// Joins the error chain, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut prev = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !prev.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
        prev = msg;
    }
    out
}

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = (|| -> Result<bool> {
        let mut s = match &cli.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::default(),
        };
        let (name, sub) = matches.subcommand().expect("subcommand is required");
        let cmd = Cli::command();
        s.apply_matches(cmd.find_subcommand(name).expect("known subcommand"), sub);
        match cli.command {
            Command::Train(_) => run_train(&s).map(|_| true),
            Command::Benchmark(_) => run_benchmark(&s).map(|_| true),
            Command::Verify(_) => run_verify(&s),
        }
    })();
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}
