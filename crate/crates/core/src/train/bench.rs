use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{train, Precision, RunResult, TrainConfig};
use crate::data::{generate_synthetic, load_dataset, DatasetSpec, SynthSpec};
use crate::error::{io_err, Error, Result};
use crate::scalar::Scalar;

/// Where the graphs of a benchmark row come from.
#[derive(Debug, Clone)]
pub enum BenchmarkSource {
    /// Run `r` uses split `(split_index + r) mod 10` and seed `seed + r`.
    Dataset(DatasetSpec),
    /// Run `r` regenerates the graph with seed `spec.seed + r`.
    Synthetic { name: String, spec: SynthSpec },
}

impl BenchmarkSource {
    pub fn name(&self) -> String {
        match self {
            BenchmarkSource::Dataset(s) => s.name.to_string(),
            BenchmarkSource::Synthetic { name, .. } => name.clone(),
        }
    }
}

/// Mean and spread of one source over its runs, with and without TE.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub dataset: String,
    pub runs: usize,
    pub te_mean: f64,
    pub te_std: f64,
    pub baseline_mean: f64,
    pub baseline_std: f64,
    /// Total TE wall time over total baseline wall time.
    pub overhead_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub dataset: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct BenchmarkReport {
    pub runs: Vec<RunResult>,
    pub summaries: Vec<Summary>,
    pub skipped: Vec<Skipped>,
}

/// Sample mean and `n - 1` standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn run_pair<T: Scalar>(source: &BenchmarkSource, r: usize, cfg: &TrainConfig) -> Result<(RunResult, RunResult)> {
    let seed = cfg.seed + r as u64;
    let (graph, split) = match source {
        BenchmarkSource::Dataset(spec) => {
            let split = (spec.split_index + r) % 10;
            let spec = DatasetSpec::new(spec.name, spec.root_dir.clone(), split)?;
            (load_dataset::<T>(&spec, seed)?.graph, split)
        }
        BenchmarkSource::Synthetic { spec, .. } => {
            let spec = SynthSpec {
                seed: spec.seed + r as u64,
                ..*spec
            };
            (generate_synthetic::<T>(&spec)?, r)
        }
    };
    let name = source.name();
    let mut on = cfg.clone();
    on.seed = seed;
    on.te.enabled = true;
    let mut off = on.clone();
    off.te.enabled = false;
    let te = train(&graph, &on)?.labelled(name.clone(), split);
    let base = train(&graph, &off)?.labelled(name, split);
    Ok((te, base))
}

/// Trains every source `runs` times with and without TE. A source that
/// fails to load is skipped and the reason recorded.
pub fn benchmark(sources: &[BenchmarkSource], cfg: &TrainConfig, runs: usize) -> Result<BenchmarkReport> {
    if runs == 0 {
        return Err(Error::Config("runs must be ≥ 1".into()));
    }
    cfg.validate()?;
    let mut report = BenchmarkReport::default();
    'sources: for source in sources {
        let name = source.name();
        let mut te_runs = Vec::with_capacity(runs);
        let mut base_runs = Vec::with_capacity(runs);
        for r in 0..runs {
            let pair = match cfg.precision {
                Precision::F32 => run_pair::<f32>(source, r, cfg),
                Precision::F64 => run_pair::<f64>(source, r, cfg),
            };
            match pair {
                Ok((te, base)) => {
                    log::info!(
                        "{name} run {r}: TE {:.4} ({:.1}s), baseline {:.4} ({:.1}s)",
                        te.test_accuracy,
                        te.total_wall_time,
                        base.test_accuracy,
                        base.total_wall_time
                    );
                    te_runs.push(te);
                    base_runs.push(base);
                }
                Err(e @ (Error::Io { .. } | Error::Parse { .. } | Error::Split { .. })) if r == 0 => {
                    log::warn!("skipping {name}: {e}");
                    report.skipped.push(Skipped {
                        dataset: name,
                        reason: e.to_string(),
                    });
                    continue 'sources;
                }
                Err(e) => return Err(e),
            }
        }
        let accs = |v: &[RunResult]| v.iter().map(|r| r.test_accuracy).collect::<Vec<_>>();
        let wall = |v: &[RunResult]| v.iter().map(|r| r.total_wall_time).sum::<f64>();
        let (te_mean, te_std) = mean_std(&accs(&te_runs));
        let (baseline_mean, baseline_std) = mean_std(&accs(&base_runs));
        report.summaries.push(Summary {
            dataset: name,
            runs,
            te_mean,
            te_std,
            baseline_mean,
            baseline_std,
            overhead_ratio: wall(&te_runs) / wall(&base_runs),
        });
        for (a, b) in te_runs.into_iter().zip(base_runs) {
            report.runs.push(a);
            report.runs.push(b);
        }
    }
    Ok(report)
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub dataset: String,
    pub split: usize,
    pub te_enabled: bool,
    pub test_acc: f64,
    pub best_val_epoch: usize,
    pub te_wall_s: f64,
    pub total_wall_s: f64,
    pub te_calls: usize,
    pub seed: u64,
    pub config_hash: String,
}

impl From<&RunResult> for CsvRow {
    fn from(r: &RunResult) -> Self {
        CsvRow {
            dataset: r.dataset.clone(),
            split: r.split_index,
            te_enabled: r.te_enabled,
            test_acc: r.test_accuracy,
            best_val_epoch: r.best_val_epoch,
            te_wall_s: r.te_wall_time,
            total_wall_s: r.total_wall_time,
            te_calls: r.te_invocation_count,
            seed: r.seed,
            config_hash: r.config_fingerprint.clone(),
        }
    }
}

pub fn write_csv<W: Write>(runs: &[RunResult], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in runs {
        wr.serialize(CsvRow::from(r))?;
    }
    wr.flush().map_err(io_err("<csv>"))?;
    Ok(())
}

pub fn write_markdown<W: Write>(report: &BenchmarkReport, mut w: W) -> std::io::Result<()> {
    writeln!(w, "| Dataset | Runs | GGCN | TE-GGCN | Overhead |")?;
    writeln!(w, "|---|---|---|---|---|")?;
    for s in &report.summaries {
        writeln!(
            w,
            "| {} | {} | {:.2} ± {:.2} | {:.2} ± {:.2} | {:.2}x |",
            s.dataset,
            s.runs,
            100.0 * s.baseline_mean,
            100.0 * s.baseline_std,
            100.0 * s.te_mean,
            100.0 * s.te_std,
            s.overhead_ratio
        )?;
    }
    for s in &report.skipped {
        writeln!(w, "| {} | 0 | skipped: {} | | |", s.dataset, s.reason.replace('|', "/"))?;
    }
    Ok(())
}

/// Writes the per-run CSV and, optionally, the markdown summary.
pub fn save_report(report: &BenchmarkReport, csv_path: &Path, md_path: Option<&Path>) -> Result<()> {
    let f = std::fs::File::create(csv_path).map_err(io_err(csv_path))?;
    write_csv(&report.runs, f)?;
    if let Some(p) = md_path {
        let f = std::fs::File::create(p).map_err(io_err(p))?;
        write_markdown(report, f).map_err(io_err(p))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[0.7]), (0.7, 0.0));
    }

    #[test]
    fn missing_dataset_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let spec = DatasetSpec::new(crate::data::DatasetName::Texas, dir.path(), 0).unwrap();
        let cfg = TrainConfig {
            epochs: 2,
            patience: 2,
            ..Default::default()
        };
        let rep = benchmark(&[BenchmarkSource::Dataset(spec)], &cfg, 2).unwrap();
        assert!(rep.runs.is_empty());
        assert_eq!(rep.skipped.len(), 1);
        assert_eq!(rep.skipped[0].dataset, "texas");
    }
}
