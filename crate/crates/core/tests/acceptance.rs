//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero unless every criterion passes.
//!
//! Dataset-backed criteria read from `$TEGGCN_DATA_DIR` (default: `data/`
//! at the workspace root) and report BLOCKED when the files are absent.
//! Pass criterion numbers as arguments to run a subset.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teggcn::autodiff::Tape;
use teggcn::control::{selection_sizes, DiagnosticLog, DiagnosticRecord, TeControlConfig};
use teggcn::data::{generate_synthetic, load_dataset, load_graph, DatasetName, DatasetSpec, SynthSpec};
use teggcn::graph::{full_label_heterophily, Graph, Masks};
use teggcn::model::{gcn_layer, ggcn_layer, GraphContext, LayerOptions, LayerParams};
use teggcn::te::kdtree::chebyshev;
use teggcn::te::{te_ksg, te_plugin, KdTree, TeConfig};
use teggcn::train::{mean_std, train, train_with_log, RunResult, TrainConfig};
use teggcn::verify::{binary_copy_chain, gaussian_coupling, independent_gaussians, model_gradient_error};
use teggcn::Error;

enum Outcome {
    Pass(String),
    Fail(String),
    Blocked(String),
}

/// Collects sub-checks; any failure fails the criterion, otherwise any
/// missing input blocks it.
#[derive(Default)]
struct Report {
    notes: Vec<String>,
    failed: bool,
    blocked: bool,
}

impl Report {
    fn check(&mut self, ok: bool, note: String) {
        if !ok {
            self.failed = true;
        }
        self.notes.push(format!("{}{note}", if ok { "" } else { "✗ " }));
    }

    fn block(&mut self, note: String) {
        self.blocked = true;
        self.notes.push(format!("blocked: {note}"));
    }

    fn finish(self) -> Outcome {
        let text = self.notes.join("; ");
        if self.failed {
            Outcome::Fail(text)
        } else if self.blocked {
            Outcome::Blocked(text)
        } else {
            Outcome::Pass(text)
        }
    }
}

fn data_dir() -> PathBuf {
    std::env::var_os("TEGGCN_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
            manifest.ancestors().nth(2).unwrap_or(manifest).join("data")
        })
}

fn is_missing(e: &Error) -> bool {
    matches!(e, Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
}

fn timed(report: &mut Report, limit_s: f64, start: Instant) {
    let t = start.elapsed().as_secs_f64();
    report.check(t < limit_s, format!("runtime {t:.1}s (limit {limit_s:.0}s)"));
}

// 1 ─────────────────────────────────────────────────────────────────────
fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut r = Report::default();
    let mut worst = 0.0f64;
    for seed in 0..20 {
        match model_gradient_error(seed) {
            Ok(e) => worst = worst.max(e),
            Err(e) => return Outcome::Fail(format!("seed {seed}: {e}")),
        }
    }
    r.check(worst < 1e-4, format!("max relative error {worst:.2e} over 20 seeds (< 1e-4)"));
    timed(&mut r, 60.0, start);
    r.finish()
}

// 2 ─────────────────────────────────────────────────────────────────────
fn estimator_oracles() -> Outcome {
    let start = Instant::now();
    let mut r = Report::default();
    let cfg = TeConfig::default();
    let chain = binary_copy_chain(10_000, 2024);
    let plugin = te_plugin(&chain, &cfg, 2).unwrap();
    let ksg = te_ksg(&chain, &cfg).unwrap();
    let ln2 = std::f64::consts::LN_2;
    r.check((plugin - ln2).abs() <= 0.02, format!("plug-in {plugin:.4} vs ln 2 = {ln2:.4} (±0.02)"));
    r.check((ksg - plugin).abs() <= 0.1, format!("KSG {ksg:.4} vs plug-in (±0.1)"));

    let mean = (0..10u64)
        .map(|s| te_ksg(&independent_gaussians(2000, 500 + s), &cfg).unwrap())
        .sum::<f64>()
        / 10.0;
    r.check(mean.abs() < 0.05, format!("independent Gaussians mean {mean:.4} (|·| < 0.05)"));

    for rho in [0.5f64, 0.8] {
        let analytic = -0.5 * (1.0 - rho * rho).ln();
        let est = te_ksg(&gaussian_coupling(4000, rho, 99), &cfg).unwrap();
        r.check(
            (est - analytic).abs() <= 0.1,
            format!("coupling ρ={rho}: KSG {est:.4} vs analytic {analytic:.4} (±0.1)"),
        );
    }
    timed(&mut r, 120.0, start);
    r.finish()
}

// 3 ─────────────────────────────────────────────────────────────────────
fn kdtree_exactness() -> Outcome {
    let start = Instant::now();
    let mut r = Report::default();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut mismatches = 0;
    let mut trials = 0;
    for dim in 1..=4 {
        for _ in 0..1000 {
            let n = rng.random_range(1..300);
            // Half the sets sit on a coarse grid to exercise ties and
            // boundary distances.
            let grid = rng.random::<bool>();
            let pts: Vec<f64> = (0..n * dim)
                .map(|_| if grid { rng.random_range(0..5) as f64 / 4.0 } else { rng.random::<f64>() })
                .collect();
            let tree = KdTree::new(&pts, dim);
            let q: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            let radius = if grid { rng.random_range(0..4) as f64 / 4.0 } else { rng.random::<f64>() * 0.5 };
            let brute = pts.chunks(dim).filter(|p| chebyshev(p, &q) < radius).count();
            mismatches += (tree.range_count(&q, radius) != brute) as usize;
            trials += 1;
        }
    }
    r.check(mismatches == 0, format!("{mismatches} mismatches in {trials} triples, dims 1–4"));
    timed(&mut r, 10.0, start);
    r.finish()
}

// 4 ─────────────────────────────────────────────────────────────────────
/// Node counts, undirected edge counts and homophily level as published.
const PUBLISHED: [(DatasetName, usize, usize, Option<f64>); 9] = [
    (DatasetName::Texas, 183, 295, Some(0.11)),
    (DatasetName::Wisconsin, 251, 466, None),
    (DatasetName::Actor, 7600, 26752, None),
    (DatasetName::Squirrel, 5201, 198493, None),
    (DatasetName::Chameleon, 2277, 31421, Some(0.23)),
    (DatasetName::Cornell, 183, 280, None),
    (DatasetName::Citeseer, 3327, 4676, Some(0.74)),
    (DatasetName::Pubmed, 19717, 44327, None),
    (DatasetName::Cora, 2708, 5278, Some(0.81)),
];

fn dataset_fidelity() -> Outcome {
    let mut r = Report::default();
    let root = data_dir();
    for (name, nodes, edges, h) in PUBLISHED {
        match load_graph::<f32>(name, &root) {
            Ok((g, _)) => {
                r.check(g.num_nodes() == nodes, format!("{name} nodes {} (= {nodes})", g.num_nodes()));
                let e = g.num_undirected_edges() as f64;
                let ratio = e / edges as f64;
                r.check(
                    (0.5..=2.0).contains(&ratio),
                    format!("{name} edges {e} vs {edges} (within 2×)"),
                );
                if let Some(h) = h {
                    let got = full_label_heterophily(&g).homophily_level;
                    r.check((got - h).abs() <= 0.05, format!("{name} h {got:.3} vs {h} (±0.05)"));
                }
            }
            Err(e) if is_missing(&e) => r.block(format!("{name} not found under {}", root.display())),
            Err(e) => r.check(false, format!("{name}: {e}")),
        }
    }
    r.finish()
}

// 5 ─────────────────────────────────────────────────────────────────────
fn structural_reduction() -> Outcome {
    let mut r = Report::default();
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(5..40);
        let f = rng.random_range(2..10);
        let out = rng.random_range(1..8);
        let edges: Vec<(usize, usize)> = (0..n * 2)
            .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
            .filter(|(a, b)| a != b)
            .collect();
        let x = Array2::from_shape_simple_fn((n, f), || rng.random_range(-1.0..1.0));
        let g = Graph::build(&edges, n, x, vec![0; n], Masks::empty(n)).unwrap();
        let ctx = GraphContext::new(&g);
        let mut tape = Tape::<f64>::new();
        let h = tape.constant(ctx.features.clone());
        let w = Array2::from_shape_simple_fn((f, out), || rng.random_range(-1.0..1.0));
        let p = LayerParams {
            weight: tape.param(w),
            bias: tape.param(Array2::zeros((1, out))),
            beta: tape.param(Array2::from_shape_simple_fn((1, 3), || rng.random_range(-1.0..1.0))),
            degree: tape.param(Array2::from_shape_simple_fn((1, 2), || rng.random_range(-1.0..1.0))),
        };
        let e = ctx.edges.len();
        let opts = LayerOptions {
            degree_scaling: false,
            sign_override: Some((Array2::ones((e, 1)), Array2::zeros((e, 1)))),
            beta_override: Some([0.0, 1.0, 0.0]),
            ..LayerOptions::default()
        };
        let signed = ggcn_layer(&mut tape, h, &p, &ctx, &opts, &mut rng).unwrap();
        let plain = gcn_layer(&mut tape, h, p.weight, &ctx, true).unwrap();
        // Independent dense oracle: elu(D^-1/2 (A + I) D^-1/2 X W).
        let mut a = Array2::<f64>::eye(n);
        for &(i, j) in g.edges() {
            a[[i, j]] = 1.0;
        }
        let d: Vec<f64> = a.rows().into_iter().map(|row| row.sum()).collect();
        let norm = Array2::from_shape_fn((n, n), |(i, j)| a[[i, j]] / (d[i] * d[j]).sqrt());
        let dense = norm
            .dot(&ctx.features.dot(tape.value(p.weight)))
            .mapv(|v| if v > 0.0 { v } else { v.exp_m1() });
        let diff = |u: &Array2<f64>, v: &Array2<f64>| (u - v).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        worst = worst
            .max(diff(tape.value(signed.out), tape.value(plain)))
            .max(diff(tape.value(signed.out), &dense));
    }
    r.check(worst <= 1e-10, format!("max |Δ| {worst:.2e} over 20 random graphs (≤ 1e-10)"));
    r.finish()
}

// 6 ─────────────────────────────────────────────────────────────────────
fn runs_on(g: &Graph<f64>, cfg: &TrainConfig, seeds: &[u64]) -> (Vec<RunResult>, Vec<RunResult>) {
    let mut te = Vec::new();
    let mut base = Vec::new();
    for &s in seeds {
        let mut c = cfg.clone();
        c.seed = s;
        c.te.enabled = true;
        te.push(train(g, &c).unwrap());
        c.te.enabled = false;
        base.push(train(g, &c).unwrap());
    }
    (te, base)
}

fn compare_means(r: &mut Report, label: &str, te: &[RunResult], base: &[RunResult]) {
    let acc = |v: &[RunResult]| v.iter().map(|x| x.test_accuracy).collect::<Vec<_>>();
    let (tm, ts) = mean_std(&acc(te));
    let (bm, bs) = mean_std(&acc(base));
    r.check(
        100.0 * tm >= 100.0 * bm - 1.0,
        format!(
            "{label}: TE-GGCN {:.2}±{:.2} vs GGCN {:.2}±{:.2} (≥ −1.0 pt)",
            100.0 * tm,
            100.0 * ts,
            100.0 * bm,
            100.0 * bs
        ),
    );
}

fn load_split(name: DatasetName, split: usize) -> Result<Graph<f64>, Error> {
    let spec = DatasetSpec::new(name, data_dir(), split)?;
    Ok(load_dataset::<f64>(&spec, 0)?.graph)
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let mut r = Report::default();
    let cfg = TrainConfig::default();
    let seeds = [0, 1, 2];

    let synth: Graph<f64> = generate_synthetic(&SynthSpec {
        num_nodes: 1000,
        target_homophily: 0.2,
        ..SynthSpec::default()
    })
    .unwrap();
    let (te, base) = runs_on(&synth, &cfg, &seeds);
    compare_means(&mut r, "synthetic h=0.2 N=1000", &te, &base);

    match load_split(DatasetName::Cora, 0) {
        Ok(g) => {
            let (te, base) = runs_on(&g, &cfg, &seeds);
            let acc = base[0].test_accuracy;
            r.check(acc >= 0.78, format!("Cora split 0 GGCN {acc:.4} (≥ 0.78)"));
            compare_means(&mut r, "Cora", &te, &base);
        }
        Err(e) if is_missing(&e) => r.block(format!("Cora: {e}")),
        Err(e) => r.check(false, format!("Cora: {e}")),
    }
    match load_split(DatasetName::Texas, 0) {
        Ok(g) => {
            let (te, base) = runs_on(&g, &cfg, &seeds);
            compare_means(&mut r, "Texas", &te, &base);
        }
        Err(e) if is_missing(&e) => r.block(format!("Texas: {e}")),
        Err(e) => r.check(false, format!("Texas: {e}")),
    }
    timed(&mut r, 900.0, start);
    r.finish()
}

// 7 ─────────────────────────────────────────────────────────────────────
fn analytic_calls(g: &Graph<f64>, cfg: &TrainConfig, records: &[DiagnosticRecord]) -> (usize, bool) {
    let (_, k2) = selection_sizes(g.num_nodes(), &cfg.te);
    let mut total = 0;
    let mut sizes_ok = true;
    for rec in records {
        sizes_ok &= rec.selected.len() == k2 && rec.epoch % cfg.te.period_epochs == 0;
        total += rec
            .selected
            .iter()
            .map(|&i| g.degree(i).min(cfg.te.max_neighbors))
            .sum::<usize>();
    }
    (total, sizes_ok)
}

fn overhead_on(r: &mut Report, label: &str, g: &Graph<f64>, cfg: &TrainConfig, limit: f64) {
    let mut on = cfg.clone();
    on.te.enabled = true;
    let art = train_with_log(g, &on, DiagnosticLog::in_memory()).unwrap();
    let mut off = cfg.clone();
    off.te.enabled = false;
    let base = train(g, &off).unwrap();
    let ratio = art.result.total_wall_time / base.total_wall_time;
    if limit.is_finite() {
        r.check(
            ratio <= limit,
            format!(
                "{label} wall {:.2}s vs {:.2}s = {ratio:.2}× (≤ {limit}×)",
                art.result.total_wall_time, base.total_wall_time
            ),
        );
    }
    let (expected, sizes_ok) = analytic_calls(g, &on, art.log.records());
    r.check(
        sizes_ok && art.result.te_invocation_count == expected,
        format!("{label} TE calls {} = analytic {expected}", art.result.te_invocation_count),
    );
}

fn overhead_envelope() -> Outcome {
    let mut r = Report::default();
    let cfg = TrainConfig::default();
    let synth: Graph<f64> = generate_synthetic(&SynthSpec {
        num_nodes: 600,
        target_homophily: 0.2,
        ..SynthSpec::default()
    })
    .unwrap();
    overhead_on(&mut r, "synthetic", &synth, &cfg, f64::INFINITY);
    match load_split(DatasetName::Texas, 0) {
        Ok(g) => overhead_on(&mut r, "Texas", &g, &cfg, 1.5),
        Err(e) if is_missing(&e) => r.block(format!("Texas: {e}")),
        Err(e) => r.check(false, format!("Texas: {e}")),
    }
    let mut cham = cfg.clone();
    cham.te.max_neighbors = 256;
    match load_split(DatasetName::Chameleon, 0) {
        Ok(g) => overhead_on(&mut r, "Chameleon", &g, &cham, 6.0),
        Err(e) if is_missing(&e) => r.block(format!("Chameleon: {e}")),
        Err(e) => r.check(false, format!("Chameleon: {e}")),
    }
    r.finish()
}

// 8 ─────────────────────────────────────────────────────────────────────
fn determinism() -> Outcome {
    let mut r = Report::default();
    let g: Graph<f64> = generate_synthetic(&SynthSpec {
        num_nodes: 400,
        target_homophily: 0.3,
        ..SynthSpec::default()
    })
    .unwrap();
    let mut cfg = TrainConfig {
        epochs: 120,
        patience: 120,
        ..TrainConfig::default()
    };
    cfg.te.enabled = false;
    let a = train(&g, &cfg).unwrap();
    let b = train(&g, &cfg).unwrap();
    let bits = |x: &RunResult| {
        x.history
            .iter()
            .flat_map(|e| [e.train_loss.to_bits(), e.val_loss.to_bits()])
            .collect::<Vec<_>>()
    };
    r.check(
        bits(&a) == bits(&b) && a.test_accuracy == b.test_accuracy,
        format!("baseline trajectory bit-identical over {} epochs", a.history.len()),
    );
    let mut variant = cfg.clone();
    variant.te = TeControlConfig {
        enabled: false,
        period_epochs: 1,
        het_fraction: 0.5,
        ..TeControlConfig::default()
    };
    r.check(
        bits(&train(&g, &variant).unwrap()) == bits(&a),
        "disabled TE ignores its other settings".into(),
    );

    cfg.te.enabled = true;
    let log_of = |g: &Graph<f64>| {
        train_with_log(g, &cfg, DiagnosticLog::in_memory())
            .unwrap()
            .log
            .into_records()
            .into_iter()
            .map(|rec| (rec.epoch, rec.selected, rec.per_node_te))
            .collect::<Vec<_>>()
    };
    let first = log_of(&g);
    r.check(
        first == log_of(&g),
        format!("selection and correction repeat across runs ({} steps)", first.len()),
    );

    // Shuffle labels among test nodes only.
    let test = Masks::indices(&g.masks().test);
    let mut labels = g.labels().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in (1..test.len()).rev() {
        let j = rng.random_range(0..=k);
        labels.swap(test[k], test[j]);
    }
    let moved = test.iter().filter(|&&i| labels[i] != g.labels()[i]).count();
    let permuted = g.with_labels(labels).unwrap();
    r.check(
        moved > 0 && log_of(&permuted) == first,
        format!("selection unchanged after permuting {moved} test labels"),
    );
    r.finish()
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("gradient correctness", gradient_correctness),
        ("estimator oracles", estimator_oracles),
        ("K-D tree exactness", kdtree_exactness),
        ("dataset fidelity", dataset_fidelity),
        ("structural reduction", structural_reduction),
        ("end-to-end training", end_to_end),
        ("overhead envelope", overhead_envelope),
        ("determinism and ablation identity", determinism),
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut all_pass = true;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (tag, text) = match run() {
            Outcome::Pass(t) => ("PASS", t),
            Outcome::Fail(t) => ("FAIL", t),
            Outcome::Blocked(t) => ("BLOCKED", t),
        };
        all_pass &= tag == "PASS";
        println!("criterion {id} [{name}]: {tag} ({:.1}s) — {text}", start.elapsed().as_secs_f64());
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
