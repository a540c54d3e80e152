//! Self-checks: finite-difference gradient checks and estimator oracles on
//! processes with known transfer entropy.

use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::autodiff::{finite_diff_check, Tape, Var};
use crate::control::{select_nodes, TeControlConfig, TeController};
use crate::data::{generate_synthetic, SynthSpec};
use crate::error::Result;
use crate::graph::{full_label_heterophily, Graph};
use crate::model::{BoundParams, Ggcn, GraphContext, ModelConfig, RowShift};
use crate::te::kdtree::chebyshev;
use crate::te::{te_ksg, te_plugin, KdTree, SeriesPair, TeConfig};

/// Central-difference step used by the gradient suites.
pub const GRAD_EPSILON: f64 = 1e-5;
/// Largest accepted relative gradient error.
pub const GRAD_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            passed: value.is_finite() && value < threshold,
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: {:.3e} (threshold {:.1e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.threshold
        )
    }
}

/// `x_{t+1} = y_t` with `y` i.i.d. fair bits; `TE(Y → X) = ln 2`.
pub fn binary_copy_chain(n: usize, seed: u64) -> SeriesPair<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..2) as f64).collect();
    let mut x = vec![0.0];
    x.extend_from_slice(&y[..n - 1]);
    SeriesPair { x, y }
}

/// Two independent standard normal series; `TE = 0`.
pub fn independent_gaussians(n: usize, seed: u64) -> SeriesPair<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let y = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    SeriesPair { x, y }
}

/// `x_{t+1} = ρ y_t + √(1 − ρ²) e_t` with i.i.d. standard normal `y`, `e`;
/// `TE(Y → X) = −½ ln(1 − ρ²)`.
pub fn gaussian_coupling(n: usize, rho: f64, seed: u64) -> SeriesPair<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let noise = (1.0 - rho * rho).sqrt();
    let mut x = vec![rng.sample(StandardNormal)];
    for t in 0..n - 1 {
        let e: f64 = rng.sample(StandardNormal);
        x.push(rho * y[t] + noise * e);
    }
    SeriesPair { x, y }
}

/// A small labelled graph with masks, suitable for exhaustive gradient checks.
pub fn gradient_fixture(seed: u64) -> Graph<f64> {
    generate_synthetic(&SynthSpec {
        num_nodes: 16,
        num_classes: 3,
        mean_degree: 3.0,
        target_homophily: 0.3,
        feature_dim: 8,
        class_signal: 1.0,
        seed,
    })
    .expect("feasible fixture")
}

/// Maximum relative gradient error of the masked cross-entropy of a
/// two-layer model on [`gradient_fixture`], with dropout active (a fixed
/// mask) and a transfer-entropy correction in force.
pub fn model_gradient_error(seed: u64) -> Result<f64> {
    let g = gradient_fixture(seed);
    let ctx = GraphContext::new(&g);
    let cfg = ModelConfig {
        num_layers: 2,
        hidden_dim: 4,
        dropout_rate: 0.3,
        degree_scaling: true,
        classes: g.num_classes(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = Ggcn::<f64>::new(g.num_features(), cfg, &mut rng)?;
    // Move the mixing and degree parameters off their symmetric start.
    for p in &mut model.params.params {
        if p.name.ends_with(".beta") || p.name.ends_with(".degree") {
            p.value.mapv_inplace(|v| v + rng.random_range(-0.5..0.5));
        }
    }
    let te = TeControlConfig {
        het_fraction: 0.5,
        degree_fraction: 0.5,
        ..TeControlConfig::default()
    };
    let selection = select_nodes(&full_label_heterophily(&g), g.degrees(), &te, 0);
    let correction = TeController::new().compute(&g, selection, &te)?.correction;
    let rows = correction.per_node_te.clone();
    let values = model.params.values();
    let f = |tape: &mut Tape<f64>, vars: &[Var]| -> Result<Var> {
        let bound = BoundParams::from_vars(vars.to_vec(), cfg.num_layers);
        let mut drop_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let shift = Some(RowShift {
            site: te.site,
            rows: &rows,
        });
        let out = model.forward(tape, &bound, &ctx, true, shift, &mut drop_rng)?;
        tape.cross_entropy_masked(out.logits, ctx.labels.clone(), ctx.train_rows.clone())
    };
    finite_diff_check(f, &values, GRAD_EPSILON)
}

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}

/// Entries bounded away from zero, for primitives with a kink there.
fn away_from_zero(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || {
        let m = rng.random_range(0.1..1.0);
        if rng.random::<bool>() {
            m
        } else {
            -m
        }
    })
}

/// Contracts `v` with a fixed random matrix, making a scalar loss that
/// depends on every output entry.
fn contract(tape: &mut Tape<f64>, v: Var, weights: &Array2<f64>) -> Result<Var> {
    let w = tape.constant(weights.clone());
    let p = tape.mul(v, w)?;
    Ok(tape.sum(p))
}

type Unary = fn(&mut Tape<f64>, Var) -> Result<Var>;

/// Relative gradient error of every differentiable primitive on random
/// inputs drawn from `seed`.
pub fn primitive_gradient_errors(seed: u64) -> Result<Vec<(&'static str, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let eps = GRAD_EPSILON;

    macro_rules! check {
        ($name:expr, $params:expr, $out_shape:expr, $body:expr) => {{
            let (r, c) = $out_shape;
            let w = random(r, c, &mut rng);
            let params: Vec<Array2<f64>> = $params;
            let body = $body;
            let err = finite_diff_check(
                |t: &mut Tape<f64>, v: &[Var]| {
                    let y: Result<Var> = body(t, v);
                    let y = y?;
                    contract(t, y, &w)
                },
                &params,
                eps,
            )?;
            out.push(($name, err));
        }};
    }

    let a = random(3, 4, &mut rng);
    let b = random(4, 2, &mut rng);
    check!("matmul", vec![a.clone(), b], (3, 2), |t: &mut Tape<f64>, v: &[Var]| t.matmul(v[0], v[1]));
    let mut sparse = random(5, 3, &mut rng);
    sparse.mapv_inplace(|v| if v.abs() < 0.5 { 0.0 } else { v });
    let sparse = Arc::new(crate::autodiff::SparseRows::from_dense(&sparse));
    let w3 = random(3, 4, &mut rng);
    check!("sparse_matmul", vec![w3], (5, 4), |t: &mut Tape<f64>, v: &[Var]| t
        .sparse_matmul(sparse.clone(), v[0]));
    let b = random(3, 4, &mut rng);
    check!("add", vec![a.clone(), b.clone()], (3, 4), |t: &mut Tape<f64>, v: &[Var]| t.add(v[0], v[1]));
    check!("mul", vec![a.clone(), b], (3, 4), |t: &mut Tape<f64>, v: &[Var]| t.mul(v[0], v[1]));
    let row = random(1, 4, &mut rng);
    check!("add_row", vec![a.clone(), row], (3, 4), |t: &mut Tape<f64>, v: &[Var]| t.add_row(v[0], v[1]));
    let s = random(1, 1, &mut rng);
    check!("add_scalar", vec![a.clone(), s.clone()], (3, 4), |t: &mut Tape<f64>, v: &[Var]| t
        .add_scalar(v[0], v[1]));
    check!("scale_by", vec![a.clone(), s], (3, 4), |t: &mut Tape<f64>, v: &[Var]| t.scale_by(v[0], v[1]));
    let k = random(3, 4, &mut rng);
    check!("add_const", vec![a.clone()], (3, 4), |t: &mut Tape<f64>, v: &[Var]| t.add_const(v[0], &k));
    check!("scale", vec![a.clone()], (3, 4), |t: &mut Tape<f64>, v: &[Var]| Ok(t.scale(v[0], 1.7)));
    let col = random(3, 1, &mut rng);
    check!("mul_col", vec![a.clone(), col], (3, 4), |t: &mut Tape<f64>, v: &[Var]| t.mul_col(v[0], v[1]));
    check!("transpose", vec![a.clone()], (4, 3), |t: &mut Tape<f64>, v: &[Var]| Ok(t.transpose(v[0])));
    let r = random(1, 4, &mut rng);
    check!("pick", vec![r], (1, 1), |t: &mut Tape<f64>, v: &[Var]| t.pick(v[0], 2));
    check!("sum", vec![a.clone()], (1, 1), |t: &mut Tape<f64>, v: &[Var]| Ok(t.sum(v[0])));
    check!("row_softmax", vec![a.clone()], (3, 4), |t: &mut Tape<f64>, v: &[Var]| t.row_softmax(v[0]));
    check!("softplus", vec![a.clone()], (3, 4), |t: &mut Tape<f64>, v: &[Var]| Ok(t.softplus(v[0])));

    let kinked: [(&'static str, Unary); 3] = [
        ("elu", |t, v| Ok(t.elu(v))),
        ("clamp_min0", |t, v| Ok(t.clamp_min0(v))),
        ("clamp_max0", |t, v| Ok(t.clamp_max0(v))),
    ];
    for (name, op) in kinked {
        let x = away_from_zero(3, 4, &mut rng);
        check!(name, vec![x], (3, 4), |t: &mut Tape<f64>, v: &[Var]| op(t, v[0]));
    }

    let drop_seed: u64 = rng.random();
    check!("dropout", vec![a.clone()], (3, 4), |t: &mut Tape<f64>, v: &[Var]| {
        let mut r = ChaCha8Rng::seed_from_u64(drop_seed);
        t.dropout(v[0], 0.4, true, &mut r)
    });

    let h = random(5, 4, &mut rng);
    check!("cosine_rows", vec![a.clone(), h.clone()], (3, 5), |t: &mut Tape<f64>, v: &[Var]| t
        .cosine_rows(v[0], v[1]));
    let edges: Arc<[(usize, usize)]> = vec![(0, 0), (0, 1), (1, 0), (1, 3), (2, 4), (3, 1), (4, 2), (4, 4)].into();
    let e = edges.len();
    check!("edge_cosine", vec![h.clone()], (e, 1), |t: &mut Tape<f64>, v: &[Var]| t
        .edge_cosine(v[0], edges.clone()));
    let ew = random(e, 1, &mut rng);
    check!("propagate", vec![ew, h.clone()], (5, 4), |t: &mut Tape<f64>, v: &[Var]| t
        .propagate(v[0], v[1], edges.clone()));

    let labels: Arc<[usize]> = vec![0, 3, 1, 2, 3].into();
    let rows: Arc<[usize]> = vec![0, 2, 3].into();
    check!("cross_entropy_masked", vec![h], (1, 1), |t: &mut Tape<f64>, v: &[Var]| t
        .cross_entropy_masked(v[0], labels.clone(), rows.clone()));
    Ok(out)
}

/// Primitive and whole-model gradient checks over `seeds` seeds, reporting
/// the worst error of each.
pub fn gradient_suite(seeds: u64) -> Result<Vec<Check>> {
    let mut worst: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut model = 0.0f64;
    for seed in 0..seeds {
        for (name, err) in primitive_gradient_errors(seed)? {
            let e = worst.entry(name).or_insert(0.0);
            *e = e.max(err);
        }
        model = model.max(model_gradient_error(seed)?);
    }
    let mut checks: Vec<Check> = worst
        .into_iter()
        .map(|(name, err)| Check::below(format!("gradient {name}"), err, GRAD_TOLERANCE))
        .collect();
    checks.push(Check::below("gradient two-layer model", model, GRAD_TOLERANCE));
    Ok(checks)
}

/// Largest disagreement between K-D tree and brute-force range counts over
/// `trials` random (points, query, radius) triples per dimension 1–4.
pub fn kdtree_mismatches(trials: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for dim in 1..=4 {
        for _ in 0..trials {
            let n = rng.random_range(1..200);
            let pts: Vec<f64> = (0..n * dim).map(|_| rng.random::<f64>()).collect();
            let tree = KdTree::new(&pts, dim);
            let q: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            let r = rng.random::<f64>() * 0.5;
            let brute = pts.chunks(dim).filter(|p| chebyshev(p, &q) < r).count();
            mismatches += (tree.range_count(&q, r) != brute) as usize;
            let i = rng.random_range(0..n);
            let me = &pts[i * dim..(i + 1) * dim];
            let brute_ex = pts
                .chunks(dim)
                .enumerate()
                .filter(|&(j, p)| j != i && chebyshev(p, me) < r)
                .count();
            mismatches += (tree.range_count_excluding(i, r) != brute_ex) as usize;
        }
    }
    mismatches
}

/// Estimator oracles on processes with closed-form transfer entropy.
pub fn estimator_suite() -> Result<Vec<Check>> {
    let cfg = TeConfig::default();
    let chain = binary_copy_chain(10_000, 1);
    let plugin = te_plugin(&chain, &cfg, 2)?;
    let ksg = te_ksg(&chain, &cfg)?;
    let mut checks = vec![
        Check::below("plug-in on copy chain vs ln 2", (plugin - std::f64::consts::LN_2).abs(), 0.02),
        Check::below("KSG vs plug-in on copy chain", (ksg - plugin).abs(), 0.1),
    ];
    let mut sum = 0.0;
    for seed in 0..10 {
        sum += te_ksg(&independent_gaussians(2000, 100 + seed), &cfg)?;
    }
    checks.push(Check::below("mean KSG on independent Gaussians", (sum / 10.0).abs(), 0.05));
    let rho: f64 = 0.6;
    let analytic = -0.5 * (1.0 - rho * rho).ln();
    let est = te_ksg(&gaussian_coupling(4000, rho, 7), &cfg)?;
    checks.push(Check::below("KSG on Gaussian coupling vs analytic", (est - analytic).abs(), 0.1));
    checks.push(Check::below("K-D tree count mismatches", kdtree_mismatches(250, 3) as f64, 0.5));
    Ok(checks)
}
