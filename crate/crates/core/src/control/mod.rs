//! Heterophily-ranked node selection, per-node transfer entropy against
//! neighbours, and the periodic additive correction.

mod log;
mod select;

pub use log::{DiagnosticLog, DiagnosticRecord};
pub use select::{select_nodes, selection_sizes, SelectionResult};

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, LabelSource};
use crate::model::{row_shift_matrix, CorrectionSite};
use crate::scalar::Scalar;
use crate::te::{te_ksg, SeriesPair, TeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeControlConfig {
    /// Share of nodes kept by the heterophily ranking.
    pub het_fraction: f64,
    /// Share of the heterophilic subset kept by the degree ranking.
    pub degree_fraction: f64,
    pub period_epochs: usize,
    /// History length of both series.
    pub lag: usize,
    pub enabled: bool,
    pub label_source: LabelSource,
    /// Upper bound on neighbours evaluated per selected node.
    pub max_neighbors: usize,
    /// KSG neighbour count.
    pub k_neighbors: usize,
    /// Seeds the estimator's tie-breaking jitter.
    pub estimator_seed: u64,
    pub site: CorrectionSite,
}

impl Default for TeControlConfig {
    fn default() -> Self {
        TeControlConfig {
            het_fraction: 0.05,
            degree_fraction: 0.10,
            period_epochs: 10,
            lag: 1,
            enabled: true,
            label_source: LabelSource::TrainPlusPredictions,
            max_neighbors: 256,
            k_neighbors: 3,
            estimator_seed: 0,
            site: CorrectionSite::Output,
        }
    }
}

impl TeControlConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [("het_fraction", self.het_fraction), ("degree_fraction", self.degree_fraction)] {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("{name} = {f} outside (0, 1]")));
            }
        }
        if self.period_epochs == 0 {
            return Err(Error::Config("period_epochs must be ≥ 1".into()));
        }
        if self.lag == 0 || self.max_neighbors == 0 || self.k_neighbors == 0 {
            return Err(Error::Config("lag, max_neighbors and k_neighbors must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Shortest feature vector the estimator accepts as a series.
    pub fn min_series_len(&self) -> usize {
        self.k_neighbors + 2 + self.lag
    }

    pub fn estimator(&self) -> TeConfig {
        TeConfig {
            k_lag: self.lag,
            l_lag: self.lag,
            k_neighbors: self.k_neighbors,
            seed: self.estimator_seed,
            ..TeConfig::default()
        }
    }
}

/// Whether corrections are recomputed at `epoch`; a correction computed at
/// epoch `e` stays in force for `[e, e + period)`.
pub fn should_run(epoch: usize, cfg: &TeControlConfig) -> bool {
    cfg.enabled && epoch.is_multiple_of(cfg.period_epochs.max(1))
}

/// Per-node maximum transfer entropy (nats) for the selected nodes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TeCorrection {
    pub per_node_te: BTreeMap<usize, f64>,
    pub computed_at_epoch: usize,
}

/// Adds `per_node_te[i]` to every entry of row `i`.
pub fn apply_correction<T: Scalar>(h: &Array2<T>, corrections: &TeCorrection) -> Result<Array2<T>> {
    let shift = row_shift_matrix(h.nrows(), h.ncols(), &corrections.per_node_te)?;
    Ok(h + &shift)
}

/// The neighbours of `i` that are evaluated: all of them, or the
/// `max_neighbors` of highest degree (ties to the lower index).
pub fn evaluated_neighbors<T>(g: &Graph<T>, i: usize, max_neighbors: usize) -> Vec<usize> {
    let mut nb: Vec<usize> = g.neighbors(i).collect();
    if nb.len() > max_neighbors {
        nb.sort_by(|&a, &b| g.degree(b).cmp(&g.degree(a)).then(a.cmp(&b)));
        nb.truncate(max_neighbors);
        nb.sort_unstable();
    }
    nb
}

fn feature_row<T: Scalar>(features: &Array2<T>, i: usize) -> Vec<T> {
    features.row(i).to_vec()
}

/// `TE(Y_j → X_i)` where the series are the raw feature vectors of `j` and
/// `i`; constant vectors contribute 0.
pub fn pair_te<T: Scalar>(features: &Array2<T>, i: usize, j: usize, cfg: &TeConfig) -> Result<f64> {
    let pair = SeriesPair::new(feature_row(features, i), feature_row(features, j))?;
    match te_ksg(&pair, cfg) {
        Ok(v) => Ok(v),
        Err(Error::ConstantSeries) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Maximum over evaluated neighbours `j` of `TE(Y_j → X_i)`; 0 for an
/// isolated node.
pub fn node_te<T: Scalar>(g: &Graph<T>, features: &Array2<T>, i: usize, cfg: &TeControlConfig) -> Result<f64> {
    if i >= g.num_nodes() {
        return Err(Error::NodeOutOfRange(i, g.num_nodes()));
    }
    let est = cfg.estimator();
    let mut best: Option<f64> = None;
    for j in evaluated_neighbors(g, i, cfg.max_neighbors) {
        let v = pair_te(features, i, j, &est)?;
        best = Some(best.map_or(v, |b| b.max(v)));
    }
    Ok(best.unwrap_or(0.0))
}

/// Outcome of one scheduled computation.
#[derive(Debug, Clone)]
pub struct ControlStep {
    pub selection: SelectionResult,
    pub correction: TeCorrection,
    /// Pair evaluations requested in this step (memoised or not).
    pub pair_requests: usize,
    pub wall_s: f64,
}

/// Runs scheduled corrections over one training run. Pair values depend only
/// on the fixed input features, so they are memoised across epochs.
#[derive(Debug, Default)]
pub struct TeController {
    cache: HashMap<(usize, usize), f64>,
    pub pair_requests: usize,
    pub estimator_evaluations: usize,
}

impl TeController {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn compute<T: Scalar>(
        &mut self,
        g: &Graph<T>,
        selection: SelectionResult,
        cfg: &TeControlConfig,
    ) -> Result<ControlStep> {
        let start = Instant::now();
        let est = cfg.estimator();
        let features = g.features();
        let mut per_node_te = BTreeMap::new();
        let mut requests = 0;
        for &i in &selection.selected {
            let mut best: Option<f64> = None;
            for j in evaluated_neighbors(g, i, cfg.max_neighbors) {
                requests += 1;
                let v = match self.cache.get(&(i, j)) {
                    Some(&v) => v,
                    None => {
                        self.estimator_evaluations += 1;
                        let v = pair_te(features, i, j, &est)?;
                        self.cache.insert((i, j), v);
                        v
                    }
                };
                best = Some(best.map_or(v, |b| b.max(v)));
            }
            per_node_te.insert(i, best.unwrap_or(0.0));
        }
        self.pair_requests += requests;
        let correction = TeCorrection {
            per_node_te,
            computed_at_epoch: selection.epoch,
        };
        Ok(ControlStep {
            selection,
            correction,
            pair_requests: requests,
            wall_s: start.elapsed().as_secs_f64(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Masks;
    use crate::te::te_plugin;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn schedule() {
        let cfg = TeControlConfig::default();
        let on: Vec<usize> = (0..25).filter(|&e| should_run(e, &cfg)).collect();
        assert_eq!(on, vec![0, 10, 20]);
        let every = TeControlConfig {
            period_epochs: 1,
            ..cfg
        };
        assert!((0..5).all(|e| should_run(e, &every)));
        let off = TeControlConfig { enabled: false, ..cfg };
        assert!((0..30).all(|e| !should_run(e, &off)));
    }

    #[test]
    fn correction_adds_row_constants() {
        let h = Array2::from_shape_fn((4, 3), |(i, j)| (i * 3 + j) as f64);
        assert_eq!(apply_correction(&h, &TeCorrection::default()).unwrap(), h);
        let mut c = TeCorrection::default();
        c.per_node_te.insert(1, 0.0);
        assert_eq!(apply_correction(&h, &c).unwrap(), h);
        c.per_node_te.insert(2, 0.7);
        let out = apply_correction(&h, &c).unwrap();
        let mut expected = h.clone();
        expected.row_mut(2).mapv_inplace(|v| v + 0.7);
        assert_eq!(out, expected);
        c.per_node_te.insert(9, 1.0);
        assert!(apply_correction(&h, &c).is_err());
    }

    #[test]
    fn invalid_fractions_rejected() {
        let bad = TeControlConfig {
            het_fraction: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TeControlConfig {
            period_epochs: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    /// Node 0 has a neighbour whose features drive its own with a one-step
    /// lag and a neighbour of independent noise.
    fn coupled_fixture(f: usize) -> Graph<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y: Vec<f64> = (0..f).map(|_| rng.random_range(0..2) as f64).collect();
        let mut x = vec![0.0; f];
        x[1..].copy_from_slice(&y[..f - 1]);
        let noise: Vec<f64> = (0..f).map(|_| rng.random_range(0..2) as f64).collect();
        let mut data = x;
        data.extend(y);
        data.extend(noise);
        let features = Array2::from_shape_vec((3, f), data).unwrap();
        Graph::build(&[(0, 1), (0, 2)], 3, features, vec![0, 1, 1], Masks::empty(3)).unwrap()
    }

    #[test]
    fn max_is_attained_on_coupled_neighbour() {
        let g = coupled_fixture(2000);
        let cfg = TeControlConfig::default();
        let est = cfg.estimator();
        let feats = g.features();
        let coupled = pair_te(feats, 0, 1, &est).unwrap();
        let independent = pair_te(feats, 0, 2, &est).unwrap();
        // Independent oracle for the ordering.
        let series = |i: usize, j: usize| SeriesPair::new(feats.row(i).to_vec(), feats.row(j).to_vec()).unwrap();
        let p_coupled = te_plugin(&series(0, 1), &est, 2).unwrap();
        let p_indep = te_plugin(&series(0, 2), &est, 2).unwrap();
        assert!(p_coupled > p_indep);
        assert!(coupled > independent);
        assert_eq!(node_te(&g, feats, 0, &cfg).unwrap(), coupled);
        assert_eq!(node_te(&g, feats, 1, &cfg).unwrap(), pair_te(feats, 1, 0, &est).unwrap());
    }

    #[test]
    fn constant_vectors_give_zero() {
        let features = Array2::from_elem((2, 16), 1.0);
        let g = Graph::build(&[(0, 1)], 2, features, vec![0, 1], Masks::empty(2)).unwrap();
        assert_eq!(node_te(&g, g.features(), 0, &TeControlConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn neighbour_cap_prefers_high_degree() {
        // Star centre 0 with leaves 1..=5; leaves 4 and 5 get an extra edge.
        let edges = [(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (4, 5)];
        let g = Graph::build(&edges, 6, Array2::<f64>::zeros((6, 4)), vec![0; 6], Masks::empty(6)).unwrap();
        assert_eq!(evaluated_neighbors(&g, 0, 3), vec![1, 4, 5]);
        assert_eq!(evaluated_neighbors(&g, 0, 10), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn controller_memoises_pairs() {
        let g = coupled_fixture(64);
        let cfg = TeControlConfig::default();
        let sel = SelectionResult {
            selected: vec![0],
            heterophily_used: crate::graph::full_label_heterophily(&g),
            epoch: 0,
        };
        let mut ctl = TeController::new();
        let a = ctl.compute(&g, sel.clone(), &cfg).unwrap();
        let b = ctl.compute(&g, sel, &cfg).unwrap();
        assert_eq!(a.correction.per_node_te, b.correction.per_node_te);
        assert_eq!(ctl.pair_requests, 4);
        assert_eq!(ctl.estimator_evaluations, 2);
    }
}
