use std::collections::BTreeSet;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::splits::{generate_splits, SplitProportions};
use crate::error::{Error, Result};
use crate::graph::{Graph, Masks};
use crate::scalar::Scalar;

/// Parameters of a planted-partition graph with a chosen homophily.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub mean_degree: f64,
    /// Fraction of edges joining same-class endpoints.
    pub target_homophily: f64,
    pub feature_dim: usize,
    /// Offset added to the class-indicator coordinates of each feature row.
    pub class_signal: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            num_nodes: 500,
            num_classes: 3,
            mean_degree: 6.0,
            target_homophily: 0.5,
            feature_dim: 16,
            class_signal: 1.0,
            seed: 0,
        }
    }
}

/// Generates a labelled graph whose edge homophily equals
/// `round(h·M) / M` for `M = round(N·mean_degree / 2)` undirected edges.
///
/// Labels cycle through the classes (`i mod C`); feature `j` of node `i` is
/// `class_signal · [j mod C = label_i] + N(0, 1)`. Masks are a stratified
/// 48/32/20 split drawn from the same seed.
pub fn generate_synthetic<T: Scalar>(spec: &SynthSpec) -> Result<Graph<T>> {
    let SynthSpec {
        num_nodes: n,
        num_classes: c,
        mean_degree,
        target_homophily: h,
        feature_dim,
        class_signal,
        seed,
    } = *spec;
    if n < 2 || c == 0 || c > n {
        return Err(Error::Synthetic(format!("need 2 ≤ N and 1 ≤ C ≤ N (N={n}, C={c})")));
    }
    if !(mean_degree > 0.0) || mean_degree > (n - 1) as f64 {
        return Err(Error::Synthetic(format!(
            "mean degree {mean_degree} infeasible for {n} nodes"
        )));
    }
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::Synthetic(format!("target homophily {h} outside [0, 1]")));
    }

    let labels: Vec<usize> = (0..n).map(|i| i % c).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let total = ((n as f64 * mean_degree) / 2.0).round() as usize;
    let intra = (h * total as f64).round() as usize;
    let inter = total - intra;
    let max_intra: usize = members.iter().map(|m| m.len() * (m.len().saturating_sub(1)) / 2).sum();
    let max_inter = n * (n - 1) / 2 - max_intra;
    if intra > max_intra || inter > max_inter {
        return Err(Error::Synthetic(format!(
            "cannot place {intra} intra-class and {inter} inter-class edges"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let budget = 1000 * total + 10_000;
    let mut tries = 0usize;
    let mut placed = 0usize;
    while placed < intra {
        tries += 1;
        let u = rng.random_range(0..n);
        let group = &members[labels[u]];
        let v = group[rng.random_range(0..group.len())];
        if u != v && edges.insert((u.min(v), u.max(v))) {
            placed += 1;
        }
        if tries > budget {
            return Err(Error::Synthetic("intra-class edge sampling did not converge".into()));
        }
    }
    placed = 0;
    while placed < inter {
        tries += 1;
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if labels[u] != labels[v] && edges.insert((u.min(v), u.max(v))) {
            placed += 1;
        }
        if tries > 2 * budget {
            return Err(Error::Synthetic("inter-class edge sampling did not converge".into()));
        }
    }

    let mut features = Array2::<T>::zeros((n, feature_dim));
    for i in 0..n {
        for j in 0..feature_dim {
            let noise: f64 = rng.sample(StandardNormal);
            let signal = if j % c == labels[i] { class_signal } else { 0.0 };
            features[[i, j]] = T::from_f64_lossy(signal + noise);
        }
    }

    let edges: Vec<_> = edges.into_iter().collect();
    let g = Graph::build(&edges, n, features, labels, Masks::empty(n))?;
    let (masks, _) = generate_splits(&g, SplitProportions::default(), seed)?;
    g.with_masks(masks)
}
