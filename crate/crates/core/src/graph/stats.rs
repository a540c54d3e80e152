use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdjacencyVariant {
    /// `D̂^{-1/2} (A + I) D̂^{-1/2}`
    WithSelfLoops,
    /// `D^{-1/2} A D^{-1/2}`, isolated nodes have empty rows.
    Plain,
}

/// Symmetric normalised adjacency in coordinate form, rows sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency<T> {
    variant: AdjacencyVariant,
    n: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> NormalizedAdjacency<T> {
    pub fn variant(&self) -> AdjacencyVariant {
        self.variant
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Non-zero entries `(row, col, value)` sorted by `(row, col)`.
    pub fn entries(&self) -> &[(usize, usize, T)] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries
            .binary_search_by(|&(r, c, _)| (r, c).cmp(&(i, j)))
            .map(|k| self.entries[k].2)
            .unwrap_or_else(|_| T::zero())
    }

    pub fn to_dense(&self) -> ndarray::Array2<T> {
        let mut m = ndarray::Array2::zeros((self.n, self.n));
        for &(i, j, v) in &self.entries {
            m[[i, j]] = v;
        }
        m
    }
}

/// Normalised adjacency `D̂^{-1/2} Â D̂^{-1/2}` with `Â = A + I`.
pub fn normalize_adjacency<T: Scalar>(g: &Graph<T>) -> NormalizedAdjacency<T> {
    normalize_adjacency_with(g, AdjacencyVariant::WithSelfLoops)
}

pub fn normalize_adjacency_with<T: Scalar>(
    g: &Graph<T>,
    variant: AdjacencyVariant,
) -> NormalizedAdjacency<T> {
    let loop_weight = match variant {
        AdjacencyVariant::WithSelfLoops => 1,
        AdjacencyVariant::Plain => 0,
    };
    let hat: Vec<usize> = g.degrees().iter().map(|&d| d + loop_weight).collect();
    let entry = |i: usize, j: usize| -> T {
        if i == j {
            if hat[i] == 0 {
                T::zero()
            } else {
                T::from_usize_lossy(hat[i]).recip()
            }
        } else {
            T::from_usize_lossy(hat[i] * hat[j]).sqrt().recip()
        }
    };

    let n = g.num_nodes();
    let mut entries = Vec::with_capacity(g.edges().len() + n * loop_weight);
    for i in 0..n {
        let mut diag_done = loop_weight == 0;
        for j in g.neighbors(i) {
            if !diag_done && j > i {
                entries.push((i, i, entry(i, i)));
                diag_done = true;
            }
            entries.push((i, j, entry(i, j)));
        }
        if !diag_done {
            entries.push((i, i, entry(i, i)));
        }
    }
    NormalizedAdjacency {
        variant,
        n,
        entries,
    }
}

/// Per-node mean relative degree `r̄_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeDegrees<T> {
    pub values: Vec<T>,
}

/// `r̄_i = (1/d_i) Σ_j sqrt((d_i+1)/(d_j+1))`, taken over the actual
/// neighbourhood. Isolated nodes get 1.
pub fn relative_degrees<T: Scalar>(g: &Graph<T>) -> RelativeDegrees<T> {
    let deg = g.degrees();
    let values = (0..g.num_nodes())
        .map(|i| {
            if deg[i] == 0 {
                return T::one();
            }
            let di = T::from_usize_lossy(deg[i] + 1);
            let sum = g
                .neighbors(i)
                .map(|j| (di / T::from_usize_lossy(deg[j] + 1)).sqrt())
                .fold(T::zero(), |a, b| a + b);
            sum / T::from_usize_lossy(deg[i])
        })
        .collect();
    RelativeDegrees { values }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    /// Every node's ground-truth label.
    FullLabels,
    /// Training labels, model predictions everywhere else.
    #[default]
    TrainPlusPredictions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeterophilyStats {
    pub per_node: Vec<f64>,
    pub homophily_level: f64,
    pub label_source: LabelSource,
}

/// Training labels where the train mask is set, `predictions` elsewhere.
pub fn labels_with_predictions<T>(g: &Graph<T>, predictions: &[usize]) -> Vec<Option<usize>> {
    let train = &g.masks().train;
    (0..g.num_nodes())
        .map(|i| {
            if train[i] {
                Some(g.labels()[i])
            } else {
                predictions.get(i).copied()
            }
        })
        .collect()
}

/// Fraction of differently-labelled neighbours per node, and the graph-level
/// homophily `1 - mean(H_v)` over non-isolated nodes.
///
/// Under [`LabelSource::FullLabels`] every referenced label must be present.
/// Under [`LabelSource::TrainPlusPredictions`] unlabelled neighbours are
/// ignored and an unlabelled node scores 0.
pub fn node_heterophily<T>(
    g: &Graph<T>,
    labels: &[Option<usize>],
    source: LabelSource,
) -> Result<HeterophilyStats> {
    let n = g.num_nodes();
    if labels.len() != n {
        return Err(Error::InvalidGraph(format!(
            "{} labels supplied for {n} nodes",
            labels.len()
        )));
    }
    let strict = source == LabelSource::FullLabels;
    let mut per_node = vec![0.0; n];
    let mut sum = 0.0;
    let mut scored = 0usize;
    for v in 0..n {
        if g.degree(v) == 0 {
            continue;
        }
        let lv = match labels[v] {
            Some(l) => l,
            None if strict => return Err(Error::MissingLabel(v)),
            None => continue,
        };
        let mut differing = 0usize;
        let mut seen = 0usize;
        for u in g.neighbors(v) {
            match labels[u] {
                Some(lu) => {
                    seen += 1;
                    differing += (lu != lv) as usize;
                }
                None if strict => return Err(Error::MissingLabel(u)),
                None => {}
            }
        }
        if seen > 0 {
            per_node[v] = differing as f64 / seen as f64;
        }
        sum += per_node[v];
        scored += 1;
    }
    let homophily_level = if scored == 0 {
        1.0
    } else {
        1.0 - sum / scored as f64
    };
    Ok(HeterophilyStats {
        per_node,
        homophily_level,
        label_source: source,
    })
}

/// Convenience: heterophily with the graph's own full label vector.
pub fn full_label_heterophily<T>(g: &Graph<T>) -> HeterophilyStats {
    let labels: Vec<_> = g.labels().iter().map(|&l| Some(l)).collect();
    node_heterophily(g, &labels, LabelSource::FullLabels).expect("every node labelled")
}

/// Fraction of undirected edges joining same-label endpoints.
pub fn edge_homophily<T>(g: &Graph<T>) -> f64 {
    let total = g.num_undirected_edges();
    if total == 0 {
        return 1.0;
    }
    let same = g
        .undirected_edges()
        .filter(|&(u, v)| g.labels()[u] == g.labels()[v])
        .count();
    same as f64 / total as f64
}
