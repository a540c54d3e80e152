//! Immutable graph model and the structural statistics derived from it.

mod stats;

pub use stats::{
    edge_homophily, full_label_heterophily, labels_with_predictions, node_heterophily,
    normalize_adjacency, normalize_adjacency_with,
    relative_degrees, AdjacencyVariant, HeterophilyStats, LabelSource, NormalizedAdjacency,
    RelativeDegrees,
};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Train/validation/test node masks.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Masks {
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
}

impl Masks {
    pub fn empty(n: usize) -> Self {
        Masks {
            train: vec![false; n],
            val: vec![false; n],
            test: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.train.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train.is_empty()
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        let count = |m: &[bool]| m.iter().filter(|&&b| b).count();
        (count(&self.train), count(&self.val), count(&self.test))
    }

    /// Checks lengths and pairwise disjointness.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.train.len() != n || self.val.len() != n || self.test.len() != n {
            return Err(Error::InvalidGraph(format!(
                "mask lengths ({}, {}, {}) do not match {n} nodes",
                self.train.len(),
                self.val.len(),
                self.test.len()
            )));
        }
        for i in 0..n {
            let hits = self.train[i] as u8 + self.val[i] as u8 + self.test[i] as u8;
            if hits > 1 {
                return Err(Error::InvalidGraph(format!(
                    "node {i} belongs to more than one mask"
                )));
            }
        }
        Ok(())
    }

    pub fn indices(mask: &[bool]) -> Vec<usize> {
        mask.iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

/// Undirected, unweighted graph with node features, labels and split masks.
///
/// Edges are stored in both directions, sorted and free of duplicates, with a
/// CSR offset table for neighbour lookup. Self-loops never appear here; they
/// are added only when the adjacency is normalised.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph<T> {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    degrees: Vec<usize>,
    features: Array2<T>,
    labels: Vec<usize>,
    num_classes: usize,
    masks: Masks,
}

impl<T: Scalar> Graph<T> {
    /// Builds a graph from an arbitrary (possibly one-directional, possibly
    /// duplicated) edge list.
    pub fn build(
        edge_list: &[(usize, usize)],
        num_nodes: usize,
        features: Array2<T>,
        labels: Vec<usize>,
        masks: Masks,
    ) -> Result<Self> {
        if features.nrows() != num_nodes {
            return Err(Error::InvalidGraph(format!(
                "feature matrix has {} rows for {num_nodes} nodes",
                features.nrows()
            )));
        }
        if labels.len() != num_nodes {
            return Err(Error::InvalidGraph(format!(
                "{} labels for {num_nodes} nodes",
                labels.len()
            )));
        }
        masks.validate(num_nodes)?;

        let mut edges = Vec::with_capacity(edge_list.len() * 2);
        for &(u, v) in edge_list {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::EdgeOutOfRange(u, v, num_nodes));
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            edges.push((u, v));
            edges.push((v, u));
        }
        edges.sort_unstable();
        edges.dedup();

        let mut degrees = vec![0usize; num_nodes];
        for &(u, _) in &edges {
            degrees[u] += 1;
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        offsets.push(0);
        for d in &degrees {
            offsets.push(offsets.last().unwrap() + d);
        }
        let num_classes = labels.iter().map(|&l| l + 1).max().unwrap_or(0);

        Ok(Graph {
            num_nodes,
            edges,
            offsets,
            degrees,
            features,
            labels,
            num_classes,
            masks,
        })
    }

    /// Same structure and features, different masks.
    pub fn with_masks(&self, masks: Masks) -> Result<Self> {
        masks.validate(self.num_nodes)?;
        Ok(Graph {
            masks,
            ..self.clone()
        })
    }

    /// Same structure, different labels (class count is recomputed).
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.num_nodes {
            return Err(Error::InvalidGraph(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.num_nodes
            )));
        }
        let num_classes = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
        Ok(Graph {
            labels,
            num_classes,
            ..self.clone()
        })
    }

    /// Relabels nodes: node `i` of `self` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_nodes;
        if perm.len() != n {
            return Err(Error::InvalidGraph("permutation length mismatch".into()));
        }
        let mut features = Array2::zeros(self.features.raw_dim());
        let mut labels = vec![0; n];
        let mut masks = Masks::empty(n);
        for i in 0..n {
            let p = perm[i];
            features.row_mut(p).assign(&self.features.row(i));
            labels[p] = self.labels[i];
            masks.train[p] = self.masks.train[i];
            masks.val[p] = self.masks.val[i];
            masks.test[p] = self.masks.test[i];
        }
        let edges: Vec<_> = self
            .undirected_edges()
            .map(|(u, v)| (perm[u], perm[v]))
            .collect();
        Graph::build(&edges, n, features, labels, masks)
    }
}

impl<T> Graph<T> {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Directed edge list (each undirected edge appears twice), sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_undirected_edges(&self) -> usize {
        self.edges.len() / 2
    }

    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied().filter(|&(u, v)| u < v)
    }

    pub fn neighbors(&self, i: usize) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.edges[self.offsets[i]..self.offsets[i + 1]]
            .iter()
            .map(|&(_, v)| v)
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn features(&self) -> &Array2<T> {
        &self.features
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn masks(&self) -> &Masks {
        &self.masks
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn bare(edges: &[(usize, usize)], n: usize) -> Result<Graph<f64>> {
        Graph::build(edges, n, Array2::zeros((n, 1)), vec![0; n], Masks::empty(n))
    }

    #[test]
    fn degrees_count_distinct_neighbors() {
        let g = bare(&[(0, 1)], 3).unwrap();
        assert_eq!(g.degrees(), &[1, 1, 0]);
        assert_eq!(g.edges(), &[(0, 1), (1, 0)]);
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = bare(&[(0, 1), (1, 0), (0, 1)], 2).unwrap();
        assert_eq!(g.degrees(), &[1, 1]);
        assert_eq!(g.num_undirected_edges(), 1);
    }

    #[test]
    fn rejects_out_of_range_and_self_loops() {
        assert!(matches!(bare(&[(0, 3)], 3), Err(Error::EdgeOutOfRange(0, 3, 3))));
        assert!(matches!(bare(&[(1, 1)], 3), Err(Error::SelfLoop(1))));
    }

    #[test]
    fn rejects_overlapping_masks() {
        let mut m = Masks::empty(2);
        m.train[0] = true;
        m.test[0] = true;
        let r = Graph::<f64>::build(&[], 2, Array2::zeros((2, 1)), vec![0, 0], m);
        assert!(r.is_err());
    }

    #[test]
    fn rejects_feature_row_mismatch() {
        let r = Graph::<f64>::build(&[], 3, Array2::zeros((2, 1)), vec![0; 3], Masks::empty(3));
        assert!(r.is_err());
    }

    #[test]
    fn neighbors_follow_csr() {
        let g = bare(&[(0, 2), (0, 1), (2, 3)], 4).unwrap();
        assert_eq!(g.neighbors(0).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(g.neighbors(2).collect::<Vec<_>>(), vec![0, 3]);
        assert_eq!(g.neighbors(1).len(), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn edge_order_does_not_matter(
                raw in prop::collection::vec((0usize..12, 0usize..12), 0..40),
                seed in any::<u64>(),
            ) {
                let edges: Vec<_> = raw.into_iter().filter(|(u, v)| u != v).collect();
                let mut shuffled = edges.clone();
                // deterministic Fisher-Yates driven by the seed
                let mut s = seed | 1;
                for i in (1..shuffled.len()).rev() {
                    s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                    shuffled.swap(i, (s % (i as u64 + 1)) as usize);
                }
                let flipped: Vec<_> = shuffled.iter().map(|&(u, v)| (v, u)).collect();
                let a = bare(&edges, 12).unwrap();
                prop_assert_eq!(&a, &bare(&shuffled, 12).unwrap());
                prop_assert_eq!(&a, &bare(&flipped, 12).unwrap());
                for i in 0..12 {
                    prop_assert_eq!(a.degree(i), a.neighbors(i).len());
                }
            }
        }
    }
}
