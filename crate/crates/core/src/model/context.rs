use std::sync::Arc;

use ndarray::Array2;

use crate::autodiff::{EdgeList, SparseRows};
use crate::graph::{normalize_adjacency, relative_degrees, Graph, Masks};
use crate::scalar::Scalar;

/// Per-graph constants shared by every forward pass.
#[derive(Debug, Clone)]
pub struct GraphContext<T> {
    pub num_nodes: usize,
    pub features: Array2<T>,
    /// Sparse copy of `features` when at most a quarter of it is non-zero.
    pub sparse_features: Option<Arc<SparseRows<T>>>,
    /// Entries of the self-looped normalised adjacency, in `(row, col)` order.
    pub edges: EdgeList,
    /// `E x 1` normalised adjacency values aligned with `edges`.
    pub norm: Array2<T>,
    /// `N x 1` relative degrees.
    pub rel_degrees: Array2<T>,
    pub labels: Arc<[usize]>,
    pub train_rows: Arc<[usize]>,
    pub val_rows: Arc<[usize]>,
    pub test_rows: Arc<[usize]>,
}

impl<T: Scalar> GraphContext<T> {
    pub fn new(g: &Graph<T>) -> Self {
        let adj = normalize_adjacency(g);
        let edges: EdgeList = adj.entries().iter().map(|&(i, j, _)| (i, j)).collect();
        let norm = Array2::from_shape_vec(
            (edges.len(), 1),
            adj.entries().iter().map(|&(_, _, v)| v).collect(),
        )
        .expect("one value per entry");
        let rel = relative_degrees(g).values;
        let rel_degrees = Array2::from_shape_vec((rel.len(), 1), rel).expect("one per node");
        let sparse = SparseRows::from_dense(g.features());
        let sparse_features = (sparse.density() <= 0.25).then(|| Arc::new(sparse));
        let m = g.masks();
        GraphContext {
            num_nodes: g.num_nodes(),
            features: g.features().clone(),
            sparse_features,
            edges,
            norm,
            rel_degrees,
            labels: g.labels().into(),
            train_rows: Masks::indices(&m.train).into(),
            val_rows: Masks::indices(&m.val).into(),
            test_rows: Masks::indices(&m.test).into(),
        }
    }
}
