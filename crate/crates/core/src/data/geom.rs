use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{parse_err, LoadReport};
use crate::error::{io_err, Error, Result};
use crate::graph::{Graph, Masks};
use crate::scalar::Scalar;

pub const NODE_FILE: &str = "out1_node_feature_label.txt";
pub const EDGE_FILE: &str = "out1_graph_edges.txt";

/// How the comma-separated feature field of the node file is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureEncoding {
    /// One value per feature.
    Dense,
    /// Indices of the non-zero entries of a binary vector of length `dim`.
    SparseIndices { dim: usize },
}

fn has_header(line: &str) -> bool {
    line.split('\t')
        .next()
        .map(|t| t.trim().parse::<i64>().is_err())
        .unwrap_or(false)
}

/// Reads the tab-separated node file (`id<TAB>features<TAB>label`) and edge
/// file (`src<TAB>dst`), each with one header line. Node ids must be a
/// permutation of `0..N`.
pub fn load_geom_text<T: Scalar>(dir: &Path, encoding: FeatureEncoding) -> Result<(Graph<T>, LoadReport)> {
    let node_path = dir.join(NODE_FILE);
    let edge_path = dir.join(EDGE_FILE);
    let nodes = fs::read_to_string(&node_path).map_err(io_err(&node_path))?;
    let edges_txt = fs::read_to_string(&edge_path).map_err(io_err(&edge_path))?;

    let mut lines = nodes.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if has_header(l) => {}
        _ => return Err(parse_err(&node_path, 1, "missing header line")),
    }

    let mut rows: Vec<(usize, Vec<f64>, usize)> = Vec::new();
    for (ln, line) in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(&node_path, ln + 1, "expected 3 tab-separated fields"));
        }
        let id: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(&node_path, ln + 1, "node id is not an integer"))?;
        let label: usize = fields[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(&node_path, ln + 1, "label is not an integer"))?;
        let vals: Vec<f64> = fields[1]
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| parse_err(&node_path, ln + 1, format!("bad feature `{t}`")))
            })
            .collect::<Result<_>>()?;
        rows.push((id, vals, label));
    }

    let n = rows.len();
    let width = match encoding {
        FeatureEncoding::Dense => rows.first().map(|r| r.1.len()).unwrap_or(0),
        FeatureEncoding::SparseIndices { dim } => dim,
    };
    let mut features = Array2::<T>::zeros((n, width));
    let mut labels = vec![usize::MAX; n];
    for (k, (id, vals, label)) in rows.into_iter().enumerate() {
        if id >= n || labels[id] != usize::MAX {
            return Err(parse_err(
                &node_path,
                k + 2,
                format!("node id {id} is duplicated or outside 0..{n}"),
            ));
        }
        labels[id] = label;
        match encoding {
            FeatureEncoding::Dense => {
                if vals.len() != width {
                    return Err(parse_err(
                        &node_path,
                        k + 2,
                        format!("{} features, expected {width}", vals.len()),
                    ));
                }
                for (j, v) in vals.into_iter().enumerate() {
                    features[[id, j]] = T::from_f64_lossy(v);
                }
            }
            FeatureEncoding::SparseIndices { dim } => {
                for v in vals {
                    if v < 0.0 || v.fract() != 0.0 || v as usize >= dim {
                        return Err(parse_err(
                            &node_path,
                            k + 2,
                            format!("feature index {v} outside 0..{dim}"),
                        ));
                    }
                    features[[id, v as usize]] = T::one();
                }
            }
        }
    }

    let mut elines = edges_txt.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match elines.next() {
        Some((_, l)) if has_header(l) => {}
        Some(_) => return Err(parse_err(&edge_path, 1, "missing header line")),
        None => {}
    }
    let mut report = LoadReport::default();
    let mut edges = Vec::new();
    for (ln, line) in elines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(&edge_path, ln + 1, "expected two node ids"));
        }
        let parse = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| parse_err(&edge_path, ln + 1, format!("bad node id `{t}`")))
        };
        let (u, v) = (parse(toks[0])?, parse(toks[1])?);
        if u >= n || v >= n {
            report.unknown_endpoint_edges += 1;
        } else if u == v {
            report.self_loop_edges += 1;
        } else {
            edges.push((u, v));
        }
    }

    let graph = Graph::build(&edges, n, features, labels, Masks::empty(n)).map_err(|e| match e {
        Error::InvalidGraph(m) => parse_err(&node_path, 0, m),
        other => other,
    })?;
    Ok((graph, report))
}
