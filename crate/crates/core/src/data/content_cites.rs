use std::collections::HashMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{parse_err, LoadReport};
use crate::error::{io_err, Result};
use crate::graph::{Graph, Masks};
use crate::scalar::Scalar;

/// Reads `<dir>/<name>.content` (`id f_1 … f_F label`) and
/// `<dir>/<name>.cites` (`cited citing`).
///
/// Node ids and label tokens are mapped to dense indices in order of first
/// appearance in the content file. Citations naming an unknown id, and
/// self-citations, are dropped and counted in the report.
pub fn load_content_cites<T: Scalar>(dir: &Path, name: &str) -> Result<(Graph<T>, LoadReport)> {
    let content_path = dir.join(format!("{name}.content"));
    let cites_path = dir.join(format!("{name}.cites"));
    let content = fs::read_to_string(&content_path).map_err(io_err(&content_path))?;
    let cites = fs::read_to_string(&cites_path).map_err(io_err(&cites_path))?;

    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut classes: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut values: Vec<T> = Vec::new();
    let mut width: Option<usize> = None;

    for (ln, line) in content.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() < 3 {
            return Err(parse_err(&content_path, ln + 1, "expected id, features and label"));
        }
        let f = toks.len() - 2;
        match width {
            None => width = Some(f),
            Some(w) if w != f => {
                return Err(parse_err(
                    &content_path,
                    ln + 1,
                    format!("{f} feature values, expected {w}"),
                ))
            }
            _ => {}
        }
        let next = ids.len();
        if ids.insert(toks[0].to_string(), next).is_some() {
            return Err(parse_err(
                &content_path,
                ln + 1,
                format!("duplicate node id `{}`", toks[0]),
            ));
        }
        for t in &toks[1..=f] {
            let v: f64 = t.parse().map_err(|_| {
                parse_err(&content_path, ln + 1, format!("bad feature value `{t}`"))
            })?;
            values.push(T::from_f64_lossy(v));
        }
        let next_class = classes.len();
        let label = *classes
            .entry(toks[f + 1].to_string())
            .or_insert(next_class);
        labels.push(label);
    }

    let n = labels.len();
    let f = width.unwrap_or(0);
    let features = Array2::from_shape_vec((n, f), values).expect("rows checked above");

    let mut report = LoadReport::default();
    let mut edges = Vec::new();
    for (ln, line) in cites.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 2 {
            return Err(parse_err(&cites_path, ln + 1, "expected two node ids"));
        }
        match (ids.get(toks[0]), ids.get(toks[1])) {
            (Some(&a), Some(&b)) if a == b => report.self_loop_edges += 1,
            (Some(&a), Some(&b)) => edges.push((a, b)),
            _ => report.unknown_endpoint_edges += 1,
        }
    }
    if report.unknown_endpoint_edges > 0 {
        log::warn!(
            "{}: dropped {} citation(s) with unknown endpoints",
            cites_path.display(),
            report.unknown_endpoint_edges
        );
    }

    let graph = Graph::build(&edges, n, features, labels, Masks::empty(n))?;
    Ok((graph, report))
}
