//! Dataset loading (plain-text formats), split handling and synthetic
//! graph generation.

mod content_cites;
mod geom;
mod splits;
mod synthetic;

pub use content_cites::load_content_cites;
pub use geom::{load_geom_text, FeatureEncoding, EDGE_FILE, NODE_FILE};
pub use splits::{
    generate_splits, load_splits, split_path, SplitProportions, SplitSource, Splits,
};
pub use synthetic::{generate_synthetic, SynthSpec};

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum DatasetName {
    Texas,
    Wisconsin,
    Actor,
    Squirrel,
    Chameleon,
    Cornell,
    Citeseer,
    Pubmed,
    Cora,
}

/// Reference characteristics of a benchmark dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetInfo {
    pub name: DatasetName,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub homophily: f64,
}

impl DatasetName {
    pub const ALL: [DatasetName; 9] = [
        DatasetName::Texas,
        DatasetName::Wisconsin,
        DatasetName::Actor,
        DatasetName::Squirrel,
        DatasetName::Chameleon,
        DatasetName::Cornell,
        DatasetName::Citeseer,
        DatasetName::Pubmed,
        DatasetName::Cora,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetName::Texas => "texas",
            DatasetName::Wisconsin => "wisconsin",
            DatasetName::Actor => "actor",
            DatasetName::Squirrel => "squirrel",
            DatasetName::Chameleon => "chameleon",
            DatasetName::Cornell => "cornell",
            DatasetName::Citeseer => "citeseer",
            DatasetName::Pubmed => "pubmed",
            DatasetName::Cora => "cora",
        }
    }

    /// Whether the dataset ships as `<name>.content` / `<name>.cites`.
    pub fn is_citation(self) -> bool {
        matches!(
            self,
            DatasetName::Cora | DatasetName::Citeseer | DatasetName::Pubmed
        )
    }

    pub fn feature_encoding(self) -> FeatureEncoding {
        match self {
            DatasetName::Actor => FeatureEncoding::SparseIndices { dim: 932 },
            _ => FeatureEncoding::Dense,
        }
    }

    /// Published node/edge counts and homophily level.
    pub fn reference(self) -> DatasetInfo {
        let (num_nodes, num_edges, homophily) = match self {
            DatasetName::Texas => (183, 295, 0.11),
            DatasetName::Wisconsin => (251, 466, 0.21),
            DatasetName::Actor => (7600, 26_752, 0.22),
            DatasetName::Squirrel => (5201, 198_493, 0.22),
            DatasetName::Chameleon => (2277, 31_421, 0.23),
            DatasetName::Cornell => (183, 280, 0.3),
            DatasetName::Citeseer => (3327, 4676, 0.74),
            DatasetName::Pubmed => (19_717, 44_327, 0.8),
            DatasetName::Cora => (2708, 5278, 0.81),
        };
        DatasetInfo {
            name: self,
            num_nodes,
            num_edges,
            homophily,
        }
    }
}

impl fmt::Display for DatasetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let alias = if lower == "film" { "actor" } else { lower.as_str() };
        DatasetName::ALL
            .iter()
            .copied()
            .find(|d| d.as_str() == alias)
            .ok_or_else(|| Error::UnknownDataset(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: DatasetName,
    /// Directory holding one sub-directory per dataset.
    pub root_dir: PathBuf,
    pub split_index: usize,
}

impl DatasetSpec {
    pub fn new(name: DatasetName, root_dir: impl Into<PathBuf>, split_index: usize) -> Result<Self> {
        if split_index >= 10 {
            return Err(Error::Config(format!("split index {split_index} outside [0, 10)")));
        }
        Ok(DatasetSpec {
            name,
            root_dir: root_dir.into(),
            split_index,
        })
    }

    pub fn dir(&self) -> PathBuf {
        self.root_dir.join(self.name.as_str())
    }
}

/// Counters for lines the loaders skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadReport {
    pub unknown_endpoint_edges: usize,
    pub self_loop_edges: usize,
}

#[derive(Debug, Clone)]
pub struct LoadedDataset<T> {
    pub graph: Graph<T>,
    pub report: LoadReport,
    pub split_source: SplitSource,
}

/// Loads a dataset's graph (without masks) from `<root>/<name>/`.
pub fn load_graph<T: Scalar>(name: DatasetName, root_dir: &Path) -> Result<(Graph<T>, LoadReport)> {
    let dir = root_dir.join(name.as_str());
    if name.is_citation() {
        load_content_cites(&dir, name.as_str())
    } else {
        load_geom_text(&dir, name.feature_encoding())
    }
}

/// Loads the graph and attaches the masks of `spec.split_index`, generating
/// stratified splits from `seed` when the split file is absent.
pub fn load_dataset<T: Scalar>(spec: &DatasetSpec, seed: u64) -> Result<LoadedDataset<T>> {
    let (graph, report) = load_graph::<T>(spec.name, &spec.root_dir)?;
    let splits = load_splits(&graph, &spec.dir(), spec.split_index, seed)?;
    for w in &splits.warnings {
        log::warn!("{}: {w}", spec.name);
    }
    Ok(LoadedDataset {
        graph: graph.with_masks(splits.masks)?,
        report,
        split_source: splits.source,
    })
}

pub(crate) fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}
