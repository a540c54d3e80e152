//! Transfer entropy `TE(Y → X)` between two series: history embedding, a
//! histogram plug-in estimator and a KSG nearest-neighbour estimator.

mod digamma;
mod embed;
pub mod kdtree;
mod ksg;
mod plugin;

pub use digamma::digamma;
pub use embed::{embed, EmbeddedSeries, Sample};
pub use kdtree::KdTree;
pub use ksg::te_ksg;
pub use plugin::te_plugin;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Target series `x` and source series `y` of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPair<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
}

impl<T> SeriesPair<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::SeriesLength(x.len(), y.len()));
        }
        Ok(SeriesPair { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Natural,
    Base2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeConfig {
    /// Target history length.
    pub k_lag: usize,
    /// Source history length.
    pub l_lag: usize,
    /// Neighbour count for the KSG estimator.
    pub k_neighbors: usize,
    pub log_base: LogBase,
    /// Seeds the tie-breaking jitter of the KSG estimator.
    pub seed: u64,
}

impl Default for TeConfig {
    fn default() -> Self {
        TeConfig {
            k_lag: 1,
            l_lag: 1,
            k_neighbors: 3,
            log_base: LogBase::Natural,
            seed: 0,
        }
    }
}

impl TeConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.k_lag == 0 || self.l_lag == 0 {
            return Err(Error::EstimatorConfig("history lengths must be ≥ 1".into()));
        }
        if self.k_neighbors == 0 {
            return Err(Error::EstimatorConfig("k_neighbors must be ≥ 1".into()));
        }
        Ok(())
    }

    pub(crate) fn from_nats(&self, nats: f64) -> f64 {
        match self.log_base {
            LogBase::Natural => nats,
            LogBase::Base2 => nats / std::f64::consts::LN_2,
        }
    }
}
