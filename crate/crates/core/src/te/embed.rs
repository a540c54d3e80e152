use super::{SeriesPair, TeConfig};
use crate::error::{Error, Result};

/// One lagged joint observation `(x_{t+1}, x_t^{(k)}, y_t^{(l)})`.
/// Histories are ordered oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub x_next: T,
    pub x_hist: Vec<T>,
    pub y_hist: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSeries<T> {
    pub samples: Vec<Sample<T>>,
    pub k_lag: usize,
    pub l_lag: usize,
}

impl<T> EmbeddedSeries<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Aligns the two series into `n - max(k, l)` lagged samples.
pub fn embed<T: Copy>(pair: &SeriesPair<T>, cfg: &TeConfig) -> Result<EmbeddedSeries<T>> {
    cfg.validate()?;
    if pair.x.len() != pair.y.len() {
        return Err(Error::SeriesLength(pair.x.len(), pair.y.len()));
    }
    let lag = cfg.k_lag.max(cfg.l_lag);
    let n = pair.len();
    if n < lag + 2 {
        return Err(Error::SeriesTooShort {
            needed: lag + 2,
            got: n,
        });
    }
    let samples = (lag - 1..n - 1)
        .map(|t| Sample {
            x_next: pair.x[t + 1],
            x_hist: pair.x[t + 1 - cfg.k_lag..=t].to_vec(),
            y_hist: pair.y[t + 1 - cfg.l_lag..=t].to_vec(),
        })
        .collect();
    Ok(EmbeddedSeries {
        samples,
        k_lag: cfg.k_lag,
        l_lag: cfg.l_lag,
    })
}
