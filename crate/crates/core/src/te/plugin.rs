use std::collections::BTreeMap;

use super::{embed, SeriesPair, TeConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn bin_series<T: Scalar>(s: &[T], bins: usize) -> Vec<usize> {
    let (lo, hi) = s
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    if !(range > T::zero()) {
        return vec![0; s.len()];
    }
    let nb = T::from_usize_lossy(bins);
    s.iter()
        .map(|&v| {
            let b = ((v - lo) / range * nb).floor().as_f64() as usize;
            b.min(bins - 1)
        })
        .collect()
}

/// Histogram plug-in estimate of `TE(Y → X)`.
///
/// Each series is cut into `num_bins` equal-width bins over its own range,
/// all probabilities are empirical frequencies of the embedded joint states,
/// and the sum runs over observed states only.
pub fn te_plugin<T: Scalar>(pair: &SeriesPair<T>, cfg: &TeConfig, num_bins: usize) -> Result<f64> {
    if num_bins == 0 {
        return Err(Error::EstimatorConfig("num_bins must be ≥ 1".into()));
    }
    let bx = bin_series(&pair.x, num_bins);
    let by = bin_series(&pair.y, num_bins);
    let binned = SeriesPair::new(bx, by)?;
    let emb = embed(&binned, cfg)?;
    if emb.len() < 8 {
        return Err(Error::SeriesTooShort {
            needed: 8 + cfg.k_lag.max(cfg.l_lag),
            got: pair.len(),
        });
    }

    type Key = (usize, Vec<usize>, Vec<usize>);
    let mut joint: BTreeMap<Key, usize> = BTreeMap::new();
    let mut hist: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut next_hist: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
    let mut hist_src: BTreeMap<(Vec<usize>, Vec<usize>), usize> = BTreeMap::new();
    for s in &emb.samples {
        *joint
            .entry((s.x_next, s.x_hist.clone(), s.y_hist.clone()))
            .or_default() += 1;
        *hist.entry(s.x_hist.clone()).or_default() += 1;
        *next_hist.entry((s.x_next, s.x_hist.clone())).or_default() += 1;
        *hist_src
            .entry((s.x_hist.clone(), s.y_hist.clone()))
            .or_default() += 1;
    }

    let total = emb.len() as f64;
    let mut te = 0.0;
    for ((xn, xh, yh), &n_abc) in &joint {
        let n_b = hist[xh] as f64;
        let n_ab = next_hist[&(*xn, xh.clone())] as f64;
        let n_bc = hist_src[&(xh.clone(), yh.clone())] as f64;
        let n_abc = n_abc as f64;
        te += n_abc / total * ((n_abc * n_b) / (n_bc * n_ab)).ln();
    }
    Ok(cfg.from_nats(te))
}
