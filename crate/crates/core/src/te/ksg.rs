use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::digamma::DigammaTable;
use super::{embed, KdTree, SeriesPair, TeConfig};
use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};

const JITTER: f64 = 1e-10;

fn is_constant<T: Scalar>(s: &[T]) -> bool {
    s.windows(2).all(|w| w[0] == w[1])
}

fn jitter<T: Scalar>(s: &[T], rng: &mut ChaCha8Rng) -> Vec<T> {
    let scale = s.iter().fold(T::one(), |m, &v| m.max(v.abs()));
    // keep the jitter representable at single precision
    let amp = c::<T>(JITTER).max(T::epsilon() * scale * c::<T>(8.0));
    s.iter()
        .map(|&v| v + amp * c::<T>(rng.random_range(-1.0..1.0)))
        .collect()
}

/// KSG (algorithm 1) estimate of `TE(Y → X)` as the conditional mutual
/// information `I(x_{t+1}; y_t^{(l)} | x_t^{(k)})`:
///
/// `ψ(K) + ⟨ψ(n_z + 1) − ψ(n_xz + 1) − ψ(n_yz + 1)⟩`
///
/// where the search radius of each sample is its K-th neighbour distance in
/// the joint space and `n_*` are strict Chebyshev-ball counts in the
/// marginal spaces (`z` = target history). Ties are broken by a seeded
/// jitter of amplitude 1e-10. The value may be slightly negative.
pub fn te_ksg<T: Scalar>(pair: &SeriesPair<T>, cfg: &TeConfig) -> Result<f64> {
    cfg.validate()?;
    if is_constant(&pair.x) || is_constant(&pair.y) {
        return Err(Error::ConstantSeries);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noisy = SeriesPair::new(jitter(&pair.x, &mut rng), jitter(&pair.y, &mut rng))?;
    let emb = embed(&noisy, cfg)?;
    let m = emb.len();
    let kn = cfg.k_neighbors;
    if m < kn + 2 {
        return Err(Error::SeriesTooShort {
            needed: kn + 2 + cfg.k_lag.max(cfg.l_lag),
            got: pair.len(),
        });
    }

    let (k, l) = (cfg.k_lag, cfg.l_lag);
    let mut joint = Vec::with_capacity(m * (1 + k + l));
    let mut z = Vec::with_capacity(m * k);
    let mut xz = Vec::with_capacity(m * (1 + k));
    let mut yz = Vec::with_capacity(m * (k + l));
    for s in &emb.samples {
        joint.push(s.x_next);
        joint.extend_from_slice(&s.x_hist);
        joint.extend_from_slice(&s.y_hist);
        z.extend_from_slice(&s.x_hist);
        xz.push(s.x_next);
        xz.extend_from_slice(&s.x_hist);
        yz.extend_from_slice(&s.x_hist);
        yz.extend_from_slice(&s.y_hist);
    }
    let joint = KdTree::new(&joint, 1 + k + l);
    let z = KdTree::new(&z, k);
    let xz = KdTree::new(&xz, 1 + k);
    let yz = KdTree::new(&yz, k + l);

    let psi = DigammaTable::<T>::new(m + 1);
    let mut acc = T::zero();
    for i in 0..m {
        let eps = joint.kth_neighbor_distance(i, kn);
        let n_z = z.range_count_excluding(i, eps);
        let n_xz = xz.range_count_excluding(i, eps);
        let n_yz = yz.range_count_excluding(i, eps);
        acc = acc + psi.get(n_z + 1) - psi.get(n_xz + 1) - psi.get(n_yz + 1);
    }
    let te = psi.get(kn) + acc / T::from_usize_lossy(m);
    Ok(cfg.from_nats(te.as_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_is_an_error() {
        let pair = SeriesPair::new(vec![1.0; 50], (0..50).map(|i| i as f64).collect()).unwrap();
        assert!(matches!(te_ksg(&pair, &TeConfig::default()), Err(Error::ConstantSeries)));
    }

    #[test]
    fn short_series_is_an_error() {
        let pair = SeriesPair::new(vec![1.0, 2.0, 0.5, 3.0], vec![0.1, 0.4, 0.2, 0.9]).unwrap();
        assert!(te_ksg(&pair, &TeConfig::default()).is_err());
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let x: Vec<f64> = (0..300).map(|i| ((i * 37) % 101) as f64).collect();
        let y: Vec<f64> = (0..300).map(|i| ((i * 53) % 97) as f64).collect();
        let pair = SeriesPair::new(x, y).unwrap();
        let a = te_ksg(&pair, &TeConfig::default()).unwrap();
        let b = te_ksg(&pair, &TeConfig::default()).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
