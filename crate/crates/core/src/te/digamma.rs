use crate::scalar::{c, Scalar};

/// Digamma function for positive arguments: upward recurrence to x ≥ 10,
/// then the asymptotic expansion.
pub fn digamma<T: Scalar>(x: T) -> T {
    if x.is_nan() || x <= T::zero() {
        return T::nan();
    }
    let mut x = x;
    let mut acc = T::zero();
    let ten: T = c(10.0);
    while x < ten {
        acc = acc - x.recip();
        x = x + T::one();
    }
    let inv = x.recip();
    let inv2 = inv * inv;
    // Bernoulli-number coefficients B_{2k} / (2k)
    let series = inv2
        * (c::<T>(1.0 / 12.0)
            - inv2
                * (c::<T>(1.0 / 120.0)
                    - inv2
                        * (c::<T>(1.0 / 252.0)
                            - inv2 * (c::<T>(1.0 / 240.0) - inv2 * c::<T>(1.0 / 132.0)))));
    acc + x.ln() - c::<T>(0.5) * inv - series
}

/// `ψ(1), ψ(2), …, ψ(n)` precomputed for neighbour-count lookups.
#[derive(Debug, Clone)]
pub(crate) struct DigammaTable<T> {
    values: Vec<T>,
}

impl<T: Scalar> DigammaTable<T> {
    pub(crate) fn new(n: usize) -> Self {
        DigammaTable {
            values: (1..=n.max(1)).map(|k| digamma(T::from_usize_lossy(k))).collect(),
        }
    }

    /// `ψ(k)` for `k ≥ 1`.
    pub(crate) fn get(&self, k: usize) -> T {
        match self.values.get(k.wrapping_sub(1)) {
            Some(&v) => v,
            None => digamma(T::from_usize_lossy(k)),
        }
    }
}
