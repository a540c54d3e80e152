use ndarray::Array2;

use crate::scalar::Scalar;

/// Compressed sparse rows of a constant matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows<T> {
    nrows: usize,
    ncols: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseRows<T> {
    pub fn from_dense(a: &Array2<T>) -> Self {
        let mut offsets = Vec::with_capacity(a.nrows() + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for row in a.rows() {
            for (j, &v) in row.iter().enumerate() {
                if v != T::zero() {
                    cols.push(j);
                    values.push(v);
                }
            }
            offsets.push(cols.len());
        }
        SparseRows {
            nrows: a.nrows(),
            ncols: a.ncols(),
            offsets,
            cols,
            values,
        }
    }

    pub fn dim(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Fraction of stored entries.
    pub fn density(&self) -> f64 {
        self.nnz() as f64 / (self.nrows * self.ncols).max(1) as f64
    }

    /// `self · b`.
    pub fn dot(&self, b: &Array2<T>) -> Array2<T> {
        assert_eq!(self.ncols, b.nrows(), "sparse dot shape");
        let mut out = Array2::zeros((self.nrows, b.ncols()));
        for i in 0..self.nrows {
            let mut row = out.row_mut(i);
            for k in self.offsets[i]..self.offsets[i + 1] {
                row.scaled_add(self.values[k], &b.row(self.cols[k]));
            }
        }
        out
    }

    /// `selfᵀ · g`.
    pub fn t_dot(&self, g: &Array2<T>) -> Array2<T> {
        assert_eq!(self.nrows, g.nrows(), "sparse transposed dot shape");
        let mut out = Array2::zeros((self.ncols, g.ncols()));
        for i in 0..self.nrows {
            let gi = g.row(i);
            for k in self.offsets[i]..self.offsets[i + 1] {
                out.row_mut(self.cols[k]).scaled_add(self.values[k], &gi);
            }
        }
        out
    }
}
