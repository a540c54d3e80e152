//! Dense reverse-mode differentiation over 2-D tensors, plus the optimizer
//! and the finite-difference checker used to validate it.

mod adam;
mod gradcheck;
mod sparse;
mod tape;

pub use adam::{AdamConfig, AdamState, Param, ParamSet};
pub use gradcheck::{
    analytic_gradient, finite_diff_check, max_relative_error, numerical_gradient,
};
pub use sparse::SparseRows;
pub use tape::{EdgeList, Gradients, Matrix, Tape, Var};
