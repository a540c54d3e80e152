use ndarray::Array2;

use super::tape::{Tape, Var};
use crate::error::Result;
use crate::scalar::{c, Scalar};

/// Gradient of `f` at `params` by reverse-mode differentiation.
pub fn analytic_gradient<T, F>(f: &F, params: &[Array2<T>]) -> Result<Vec<Array2<T>>>
where
    T: Scalar,
    F: Fn(&mut Tape<T>, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
    let loss = f(&mut tape, &vars)?;
    let grads = tape.backward(loss)?;
    Ok(vars.iter().map(|&v| grads.get_or_zero(v)).collect())
}

fn evaluate<T, F>(f: &F, params: &[Array2<T>]) -> Result<T>
where
    T: Scalar,
    F: Fn(&mut Tape<T>, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
    let loss = f(&mut tape, &vars)?;
    Ok(tape.value(loss)[[0, 0]])
}

/// Central differences `(f(p + ε) - f(p - ε)) / 2ε`, one coordinate at a time.
pub fn numerical_gradient<T, F>(f: &F, params: &[Array2<T>], epsilon: f64) -> Result<Vec<Array2<T>>>
where
    T: Scalar,
    F: Fn(&mut Tape<T>, &[Var]) -> Result<Var>,
{
    let eps: T = c(epsilon);
    let mut work = params.to_vec();
    let mut out = Vec::with_capacity(params.len());
    for k in 0..params.len() {
        let mut g = Array2::zeros(params[k].raw_dim());
        for idx in 0..params[k].len() {
            let (r, col) = (idx / params[k].ncols(), idx % params[k].ncols());
            let orig = work[k][[r, col]];
            work[k][[r, col]] = orig + eps;
            let up = evaluate(f, &work)?;
            work[k][[r, col]] = orig - eps;
            let down = evaluate(f, &work)?;
            work[k][[r, col]] = orig;
            g[[r, col]] = (up - down) / (eps + eps);
        }
        out.push(g);
    }
    Ok(out)
}

/// Largest `|a - b| / max(|a|, |b|, 1e-8)` over all entries.
pub fn max_relative_error<T: Scalar>(a: &[Array2<T>], b: &[Array2<T>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y.iter()))
        .map(|(&x, &y)| {
            let (x, y) = (x.as_f64(), y.as_f64());
            (x - y).abs() / x.abs().max(y.abs()).max(1e-8)
        })
        .fold(0.0, f64::max)
}

/// Compares the tape's gradient of `f` with central differences and returns
/// the maximum relative error.
pub fn finite_diff_check<T, F>(f: F, params: &[Array2<T>], epsilon: f64) -> Result<f64>
where
    T: Scalar,
    F: Fn(&mut Tape<T>, &[Var]) -> Result<Var>,
{
    let analytic = analytic_gradient(&f, params)?;
    let numeric = numerical_gradient(&f, params, epsilon)?;
    Ok(max_relative_error(&analytic, &numeric))
}
