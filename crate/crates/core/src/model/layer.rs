use ndarray::Array2;
use rand::Rng;

use super::GraphContext;
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Handles of one layer's parameters on a tape.
#[derive(Debug, Clone, Copy)]
pub struct LayerParams {
    /// `F_in x F_out`.
    pub weight: Var,
    /// `1 x F_out`.
    pub bias: Var,
    /// `1 x 3` raw mixing logits for (self, positive, negative).
    pub beta: Var,
    /// `1 x 2` degree-scale slope and offset.
    pub degree: Var,
}

/// Switches for one layer application.
#[derive(Debug, Clone)]
pub struct LayerOptions<T> {
    pub dropout_rate: f64,
    pub training: bool,
    /// `false` fixes the degree scale at 1.
    pub degree_scaling: bool,
    /// Apply Elu to the output.
    pub activate: bool,
    /// Replace the learned sign split by fixed `(positive, negative)` `E x 1`
    /// columns aligned with the context edges.
    pub sign_override: Option<(Array2<T>, Array2<T>)>,
    /// Replace the softmax-normalised mixing weights.
    pub beta_override: Option<[T; 3]>,
}

impl<T> Default for LayerOptions<T> {
    fn default() -> Self {
        LayerOptions {
            dropout_rate: 0.0,
            training: false,
            degree_scaling: true,
            activate: true,
            sign_override: None,
            beta_override: None,
        }
    }
}

/// Intermediate handles of one layer application.
#[derive(Debug, Clone, Copy)]
pub struct LayerVars {
    /// `HW + b`.
    pub transformed: Var,
    /// `E x 1` signed similarity per propagation edge (zero on self-loops).
    pub sign: Var,
    pub sign_pos: Var,
    pub sign_neg: Var,
    /// `1 x 3` normalised mixing weights.
    pub beta_hat: Var,
    /// `N x 1` degree scale, absent when fixed at 1.
    pub alpha: Option<Var>,
    pub out: Var,
}

/// Layer intermediates copied off the tape, with the sign matrices dense.
#[derive(Debug, Clone)]
pub struct LayerState<T> {
    pub transformed: Array2<T>,
    pub sign: Array2<T>,
    pub sign_pos: Array2<T>,
    pub sign_neg: Array2<T>,
    pub beta_hat: [T; 3],
    pub alpha: Vec<T>,
    pub out: Array2<T>,
}

fn densify<T: Scalar>(ctx: &GraphContext<T>, col: &Array2<T>) -> Array2<T> {
    let mut m = Array2::zeros((ctx.num_nodes, ctx.num_nodes));
    for (e, &(i, j)) in ctx.edges.iter().enumerate() {
        m[[i, j]] = col[[e, 0]];
    }
    m
}

impl<T: Scalar> LayerState<T> {
    pub fn capture(tape: &Tape<T>, vars: &LayerVars, ctx: &GraphContext<T>) -> Self {
        let b = tape.value(vars.beta_hat);
        LayerState {
            transformed: tape.value(vars.transformed).clone(),
            sign: densify(ctx, tape.value(vars.sign)),
            sign_pos: densify(ctx, tape.value(vars.sign_pos)),
            sign_neg: densify(ctx, tape.value(vars.sign_neg)),
            beta_hat: [b[[0, 0]], b[[0, 1]], b[[0, 2]]],
            alpha: match vars.alpha {
                Some(a) => tape.value(a).iter().copied().collect(),
                None => vec![T::one(); ctx.num_nodes],
            },
            out: tape.value(vars.out).clone(),
        }
    }
}

/// One signed-attention layer:
///
/// `Ĥ = HW + b`, `S = cos(Ĥ_i, Ĥ_j)` on edges (zero on the diagonal),
/// `out = σ(α̂ ⊙ (β̂₀ Ĥ + β̂₁ (S⁺ ⊙ Ã) Ĥ + β̂₂ (S⁻ ⊙ Ã) Ĥ))`
///
/// with `β̂ = softmax(β)` and `α̂_i = softplus(a · r̄_i + c)`. Dropout is
/// applied to `H` on entry when training.
pub fn ggcn_layer<T: Scalar, R: Rng + ?Sized>(
    tape: &mut Tape<T>,
    h: Var,
    p: &LayerParams,
    ctx: &GraphContext<T>,
    opts: &LayerOptions<T>,
    rng: &mut R,
) -> Result<LayerVars> {
    let h = tape.dropout(h, opts.dropout_rate, opts.training, rng)?;
    let hw = tape.matmul(h, p.weight)?;
    let transformed = tape.add_row(hw, p.bias)?;

    let sign = tape.edge_cosine(transformed, ctx.edges.clone())?;
    let (sign_pos, sign_neg) = match &opts.sign_override {
        None => (tape.clamp_min0(sign), tape.clamp_max0(sign)),
        Some((pos, neg)) => {
            let e = ctx.edges.len();
            if pos.dim() != (e, 1) || neg.dim() != (e, 1) {
                return Err(Error::Shape {
                    op: "sign_override",
                    lhs: pos.dim(),
                    rhs: (e, 1),
                });
            }
            (tape.constant(pos.clone()), tape.constant(neg.clone()))
        }
    };
    let norm = tape.constant(ctx.norm.clone());
    let w_pos = tape.mul(sign_pos, norm)?;
    let w_neg = tape.mul(sign_neg, norm)?;
    let prop_pos = tape.propagate(w_pos, transformed, ctx.edges.clone())?;
    let prop_neg = tape.propagate(w_neg, transformed, ctx.edges.clone())?;

    let beta_hat = match opts.beta_override {
        None => tape.row_softmax(p.beta)?,
        Some(b) => tape.constant(Array2::from_shape_vec((1, 3), b.to_vec()).expect("1 x 3")),
    };
    let b0 = tape.pick(beta_hat, 0)?;
    let b1 = tape.pick(beta_hat, 1)?;
    let b2 = tape.pick(beta_hat, 2)?;
    let t0 = tape.scale_by(transformed, b0)?;
    let t1 = tape.scale_by(prop_pos, b1)?;
    let t2 = tape.scale_by(prop_neg, b2)?;
    let mix = tape.add(t0, t1)?;
    let mut mix = tape.add(mix, t2)?;

    let alpha = if opts.degree_scaling {
        let r = tape.constant(ctx.rel_degrees.clone());
        let slope = tape.pick(p.degree, 0)?;
        let offset = tape.pick(p.degree, 1)?;
        let ar = tape.scale_by(r, slope)?;
        let pre = tape.add_scalar(ar, offset)?;
        let alpha = tape.softplus(pre);
        mix = tape.mul_col(mix, alpha)?;
        Some(alpha)
    } else {
        None
    };
    let out = if opts.activate { tape.elu(mix) } else { mix };
    Ok(LayerVars {
        transformed,
        sign,
        sign_pos,
        sign_neg,
        beta_hat,
        alpha,
        out,
    })
}

/// Plain graph convolution `σ(Â H W)` with the self-looped normalised
/// adjacency; the reference the signed layer reduces to.
pub fn gcn_layer<T: Scalar>(
    tape: &mut Tape<T>,
    h: Var,
    weight: Var,
    ctx: &GraphContext<T>,
    activate: bool,
) -> Result<Var> {
    let hw = tape.matmul(h, weight)?;
    let norm = tape.constant(ctx.norm.clone());
    let out = tape.propagate(norm, hw, ctx.edges.clone())?;
    Ok(if activate { tape.elu(out) } else { out })
}
