//! The signed-attention graph convolution classifier.

mod checkpoint;
mod context;
mod layer;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use context::GraphContext;
pub use layer::{gcn_layer, ggcn_layer, LayerOptions, LayerParams, LayerState, LayerVars};

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::autodiff::{ParamSet, Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};

/// `softplus⁻¹(1) = ln(e − 1)`: the offset that makes the degree scale 1 at
/// initialisation.
pub const SOFTPLUS_INV_ONE: f64 = 0.541_324_854_612_918_1;

/// Where a per-node additive correction enters the forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionSite {
    /// The final layer output, before the classification softmax.
    #[default]
    Output,
    /// The input of the final layer (output of the previous layer, or of the
    /// input projection for a single-layer model).
    LastHidden,
}

impl std::str::FromStr for CorrectionSite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "output" => Ok(CorrectionSite::Output),
            "last_hidden" => Ok(CorrectionSite::LastHidden),
            other => Err(Error::Config(format!("unknown correction site {other:?}"))),
        }
    }
}

/// Scalars added to whole rows of an intermediate representation. The
/// shift is a constant: no gradient flows into it.
#[derive(Debug, Clone, Copy)]
pub struct RowShift<'a> {
    pub site: CorrectionSite,
    pub rows: &'a BTreeMap<usize, f64>,
}

/// `n x cols` matrix whose row `i` is filled with `rows[i]`.
pub fn row_shift_matrix<T: Scalar>(n: usize, cols: usize, rows: &BTreeMap<usize, f64>) -> Result<Array2<T>> {
    let mut m = Array2::zeros((n, cols));
    for (&i, &v) in rows {
        if i >= n {
            return Err(Error::NodeOutOfRange(i, n));
        }
        m.row_mut(i).fill(c(v));
    }
    Ok(m)
}

fn shift_rows<T: Scalar>(tape: &mut Tape<T>, v: Var, rows: &BTreeMap<usize, f64>) -> Result<Var> {
    if rows.is_empty() {
        return Ok(v);
    }
    let (n, cols) = tape.shape(v);
    let m = row_shift_matrix(n, cols, rows)?;
    tape.add_const(v, &m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub dropout_rate: f64,
    /// Learnable per-node degree scaling; `false` fixes the scale at 1.
    pub degree_scaling: bool,
    pub classes: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            num_layers: 2,
            hidden_dim: 64,
            dropout_rate: 0.5,
            degree_scaling: true,
            classes: 2,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 {
            return Err(Error::Config("num_layers must be ≥ 1".into()));
        }
        if self.hidden_dim == 0 || self.classes == 0 {
            return Err(Error::Config("hidden_dim and classes must be ≥ 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        Ok(())
    }
}

fn uniform_fan_in<T: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, fan_in: usize, rng: &mut R) -> Array2<T> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    Array2::from_shape_simple_fn((rows, cols), || T::from_f64_lossy(dist.sample(rng)))
}

/// Input projection followed by `num_layers` signed-attention layers; the
/// last layer emits one logit per class.
#[derive(Debug, Clone, PartialEq)]
pub struct Ggcn<T> {
    pub config: ModelConfig,
    pub num_features: usize,
    pub params: ParamSet<T>,
}

/// Parameter handles bound to one tape.
#[derive(Debug, Clone)]
pub struct BoundParams {
    pub all: Vec<Var>,
    pub input_weight: Var,
    pub input_bias: Var,
    pub layers: Vec<LayerParams>,
}

impl BoundParams {
    /// Groups handles laid out as [`Ggcn::params`] is: input weight and bias,
    /// then weight, bias, mixing and degree parameters per layer.
    pub fn from_vars(all: Vec<Var>, num_layers: usize) -> Self {
        assert_eq!(all.len(), 2 + 4 * num_layers, "parameter count");
        let layers = (0..num_layers)
            .map(|l| LayerParams {
                weight: all[2 + 4 * l],
                bias: all[3 + 4 * l],
                beta: all[4 + 4 * l],
                degree: all[5 + 4 * l],
            })
            .collect();
        BoundParams {
            input_weight: all[0],
            input_bias: all[1],
            layers,
            all,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub logits: Var,
    pub layers: Vec<LayerVars>,
}

impl<T: Scalar> Ggcn<T> {
    pub fn new<R: Rng + ?Sized>(num_features: usize, config: ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let h = config.hidden_dim;
        let mut params = ParamSet::default();
        params.push("input.weight", uniform_fan_in(num_features, h, num_features, rng), true);
        params.push("input.bias", uniform_fan_in(1, h, num_features, rng), false);
        for l in 0..config.num_layers {
            let out = if l + 1 == config.num_layers { config.classes } else { h };
            params.push(format!("conv{l}.weight"), uniform_fan_in(h, out, h, rng), true);
            params.push(format!("conv{l}.bias"), uniform_fan_in(1, out, h, rng), false);
            params.push(format!("conv{l}.beta"), Array2::zeros((1, 3)), false);
            let mut degree = Array2::zeros((1, 2));
            degree[[0, 1]] = c(SOFTPLUS_INV_ONE);
            params.push(format!("conv{l}.degree"), degree, false);
        }
        Ok(Ggcn {
            config,
            num_features,
            params,
        })
    }

    /// Puts every parameter on the tape as a differentiable leaf.
    pub fn bind(&self, tape: &mut Tape<T>) -> BoundParams {
        let all: Vec<Var> = self.params.params.iter().map(|p| tape.param(p.value.clone())).collect();
        BoundParams::from_vars(all, self.config.num_layers)
    }

    /// Records the forward pass and returns the logits handle (no softmax).
    pub fn forward<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape<T>,
        bound: &BoundParams,
        ctx: &GraphContext<T>,
        training: bool,
        shift: Option<RowShift<'_>>,
        rng: &mut R,
    ) -> Result<ForwardOutput> {
        let xw = match &ctx.sparse_features {
            Some(sp) => tape.sparse_matmul(sp.clone(), bound.input_weight)?,
            None => {
                let x = tape.constant(ctx.features.clone());
                tape.matmul(x, bound.input_weight)?
            }
        };
        let xwb = tape.add_row(xw, bound.input_bias)?;
        let mut h = tape.elu(xwb);
        let mut layers = Vec::with_capacity(bound.layers.len());
        let last = bound.layers.len() - 1;
        for (l, lp) in bound.layers.iter().enumerate() {
            if let Some(RowShift { site: CorrectionSite::LastHidden, rows }) = shift {
                if l == last {
                    h = shift_rows(tape, h, rows)?;
                }
            }
            let opts = LayerOptions {
                dropout_rate: self.config.dropout_rate,
                training,
                degree_scaling: self.config.degree_scaling,
                activate: l != last,
                ..LayerOptions::default()
            };
            let vars = ggcn_layer(tape, h, lp, ctx, &opts, rng)?;
            h = vars.out;
            layers.push(vars);
        }
        if let Some(RowShift { site: CorrectionSite::Output, rows }) = shift {
            h = shift_rows(tape, h, rows)?;
        }
        Ok(ForwardOutput { logits: h, layers })
    }

    /// Forward pass without dropout, returning the logits matrix.
    pub fn predict_logits(&self, ctx: &GraphContext<T>, shift: Option<RowShift<'_>>) -> Result<Array2<T>> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape);
        // Dropout is inactive, so no randomness is drawn.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let out = self.forward(&mut tape, &bound, ctx, false, shift, &mut rng)?;
        Ok(tape.value(out.logits).clone())
    }
}

/// Row-wise softmax of a logits matrix.
pub fn softmax<T: Scalar>(logits: &Array2<T>) -> Result<Array2<T>> {
    let mut tape = Tape::new();
    let v = tape.constant(logits.clone());
    let p = tape.row_softmax(v)?;
    Ok(tape.value(p).clone())
}

/// Index of the largest entry per row, ties to the lowest index.
pub fn argmax_rows<T: Scalar>(m: &Array2<T>) -> Vec<usize> {
    m.rows()
        .into_iter()
        .map(|r| {
            let mut best = 0;
            for (j, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
