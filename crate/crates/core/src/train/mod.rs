//! Training loop, evaluation, multi-run benchmarks and results emission.

mod bench;
mod config;

pub use bench::{
    benchmark, mean_std, save_report, write_csv, write_markdown, BenchmarkReport, BenchmarkSource, CsvRow, Skipped,
    Summary,
};
pub use config::{parse_config_text, Precision, SelectionMetric, TrainConfig};

use std::time::Instant;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{AdamConfig, AdamState, ParamSet, Tape};
use crate::control::{select_nodes, should_run, DiagnosticLog, TeControlConfig, TeController, TeCorrection};
use crate::error::{Error, Result};
use crate::graph::{labels_with_predictions, node_heterophily, Graph, LabelSource, Masks};
use crate::model::{argmax_rows, Ggcn, GraphContext, ModelConfig, RowShift};
use crate::scalar::Scalar;

/// Fraction of masked nodes whose arg-max logit (ties to the lowest class)
/// equals the label.
pub fn evaluate<T: Scalar>(logits: &Array2<T>, labels: &[usize], mask: &[bool]) -> Result<f64> {
    let rows = Masks::indices(mask);
    if rows.is_empty() {
        return Err(Error::EmptyMask);
    }
    if labels.len() != logits.nrows() || mask.len() != logits.nrows() {
        return Err(Error::Shape {
            op: "evaluate",
            lhs: logits.dim(),
            rhs: (labels.len(), mask.len()),
        });
    }
    let preds = argmax_rows(logits);
    let correct = rows.iter().filter(|&&i| preds[i] == labels[i]).count();
    Ok(correct as f64 / rows.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub dataset: String,
    pub split_index: usize,
    pub seed: u64,
    pub te_enabled: bool,
    pub best_val_epoch: usize,
    pub best_val_loss: f64,
    pub val_accuracy: f64,
    /// Measured at the best-validation checkpoint.
    pub test_accuracy: f64,
    /// Seconds spent in scheduled selection and estimation.
    pub te_wall_time: f64,
    pub total_wall_time: f64,
    /// Neighbour-pair evaluations requested over all scheduled epochs.
    pub te_invocation_count: usize,
    /// Pairs actually sent to the estimator (the rest were memoised).
    pub estimator_evaluations: usize,
    pub optimizer_steps: u64,
    pub config_fingerprint: String,
    pub history: Vec<EpochRecord>,
}

impl RunResult {
    pub fn labelled(mut self, dataset: impl Into<String>, split_index: usize) -> Self {
        self.dataset = dataset.into();
        self.split_index = split_index;
        self
    }
}

/// Everything a run produces besides its metrics.
#[derive(Debug)]
pub struct RunArtifacts<T> {
    pub result: RunResult,
    /// Parameters at the selected checkpoint.
    pub best_params: ParamSet<T>,
    /// Correction in force at the selected checkpoint.
    pub best_correction: TeCorrection,
    pub log: DiagnosticLog,
}

fn param_diagnostics<T: Scalar>(params: &ParamSet<T>) -> String {
    params
        .params
        .iter()
        .map(|p| {
            let norm = p.value.iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>().sqrt();
            format!("{}: |·|={norm:.3e}", p.name)
        })
        .collect::<Vec<_>>()
        .join(", ")
}

struct Evaluation {
    val_loss: f64,
    val_accuracy: f64,
    test_accuracy: f64,
}

fn eval_pass<T: Scalar>(
    model: &Ggcn<T>,
    ctx: &GraphContext<T>,
    g: &Graph<T>,
    shift: Option<RowShift<'_>>,
) -> Result<Evaluation> {
    let logits = model.predict_logits(ctx, shift)?;
    let mut tape = Tape::new();
    let l = tape.constant(logits.clone());
    let loss = tape.cross_entropy_masked(l, ctx.labels.clone(), ctx.val_rows.clone())?;
    let m = g.masks();
    Ok(Evaluation {
        val_loss: tape.value(loss)[[0, 0]].as_f64(),
        val_accuracy: evaluate(&logits, g.labels(), &m.val)?,
        test_accuracy: evaluate(&logits, g.labels(), &m.test)?,
    })
}

/// Trains on `g` with its masks; see [`train_with_log`].
pub fn train<T: Scalar>(g: &Graph<T>, cfg: &TrainConfig) -> Result<RunResult> {
    Ok(train_with_log(g, cfg, DiagnosticLog::in_memory())?.result)
}

/// Full-batch training with periodic transfer-entropy corrections.
///
/// Each epoch: (scheduled) heterophily, selection and per-node TE; forward
/// with the correction in force; masked cross-entropy on the training rows;
/// backward; one optimizer step; evaluation without dropout. The reported
/// test accuracy is the one at the best validation checkpoint, and training
/// stops after `patience` epochs without improvement.
pub fn train_with_log<T: Scalar>(g: &Graph<T>, cfg: &TrainConfig, mut log: DiagnosticLog) -> Result<RunArtifacts<T>> {
    let start = Instant::now();
    cfg.validate()?;
    let masks = g.masks();
    if Masks::indices(&masks.train).is_empty() {
        return Err(Error::EmptyMask);
    }
    if cfg.te.enabled && g.num_features() < cfg.te.min_series_len() {
        return Err(Error::Config(format!(
            "TE control treats feature vectors as series and needs at least {} features, the graph has {}",
            cfg.te.min_series_len(),
            g.num_features()
        )));
    }
    let ctx = GraphContext::new(g);
    let model_cfg = ModelConfig {
        classes: g.num_classes(),
        ..cfg.model
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Ggcn::<T>::new(g.num_features(), model_cfg, &mut rng)?;
    let mut adam = AdamState::new(
        &model.params,
        AdamConfig {
            learning_rate: cfg.learning_rate,
            weight_decay: cfg.weight_decay,
            ..AdamConfig::default()
        },
    );
    let te: &TeControlConfig = &cfg.te;
    let mut controller = TeController::new();
    let mut correction = TeCorrection::default();
    let mut te_wall = 0.0;

    let mut best: Option<(usize, f64, f64, Evaluation)> = None;
    let mut best_params = model.params.clone();
    let mut best_correction = TeCorrection::default();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        if should_run(epoch, te) {
            let t0 = Instant::now();
            let labels: Vec<Option<usize>> = match te.label_source {
                LabelSource::FullLabels => g.labels().iter().map(|&l| Some(l)).collect(),
                LabelSource::TrainPlusPredictions => {
                    let logits = model.predict_logits(&ctx, shift_of(te, &correction))?;
                    labels_with_predictions(g, &argmax_rows(&logits))
                }
            };
            let het = node_heterophily(g, &labels, te.label_source)?;
            let selection = select_nodes(&het, g.degrees(), te, epoch);
            let step = controller.compute(g, selection, te)?;
            correction = step.correction.clone();
            te_wall += t0.elapsed().as_secs_f64();
            log.record(&step)?;
        }
        let shift = if te.enabled { shift_of(te, &correction) } else { None };

        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let out = model.forward(&mut tape, &bound, &ctx, true, shift, &mut rng)?;
        let loss = tape.cross_entropy_masked(out.logits, ctx.labels.clone(), ctx.train_rows.clone())?;
        let train_loss = tape.value(loss)[[0, 0]].as_f64();
        if !train_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                diagnostics: param_diagnostics(&model.params),
            });
        }
        let grads = tape.backward(loss)?;
        let grads: Vec<Array2<T>> = bound.all.iter().map(|&v| grads.get_or_zero(v)).collect();
        adam.step(&mut model.params, &grads)?;

        let ev = eval_pass(&model, &ctx, g, shift)?;
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss: ev.val_loss,
            val_accuracy: ev.val_accuracy,
        });
        let improved = match &best {
            None => true,
            Some((_, loss, acc, _)) => match cfg.selection_metric {
                SelectionMetric::ValLoss => ev.val_loss < *loss,
                SelectionMetric::ValAccuracy => ev.val_accuracy > *acc,
            },
        };
        if improved {
            best_params = model.params.clone();
            best_correction = correction.clone();
            best = Some((epoch, ev.val_loss, ev.val_accuracy, ev));
        } else if let Some((best_epoch, ..)) = best {
            if epoch - best_epoch >= cfg.patience {
                log::debug!("early stop at epoch {epoch} (best {best_epoch})");
                break;
            }
        }
    }

    let (best_epoch, best_loss, _, best_eval) = best.expect("epochs ≥ 1");
    let result = RunResult {
        dataset: String::new(),
        split_index: 0,
        seed: cfg.seed,
        te_enabled: te.enabled,
        best_val_epoch: best_epoch,
        best_val_loss: best_loss,
        val_accuracy: best_eval.val_accuracy,
        test_accuracy: best_eval.test_accuracy,
        te_wall_time: te_wall,
        total_wall_time: start.elapsed().as_secs_f64(),
        te_invocation_count: controller.pair_requests,
        estimator_evaluations: controller.estimator_evaluations,
        optimizer_steps: adam.steps(),
        config_fingerprint: cfg.fingerprint(),
        history,
    };
    Ok(RunArtifacts {
        result,
        best_params,
        best_correction,
        log,
    })
}

fn shift_of<'a>(te: &TeControlConfig, c: &'a TeCorrection) -> Option<RowShift<'a>> {
    Some(RowShift {
        site: te.site,
        rows: &c.per_node_te,
    })
}
