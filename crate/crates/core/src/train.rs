//! Maximum-likelihood training with Adam, one document per step.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::{debug, info};
use ndarray::{ArrayBase, DataMut, Dimension, Zip};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, LabelSet, Segmentation};
use crate::error::{Error, Result};
use crate::metrics::{EvalOptions, Evaluator, MetricsReport};
use crate::semicrf::{build_lattice, nll_and_gradient, training_target, viterbi, Gradients, ModelParams};
use crate::spanrep::{ContextConfig, SpanFeatureVariant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub lmax: usize,
    /// Decoupled L2 decay applied to span weights and transitions.
    pub weight_decay: f64,
    /// Stop after this many epochs without a validation improvement.
    pub patience: Option<usize>,
    pub variant: SpanFeatureVariant,
    pub context_radius: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-5,
            epochs: 20,
            seed: 0,
            lmax: 30,
            weight_decay: 0.0,
            patience: None,
            variant: SpanFeatureVariant::OursNoBiLSTM,
            context_radius: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad("weight_decay must be finite and non-negative");
        }
        if self.lmax == 0 {
            return bad("lmax must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad("Adam epsilon must be positive");
        }
        if self.patience == Some(0) {
            return bad("patience must be positive when set");
        }
        Ok(())
    }

    pub fn context(&self) -> ContextConfig {
        ContextConfig::new(self.context_radius)
    }
}

/// First and second moment estimates for every parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first: Gradients,
    pub second: Gradients,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        AdamState {
            first: Gradients::zeros_like(params),
            second: Gradients::zeros_like(params),
            step: 0,
        }
    }
}

fn adam_block<S1, S2, S3, D>(
    param: &mut ArrayBase<S1, D>,
    grad: &ArrayBase<impl ndarray::Data<Elem = f64>, D>,
    first: &mut ArrayBase<S2, D>,
    second: &mut ArrayBase<S3, D>,
    cfg: &TrainConfig,
    step: u64,
    decay: bool,
) where
    S1: DataMut<Elem = f64>,
    S2: DataMut<Elem = f64>,
    S3: DataMut<Elem = f64>,
    D: Dimension,
{
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let correction1 = 1.0 - b1.powi(step as i32);
    let correction2 = 1.0 - b2.powi(step as i32);
    let lr = cfg.learning_rate;
    let wd = if decay { cfg.weight_decay } else { 0.0 };
    Zip::from(param)
        .and(grad)
        .and(first)
        .and(second)
        .for_each(|p, &g, m, v| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *p -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon) + lr * wd * *p;
        });
}

/// One bias-corrected Adam update. Non-finite gradients abort before any parameter changes.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    let blocks: [(&'static str, bool); 4] = [
        ("W", grads.weights.iter().all(|g| g.is_finite())),
        ("b", grads.bias.iter().all(|g| g.is_finite())),
        ("A", grads.transitions.iter().all(|g| g.is_finite())),
        ("start", grads.start.iter().all(|g| g.is_finite())),
    ];
    if let Some((name, _)) = blocks.iter().find(|(_, ok)| !ok) {
        return Err(Error::NonFiniteGradient(name));
    }
    if grads.weights.dim() != params.weights.dim() {
        return Err(Error::DimensionMismatch {
            context: "weight gradient".into(),
            expected: params.weights.len(),
            found: grads.weights.len(),
        });
    }
    state.step += 1;
    let t = state.step;
    adam_block(
        &mut params.weights,
        &grads.weights,
        &mut state.first.weights,
        &mut state.second.weights,
        cfg,
        t,
        true,
    );
    adam_block(
        &mut params.bias,
        &grads.bias,
        &mut state.first.bias,
        &mut state.second.bias,
        cfg,
        t,
        false,
    );
    adam_block(
        &mut params.transitions,
        &grads.transitions,
        &mut state.first.transitions,
        &mut state.second.transitions,
        cfg,
        t,
        true,
    );
    adam_block(
        &mut params.start,
        &grads.start,
        &mut state.first.start,
        &mut state.second.start,
        cfg,
        t,
        false,
    );
    Ok(())
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_nll: f64,
    pub val_span_micro_f1: f64,
    pub val_sentence_micro_f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation span micro-F1.
    pub params: ModelParams,
    pub log: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
}

pub fn write_log(path: impl AsRef<Path>, log: &[EpochRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for record in log {
        let line = serde_json::to_string(record).expect("record serializes");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn check_docs(docs: &[Document], labels: &LabelSet, dim: usize, need_gold: bool) -> Result<()> {
    for doc in docs {
        doc.validate(labels.len())?;
        let emb = doc.embeddings_or_err()?;
        if emb.ncols() != dim {
            return Err(Error::DimensionMismatch {
                context: format!("embeddings of `{}`", doc.id),
                expected: dim,
                found: emb.ncols(),
            });
        }
        if need_gold && doc.gold_labels.is_none() {
            return Err(Error::MissingGold(doc.id.clone()));
        }
    }
    Ok(())
}

/// Decodes every document with segmental Viterbi. Output order follows input order.
pub fn predict(docs: &[Document], params: &ModelParams) -> Result<Vec<Segmentation>> {
    docs.par_iter()
        .map(|doc| {
            let lat = build_lattice(params, doc.embeddings_or_err()?.view())?;
            Ok(viterbi(&lat))
        })
        .collect()
}

/// Predicts and scores labeled documents against their merged gold spans.
pub fn evaluate(docs: &[Document], params: &ModelParams, options: EvalOptions) -> Result<MetricsReport> {
    let predictions = predict(docs, params)?;
    let mut evaluator = Evaluator::new(params.labels.clone(), options);
    for (doc, pred) in docs.iter().zip(&predictions) {
        evaluator.add(&doc.gold_segmentation()?, pred)?;
    }
    Ok(evaluator.report())
}

/// Trains on `train_docs` and keeps the checkpoint with the best validation span micro-F1.
pub fn train(
    train_docs: &[Document],
    val_docs: &[Document],
    labels: &LabelSet,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_docs.is_empty() || val_docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let dim = train_docs[0].embeddings_or_err()?.ncols();
    check_docs(train_docs, labels, dim, true)?;
    check_docs(val_docs, labels, dim, true)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = ModelParams::init(
        labels.clone(),
        dim,
        cfg.variant,
        cfg.lmax,
        cfg.context(),
        &mut rng,
    );
    let targets = train_docs
        .iter()
        .map(|doc| training_target(doc, cfg.lmax))
        .collect::<Result<Vec<_>>>()?;

    let mut state = AdamState::new(&params);
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train_docs.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total_nll = 0.0;
        for &i in &order {
            let emb = train_docs[i].embeddings_or_err()?;
            let (nll, grads) = nll_and_gradient(&params, emb.view(), &targets[i])?;
            total_nll += nll;
            adam_step(&mut params, &grads, &mut state, cfg)?;
        }
        let report = evaluate(val_docs, &params, EvalOptions::default())?;
        let record = EpochRecord {
            epoch,
            mean_nll: total_nll / train_docs.len() as f64,
            val_span_micro_f1: report.span_micro_f1,
            val_sentence_micro_f1: report.sentence_micro_f1,
        };
        debug!(
            "epoch {epoch}: nll {:.4} val span-F1 {:.4} sentence-F1 {:.4}",
            record.mean_nll, record.val_span_micro_f1, record.val_sentence_micro_f1
        );
        let improved = best
            .as_ref()
            .is_none_or(|(f1, _, _)| record.val_span_micro_f1 > *f1);
        if improved {
            best = Some((record.val_span_micro_f1, epoch, params.clone()));
            since_best = 0;
        } else {
            since_best += 1;
        }
        log.push(record);
        if cfg.patience.is_some_and(|p| since_best >= p) {
            info!("early stop after epoch {epoch}");
            break;
        }
    }

    Ok(match best {
        Some((_, epoch, best_params)) => TrainOutcome {
            params: best_params,
            log,
            best_epoch: Some(epoch),
        },
        None => TrainOutcome {
            params,
            log,
            best_epoch: None,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lmax: usize,
    pub best_epoch: Option<usize>,
    pub val_span_micro_f1: f64,
    pub val_span_seg_f1: f64,
    pub val_sentence_micro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub chosen: usize,
    pub rows: Vec<SweepRow>,
}

/// Trains one model per candidate maximum span length (same seed) and picks the best
/// by validation span micro-F1; ties go to the smaller length.
pub fn select_max_span_length(
    train_docs: &[Document],
    val_docs: &[Document],
    labels: &LabelSet,
    candidates: &[usize],
    cfg: &TrainConfig,
) -> Result<SweepReport> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("no candidate span lengths".into()));
    }
    let mut rows = Vec::with_capacity(candidates.len());
    for &lmax in candidates {
        let cfg = TrainConfig { lmax, ..cfg.clone() };
        let outcome = train(train_docs, val_docs, labels, &cfg)?;
        let report = evaluate(val_docs, &outcome.params, EvalOptions::default())?;
        info!("lmax {lmax}: val span micro-F1 {:.4}", report.span_micro_f1);
        rows.push(SweepRow {
            lmax,
            best_epoch: outcome.best_epoch,
            val_span_micro_f1: report.span_micro_f1,
            val_span_seg_f1: report.span_seg_f1,
            val_sentence_micro_f1: report.sentence_micro_f1,
        });
    }
    let chosen = rows
        .iter()
        .max_by(|x, y| {
            x.val_span_micro_f1
                .total_cmp(&y.val_span_micro_f1)
                .then(y.lmax.cmp(&x.lmax))
        })
        .expect("non-empty")
        .lmax;
    Ok(SweepReport { chosen, rows })
}
