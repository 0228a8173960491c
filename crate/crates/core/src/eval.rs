//! Metrics over a scored event set: MSE, NLL, AUC and lifts over the
//! constant average-rate predictor.

use alloc::string::String;
use alloc::vec::Vec;

use crate::data::Interaction;
use crate::loss::{xent, PROB_CLIP};
use crate::model::EmbeddingModel;
use crate::train::{predict_for, TrainSpec};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("empty event set")]
    EmptySet,
    #[error("predictions and labels differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("AUC needs both positive and negative labels")]
    SingleClass,
    #[error("lift baseline is zero")]
    ZeroBaseline,
}

fn check(preds: &[f64], labels: &[bool]) -> Result<(), EvalError> {
    if preds.len() != labels.len() {
        return Err(EvalError::LengthMismatch(preds.len(), labels.len()));
    }
    if preds.is_empty() {
        return Err(EvalError::EmptySet);
    }
    Ok(())
}

#[inline]
fn y(label: bool) -> f64 {
    if label {
        1.0
    } else {
        0.0
    }
}

pub fn mse(preds: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    check(preds, labels)?;
    let s: f64 = preds.iter().zip(labels).map(|(&p, &l)| (p - y(l)) * (p - y(l))).sum();
    Ok(s / preds.len() as f64)
}

pub fn nll(preds: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    check(preds, labels)?;
    let s: f64 = preds.iter().zip(labels).map(|(&p, &l)| xent(p, y(l))).sum();
    Ok(s / preds.len() as f64)
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Computed from the rank-sum statistic with average
/// ranks for tied scores.
pub fn auc(preds: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    check(preds, labels)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[a].total_cmp(&preds[b]));

    // ranks are 1-based; doubled so tied averages stay integral
    let mut pos_rank_sum2: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && preds[order[j + 1]] == preds[order[i]] {
            j += 1;
        }
        let avg2 = (i + 1 + j + 1) as u64;
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k]).count() as u64;
        pos_rank_sum2 += avg2 * pos_in_group;
        i = j + 1;
    }
    let n_pos = n_pos as u64;
    let u2 = pos_rank_sum2 - n_pos * (n_pos + 1);
    Ok(u2 as f64 / (2 * n_pos * n_neg as u64) as f64)
}

/// The constant predictor at the empirical positive rate (clipped).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AvgCr {
    pub rate: f64,
    pub mse: f64,
    pub nll: f64,
}

pub fn avg_cr_metrics(labels: &[bool]) -> Result<AvgCr, EvalError> {
    if labels.is_empty() {
        return Err(EvalError::EmptySet);
    }
    let rate = labels.iter().filter(|&&l| l).count() as f64 / labels.len() as f64;
    let p = rate.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
    let preds = alloc::vec![p; labels.len()];
    Ok(AvgCr {
        rate,
        mse: mse(&preds, labels)?,
        nll: nll(&preds, labels)?,
    })
}

/// Relative improvement over the baseline, `(baseline - metric) / baseline`;
/// positive when the metric (a loss) is lower.
pub fn lift(metric: f64, baseline: f64) -> Result<f64, EvalError> {
    if baseline == 0.0 {
        return Err(EvalError::ZeroBaseline);
    }
    Ok((baseline - metric) / baseline)
}

/// `(metric - baseline) / baseline`, negative when the metric is lower.
pub fn raw_lift(metric: f64, baseline: f64) -> Result<f64, EvalError> {
    lift(metric, baseline).map(|l| -l)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub method: String,
    pub adaptation: String,
    pub seed: u64,
    pub n_events: usize,
    pub avg_cr: f64,
    pub mse: f64,
    pub nll: f64,
    pub auc: f64,
    pub mse_lift: f64,
    pub nll_lift: f64,
    pub raw_mse_lift: f64,
    pub raw_nll_lift: f64,
}

impl MetricReport {
    /// Metrics of `preds` against `labels`. Lifts are undefined (NaN) when the
    /// baseline loss is exactly zero.
    pub fn from_predictions(
        method: &str,
        adaptation: &str,
        seed: u64,
        preds: &[f64],
        labels: &[bool],
    ) -> Result<Self, EvalError> {
        let base = avg_cr_metrics(labels)?;
        let mse = mse(preds, labels)?;
        let nll = nll(preds, labels)?;
        let auc = auc(preds, labels)?;
        let or_nan = |r: Result<f64, EvalError>| r.unwrap_or(f64::NAN);
        Ok(Self {
            method: String::from(method),
            adaptation: String::from(adaptation),
            seed,
            n_events: preds.len(),
            avg_cr: base.rate,
            mse,
            nll,
            auc,
            mse_lift: or_nan(lift(mse, base.mse)),
            nll_lift: or_nan(lift(nll, base.nll)),
            raw_mse_lift: or_nan(raw_lift(mse, base.mse)),
            raw_nll_lift: or_nan(raw_lift(nll, base.nll)),
        })
    }
}

pub fn predictions(spec: &TrainSpec, model: &EmbeddingModel, events: &[Interaction]) -> Vec<f64> {
    events
        .iter()
        .map(|e| predict_for(spec, model, e.user(), e.item()))
        .collect()
}

/// Scores every test event with the prediction rule of `spec`.
pub fn evaluate(
    spec: &TrainSpec,
    model: &EmbeddingModel,
    test: &[Interaction],
    seed: u64,
) -> Result<MetricReport, EvalError> {
    let preds = predictions(spec, model, test);
    let labels: Vec<bool> = test.iter().map(|e| e.label).collect();
    MetricReport::from_predictions(spec.method.name(), &spec.adaptation_label(), seed, &preds, &labels)
}

/// Mean cross-entropy on a validation set; infinite when the set is empty.
pub fn validation_nll(spec: &TrainSpec, model: &EmbeddingModel, events: &[Interaction]) -> f64 {
    let preds = predictions(spec, model, events);
    let labels: Vec<bool> = events.iter().map(|e| e.label).collect();
    nll(&preds, &labels).unwrap_or(f64::INFINITY)
}
