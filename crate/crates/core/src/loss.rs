//! Losses and exact gradients of the joint control/treatment objective.
//!
//! For a control batch `Bc` and treatment batch `Bt` the objective is
//!
//! ```text
//! mean_{Bc} w * l(control) + lambda_c/2 * (|Gamma_c|^2 + |Theta_c|^2)
//!   + mean_{Bt} w * l(treatment) + lambda_t/2 * (|Gamma_t|^2 + |Theta_t|^2)
//!   + lambda_dist * |P_t - P_c|_1
//! ```
//!
//! where a task's terms are dropped when its batch is empty and `P` collects
//! every embedding and bias of a branch (biases are the constant coordinate
//! of the representation). `alpha` is never coupled. Tied parameters (see
//! [`Layout`]) receive the sum of the partials of their copies.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::Interaction;
use crate::model::{sigmoid, Branch, BranchId, EmbeddingModel, HyperParams, Layout};

pub const PROB_CLIP: f64 = 1e-12;

/// Cross-entropy of a probability against a binary target, with the
/// probability clipped to `[1e-12, 1 - 1e-12]`.
pub fn xent(p: f64, y: f64) -> f64 {
    let p = p.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
    -(y * libm::log(p) + (1.0 - y) * libm::log(1.0 - p))
}

/// An event with the multiplier applied to its loss term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub event: Interaction,
    pub weight: f64,
}

impl Sample {
    pub fn unit(event: Interaction) -> Self {
        Self { event, weight: 1.0 }
    }
}

pub fn unit_samples(events: &[Interaction]) -> Vec<Sample> {
    events.iter().copied().map(Sample::unit).collect()
}

/// Per-event loss as a function of the logit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PointLoss {
    /// Cross-entropy of `sigmoid(z)` against the label.
    Xent,
    /// `(delta - lambda) * sigmoid(z)` with `delta = 1 - label`: the
    /// self-normalizing counterfactual objective with the model's probability
    /// standing in for the policy propensity.
    BanditNet { lambda: f64 },
}

impl PointLoss {
    #[inline]
    pub fn value(self, z: f64, y: f64) -> f64 {
        match self {
            PointLoss::Xent => xent(sigmoid(z), y),
            PointLoss::BanditNet { lambda } => (1.0 - y - lambda) * sigmoid(z),
        }
    }

    /// Derivative with respect to the logit.
    #[inline]
    pub fn dz(self, z: f64, y: f64) -> f64 {
        let p = sigmoid(z);
        match self {
            PointLoss::Xent => p - y,
            PointLoss::BanditNet { lambda } => (1.0 - y - lambda) * p * (1.0 - p),
        }
    }
}

/// Mean weighted point loss of a batch on one branch; zero for empty batches.
pub fn task_data_loss(model: &EmbeddingModel, branch: BranchId, batch: &[Sample], kind: PointLoss) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let s: f64 = batch
        .iter()
        .map(|s| {
            let z = model.logit(branch, s.event.user(), s.event.item());
            s.weight * kind.value(z, s.event.y())
        })
        .sum();
    s / batch.len() as f64
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|w| w * w).sum()
}

/// `1/2 (|Gamma|^2 + |Theta|^2)` of a branch.
pub fn l2(b: &Branch) -> f64 {
    0.5 * (sq_norm(&b.gamma) + sq_norm(&b.theta))
}

fn l1_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| libm::fabs(x - y)).sum()
}

/// `|Theta_t - Theta_c|_1` plus item biases.
pub fn item_discrepancy(m: &EmbeddingModel) -> f64 {
    l1_diff(&m.treatment.theta, &m.control.theta) + l1_diff(&m.treatment.item_bias, &m.control.item_bias)
}

/// `|Gamma_t - Gamma_c|_1` plus user and global biases.
pub fn user_discrepancy(m: &EmbeddingModel) -> f64 {
    l1_diff(&m.treatment.gamma, &m.control.gamma)
        + l1_diff(&m.treatment.user_bias, &m.control.user_bias)
        + libm::fabs(m.treatment.global_bias - m.control.global_bias)
}

/// The full objective with an arbitrary point loss.
pub fn objective(
    model: &EmbeddingModel,
    batch_c: &[Sample],
    batch_t: &[Sample],
    hp: &HyperParams,
    kind: PointLoss,
) -> f64 {
    let mut total = 0.0;
    if !batch_c.is_empty() {
        total += task_data_loss(model, BranchId::Control, batch_c, kind) + hp.lambda_c * l2(&model.control);
    }
    if !batch_t.is_empty() {
        total += task_data_loss(model, BranchId::Treatment, batch_t, kind) + hp.lambda_t * l2(&model.treatment);
    }
    if hp.lambda_dist != 0.0 {
        total += hp.lambda_dist * (item_discrepancy(model) + user_discrepancy(model));
    }
    total
}

/// Joint cross-entropy objective.
pub fn cause_loss(model: &EmbeddingModel, batch_c: &[Sample], batch_t: &[Sample], hp: &HyperParams) -> f64 {
    objective(model, batch_c, batch_t, hp, PointLoss::Xent)
}

/// Exact (sub)gradient of [`cause_loss`]. The subgradient of `|x|` at zero is
/// taken as zero.
pub fn cause_grad(model: &EmbeddingModel, batch_c: &[Sample], batch_t: &[Sample], hp: &HyperParams) -> EmbeddingModel {
    let mut g = model.zeros_like();
    smooth_grad_into(model, batch_c, batch_t, hp, PointLoss::Xent, &mut g);
    add_discrepancy_subgrad(model, hp.lambda_dist, &mut g);
    tie_gradient(model.layout, model.d, &mut g);
    g
}

/// Gradient of everything but the discrepancy term, accumulated into `g`
/// (which must be zeroed by the caller) and left untied.
pub fn smooth_grad_into(
    model: &EmbeddingModel,
    batch_c: &[Sample],
    batch_t: &[Sample],
    hp: &HyperParams,
    kind: PointLoss,
    g: &mut EmbeddingModel,
) {
    for (id, batch, lambda) in [
        (BranchId::Control, batch_c, hp.lambda_c),
        (BranchId::Treatment, batch_t, hp.lambda_t),
    ] {
        if batch.is_empty() {
            continue;
        }
        let scale = 1.0 / batch.len() as f64;
        let d = model.d;
        let b = model.branch(id);
        let gb = g.branch_mut(id);
        for s in batch {
            let (u, i) = (s.event.user(), s.event.item());
            let gamma = &b.gamma[u * d..(u + 1) * d];
            let theta = &b.theta[i * d..(i + 1) * d];
            let ip = crate::model::dot(gamma, theta);
            let z = b.alpha * ip + b.user_bias[u] + b.item_bias[i] + b.global_bias;
            let dz = scale * s.weight * kind.dz(z, s.event.y());
            let coef = dz * b.alpha;
            for k in 0..d {
                gb.gamma[u * d + k] += coef * theta[k];
                gb.theta[i * d + k] += coef * gamma[k];
            }
            gb.user_bias[u] += dz;
            gb.item_bias[i] += dz;
            gb.global_bias += dz;
            if hp.train_alpha {
                gb.alpha += dz * ip;
            }
        }
        if lambda != 0.0 {
            for (gw, w) in gb.gamma.iter_mut().zip(&b.gamma) {
                *gw += lambda * w;
            }
            for (gw, w) in gb.theta.iter_mut().zip(&b.theta) {
                *gw += lambda * w;
            }
        }
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn sub_pair(t: &[f64], c: &[f64], gt: &mut [f64], gc: &mut [f64], lambda: f64) {
    for k in 0..t.len() {
        let s = lambda * sign(t[k] - c[k]);
        gt[k] += s;
        gc[k] -= s;
    }
}

pub fn add_discrepancy_subgrad(model: &EmbeddingModel, lambda: f64, g: &mut EmbeddingModel) {
    if lambda == 0.0 {
        return;
    }
    let (t, c) = (&model.treatment, &model.control);
    let EmbeddingModel {
        control: gc,
        treatment: gt,
        ..
    } = g;
    sub_pair(&t.theta, &c.theta, &mut gt.theta, &mut gc.theta, lambda);
    sub_pair(&t.item_bias, &c.item_bias, &mut gt.item_bias, &mut gc.item_bias, lambda);
    sub_pair(&t.gamma, &c.gamma, &mut gt.gamma, &mut gc.gamma, lambda);
    sub_pair(&t.user_bias, &c.user_bias, &mut gt.user_bias, &mut gc.user_bias, lambda);
    sub_pair(
        core::slice::from_ref(&t.global_bias),
        core::slice::from_ref(&c.global_bias),
        core::slice::from_mut(&mut gt.global_bias),
        core::slice::from_mut(&mut gc.global_bias),
        lambda,
    );
}

/// Replaces the partials of tied copies by their sum.
pub fn tie_gradient(layout: Layout, d: usize, g: &mut EmbeddingModel) {
    if layout.shared_users {
        let EmbeddingModel {
            control: gc,
            treatment: gt,
            ..
        } = g;
        for (a, b) in gc.gamma.iter_mut().zip(gt.gamma.iter_mut()) {
            *a += *b;
            *b = *a;
        }
        for (a, b) in gc.user_bias.iter_mut().zip(gt.user_bias.iter_mut()) {
            *a += *b;
            *b = *a;
        }
        gc.global_bias += gt.global_bias;
        gt.global_bias = gc.global_bias;
    }
    if layout.pooled_items {
        let gt = &mut g.treatment;
        let mut row = vec![0.0; d];
        for r in gt.theta.chunks_exact(d) {
            for (a, b) in row.iter_mut().zip(r) {
                *a += b;
            }
        }
        for r in gt.theta.chunks_exact_mut(d) {
            r.copy_from_slice(&row);
        }
        let s: f64 = gt.item_bias.iter().sum();
        gt.item_bias.fill(s);
    }
}
