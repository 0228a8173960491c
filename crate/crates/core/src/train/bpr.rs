//! Pairwise ranking on (user, positive, sampled negative) triples.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{Adaptation, TrainError, TrainOutput, TrainSpec};
use crate::data::{Interaction, SplitBundle};
use crate::loss::l2;
use crate::model::{dot, sigmoid, BranchId, EmbeddingModel, Layout};
use crate::optim::{lr_at, Momentum};
use crate::rng;

/// `-ln sigmoid(x)` without overflow.
fn softplus_neg(x: f64) -> f64 {
    if x > 0.0 {
        libm::log1p(libm::exp(-x))
    } else {
        -x + libm::log1p(libm::exp(x))
    }
}

/// `-ln sigmoid(<gamma_u, theta_pos> - <gamma_u, theta_neg>)` on the control
/// branch.
pub fn bpr_triple_loss(model: &EmbeddingModel, user: usize, pos: usize, neg: usize) -> f64 {
    let x = model.dot(BranchId::Control, user, pos) - model.dot(BranchId::Control, user, neg);
    softplus_neg(x)
}

#[derive(Clone, Copy)]
struct Triple {
    user: usize,
    pos: usize,
    neg: usize,
}

fn sample_negative(positives: &[u32], n_items: usize, rng: &mut rng::Rng) -> Option<usize> {
    if positives.len() >= n_items {
        return None;
    }
    loop {
        let j = rng.gen_range(0..n_items);
        if positives.binary_search(&(j as u32)).is_err() {
            return Some(j);
        }
    }
}

pub fn train_bpr(bundle: &SplitBundle, spec: &TrainSpec) -> Result<TrainOutput, TrainError> {
    let events: Vec<Interaction> = match spec.adaptation {
        Adaptation::No => bundle.train_control.clone(),
        Adaptation::Blend => bundle
            .train_control
            .iter()
            .chain(&bundle.train_treatment)
            .copied()
            .collect(),
        _ => return Err(TrainError::InvalidSpec("BPR supports no and blend adaptation")),
    };
    let mut positives: Vec<(usize, usize)> = events
        .iter()
        .filter(|e| e.label)
        .map(|e| (e.user(), e.item()))
        .collect();
    if positives.is_empty() {
        return Err(TrainError::NoPositives);
    }
    let mut by_user: Vec<Vec<u32>> = vec![Vec::new(); bundle.n_users];
    for &(u, i) in &positives {
        by_user[u].push(i as u32);
    }
    for items in &mut by_user {
        items.sort_unstable();
        items.dedup();
    }

    let hp = &spec.hyper;
    let d = hp.dim;
    let mut model = EmbeddingModel::init(bundle.n_users, bundle.n_items, d, Layout::default(), hp.seed);
    let mut grad = model.zeros_like();
    let mut opt = Momentum::new(&model, hp.momentum);
    let mut rng_order = rng::stream(hp.seed, "shuffle-control");
    let mut rng_neg = rng::stream(hp.seed, "negative-sampling");

    let steps_per_epoch = positives.len().div_ceil(hp.batch_size);
    let total_steps = hp.epochs * steps_per_epoch;
    let mut epoch_losses = Vec::with_capacity(hp.epochs);
    let mut step = 0;
    let mut batch = Vec::with_capacity(hp.batch_size);
    for epoch in 0..hp.epochs {
        positives.shuffle(&mut rng_order);
        let mut loss_sum = 0.0;
        for chunk in positives.chunks(hp.batch_size) {
            batch.clear();
            for &(user, pos) in chunk {
                if let Some(neg) = sample_negative(&by_user[user], bundle.n_items, &mut rng_neg) {
                    batch.push(Triple { user, pos, neg });
                }
            }
            grad.set_zero();
            let mut data_loss = 0.0;
            if !batch.is_empty() {
                let scale = 1.0 / batch.len() as f64;
                let c = &model.control;
                let g = &mut grad.control;
                for t in &batch {
                    let gamma = &c.gamma[t.user * d..(t.user + 1) * d];
                    let tp = &c.theta[t.pos * d..(t.pos + 1) * d];
                    let tn = &c.theta[t.neg * d..(t.neg + 1) * d];
                    let x = dot(gamma, tp) - dot(gamma, tn);
                    data_loss += softplus_neg(x);
                    let dx = -scale * sigmoid(-x);
                    for k in 0..d {
                        g.gamma[t.user * d + k] += dx * (tp[k] - tn[k]);
                        g.theta[t.pos * d + k] += dx * gamma[k];
                        g.theta[t.neg * d + k] -= dx * gamma[k];
                    }
                }
                data_loss *= scale;
            }
            for (gw, w) in g_pairs(&mut grad, &model) {
                *gw += hp.lambda_c * w;
            }
            loss_sum += data_loss + hp.lambda_c * l2(&model.control);
            let lr = lr_at(step, total_steps, hp.lr0, hp.lr_end);
            opt.step(&mut model, &grad, lr);
            step += 1;
        }
        if !model.is_finite() {
            return Err(TrainError::NumericalFailure { epoch });
        }
        epoch_losses.push(loss_sum / steps_per_epoch as f64);
    }
    Ok(TrainOutput { model, epoch_losses })
}

fn g_pairs<'a>(grad: &'a mut EmbeddingModel, model: &'a EmbeddingModel) -> impl Iterator<Item = (&'a mut f64, f64)> {
    let g = &mut grad.control;
    let c = &model.control;
    g.gamma
        .iter_mut()
        .zip(c.gamma.iter().copied())
        .chain(g.theta.iter_mut().zip(c.theta.iter().copied()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_items_cost_ln2() {
        let mut m = EmbeddingModel::init(2, 3, 4, Layout::default(), 1);
        let row = m.control.theta[..4].to_vec();
        m.control.theta[4..8].copy_from_slice(&row);
        assert!((bpr_triple_loss(&m, 1, 0, 1) - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus_neg(0.0) - core::f64::consts::LN_2).abs() < 1e-15);
        assert!((softplus_neg(-800.0) - 800.0).abs() < 1e-9);
        assert!(softplus_neg(800.0) >= 0.0);
    }
}
