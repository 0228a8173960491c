//! Minibatch loop shared by the pointwise trainers.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{TrainError, TrainOutput};
use crate::loss::{objective, smooth_grad_into, tie_gradient, PointLoss, Sample};
use crate::model::{EmbeddingModel, HyperParams, Layout};
use crate::optim::{lr_at, prox_discrepancy, Momentum};
use crate::rng;

/// Samples routed to the control and treatment branches.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Streams {
    pub control: Vec<Sample>,
    pub treatment: Vec<Sample>,
}

/// Runs SGD with momentum over mixed minibatches.
///
/// Every epoch reshuffles both streams. The control stream is cut into
/// `batch_size` batches; the treatment stream is cut into as many batches,
/// so both samples are consumed proportionally to their sizes. Each step
/// takes the gradient of the smooth part of the objective, applies the
/// momentum update and then the proximal map of the discrepancy term.
pub fn run_pointwise(
    streams: Streams,
    n_users: usize,
    n_items: usize,
    layout: Layout,
    hp: &HyperParams,
    kind: PointLoss,
) -> Result<TrainOutput, TrainError> {
    let Streams {
        mut control,
        mut treatment,
    } = streams;
    if control.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let mut model = EmbeddingModel::init(n_users, n_items, hp.dim, layout, hp.seed);
    let mut grad = model.zeros_like();
    let mut opt = Momentum::new(&model, hp.momentum);

    let steps_per_epoch = control.len().div_ceil(hp.batch_size);
    let total_steps = hp.epochs * steps_per_epoch;
    let mut rng_c = rng::stream(hp.seed, "shuffle-control");
    let mut rng_t = rng::stream(hp.seed, "shuffle-treatment");

    let mut epoch_losses = Vec::with_capacity(hp.epochs);
    let mut step = 0;
    for epoch in 0..hp.epochs {
        control.shuffle(&mut rng_c);
        treatment.shuffle(&mut rng_t);
        let mut loss_sum = 0.0;
        for k in 0..steps_per_epoch {
            let bc = &control[k * hp.batch_size..((k + 1) * hp.batch_size).min(control.len())];
            let bt = &treatment[k * treatment.len() / steps_per_epoch..(k + 1) * treatment.len() / steps_per_epoch];

            loss_sum += objective(&model, bc, bt, hp, kind);
            grad.set_zero();
            smooth_grad_into(&model, bc, bt, hp, kind, &mut grad);
            tie_gradient(layout, model.d, &mut grad);

            let lr = lr_at(step, total_steps, hp.lr0, hp.lr_end);
            opt.step(&mut model, &grad, lr);
            prox_discrepancy(&mut model, lr * hp.lambda_dist);
            step += 1;
        }
        if !model.is_finite() {
            return Err(TrainError::NumericalFailure { epoch });
        }
        epoch_losses.push(loss_sum / steps_per_epoch as f64);
    }
    Ok(TrainOutput { model, epoch_losses })
}
