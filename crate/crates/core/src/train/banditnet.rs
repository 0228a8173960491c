//! Counterfactual risk minimization with a Lagrangian baseline.
//!
//! The logging policy is the smoothed popularity marginal of the control
//! training events; the importance factor is the uniform-to-popularity ratio
//! capped at `ratio_cap`. Treatment-origin events were logged uniformly and
//! get factor one. The model's click probability stands in for the
//! per-item propensity of the learned policy (no catalog normalization).

use alloc::vec::Vec;

use super::engine::{run_pointwise, Streams};
use super::{single_task, Adaptation, TrainError, TrainOutput, TrainSpec};
use crate::data::{Interaction, Origin, PropensityTable, SplitBundle};
use crate::loss::{PointLoss, Sample};
use crate::model::{sigmoid, BranchId, EmbeddingModel, Layout};

pub fn banditnet_samples(events: &[Interaction], propensity: &PropensityTable, ratio_cap: f64) -> Vec<Sample> {
    events
        .iter()
        .map(|&event| Sample {
            event,
            weight: match event.origin {
                Origin::Control => propensity.capped_ratio(event.item(), ratio_cap),
                Origin::Treatment => 1.0,
            },
        })
        .collect()
}

/// `mean (1 - y) * w * s(u, j)`: the counterfactual objective without the
/// Lagrangian term, written out directly.
pub fn capped_weighted_loss(model: &EmbeddingModel, samples: &[Sample]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let total: f64 = samples
        .iter()
        .map(|s| {
            let loss = if s.event.label { 0.0 } else { 1.0 };
            loss * s.weight * sigmoid(model.logit(BranchId::Control, s.event.user(), s.event.item()))
        })
        .sum();
    total / samples.len() as f64
}

pub fn train_banditnet(bundle: &SplitBundle, spec: &TrainSpec) -> Result<TrainOutput, TrainError> {
    if spec.adaptation != Adaptation::Blend {
        return Err(TrainError::InvalidSpec("BanditNet is trained on the blended sample"));
    }
    let events: Vec<Interaction> = bundle
        .train_control
        .iter()
        .chain(&bundle.train_treatment)
        .copied()
        .collect();
    if events.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let streams = Streams {
        control: banditnet_samples(&events, &bundle.propensity, spec.ratio_cap),
        treatment: Vec::new(),
    };
    let kind = PointLoss::BanditNet {
        lambda: spec.banditnet_lambda,
    };
    run_pointwise(
        streams,
        bundle.n_users,
        bundle.n_items,
        Layout::default(),
        &single_task(&spec.hyper),
        kind,
    )
}
