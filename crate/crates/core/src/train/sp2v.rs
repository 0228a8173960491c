//! Supervised factorization with logged negatives, optionally propensity
//! weighted.

use alloc::vec::Vec;

use super::engine::{run_pointwise, Streams};
use super::{single_task, Adaptation, TrainError, TrainOutput, TrainSpec};
use crate::data::{Interaction, Origin, SplitBundle};
use crate::loss::{unit_samples, PointLoss, Sample};
use crate::model::Layout;

fn training_events(bundle: &SplitBundle, adaptation: Adaptation) -> Result<Vec<Interaction>, TrainError> {
    let events: Vec<Interaction> = match adaptation {
        Adaptation::No => bundle.train_control.clone(),
        Adaptation::Blend => bundle
            .train_control
            .iter()
            .chain(&bundle.train_treatment)
            .copied()
            .collect(),
        Adaptation::Test => bundle.train_treatment.clone(),
        Adaptation::Avg | Adaptation::Prod => {
            return Err(TrainError::InvalidSpec("adaptation not available for this method"))
        }
    };
    if events.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    Ok(events)
}

/// Control-origin events carry their item's propensity weight, treatment-origin
/// events weight one.
pub fn weighted_samples(events: &[Interaction], weight: &[f64]) -> Vec<Sample> {
    events
        .iter()
        .map(|&event| Sample {
            event,
            weight: match event.origin {
                Origin::Control => weight[event.item()],
                Origin::Treatment => 1.0,
            },
        })
        .collect()
}

pub fn train_sp2v(bundle: &SplitBundle, spec: &TrainSpec) -> Result<TrainOutput, TrainError> {
    let events = training_events(bundle, spec.adaptation)?;
    let streams = Streams {
        control: unit_samples(&events),
        treatment: Vec::new(),
    };
    run_pointwise(
        streams,
        bundle.n_users,
        bundle.n_items,
        Layout::default(),
        &single_task(&spec.hyper),
        PointLoss::Xent,
    )
}

pub fn train_wsp2v(bundle: &SplitBundle, spec: &TrainSpec) -> Result<TrainOutput, TrainError> {
    if spec.adaptation == Adaptation::Test {
        return Err(TrainError::InvalidSpec("WSP2V needs control events"));
    }
    let events = training_events(bundle, spec.adaptation)?;
    let streams = Streams {
        control: weighted_samples(&events, &bundle.propensity.weight),
        treatment: Vec::new(),
    };
    run_pointwise(
        streams,
        bundle.n_users,
        bundle.n_items,
        Layout::default(),
        &single_task(&spec.hyper),
        PointLoss::Xent,
    )
}
