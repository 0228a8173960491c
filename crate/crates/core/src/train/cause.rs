//! Joint factorization of the control and treatment samples.

use super::engine::{run_pointwise, Streams};
use super::{Adaptation, TrainError, TrainOutput, TrainSpec};
use crate::data::SplitBundle;
use crate::loss::{unit_samples, PointLoss};
use crate::model::Layout;

/// Control events fit the control branch, treatment events the treatment
/// branch, and the discrepancy term ties the two. `Avg` pools every
/// treatment product into one vector; `Prod` keeps one per product.
pub fn train_cause(bundle: &SplitBundle, spec: &TrainSpec) -> Result<TrainOutput, TrainError> {
    let pooled_items = match spec.adaptation {
        Adaptation::Avg => true,
        Adaptation::Prod => false,
        _ => return Err(TrainError::InvalidSpec("CausE needs avg or prod adaptation")),
    };
    if bundle.train_treatment.is_empty() {
        return Err(TrainError::EmptyTreatmentSample);
    }
    if bundle.train_control.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let layout = Layout {
        shared_users: spec.share_users,
        pooled_items,
    };
    let streams = Streams {
        control: unit_samples(&bundle.train_control),
        treatment: unit_samples(&bundle.train_treatment),
    };
    run_pointwise(
        streams,
        bundle.n_users,
        bundle.n_items,
        layout,
        &spec.hyper,
        PointLoss::Xent,
    )
}
