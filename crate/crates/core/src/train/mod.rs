//! Training procedures: SP2V, WSP2V, BPR, BanditNet and CausE.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::data::SplitBundle;
use crate::model::{BranchId, EmbeddingModel, HyperParams};

mod banditnet;
mod bpr;
mod cause;
mod engine;
mod sp2v;

pub use banditnet::{banditnet_samples, capped_weighted_loss, train_banditnet};
pub use bpr::{bpr_triple_loss, train_bpr};
pub use cause::train_cause;
pub use engine::{run_pointwise, Streams};
pub use sp2v::{train_sp2v, train_wsp2v, weighted_samples};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("treatment sample is empty")]
    EmptyTreatmentSample,
    #[error("no positive events to rank")]
    NoPositives,
    #[error("non-finite parameters after epoch {epoch}")]
    NumericalFailure { epoch: usize },
    #[error("invalid training spec: {0}")]
    InvalidSpec(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Sp2v,
    Wsp2v,
    Bpr,
    BanditNet,
    Cause,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sp2v => "SP2V",
            Method::Wsp2v => "WSP2V",
            Method::Bpr => "BPR",
            Method::BanditNet => "BN",
            Method::Cause => "CausE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sp2v" => Some(Method::Sp2v),
            "wsp2v" => Some(Method::Wsp2v),
            "bpr" => Some(Method::Bpr),
            "bn" | "banditnet" => Some(Method::BanditNet),
            "cause" => Some(Method::Cause),
            _ => None,
        }
    }
}

/// How the uniform-exposure sample enters training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Adaptation {
    /// Control sample only.
    No,
    /// Union of both samples.
    Blend,
    /// Treatment sample only.
    Test,
    /// One pooled treatment product vector (CausE only).
    Avg,
    /// One treatment vector per product (CausE only).
    Prod,
}

impl Adaptation {
    pub fn name(self) -> &'static str {
        match self {
            Adaptation::No => "no",
            Adaptation::Blend => "blend",
            Adaptation::Test => "test",
            Adaptation::Avg => "avg",
            Adaptation::Prod => "prod",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "no" => Some(Adaptation::No),
            "blend" => Some(Adaptation::Blend),
            "test" => Some(Adaptation::Test),
            "avg" => Some(Adaptation::Avg),
            "prod" => Some(Adaptation::Prod),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSpec {
    pub method: Method,
    pub adaptation: Adaptation,
    /// Only read for CausE with product-level adaptation.
    pub predict_branch: BranchId,
    pub hyper: HyperParams,
    pub banditnet_lambda: f64,
    pub ratio_cap: f64,
    /// CausE: alias treatment users to control users.
    pub share_users: bool,
}

impl TrainSpec {
    pub fn new(method: Method, adaptation: Adaptation) -> Self {
        Self {
            method,
            adaptation,
            predict_branch: BranchId::Control,
            hyper: HyperParams::default(),
            banditnet_lambda: 0.5,
            ratio_cap: 100.0,
            share_users: true,
        }
    }

    /// Parses tags such as `SP2V-blend`, `BN-blend`, `CausE-prod-C`.
    pub fn from_tag(tag: &str) -> Option<Self> {
        let mut parts = tag.split('-');
        let method = Method::parse(parts.next()?)?;
        let adaptation = Adaptation::parse(parts.next()?)?;
        let mut spec = Self::new(method, adaptation);
        match (adaptation, parts.next()) {
            (Adaptation::Prod, Some(b)) if b.eq_ignore_ascii_case("c") => spec.predict_branch = BranchId::Control,
            (Adaptation::Prod, Some(b)) if b.eq_ignore_ascii_case("t") => spec.predict_branch = BranchId::Treatment,
            (_, None) => {}
            _ => return None,
        }
        if parts.next().is_some() {
            return None;
        }
        spec.validate().ok()?;
        Some(spec)
    }

    /// Adaptation label as printed in reports, e.g. `prod-C`.
    pub fn adaptation_label(&self) -> String {
        let mut s = String::from(self.adaptation.name());
        if self.adaptation == Adaptation::Prod {
            s.push_str(match self.predict_branch {
                BranchId::Control => "-C",
                BranchId::Treatment => "-T",
            });
        }
        s
    }

    pub fn tag(&self) -> String {
        alloc::format!("{}-{}", self.method.name(), self.adaptation_label())
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        use Adaptation::*;
        let ok = match self.method {
            Method::Sp2v => matches!(self.adaptation, No | Blend | Test),
            Method::Wsp2v | Method::Bpr => matches!(self.adaptation, No | Blend),
            Method::BanditNet => self.adaptation == Blend,
            Method::Cause => matches!(self.adaptation, Avg | Prod),
        };
        if !ok {
            return Err(TrainError::InvalidSpec("adaptation not available for this method"));
        }
        self.hyper.validate().map_err(TrainError::InvalidSpec)?;
        if !(self.ratio_cap > 0.0) {
            return Err(TrainError::InvalidSpec("ratio_cap must be positive"));
        }
        Ok(())
    }

    /// Branch used for scoring.
    pub fn predict_branch(&self) -> BranchId {
        if self.method == Method::Cause && self.adaptation == Adaptation::Prod {
            self.predict_branch
        } else {
            BranchId::Control
        }
    }
}

impl fmt::Display for TrainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

/// A trained model plus the mean training objective of every epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutput {
    pub model: EmbeddingModel,
    pub epoch_losses: Vec<f64>,
}

/// Trains the method named by `spec`.
pub fn train(bundle: &SplitBundle, spec: &TrainSpec) -> Result<TrainOutput, TrainError> {
    spec.validate()?;
    match spec.method {
        Method::Sp2v => train_sp2v(bundle, spec),
        Method::Wsp2v => train_wsp2v(bundle, spec),
        Method::Bpr => train_bpr(bundle, spec),
        Method::BanditNet => train_banditnet(bundle, spec),
        Method::Cause => train_cause(bundle, spec),
    }
}

/// Baselines fit one branch; the treatment copy is never coupled.
fn single_task(hp: &HyperParams) -> HyperParams {
    HyperParams {
        lambda_dist: 0.0,
        ..hp.clone()
    }
}

/// Score of `(user, item)` under the prediction rule of `spec`.
pub fn predict_for(spec: &TrainSpec, model: &EmbeddingModel, user: usize, item: usize) -> f64 {
    model.predict(user, item, spec.predict_branch())
}

/// One candidate of a validation grid search.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub value: f64,
    pub validation_nll: f64,
}

/// Trains one model per grid value and keeps the one with the lowest
/// validation NLL. Ties keep the earlier value.
pub fn tune(
    bundle: &SplitBundle,
    spec: &TrainSpec,
    grid: &[f64],
    set: fn(&mut TrainSpec, f64),
) -> Result<(TrainSpec, TrainOutput, Vec<GridPoint>), TrainError> {
    if grid.is_empty() {
        return Err(TrainError::InvalidSpec("empty grid"));
    }
    let mut best: Option<(TrainSpec, TrainOutput, f64)> = None;
    let mut points = Vec::with_capacity(grid.len());
    for &value in grid {
        let mut candidate = spec.clone();
        set(&mut candidate, value);
        let out = train(bundle, &candidate)?;
        let nll = crate::eval::validation_nll(&candidate, &out.model, &bundle.validation);
        points.push(GridPoint {
            value,
            validation_nll: nll,
        });
        if best.as_ref().is_none_or(|(_, _, b)| nll < *b) {
            best = Some((candidate, out, nll));
        }
    }
    let (spec, out, _) = best.expect("non-empty grid");
    Ok((spec, out, points))
}

pub fn set_lambda_dist(spec: &mut TrainSpec, v: f64) {
    spec.hyper.lambda_dist = v;
}

pub fn set_banditnet_lambda(spec: &mut TrainSpec, v: f64) {
    spec.banditnet_lambda = v;
}
