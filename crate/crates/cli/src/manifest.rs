//! JSON manifests written next to split and model files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cause_core::model::{BranchId, HyperParams};
use cause_core::train::{GridPoint, TrainSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::files::{read_text, write_text, SPLIT_FORMAT};
use crate::model_file::MAGIC;

pub const MANIFEST_FORMAT: u32 = 1;
pub const METRICS_FORMAT: &str = "cause-metrics-csv 1";
pub const INIT_SCHEME: &str =
    "control embeddings uniform(-1/sqrt(d), 1/sqrt(d)), biases 0, alpha 1; treatment branch copies control, pooled item rows start at the control mean";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormatVersions {
    pub manifest: u32,
    pub split: String,
    pub model: String,
    pub metrics: String,
    pub tool: String,
}

impl FormatVersions {
    pub fn current() -> Self {
        Self {
            manifest: MANIFEST_FORMAT,
            split: SPLIT_FORMAT.into(),
            model: MAGIC.into(),
            metrics: METRICS_FORMAT.into(),
            tool: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub total: usize,
    pub users: usize,
    pub items: usize,
    pub train_control: usize,
    pub train_treatment: usize,
    pub validation: usize,
    pub test: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub formats: FormatVersions,
    pub seed: u64,
    pub rng: String,
    pub protocol: String,
    pub fractions: BTreeMap<String, f64>,
    pub move_cap: f64,
    pub propensity_cap: f64,
    pub pool_scaling: String,
    pub sizes: SplitSizes,
    pub achieved_fractions: BTreeMap<String, f64>,
    pub config: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperRecord {
    pub dim: usize,
    pub lr0: f64,
    pub lr_end: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lambda_t: f64,
    pub lambda_c: f64,
    pub lambda_dist: f64,
    pub train_alpha: bool,
    pub seed: u64,
}

impl From<&HyperParams> for HyperRecord {
    fn from(h: &HyperParams) -> Self {
        Self {
            dim: h.dim,
            lr0: h.lr0,
            lr_end: h.lr_end,
            momentum: h.momentum,
            epochs: h.epochs,
            batch_size: h.batch_size,
            lambda_t: h.lambda_t,
            lambda_c: h.lambda_c,
            lambda_dist: h.lambda_dist,
            train_alpha: h.train_alpha,
            seed: h.seed,
        }
    }
}

impl From<&HyperRecord> for HyperParams {
    fn from(h: &HyperRecord) -> Self {
        Self {
            dim: h.dim,
            lr0: h.lr0,
            lr_end: h.lr_end,
            momentum: h.momentum,
            epochs: h.epochs,
            batch_size: h.batch_size,
            lambda_t: h.lambda_t,
            lambda_c: h.lambda_c,
            lambda_dist: h.lambda_dist,
            train_alpha: h.train_alpha,
            seed: h.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub value: f64,
    pub validation_nll: f64,
}

impl From<&GridPoint> for GridRecord {
    fn from(g: &GridPoint) -> Self {
        Self {
            value: g.value,
            validation_nll: g.validation_nll,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub parameter: String,
    pub chosen: f64,
    pub grid: Vec<GridRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub formats: FormatVersions,
    pub tag: String,
    pub method: String,
    pub adaptation: String,
    pub predict_branch: String,
    pub seed: u64,
    pub hyper: HyperRecord,
    pub share_users: bool,
    pub banditnet_lambda: f64,
    pub ratio_cap: f64,
    pub tuning: Option<Tuning>,
    pub epoch_losses: Vec<f64>,
    pub validation_nll: f64,
    pub rng: String,
    pub init: String,
    pub model_file: String,
    pub config: BTreeMap<String, String>,
}

impl RunManifest {
    /// Rebuilds the training spec, including the prediction rule.
    pub fn spec(&self) -> Result<TrainSpec, CliError> {
        let mut spec = TrainSpec::from_tag(&self.tag)
            .ok_or_else(|| CliError::runtime(format!("manifest names unknown method `{}`", self.tag)))?;
        spec.hyper = HyperParams::from(&self.hyper);
        spec.share_users = self.share_users;
        spec.banditnet_lambda = self.banditnet_lambda;
        spec.ratio_cap = self.ratio_cap;
        Ok(spec)
    }
}

pub fn branch_name(b: BranchId) -> &'static str {
    match b {
        BranchId::Control => "control",
        BranchId::Treatment => "treatment",
    }
}

/// Run manifest path for a model file: `<model>.json`.
pub fn manifest_path(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::runtime(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}
