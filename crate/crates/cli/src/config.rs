//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cause_core::ingest::RatingsFormat;
use cause_core::model::{BranchId, HyperParams};
use cause_core::split::{Protocol, SplitConfig};
use cause_core::train::{Adaptation, Method, TrainSpec};

use crate::error::CliError;

/// Every accepted key with its default; `None` marks keys without a default.
const KEYS: &[(&str, Option<&str>)] = &[
    ("data.path", None),
    ("data.format", Some("csv")),
    ("work.dir", Some("work")),
    ("seed", Some("0")),
    ("seeds", Some("0,1,2")),
    ("split.protocol", Some("skew")),
    ("split.skew_test_pool", Some("0.30")),
    ("split.test_fraction", Some("0.20")),
    ("split.treatment_train_fraction", Some("0.10")),
    ("split.validation_fraction", Some("0.10")),
    ("split.move_cap", Some("0.9")),
    ("split.propensity_cap", Some("10")),
    ("split.reg_treatment_fraction", Some("0")),
    ("train.method", None),
    ("train.adaptation", None),
    ("train.predict_branch", Some("control")),
    ("train.share_users", Some("true")),
    ("train.dim", Some("32")),
    ("train.lr0", Some("1.0")),
    ("train.lr_end", Some("0.001")),
    ("train.momentum", Some("0.9")),
    ("train.epochs", Some("20")),
    ("train.batch_size", Some("512")),
    ("train.lambda_t", Some("1e-4")),
    ("train.lambda_c", Some("1e-4")),
    ("train.lambda_dist", Some("1e-3")),
    ("train.train_alpha", Some("false")),
    ("train.tune", Some("true")),
    ("train.lambda_dist_grid", Some("1e-4,1e-3,1e-2,1e-1")),
    ("train.banditnet_lambda", Some("0.5")),
    ("train.banditnet_lambda_grid", Some("0,0.25,0.5,0.75,1")),
    ("train.ratio_cap", Some("100")),
    ("train.model", None),
    ("eval.output", None),
    ("sweep.methods", Some("CausE-prod-C,SP2V-blend")),
    ("sweep.fractions", Some("0.02,0.04,0.06,0.08,0.10")),
    ("sweep.output", None),
    ("sim.worlds", Some("3")),
    ("sim.users", Some("4")),
    ("sim.items", Some("4")),
    ("sim.samples", Some("100000")),
    ("sim.beta", Some("2")),
];

#[derive(Clone, Debug, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

impl RunConfig {
    /// Parses a config file body. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}: expected `key = value`, found `{raw}`", n + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| CliError::config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::config(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse(&text)?
            }
            None => Self::default(),
        };
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("--set expects key=value, got `{o}`")))?;
            cfg.set(k.trim(), v.trim()).map_err(CliError::config)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        if !known(key) {
            return Err(format!("unknown config key `{key}`"));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        debug_assert!(known(key), "{key}");
        if let Some(v) = self.values.get(key) {
            return Some(v.as_str());
        }
        KEYS.iter().find(|(k, _)| *k == key).and_then(|(_, d)| *d)
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| CliError::config(format!("missing required key `{key}`")))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        let v = self.require(key)?;
        v.parse()
            .map_err(|_| CliError::config(format!("`{key}`: cannot parse `{v}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        self.parsed(key)
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        self.parsed(key)
    }

    pub fn u64(&self, key: &str) -> Result<u64, CliError> {
        self.parsed(key)
    }

    pub fn bool(&self, key: &str) -> Result<bool, CliError> {
        self.parsed(key)
    }

    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, CliError> {
        let v = self.require(key)?;
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| CliError::config(format!("`{key}`: cannot parse `{s}`")))
            })
            .collect()
    }

    /// Resolved values of every key, defaults included.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        KEYS.iter()
            .filter_map(|(k, _)| self.get(k).map(|v| (k.to_string(), v.to_string())))
            .collect()
    }

    pub fn work_dir(&self) -> PathBuf {
        PathBuf::from(self.get("work.dir").unwrap_or("work"))
    }

    pub fn ratings_format(&self) -> Result<RatingsFormat, CliError> {
        match self.require("data.format")? {
            "csv" => Ok(RatingsFormat::Comma),
            "dat" => Ok(RatingsFormat::DoubleColon),
            other => Err(CliError::config(format!(
                "`data.format` must be csv or dat, got `{other}`"
            ))),
        }
    }

    pub fn split_config(&self) -> Result<SplitConfig, CliError> {
        let protocol = match self.require("split.protocol")? {
            "skew" => Protocol::Skew,
            "reg" => Protocol::Reg,
            other => {
                return Err(CliError::config(format!(
                    "`split.protocol` must be skew or reg, got `{other}`"
                )))
            }
        };
        let cfg = SplitConfig {
            seed: self.u64("seed")?,
            protocol,
            skew_test_pool: self.f64("split.skew_test_pool")?,
            test_fraction: self.f64("split.test_fraction")?,
            treatment_train_fraction: self.f64("split.treatment_train_fraction")?,
            validation_fraction: self.f64("split.validation_fraction")?,
            move_cap: self.f64("split.move_cap")?,
            propensity_cap: self.f64("split.propensity_cap")?,
            reg_treatment_fraction: self.f64("split.reg_treatment_fraction")?,
        };
        cfg.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn hyper(&self) -> Result<HyperParams, CliError> {
        Ok(HyperParams {
            dim: self.usize("train.dim")?,
            lr0: self.f64("train.lr0")?,
            lr_end: self.f64("train.lr_end")?,
            momentum: self.f64("train.momentum")?,
            epochs: self.usize("train.epochs")?,
            batch_size: self.usize("train.batch_size")?,
            lambda_t: self.f64("train.lambda_t")?,
            lambda_c: self.f64("train.lambda_c")?,
            lambda_dist: self.f64("train.lambda_dist")?,
            train_alpha: self.bool("train.train_alpha")?,
            seed: self.u64("seed")?,
        })
    }

    /// The spec named by `train.method` / `train.adaptation` /
    /// `train.predict_branch`.
    pub fn train_spec(&self) -> Result<TrainSpec, CliError> {
        let m = self.require("train.method")?;
        let method = Method::parse(m).ok_or_else(|| CliError::config(format!("unknown method `{m}`")))?;
        let a = self.require("train.adaptation")?;
        let adaptation = Adaptation::parse(a).ok_or_else(|| CliError::config(format!("unknown adaptation `{a}`")))?;
        let mut spec = TrainSpec::new(method, adaptation);
        self.fill_spec(&mut spec)?;
        spec.predict_branch = match self.require("train.predict_branch")?.to_ascii_lowercase().as_str() {
            "control" | "c" => BranchId::Control,
            "treatment" | "t" => BranchId::Treatment,
            other => {
                return Err(CliError::config(format!(
                    "`train.predict_branch` must be control or treatment, got `{other}`"
                )))
            }
        };
        Ok(spec)
    }

    /// Spec from a tag such as `CausE-prod-C`, with the configured
    /// hyperparameters.
    pub fn spec_from_tag(&self, tag: &str) -> Result<TrainSpec, CliError> {
        let mut spec =
            TrainSpec::from_tag(tag).ok_or_else(|| CliError::config(format!("unknown method tag `{tag}`")))?;
        self.fill_spec(&mut spec)?;
        Ok(spec)
    }

    fn fill_spec(&self, spec: &mut TrainSpec) -> Result<(), CliError> {
        spec.hyper = self.hyper()?;
        spec.share_users = self.bool("train.share_users")?;
        spec.banditnet_lambda = self.f64("train.banditnet_lambda")?;
        spec.ratio_cap = self.f64("train.ratio_cap")?;
        spec.validate().map_err(|e| CliError::config(e.to_string()))
    }

    /// Validation grid for the spec's tuned parameter, if tuning applies.
    pub fn tuning_grid(&self, spec: &TrainSpec) -> Result<Option<Vec<f64>>, CliError> {
        if !self.bool("train.tune")? {
            return Ok(None);
        }
        Ok(match spec.method {
            Method::Cause => Some(self.list("train.lambda_dist_grid")?),
            Method::BanditNet => Some(self.list("train.banditnet_lambda_grid")?),
            _ => None,
        })
    }
}
