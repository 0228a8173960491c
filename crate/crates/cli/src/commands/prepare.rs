use std::collections::BTreeMap;

use cause_core::data::{Dataset, SplitBundle};
use cause_core::ingest::{build_dataset, parse_ratings, IngestError};
use cause_core::rng;
use cause_core::split::{split, Protocol, SplitConfig};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::files::{read_text, SplitDir, SPLIT_MANIFEST};
use crate::manifest::{write_json, FormatVersions, SplitManifest, SplitSizes};

/// Reads and binarizes the ratings file named by `data.path`.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let path = std::path::PathBuf::from(cfg.require("data.path")?);
    let format = cfg.ratings_format()?;
    let text = read_text(&path)?;
    let raw = parse_ratings(&text, format).map_err(|e| match e {
        IngestError::MalformedLine(n) => CliError::runtime(format!("{}: malformed ratings line {n}", path.display())),
        other => CliError::runtime(format!("{}: {other}", path.display())),
    })?;
    build_dataset(&raw).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

/// Split of `dataset` under the configured protocol with `seed` in place of
/// the configured seed.
pub fn split_for_seed(dataset: &Dataset, cfg: &RunConfig, seed: u64) -> Result<SplitBundle, CliError> {
    let split_cfg = SplitConfig {
        seed,
        ..cfg.split_config()?
    };
    split(dataset, &split_cfg).map_err(|e| CliError::runtime(format!("split failed: {e}")))
}

fn split_manifest(cfg: &RunConfig, split_cfg: &SplitConfig, b: &SplitBundle) -> SplitManifest {
    let total = b.total_events();
    let frac = |n: usize| n as f64 / total as f64;
    let fractions = BTreeMap::from([
        ("skew_test_pool".to_string(), split_cfg.skew_test_pool),
        ("test".to_string(), split_cfg.test_fraction),
        ("train_treatment".to_string(), split_cfg.treatment_train_fraction),
        ("validation".to_string(), split_cfg.validation_fraction),
        ("reg_treatment".to_string(), split_cfg.reg_treatment_fraction),
    ]);
    let achieved = BTreeMap::from([
        ("train_control".to_string(), frac(b.train_control.len())),
        ("train_treatment".to_string(), frac(b.train_treatment.len())),
        ("validation".to_string(), frac(b.validation.len())),
        ("test".to_string(), frac(b.test.len())),
    ]);
    SplitManifest {
        formats: FormatVersions::current(),
        seed: split_cfg.seed,
        rng: rng::ALGORITHM.into(),
        protocol: match split_cfg.protocol {
            Protocol::Skew => "skew".into(),
            Protocol::Reg => "reg".into(),
        },
        fractions,
        move_cap: split_cfg.move_cap,
        propensity_cap: split_cfg.propensity_cap,
        pool_scaling: "one multiplicative factor on inverse-popularity acceptance, re-capped at move_cap, found by bisection so the expected pool is skew_test_pool * N".into(),
        sizes: SplitSizes {
            total,
            users: b.n_users,
            items: b.n_items,
            train_control: b.train_control.len(),
            train_treatment: b.train_treatment.len(),
            validation: b.validation.len(),
            test: b.test.len(),
        },
        achieved_fractions: achieved,
        config: cfg.resolved(),
    }
}

/// Splits the ratings file and writes the split files and manifest into
/// `work.dir`.
pub fn cmd_prepare(cfg: &RunConfig) -> Result<SplitManifest, CliError> {
    let split_cfg = cfg.split_config()?;
    cfg.require("data.path")?;
    let dataset = load_dataset(cfg)?;
    let bundle = split(&dataset, &split_cfg).map_err(|e| CliError::runtime(format!("split failed: {e}")))?;
    let dir = SplitDir(cfg.work_dir());
    dir.save(&bundle, dataset.user_map.tokens(), dataset.item_map.tokens())?;
    let manifest = split_manifest(cfg, &split_cfg, &bundle);
    write_json(&dir.file(SPLIT_MANIFEST), &manifest)?;
    Ok(manifest)
}
