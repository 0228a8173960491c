use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use cause_core::eval::{evaluate, MetricReport};

use crate::config::RunConfig;
use crate::error::{io_error, CliError};
use crate::files::{read_text, SplitDir};
use crate::manifest::{manifest_path, read_json, RunManifest};
use crate::model_file;

pub const METRICS_HEADER: &str =
    "method,adaptation,seed,n_events,avg_cr,mse,nll,auc,mse_lift,nll_lift,raw_mse_lift,raw_nll_lift";

pub fn metrics_row(r: &MetricReport) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        r.method,
        r.adaptation,
        r.seed,
        r.n_events,
        r.avg_cr,
        r.mse,
        r.nll,
        r.auc,
        r.mse_lift,
        r.nll_lift,
        r.raw_mse_lift,
        r.raw_nll_lift
    );
    s
}

/// Appends one row, writing the header first when the file is new or empty.
pub fn append_metrics_row(path: &Path, row: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| io_error(path, e))?;
    let mut text = String::new();
    if fresh {
        text.push_str(METRICS_HEADER);
        text.push('\n');
    }
    text.push_str(row);
    text.push('\n');
    f.write_all(text.as_bytes()).map_err(|e| io_error(path, e))
}

/// Scores the test split with a trained model and appends the metrics row
/// to `eval.output` (default `work.dir/metrics.csv`).
pub fn cmd_evaluate(cfg: &RunConfig, model: Option<&Path>) -> Result<MetricReport, CliError> {
    let model_path = match (model, cfg.get("train.model")) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) if !p.is_empty() => PathBuf::from(p),
        _ => super::default_model_path(cfg, &cfg.train_spec()?),
    };
    let output = match cfg.get("eval.output") {
        Some(p) if !p.is_empty() => PathBuf::from(p),
        _ => cfg.work_dir().join("metrics.csv"),
    };
    let text = read_text(&model_path)?;
    let model =
        model_file::from_text(&text).map_err(|e| CliError::runtime(format!("{}: {e}", model_path.display())))?;
    let manifest: RunManifest = read_json(&manifest_path(&model_path))?;
    let spec = manifest.spec()?;
    let bundle = SplitDir(cfg.work_dir()).load()?;
    if model.n_users != bundle.n_users || model.n_items != bundle.n_items {
        return Err(CliError::runtime(format!(
            "{}: model covers {}x{} users x items, split has {}x{}",
            model_path.display(),
            model.n_users,
            model.n_items,
            bundle.n_users,
            bundle.n_items
        )));
    }
    let report = evaluate(&spec, &model, &bundle.test, manifest.seed)
        .map_err(|e| CliError::runtime(format!("evaluation failed: {e}")))?;
    append_metrics_row(&output, &metrics_row(&report))?;
    Ok(report)
}
