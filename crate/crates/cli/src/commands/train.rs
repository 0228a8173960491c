use std::path::PathBuf;

use cause_core::data::SplitBundle;
use cause_core::eval::validation_nll;
use cause_core::rng;
use cause_core::train::{self, set_banditnet_lambda, set_lambda_dist, GridPoint, Method, TrainOutput, TrainSpec};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::files::{write_text, SplitDir};
use crate::manifest::{
    branch_name, manifest_path, write_json, FormatVersions, GridRecord, HyperRecord, RunManifest, Tuning, INIT_SCHEME,
};
use crate::model_file;

/// A trained model with the spec it was trained under, after any grid search.
#[derive(Clone, Debug)]
pub struct FittedRun {
    pub spec: TrainSpec,
    pub output: TrainOutput,
    pub tuning: Option<Tuning>,
    pub validation_nll: f64,
}

/// Trains `spec`, or searches `grid` on validation NLL when one is given and
/// the method has a tuned parameter.
pub fn fit(bundle: &SplitBundle, spec: &TrainSpec, grid: Option<&[f64]>) -> Result<FittedRun, CliError> {
    let tuned = match (spec.method, grid) {
        (Method::Cause, Some(g)) => Some(("lambda_dist", g, set_lambda_dist as fn(&mut TrainSpec, f64))),
        (Method::BanditNet, Some(g)) => Some(("banditnet_lambda", g, set_banditnet_lambda as fn(&mut TrainSpec, f64))),
        _ => None,
    };
    match tuned {
        Some((name, grid, set)) => {
            let (spec, output, points) = train::tune(bundle, spec, grid, set)?;
            let best = points
                .iter()
                .map(|p: &GridPoint| p.validation_nll)
                .fold(f64::INFINITY, f64::min);
            let chosen = match spec.method {
                Method::Cause => spec.hyper.lambda_dist,
                _ => spec.banditnet_lambda,
            };
            Ok(FittedRun {
                tuning: Some(Tuning {
                    parameter: name.into(),
                    chosen,
                    grid: points.iter().map(GridRecord::from).collect(),
                }),
                spec,
                output,
                validation_nll: best,
            })
        }
        None => {
            let output = train::train(bundle, spec)?;
            let nll = validation_nll(spec, &output.model, &bundle.validation);
            Ok(FittedRun {
                spec: spec.clone(),
                output,
                tuning: None,
                validation_nll: nll,
            })
        }
    }
}

/// `work.dir/models/<tag>-seed<seed>.model`.
pub fn default_model_path(cfg: &RunConfig, spec: &TrainSpec) -> PathBuf {
    cfg.work_dir()
        .join("models")
        .join(format!("{}-seed{}.model", spec.tag(), spec.hyper.seed))
}

pub fn run_manifest(cfg: &RunConfig, run: &FittedRun, model_path: &std::path::Path) -> RunManifest {
    let spec = &run.spec;
    RunManifest {
        formats: FormatVersions::current(),
        tag: spec.tag(),
        method: spec.method.name().into(),
        adaptation: spec.adaptation_label(),
        predict_branch: branch_name(spec.predict_branch()).into(),
        seed: spec.hyper.seed,
        hyper: HyperRecord::from(&spec.hyper),
        share_users: spec.share_users,
        banditnet_lambda: spec.banditnet_lambda,
        ratio_cap: spec.ratio_cap,
        tuning: run.tuning.clone(),
        epoch_losses: run.output.epoch_losses.clone(),
        validation_nll: run.validation_nll,
        rng: rng::ALGORITHM.into(),
        init: INIT_SCHEME.into(),
        model_file: model_path.display().to_string(),
        config: cfg.resolved(),
    }
}

/// Trains on the split in `work.dir` and writes the model file and its run
/// manifest. Returns the model path.
pub fn cmd_train(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let spec = cfg.train_spec()?;
    let grid = cfg.tuning_grid(&spec)?;
    let model_path = match cfg.get("train.model") {
        Some(p) if !p.is_empty() => PathBuf::from(p),
        _ => default_model_path(cfg, &spec),
    };
    let bundle = SplitDir(cfg.work_dir()).load()?;
    let run = fit(&bundle, &spec, grid.as_deref())?;
    write_text(&model_path, &model_file::to_text(&run.output.model))?;
    write_json(&manifest_path(&model_path), &run_manifest(cfg, &run, &model_path))?;
    Ok(model_path)
}
