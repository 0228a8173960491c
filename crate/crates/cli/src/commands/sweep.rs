use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use cause_core::data::SplitBundle;
use cause_core::eval::{evaluate, MetricReport};
use cause_core::rng;
use cause_core::train::{TrainError, TrainSpec};
use rand::seq::SliceRandom;

use super::{fit, load_dataset, metrics_row, split_for_seed};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::files::write_text;

pub const SWEEP_HEADER: &str = "fraction,injected,status,method,adaptation,seed,n_events,avg_cr,mse,nll,auc,mse_lift,nll_lift,raw_mse_lift,raw_nll_lift";

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub fraction: f64,
    pub injected: usize,
    pub tag: String,
    pub seed: u64,
    /// `None` when the method cannot train on this fraction.
    pub report: Option<MetricReport>,
    pub status: String,
}

impl SweepRow {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{},{},{},", self.fraction, self.injected, self.status);
        match &self.report {
            Some(r) => s.push_str(&metrics_row(r)),
            None => {
                let (method, adaptation) = self.tag.split_once('-').unwrap_or((&self.tag, ""));
                let _ = write!(s, "{method},{adaptation},{},,,,,,,,,", self.seed);
            }
        }
        s
    }
}

/// Treatment sample holding the first `round(fraction * N)` events of a
/// seeded shuffle of the uniform-exposure training pool, so that larger
/// fractions extend smaller ones.
pub fn inject_prefix(bundle: &SplitBundle, seed: u64, fraction: f64) -> (SplitBundle, usize) {
    let mut pool = bundle.train_treatment.clone();
    pool.shuffle(&mut rng::stream(seed, "sweep-inject"));
    let n = ((fraction * bundle.total_events() as f64).round() as usize).min(pool.len());
    pool.truncate(n);
    let mut out = bundle.clone();
    out.train_treatment = pool;
    (out, n)
}

fn thread_count(jobs: usize) -> usize {
    std::env::var("CAUSE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
        .clamp(1, jobs.max(1))
}

struct Job {
    fraction: f64,
    spec: TrainSpec,
    seed_index: usize,
}

fn run_job(job: &Job, bundles: &[SplitBundle], grid: Option<&[f64]>) -> Result<SweepRow, CliError> {
    let seed = job.spec.hyper.seed;
    let (bundle, injected) = inject_prefix(&bundles[job.seed_index], seed, job.fraction);
    let mut row = SweepRow {
        fraction: job.fraction,
        injected,
        tag: job.spec.tag(),
        seed,
        report: None,
        status: "ok".into(),
    };
    match fit(&bundle, &job.spec, grid) {
        Ok(run) => {
            let report = evaluate(&run.spec, &run.output.model, &bundle.test, seed)
                .map_err(|e| CliError::runtime(format!("evaluation failed: {e}")))?;
            row.report = Some(report);
        }
        Err(e) if e.train == Some(TrainError::EmptyTreatmentSample) => {
            row.status = "skipped:EmptyTreatmentSample".into();
        }
        Err(e) => return Err(e.context(format!("{} at fraction {}", row.tag, job.fraction))),
    }
    Ok(row)
}

/// Trains every configured method on every injected fraction and seed and
/// writes the rows to `sweep.output` (default `work.dir/sweep.csv`).
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>, CliError> {
    let tags: Vec<String> = cfg.list("sweep.methods")?;
    let fractions: Vec<f64> = cfg.list("sweep.fractions")?;
    let seeds: Vec<u64> = cfg.list("seeds")?;
    if let Some(f) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(CliError::config(format!("sweep fraction {f} outside [0, 1]")));
    }
    let mut jobs = Vec::new();
    for &fraction in &fractions {
        for tag in &tags {
            for (seed_index, &seed) in seeds.iter().enumerate() {
                let mut spec = cfg.spec_from_tag(tag)?;
                spec.hyper.seed = seed;
                jobs.push(Job {
                    fraction,
                    spec,
                    seed_index,
                });
            }
        }
    }
    let grids: Vec<Option<Vec<f64>>> = jobs
        .iter()
        .map(|j| cfg.tuning_grid(&j.spec))
        .collect::<Result<_, _>>()?;
    cfg.require("data.path")?;
    let dataset = load_dataset(cfg)?;
    let bundles: Vec<SplitBundle> = seeds
        .iter()
        .map(|&s| split_for_seed(&dataset, cfg, s))
        .collect::<Result<_, _>>()?;

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<SweepRow, CliError>>>> = Mutex::new(vec![None; jobs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..thread_count(jobs.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= jobs.len() {
                    break;
                }
                let r = run_job(&jobs[k], &bundles, grids[k].as_deref());
                results.lock().expect("no poisoned workers")[k] = Some(r);
            });
        }
    });
    let rows: Vec<SweepRow> = results
        .into_inner()
        .expect("no poisoned workers")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect::<Result<_, _>>()?;

    let output = match cfg.get("sweep.output") {
        Some(p) if !p.is_empty() => PathBuf::from(p),
        _ => cfg.work_dir().join("sweep.csv"),
    };
    let mut text = String::from(SWEEP_HEADER);
    text.push('\n');
    for r in &rows {
        text.push_str(&r.to_csv());
        text.push('\n');
    }
    write_text(&output, &text)?;
    Ok(rows)
}
