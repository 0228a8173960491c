use std::fmt::Write as _;

use cause_core::policy::{best_policy, ips_summary, policy_reward, sample_logged, Policy, PolicyError, SynthWorld};
use cause_core::rng;

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct SimRow {
    pub world: usize,
    pub policy: String,
    pub exact: f64,
    pub ips: f64,
    pub std_error: f64,
}

fn policy_err(e: PolicyError) -> CliError {
    CliError::runtime(format!("simulation failed: {e:?}"))
}

/// Random worlds logged under a popularity-skewed policy; every candidate
/// policy is scored exactly and by IPS from the logged sample.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<(Vec<SimRow>, String), CliError> {
    let seed = cfg.u64("seed")?;
    let worlds = cfg.usize("sim.worlds")?;
    let n_users = cfg.usize("sim.users")?;
    let n_items = cfg.usize("sim.items")?;
    let samples = cfg.usize("sim.samples")?;
    let beta = cfg.f64("sim.beta")?;
    if n_users == 0 || n_items == 0 || samples == 0 {
        return Err(CliError::config(
            "sim.users, sim.items and sim.samples must be positive",
        ));
    }
    let popularity: Vec<f64> = (1..=n_items).map(|k| (k as f64).powf(beta)).collect();
    let logging = Policy::from_item_weights(n_users, &popularity);
    let mut rows = Vec::new();
    for w in 0..worlds {
        let mut r = rng::stream(seed, &format!("sim-world-{w}"));
        let world = SynthWorld::random(n_users, n_items, &mut r);
        let random_target = Policy::random(n_users, n_items, &mut r);
        let sample = sample_logged(&world, &logging, samples, &mut r).map_err(policy_err)?;
        let candidates = [
            ("logging", logging.clone()),
            ("uniform", Policy::uniform(n_users, n_items)),
            ("random", random_target),
            ("best", best_policy(&world)),
        ];
        for (name, p) in candidates {
            let s = ips_summary(&sample, &p).map_err(policy_err)?;
            rows.push(SimRow {
                world: w,
                policy: name.into(),
                exact: policy_reward(&world, &p).map_err(policy_err)?,
                ips: s.estimate,
                std_error: s.std_error,
            });
        }
    }
    let mut table = format!(
        "{:>5}  {:<8}  {:>8}  {:>8}  {:>8}\n",
        "world", "policy", "exact", "ips", "se"
    );
    for r in &rows {
        let _ = writeln!(
            table,
            "{:>5}  {:<8}  {:>8.4}  {:>8.4}  {:>8.4}",
            r.world, r.policy, r.exact, r.ips, r.std_error
        );
    }
    Ok((rows, table))
}
