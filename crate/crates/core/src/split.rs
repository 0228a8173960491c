//! Regular and popularity-skewed split protocols.
//!
//! The skewed protocol simulates a uniform-exposure test sample out of logged
//! data: each event is moved into a pool with a probability inversely
//! proportional to its item's popularity, relative to the least popular item,
//! capped at `move_cap`. The per-item probabilities are then multiplied by a
//! single factor (re-capped) so that the pool's expected size is
//! `skew_test_pool * N`. The pool feeds the test set and the small
//! treatment training sample; the rest feeds control training and validation.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::data::{Dataset, Interaction, Origin, PropensityTable, SplitBundle};
use crate::rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("the uniform pool is empty")]
    DegeneratePool,
    #[error("a pool of {target} events cannot be reached with move cap {cap}")]
    UnreachablePool { target: f64, cap: f64 },
    #[error("invalid split configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("dataset has no events")]
    EmptyDataset,
    #[error("training control set is empty")]
    EmptyTraining,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    Reg,
    Skew,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitConfig {
    pub seed: u64,
    pub protocol: Protocol,
    pub skew_test_pool: f64,
    pub test_fraction: f64,
    pub treatment_train_fraction: f64,
    pub validation_fraction: f64,
    pub move_cap: f64,
    pub propensity_cap: f64,
    /// Share of each user's events that REG moves into the treatment
    /// training sample. Zero keeps the plain 70/10/20 layout.
    pub reg_treatment_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            protocol: Protocol::Skew,
            skew_test_pool: 0.30,
            test_fraction: 0.20,
            treatment_train_fraction: 0.10,
            validation_fraction: 0.10,
            move_cap: 0.9,
            propensity_cap: 10.0,
            reg_treatment_fraction: 0.0,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<(), SplitError> {
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if !unit(self.skew_test_pool) || !unit(self.test_fraction) || !unit(self.validation_fraction) {
            return Err(SplitError::InvalidConfig("fractions must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.treatment_train_fraction) {
            return Err(SplitError::InvalidConfig("treatment_train_fraction must lie in [0, 1)"));
        }
        if libm::fabs(self.test_fraction + self.treatment_train_fraction - self.skew_test_pool) > 1e-9 {
            return Err(SplitError::InvalidConfig(
                "test_fraction + treatment_train_fraction must equal skew_test_pool",
            ));
        }
        if self.skew_test_pool + self.validation_fraction >= 1.0 {
            return Err(SplitError::InvalidConfig("no events left for control training"));
        }
        if !(self.move_cap > 0.0 && self.move_cap <= 1.0) {
            return Err(SplitError::InvalidConfig("move_cap must lie in (0, 1]"));
        }
        if !(self.propensity_cap > 0.0) {
            return Err(SplitError::InvalidConfig("propensity_cap must be positive"));
        }
        if !(0.0..1.0).contains(&self.reg_treatment_fraction)
            || self.test_fraction + self.validation_fraction + self.reg_treatment_fraction >= 1.0
        {
            return Err(SplitError::InvalidConfig("reg_treatment_fraction out of range"));
        }
        Ok(())
    }
}

/// Number of events per item.
pub fn item_popularity(events: &[Interaction], n_items: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n_items];
    for e in events {
        counts[e.item()] += 1;
    }
    counts
}

/// `min(c_min / c_j, move_cap)` for items with events, zero otherwise.
pub fn acceptance_probs(counts: &[u64], move_cap: f64) -> Vec<f64> {
    let c_min = counts.iter().copied().filter(|&c| c > 0).min();
    let Some(c_min) = c_min else {
        return vec![0.0; counts.len()];
    };
    counts
        .iter()
        .map(|&c| {
            if c == 0 {
                0.0
            } else {
                let p = c_min as f64 / c as f64;
                if p > move_cap {
                    move_cap
                } else {
                    p
                }
            }
        })
        .collect()
}

/// Per-item probability of moving an event into the uniform pool, after
/// scaling the acceptance probabilities so that the expected pool size is
/// `pool_fraction` of all events. Returns the probabilities and the factor.
pub fn pool_probabilities(counts: &[u64], pool_fraction: f64, move_cap: f64) -> Result<(Vec<f64>, f64), SplitError> {
    let base = acceptance_probs(counts, move_cap);
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(SplitError::EmptyDataset);
    }
    let target = pool_fraction * total as f64;
    let expected = |s: f64| -> f64 {
        counts
            .iter()
            .zip(&base)
            .map(|(&c, &p)| c as f64 * capped(s * p, move_cap))
            .sum()
    };
    let p_min = base.iter().copied().filter(|&p| p > 0.0).fold(f64::INFINITY, f64::min);
    let mut hi = move_cap / p_min;
    if expected(hi) < target * (1.0 - 1e-12) {
        return Err(SplitError::UnreachablePool { target, cap: move_cap });
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if expected(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let scale = hi;
    Ok((base.iter().map(|&p| capped(scale * p, move_cap)).collect(), scale))
}

#[inline]
fn capped(x: f64, cap: f64) -> f64 {
    if x > cap {
        cap
    } else {
        x
    }
}

/// Laplace-smoothed item marginal of `train_control` against uniform exposure.
pub fn build_propensity(
    train_control: &[Interaction],
    n_items: usize,
    cap: f64,
) -> Result<PropensityTable, SplitError> {
    if train_control.is_empty() {
        return Err(SplitError::EmptyTraining);
    }
    let counts = item_popularity(train_control, n_items);
    let denom = (train_control.len() + n_items) as f64;
    let control_prob: Vec<f64> = counts.iter().map(|&c| (c as f64 + 1.0) / denom).collect();
    let uniform = 1.0 / n_items as f64;
    let treatment_prob = vec![uniform; n_items];
    let weight = control_prob.iter().map(|&pc| capped(uniform / pc, cap)).collect();
    Ok(PropensityTable {
        control_prob,
        treatment_prob,
        weight,
    })
}

/// Dispatches on `config.protocol`.
pub fn split(dataset: &Dataset, config: &SplitConfig) -> Result<SplitBundle, SplitError> {
    match config.protocol {
        Protocol::Skew => skew_split(dataset, config),
        Protocol::Reg => reg_split(dataset, config),
    }
}

fn take(events: &[Interaction], idx: &mut [usize], origin: Origin) -> Vec<Interaction> {
    idx.sort_unstable();
    idx.iter().map(|&i| events[i].with_origin(origin)).collect()
}

fn round_count(n: usize, frac: f64) -> usize {
    libm::round(n as f64 * frac) as usize
}

pub fn skew_split(dataset: &Dataset, config: &SplitConfig) -> Result<SplitBundle, SplitError> {
    config.validate()?;
    if config.protocol != Protocol::Skew {
        return Err(SplitError::InvalidConfig("skew_split called with a non-skew protocol"));
    }
    if dataset.is_empty() {
        return Err(SplitError::EmptyDataset);
    }
    let events = &dataset.interactions;
    let counts = item_popularity(events, dataset.n_items);
    let (pool_prob, _) = pool_probabilities(&counts, config.skew_test_pool, config.move_cap)?;

    let mut rng = rng::stream(config.seed, "split");
    let mut pool = Vec::new();
    let mut rest = Vec::new();
    for (i, e) in events.iter().enumerate() {
        if rng.gen::<f64>() < pool_prob[e.item()] {
            pool.push(i);
        } else {
            rest.push(i);
        }
    }
    if pool.is_empty() {
        return Err(SplitError::DegeneratePool);
    }

    pool.shuffle(&mut rng);
    let n_test = round_count(pool.len(), config.test_fraction / config.skew_test_pool);
    let (test_idx, treat_idx) = pool.split_at_mut(n_test);

    rest.shuffle(&mut rng);
    let n_valid = round_count(rest.len(), config.validation_fraction / (1.0 - config.skew_test_pool));
    let (valid_idx, control_idx) = rest.split_at_mut(n_valid);

    let train_control = take(events, control_idx, Origin::Control);
    let propensity = build_propensity(&train_control, dataset.n_items, config.propensity_cap)?;
    Ok(SplitBundle {
        train_treatment: take(events, treat_idx, Origin::Treatment),
        validation: take(events, valid_idx, Origin::Control),
        test: take(events, test_idx, Origin::Treatment),
        train_control,
        propensity,
        n_users: dataset.n_users,
        n_items: dataset.n_items,
    })
}

/// Per-user random split. Test events carry the treatment origin so that the
/// evaluation path is the same as for the skewed protocol.
pub fn reg_split(dataset: &Dataset, config: &SplitConfig) -> Result<SplitBundle, SplitError> {
    config.validate()?;
    if config.protocol != Protocol::Reg {
        return Err(SplitError::InvalidConfig("reg_split called with a non-reg protocol"));
    }
    if dataset.is_empty() {
        return Err(SplitError::EmptyDataset);
    }
    let events = &dataset.interactions;
    let mut by_user: Vec<Vec<usize>> = vec![Vec::new(); dataset.n_users];
    for (i, e) in events.iter().enumerate() {
        by_user[e.user()].push(i);
    }

    let mut rng = rng::stream(config.seed, "split");
    let (mut control, mut treat, mut valid, mut test) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for mut idx in by_user {
        let n = idx.len();
        if n == 0 {
            continue;
        }
        idx.shuffle(&mut rng);
        let n_test = round_count(n, config.test_fraction);
        let n_valid = round_count(n, config.validation_fraction);
        let n_treat = round_count(n, config.reg_treatment_fraction);
        // at least one event stays in control training
        let n_test = n_test.min(n - 1);
        let n_valid = n_valid.min(n - 1 - n_test);
        let n_treat = n_treat.min(n - 1 - n_test - n_valid);
        let (a, r) = idx.split_at(n_test);
        let (b, r) = r.split_at(n_valid);
        let (c, d) = r.split_at(n_treat);
        test.extend_from_slice(a);
        valid.extend_from_slice(b);
        treat.extend_from_slice(c);
        control.extend_from_slice(d);
    }

    let train_control = take(events, &mut control, Origin::Control);
    let propensity = build_propensity(&train_control, dataset.n_items, config.propensity_cap)?;
    Ok(SplitBundle {
        train_treatment: take(events, &mut treat, Origin::Treatment),
        validation: take(events, &mut valid, Origin::Control),
        test: take(events, &mut test, Origin::Treatment),
        train_control,
        propensity,
        n_users: dataset.n_users,
        n_items: dataset.n_items,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn ev(user: u32, item: u32) -> Interaction {
        Interaction::new(user, item, false, Origin::Control)
    }

    #[test]
    fn popularity_counts() {
        assert_eq!(item_popularity(&[ev(0, 0)], 1), vec![1]);
        assert_eq!(item_popularity(&[ev(0, 0), ev(1, 0), ev(0, 1)], 2), vec![2, 1]);
    }

    #[test]
    fn acceptance_ratio_rule() {
        let p = acceptance_probs(&[1, 100, 2, 0], 0.9);
        assert_eq!(p[0], 0.9);
        assert!((p[1] - 0.01).abs() < 1e-15);
        assert_eq!(p[2], 0.5);
        assert_eq!(p[3], 0.0);
    }

    #[test]
    fn pool_scaling_hits_target() {
        let counts = [1u64, 3, 10, 50, 200];
        let (q, s) = pool_probabilities(&counts, 0.3, 0.9).unwrap();
        let total: u64 = counts.iter().sum();
        let expected: f64 = counts.iter().zip(&q).map(|(&c, &p)| c as f64 * p).sum();
        assert!((expected - 0.3 * total as f64).abs() < 1e-6);
        assert!(q.iter().all(|&p| p <= 0.9));
        assert!(s > 0.0);
        // uniform popularity: everything gets the same probability
        let (q, _) = pool_probabilities(&[5, 5, 5], 0.3, 0.9).unwrap();
        assert!(q.iter().all(|&p| (p - 0.3).abs() < 1e-9));
        assert!(matches!(
            pool_probabilities(&[5, 5], 0.95, 0.9),
            Err(SplitError::UnreachablePool { .. })
        ));
    }

    #[test]
    fn propensity_examples() {
        let t = build_propensity(&[ev(0, 0), ev(0, 1)], 2, 10.0).unwrap();
        assert_eq!(t.control_prob, vec![0.5, 0.5]);
        assert_eq!(t.weight, vec![1.0, 1.0]);
        let s: f64 = t.control_prob.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);

        // item 0 holds almost all mass: its weight is tiny, the others capped
        let mut evs = Vec::new();
        for _ in 0..400 {
            evs.push(ev(0, 0));
        }
        let t = build_propensity(&evs, 21, 10.0).unwrap();
        assert!(t.weight[0] < 0.1);
        // control_prob[1] = 1/421, uniform = 1/21 -> ratio ~20 -> capped
        assert_eq!(t.weight[1], 10.0);
        assert!(build_propensity(&[], 3, 10.0).is_err());
    }

    fn reg_config(seed: u64) -> SplitConfig {
        SplitConfig {
            seed,
            protocol: Protocol::Reg,
            ..SplitConfig::default()
        }
    }

    #[test]
    fn reg_proportions() {
        let mut evs: Vec<Interaction> = (0..10).map(|i| ev(0, i)).collect();
        evs.push(ev(1, 3));
        let ds = Dataset::from_indexed(evs, 2, 10);
        let b = reg_split(&ds, &reg_config(3)).unwrap();
        assert_eq!(b.train_control.len(), 8);
        assert_eq!(b.validation.len(), 1);
        assert_eq!(b.test.len(), 2);
        assert!(b.train_treatment.is_empty());
        assert!(b.train_control.iter().any(|e| e.user == 1));
        assert!(b.test.iter().all(|e| e.origin == Origin::Treatment && e.user == 0));
        assert_eq!(b, reg_split(&ds, &reg_config(3)).unwrap());

        let cfg = SplitConfig {
            reg_treatment_fraction: 0.1,
            ..reg_config(3)
        };
        let b = reg_split(&ds, &cfg).unwrap();
        assert_eq!(
            (
                b.train_control.len(),
                b.train_treatment.len(),
                b.validation.len(),
                b.test.len()
            ),
            (7, 1, 1, 2)
        );
    }

    #[test]
    fn config_validation() {
        assert!(SplitConfig::default().validate().is_ok());
        let bad = SplitConfig {
            test_fraction: 0.25,
            ..SplitConfig::default()
        };
        assert!(bad.validate().is_err());
        let mut ds = Dataset::from_indexed(vec![ev(0, 0)], 1, 1);
        assert!(skew_split(&ds, &reg_config(0)).is_err());
        ds.interactions.clear();
        assert_eq!(skew_split(&ds, &SplitConfig::default()), Err(SplitError::EmptyDataset));
    }
}
