//! Exposure policies on small explicit worlds.
//!
//! A [`SynthWorld`] holds the Bernoulli click rate of every (user, product)
//! pair and the distribution of incoming users. Policies are row-stochastic
//! exposure matrices. Rewards are computed exactly by enumeration, and
//! inverse propensity scoring is checked against them by sampling.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("world is {world:?} but policy is {policy:?}")]
    ShapeMismatch {
        world: (usize, usize),
        policy: (usize, usize),
    },
    #[error("logging probability is zero for an observed event")]
    ZeroPropensity,
    #[error("invalid world: {0}")]
    InvalidWorld(&'static str),
    #[error("invalid policy: {0}")]
    InvalidPolicy(&'static str),
    #[error("empty logged sample")]
    EmptySample,
}

const TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthWorld {
    n_users: usize,
    n_items: usize,
    reward: Vec<f64>,
    user_prob: Vec<f64>,
}

impl SynthWorld {
    /// `reward` is row-major `n_users x n_items`.
    pub fn new(n_users: usize, n_items: usize, reward: Vec<f64>, user_prob: Vec<f64>) -> Result<Self, PolicyError> {
        if n_users == 0 || n_items < 2 {
            return Err(PolicyError::InvalidWorld("need at least one user and two items"));
        }
        if reward.len() != n_users * n_items || user_prob.len() != n_users {
            return Err(PolicyError::InvalidWorld("dimension mismatch"));
        }
        if reward.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(PolicyError::InvalidWorld("rewards must be Bernoulli means"));
        }
        if user_prob.iter().any(|&p| p < 0.0) || libm::fabs(user_prob.iter().sum::<f64>() - 1.0) > TOL {
            return Err(PolicyError::InvalidWorld("user distribution must sum to one"));
        }
        Ok(Self {
            n_users,
            n_items,
            reward,
            user_prob,
        })
    }

    /// World with uniformly distributed users.
    pub fn with_uniform_users(n_users: usize, n_items: usize, reward: Vec<f64>) -> Result<Self, PolicyError> {
        Self::new(n_users, n_items, reward, vec![1.0 / n_users as f64; n_users])
    }

    /// Rewards uniform in `[0, 1)`, user weights uniform in `[0.1, 1)` then
    /// normalized.
    pub fn random(n_users: usize, n_items: usize, rng: &mut Rng) -> Self {
        let reward = (0..n_users * n_items).map(|_| rng.gen::<f64>()).collect();
        let w: Vec<f64> = (0..n_users).map(|_| rng.gen_range(0.1..1.0)).collect();
        let s: f64 = w.iter().sum();
        Self {
            n_users,
            n_items,
            reward,
            user_prob: w.into_iter().map(|x| x / s).collect(),
        }
    }

    /// Adds a trailing zero-reward item standing for "show nothing".
    pub fn with_null_item(&self) -> Self {
        let n_items = self.n_items + 1;
        let mut reward = Vec::with_capacity(self.n_users * n_items);
        for row in self.reward.chunks_exact(self.n_items) {
            reward.extend_from_slice(row);
            reward.push(0.0);
        }
        Self {
            n_users: self.n_users,
            n_items,
            reward,
            user_prob: self.user_prob.clone(),
        }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn reward(&self, user: usize, item: usize) -> f64 {
        self.reward[user * self.n_items + item]
    }

    pub fn user_prob(&self) -> &[f64] {
        &self.user_prob
    }
}

/// Row-stochastic exposure matrix `pi(item | user)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    n_users: usize,
    n_items: usize,
    expose: Vec<f64>,
}

impl Policy {
    pub fn new(n_users: usize, n_items: usize, expose: Vec<f64>) -> Result<Self, PolicyError> {
        if expose.len() != n_users * n_items || n_items == 0 {
            return Err(PolicyError::InvalidPolicy("dimension mismatch"));
        }
        for row in expose.chunks_exact(n_items) {
            if row.iter().any(|&p| p < 0.0) || libm::fabs(row.iter().sum::<f64>() - 1.0) > TOL {
                return Err(PolicyError::InvalidPolicy("rows must be probability distributions"));
            }
        }
        Ok(Self {
            n_users,
            n_items,
            expose,
        })
    }

    pub fn uniform(n_users: usize, n_items: usize) -> Self {
        Self {
            n_users,
            n_items,
            expose: vec![1.0 / n_items as f64; n_users * n_items],
        }
    }

    /// Shows `choice[i]` to user `i` with probability one.
    pub fn deterministic(choice: &[usize], n_items: usize) -> Self {
        let mut expose = vec![0.0; choice.len() * n_items];
        for (i, &j) in choice.iter().enumerate() {
            expose[i * n_items + j] = 1.0;
        }
        Self {
            n_users: choice.len(),
            n_items,
            expose,
        }
    }

    /// The same item distribution, proportional to `weights`, for every user.
    pub fn from_item_weights(n_users: usize, weights: &[f64]) -> Self {
        let s: f64 = weights.iter().sum();
        let row: Vec<f64> = weights.iter().map(|w| w / s).collect();
        let mut expose = Vec::with_capacity(n_users * weights.len());
        for _ in 0..n_users {
            expose.extend_from_slice(&row);
        }
        Self {
            n_users,
            n_items: weights.len(),
            expose,
        }
    }

    /// Random full-support policy: row weights uniform in `[0.05, 1)`.
    pub fn random(n_users: usize, n_items: usize, rng: &mut Rng) -> Self {
        let mut expose = Vec::with_capacity(n_users * n_items);
        for _ in 0..n_users {
            let w: Vec<f64> = (0..n_items).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = w.iter().sum();
            expose.extend(w.into_iter().map(|x| x / s));
        }
        Self {
            n_users,
            n_items,
            expose,
        }
    }

    /// `a * self + (1 - a) * other`.
    pub fn mix(&self, other: &Policy, a: f64) -> Policy {
        Policy {
            n_users: self.n_users,
            n_items: self.n_items,
            expose: self
                .expose
                .iter()
                .zip(&other.expose)
                .map(|(x, y)| a * x + (1.0 - a) * y)
                .collect(),
        }
    }

    pub fn prob(&self, user: usize, item: usize) -> f64 {
        self.expose[user * self.n_items + item]
    }

    pub fn row(&self, user: usize) -> &[f64] {
        &self.expose[user * self.n_items..(user + 1) * self.n_items]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_users, self.n_items)
    }

    fn sample_item(&self, user: usize, rng: &mut Rng) -> usize {
        sample_index(self.row(user), rng)
    }
}

fn sample_index(probs: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (j, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    // rounding left a sliver above the last cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

fn check_shape(world: &SynthWorld, policy: &Policy) -> Result<(), PolicyError> {
    let w = (world.n_users, world.n_items);
    if w != policy.shape() {
        return Err(PolicyError::ShapeMismatch {
            world: w,
            policy: policy.shape(),
        });
    }
    Ok(())
}

/// Expected reward `sum_ij r_ij pi(j|i) p(i)`.
pub fn policy_reward(world: &SynthWorld, policy: &Policy) -> Result<f64, PolicyError> {
    check_shape(world, policy)?;
    let mut total = 0.0;
    for i in 0..world.n_users {
        let row: f64 = (0..world.n_items).map(|j| world.reward(i, j) * policy.prob(i, j)).sum();
        total += world.user_prob[i] * row;
    }
    Ok(total)
}

/// Summed treatment effect of `policy` over `control`.
pub fn ite(world: &SynthWorld, policy: &Policy, control: &Policy) -> Result<f64, PolicyError> {
    Ok(policy_reward(world, policy)? - policy_reward(world, control)?)
}

/// Index of the largest value; values within `1e-12` of the maximum count as
/// tied and the lowest index wins.
pub fn argmax(values: &[f64]) -> usize {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values.iter().position(|&v| v >= max - 1e-12).unwrap_or(0)
}

/// Shows every user their highest-reward product.
pub fn best_policy(world: &SynthWorld) -> Policy {
    let choice: Vec<usize> = (0..world.n_users)
        .map(|i| argmax(&world.reward[i * world.n_items..(i + 1) * world.n_items]))
        .collect();
    Policy::deterministic(&choice, world.n_items)
}

/// Every deterministic policy over the given shape, in lexicographic order of
/// the per-user choices.
pub fn deterministic_policies(n_users: usize, n_items: usize) -> impl Iterator<Item = Policy> {
    let total = n_items.pow(n_users as u32);
    (0..total).map(move |mut code| {
        let mut choice = vec![0; n_users];
        for c in choice.iter_mut() {
            *c = code % n_items;
            code /= n_items;
        }
        Policy::deterministic(&choice, n_items)
    })
}

/// One logged impression: the shown product, the observed click and the
/// logging policy's probability of showing it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoggedEvent {
    pub user: usize,
    pub item: usize,
    pub reward: f64,
    pub propensity: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoggedSample {
    pub events: Vec<LoggedEvent>,
}

/// Draws `n` impressions: user from `p(u)`, product from `logging`, click
/// from the pair's Bernoulli rate.
pub fn sample_logged(
    world: &SynthWorld,
    logging: &Policy,
    n: usize,
    rng: &mut Rng,
) -> Result<LoggedSample, PolicyError> {
    check_shape(world, logging)?;
    let events = (0..n)
        .map(|_| {
            let user = sample_index(&world.user_prob, rng);
            let item = logging.sample_item(user, rng);
            let click = rng.gen::<f64>() < world.reward(user, item);
            LoggedEvent {
                user,
                item,
                reward: if click { 1.0 } else { 0.0 },
                propensity: logging.prob(user, item),
            }
        })
        .collect();
    Ok(LoggedSample { events })
}

/// Mean, sample variance and standard error of the per-event IPS terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IpsSummary {
    pub estimate: f64,
    pub variance: f64,
    pub std_error: f64,
}

/// `mean y * pi_target(j|i) / pi_logging(j|i)`.
pub fn ips_estimate(sample: &LoggedSample, target: &Policy) -> Result<f64, PolicyError> {
    Ok(ips_summary(sample, target)?.estimate)
}

pub fn ips_summary(sample: &LoggedSample, target: &Policy) -> Result<IpsSummary, PolicyError> {
    if sample.events.is_empty() {
        return Err(PolicyError::EmptySample);
    }
    let mut terms = Vec::with_capacity(sample.events.len());
    for e in &sample.events {
        if !(e.propensity > 0.0) {
            return Err(PolicyError::ZeroPropensity);
        }
        terms.push(e.reward * target.prob(e.user, e.item) / e.propensity);
    }
    let n = terms.len() as f64;
    let mean = terms.iter().sum::<f64>() / n;
    let variance = if terms.len() > 1 {
        terms.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(IpsSummary {
        estimate: mean,
        variance,
        std_error: libm::sqrt(variance / n),
    })
}

/// Checks, user by user, that ranking products by their expected outcome
/// under uniform exposure divided by the uniform propensity, and by their
/// expected logged outcome under `control` divided by the control propensity,
/// both pick the highest-reward product.
pub fn argmax_rand_equivalence(world: &SynthWorld, control: &Policy) -> Result<bool, PolicyError> {
    check_shape(world, control)?;
    if (0..world.n_users).any(|i| control.row(i).iter().any(|&p| !(p > 0.0))) {
        return Err(PolicyError::InvalidPolicy("control policy needs full support"));
    }
    let uniform = 1.0 / world.n_items as f64;
    for i in 0..world.n_users {
        let r: Vec<f64> = (0..world.n_items).map(|j| world.reward(i, j)).collect();
        let rand: Vec<f64> = r.iter().map(|&r| r * uniform / uniform).collect();
        let ips: Vec<f64> = r
            .iter()
            .enumerate()
            .map(|(j, &r)| r * control.prob(i, j) / control.prob(i, j))
            .collect();
        let best = argmax(&r);
        if argmax(&rand) != best || argmax(&ips) != best {
            return Ok(false);
        }
    }
    Ok(true)
}
