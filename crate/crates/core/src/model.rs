//! Two-branch embedding model.
//!
//! Each branch scores a pair as `sigmoid(alpha * <theta_j, gamma_i> + b_i + b_j + b)`.
//! The control branch is fit on events logged by the biased policy, the
//! treatment branch on the uniform-exposure sample. Baselines only use the
//! control branch; their treatment branch is a frozen copy.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BranchId {
    Control,
    Treatment,
}

/// How the treatment branch's parameters are tied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Layout {
    /// Treatment users alias the control users (`gamma_t == gamma_c`, same
    /// user biases), so only products differ between tasks.
    pub shared_users: bool,
    /// All treatment product rows (and item biases) are one pooled vector.
    pub pooled_items: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    /// `n_users x d`, row-major.
    pub gamma: Vec<f64>,
    /// `n_items x d`, row-major.
    pub theta: Vec<f64>,
    pub user_bias: Vec<f64>,
    pub item_bias: Vec<f64>,
    pub global_bias: f64,
    pub alpha: f64,
}

impl Branch {
    pub fn zeros(n_users: usize, n_items: usize, d: usize) -> Self {
        Self {
            gamma: vec![0.0; n_users * d],
            theta: vec![0.0; n_items * d],
            user_bias: vec![0.0; n_users],
            item_bias: vec![0.0; n_items],
            global_bias: 0.0,
            alpha: 0.0,
        }
    }

    pub fn slices(&self) -> [&[f64]; 6] {
        [
            &self.gamma,
            &self.theta,
            &self.user_bias,
            &self.item_bias,
            core::slice::from_ref(&self.global_bias),
            core::slice::from_ref(&self.alpha),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 6] {
        [
            &mut self.gamma,
            &mut self.theta,
            &mut self.user_bias,
            &mut self.item_bias,
            core::slice::from_mut(&mut self.global_bias),
            core::slice::from_mut(&mut self.alpha),
        ]
    }

    fn fill(&mut self, v: f64) {
        for s in self.slices_mut() {
            s.fill(v);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    pub n_users: usize,
    pub n_items: usize,
    pub d: usize,
    pub control: Branch,
    pub treatment: Branch,
    pub layout: Layout,
}

impl EmbeddingModel {
    /// All-zero model with `alpha = 1`.
    pub fn zeros(n_users: usize, n_items: usize, d: usize) -> Self {
        let mut m = Self::zeros_like_shape(n_users, n_items, d);
        m.control.alpha = 1.0;
        m.treatment.alpha = 1.0;
        m
    }

    fn zeros_like_shape(n_users: usize, n_items: usize, d: usize) -> Self {
        Self {
            n_users,
            n_items,
            d,
            control: Branch::zeros(n_users, n_items, d),
            treatment: Branch::zeros(n_users, n_items, d),
            layout: Layout::default(),
        }
    }

    /// Control embeddings uniform in `(-1/sqrt(d), 1/sqrt(d))`, biases zero,
    /// `alpha = 1`. The treatment branch starts as a copy of the control
    /// branch; pooled product rows start at the mean control row.
    pub fn init(n_users: usize, n_items: usize, d: usize, layout: Layout, seed: u64) -> Self {
        let mut m = Self::zeros(n_users, n_items, d);
        m.layout = layout;
        let bound = 1.0 / libm::sqrt(d as f64);
        let mut rng = rng::stream(seed, "init");
        for w in m.control.gamma.iter_mut().chain(m.control.theta.iter_mut()) {
            *w = rng.gen_range(-bound..bound);
        }
        m.treatment = m.control.clone();
        if layout.pooled_items {
            let mut mean = vec![0.0; d];
            for row in m.control.theta.chunks_exact(d) {
                for (a, b) in mean.iter_mut().zip(row) {
                    *a += b;
                }
            }
            for a in &mut mean {
                *a /= n_items as f64;
            }
            for row in m.treatment.theta.chunks_exact_mut(d) {
                row.copy_from_slice(&mean);
            }
        }
        m
    }

    /// Same shape, every parameter zero. Used for gradients and velocities.
    pub fn zeros_like(&self) -> Self {
        let mut m = self.clone();
        m.set_zero();
        m
    }

    /// Sets every parameter to zero, keeping the shape.
    pub fn set_zero(&mut self) {
        self.control.fill(0.0);
        self.treatment.fill(0.0);
    }

    pub fn branch(&self, id: BranchId) -> &Branch {
        match id {
            BranchId::Control => &self.control,
            BranchId::Treatment => &self.treatment,
        }
    }

    pub fn branch_mut(&mut self, id: BranchId) -> &mut Branch {
        match id {
            BranchId::Control => &mut self.control,
            BranchId::Treatment => &mut self.treatment,
        }
    }

    #[inline]
    pub fn user_row<'a>(&self, b: &'a Branch, user: usize) -> &'a [f64] {
        &b.gamma[user * self.d..(user + 1) * self.d]
    }

    #[inline]
    pub fn item_row<'a>(&self, b: &'a Branch, item: usize) -> &'a [f64] {
        &b.theta[item * self.d..(item + 1) * self.d]
    }

    /// Inner product `<theta_j, gamma_i>` on a branch.
    #[inline]
    pub fn dot(&self, branch: BranchId, user: usize, item: usize) -> f64 {
        let b = self.branch(branch);
        dot(self.user_row(b, user), self.item_row(b, item))
    }

    #[inline]
    pub fn logit(&self, branch: BranchId, user: usize, item: usize) -> f64 {
        let b = self.branch(branch);
        b.alpha * self.dot(branch, user, item) + b.user_bias[user] + b.item_bias[item] + b.global_bias
    }

    /// Click probability of `(user, item)` on the requested branch.
    pub fn predict(&self, user: usize, item: usize, branch: BranchId) -> f64 {
        sigmoid(self.logit(branch, user, item))
    }

    pub fn is_finite(&self) -> bool {
        self.control
            .slices()
            .iter()
            .chain(self.treatment.slices().iter())
            .all(|s| s.iter().all(|w| w.is_finite()))
    }

    /// Max over items of `||theta_t[j] - theta_c[j]||_1`.
    pub fn max_item_discrepancy(&self) -> f64 {
        self.control
            .theta
            .chunks_exact(self.d)
            .zip(self.treatment.theta.chunks_exact(self.d))
            .map(|(c, t)| c.iter().zip(t).map(|(a, b)| libm::fabs(a - b)).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Logistic function in the branch form that never overflows `exp`.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Optimization settings shared by all trainers.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperParams {
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

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            dim: 32,
            lr0: 1.0,
            lr_end: 0.001,
            momentum: 0.9,
            epochs: 20,
            batch_size: 512,
            lambda_t: 1e-4,
            lambda_c: 1e-4,
            lambda_dist: 1e-3,
            train_alpha: false,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), &'static str> {
        if self.dim == 0 {
            return Err("dim must be positive");
        }
        if !(self.lr0 > self.lr_end && self.lr_end >= 0.0) {
            return Err("learning rates must satisfy lr0 > lr_end >= 0");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err("momentum must lie in [0, 1)");
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err("epochs and batch_size must be positive");
        }
        if self.lambda_t < 0.0 || self.lambda_c < 0.0 || self.lambda_dist < 0.0 {
            return Err("regularization strengths must be non-negative");
        }
        Ok(())
    }
}
