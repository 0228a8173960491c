//! SGD with classical momentum, a linear learning-rate schedule and the
//! proximal map of the L1 discrepancy term.

use alloc::vec::Vec;

use crate::model::{Branch, EmbeddingModel};

/// `v <- mu * v + g; w <- w - lr * v`.
pub fn sgd_momentum_step(params: &mut [f64], grads: &[f64], velocity: &mut [f64], lr: f64, momentum: f64) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), velocity.len());
    for ((w, g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = momentum * *v + g;
        *w -= lr * *v;
    }
}

/// Linear interpolation from `lr0` at step 0 to `lr_end` at `total_steps`.
pub fn lr_at(step: usize, total_steps: usize, lr0: f64, lr_end: f64) -> f64 {
    let total = total_steps.max(1);
    let t = step.min(total) as f64 / total as f64;
    (1.0 - t) * lr0 + t * lr_end
}

/// Momentum state for a whole model.
#[derive(Clone, Debug)]
pub struct Momentum {
    velocity: EmbeddingModel,
    pub momentum: f64,
}

impl Momentum {
    pub fn new(model: &EmbeddingModel, momentum: f64) -> Self {
        Self {
            velocity: model.zeros_like(),
            momentum,
        }
    }

    pub fn step(&mut self, model: &mut EmbeddingModel, grad: &EmbeddingModel, lr: f64) {
        let mu = self.momentum;
        step_branch(&mut model.control, &grad.control, &mut self.velocity.control, lr, mu);
        step_branch(
            &mut model.treatment,
            &grad.treatment,
            &mut self.velocity.treatment,
            lr,
            mu,
        );
    }
}

fn step_branch(w: &mut Branch, g: &Branch, v: &mut Branch, lr: f64, mu: f64) {
    for ((w, g), v) in w.slices_mut().into_iter().zip(g.slices()).zip(v.slices_mut()) {
        sgd_momentum_step(w, g, v, lr, mu);
    }
}

#[inline]
fn soft_threshold(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Proximal map of `tau * |t - c|` applied coordinate-wise: the pair's
/// midpoint is kept and its difference shrinks by `2 tau`.
fn prox_pair(t: &mut [f64], c: &mut [f64], tau: f64) {
    for (a, b) in t.iter_mut().zip(c.iter_mut()) {
        let diff = *a - *b;
        if diff == 0.0 {
            continue;
        }
        let mid = 0.5 * (*a + *b);
        let half = 0.5 * soft_threshold(diff, 2.0 * tau);
        *a = mid + half;
        *b = mid - half;
    }
}

/// `argmin_x 1/2 (x - a)^2 + tau * sum_j |x - c_j|` with `sorted` ascending.
fn prox_sum_abs(a: f64, sorted: &[f64], tau: f64) -> f64 {
    let n = sorted.len();
    // the subdifferential x - a + tau * (#below - #above) is increasing in x;
    // walk the open intervals between distinct values and the kinks at them
    let mut k = 0;
    loop {
        let x = a - tau * (2.0 * k as f64 - n as f64);
        let lo = if k == 0 { f64::NEG_INFINITY } else { sorted[k - 1] };
        let hi = if k == n { f64::INFINITY } else { sorted[k] };
        if x > lo && x < hi {
            return x;
        }
        if k == n {
            return x;
        }
        let v = sorted[k];
        let mut e = k;
        while e < n && sorted[e] == v {
            e += 1;
        }
        let (below, above, equal) = (k as f64, (n - e) as f64, (e - k) as f64);
        let g_lo = v - a + tau * (below - above - equal);
        let g_hi = v - a + tau * (below - above + equal);
        if g_lo <= 0.0 && 0.0 <= g_hi {
            return v;
        }
        k = e;
    }
}

/// Proximal step for `tau * |P_t - P_c|_1` under the model's layout.
///
/// Per-item layouts use the exact joint proximal map. Pooled treatment rows
/// take one block step on the control rows (pulled towards the pooled row)
/// followed by the exact map for the pooled row given the control rows.
pub fn prox_discrepancy(model: &mut EmbeddingModel, tau: f64) {
    if tau == 0.0 {
        return;
    }
    let d = model.d;
    let layout = model.layout;
    let EmbeddingModel {
        control: c,
        treatment: t,
        ..
    } = model;
    if !layout.shared_users {
        prox_pair(&mut t.gamma, &mut c.gamma, tau);
        prox_pair(&mut t.user_bias, &mut c.user_bias, tau);
        prox_pair(
            core::slice::from_mut(&mut t.global_bias),
            core::slice::from_mut(&mut c.global_bias),
            tau,
        );
    }
    if !layout.pooled_items {
        prox_pair(&mut t.theta, &mut c.theta, tau);
        prox_pair(&mut t.item_bias, &mut c.item_bias, tau);
        return;
    }

    let n = c.item_bias.len();
    let mut column: Vec<f64> = Vec::with_capacity(n);
    for k in 0..=d {
        // coordinate k < d of theta, k == d is the item bias
        let get = |b: &Branch, j: usize| if k < d { b.theta[j * d + k] } else { b.item_bias[j] };
        let pooled = get(t, 0);
        column.clear();
        for j in 0..n {
            let cj = get(c, j);
            let cj = pooled + soft_threshold(cj - pooled, tau);
            if k < d {
                c.theta[j * d + k] = cj;
            } else {
                c.item_bias[j] = cj;
            }
            column.push(cj);
        }
        column.sort_by(f64::total_cmp);
        let new = prox_sum_abs(pooled, &column, tau);
        for j in 0..n {
            if k < d {
                t.theta[j * d + k] = new;
            } else {
                t.item_bias[j] = new;
            }
        }
    }
}
