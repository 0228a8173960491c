#![allow(dead_code)]

use cause_core::data::{Interaction, Origin, SplitBundle};
use cause_core::model::sigmoid;
use cause_core::rng;
use cause_core::split::build_propensity;
use rand::Rng;

/// Events from a low-rank ground truth. Control exposure is skewed by item
/// popularity; treatment, validation and test exposure is uniform.
pub struct World {
    pub n_users: usize,
    pub n_items: usize,
    users: Vec<[f64; 3]>,
    items: Vec<[f64; 3]>,
    item_bias: Vec<f64>,
    exposure: Vec<f64>,
}

impl World {
    pub fn new(n_users: usize, n_items: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, "world");
        let mut vec3 = |s: f64| [rng.gen_range(-s..s), rng.gen_range(-s..s), rng.gen_range(-s..s)];
        let users = (0..n_users).map(|_| vec3(1.5)).collect();
        let items = (0..n_items).map(|_| vec3(1.5)).collect();
        let item_bias = (0..n_items).map(|j| if j % 3 == 0 { 0.8 } else { -0.8 }).collect();
        let exposure = (0..n_items).map(|j| 1.0 / (j as f64 + 1.0)).collect();
        Self {
            n_users,
            n_items,
            users,
            items,
            item_bias,
            exposure,
        }
    }

    /// The first `n_popular` items get 20x the exposure of the rest and
    /// respond to a different user factor, so a rank-1 model must choose
    /// which group to explain.
    pub fn two_groups(n_users: usize, n_items: usize, n_popular: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, "world");
        let users = (0..n_users)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0])
            .collect();
        let items = (0..n_items)
            .map(|j| {
                let y = if rng.gen_bool(0.5) { 2.5 } else { -2.5 };
                if j < n_popular {
                    [y, 0.0, 0.0]
                } else {
                    [0.0, y, 0.0]
                }
            })
            .collect();
        let exposure = (0..n_items).map(|j| if j < n_popular { 20.0 } else { 1.0 }).collect();
        Self {
            n_users,
            n_items,
            users,
            items,
            item_bias: vec![0.5; n_items],
            exposure,
        }
    }

    pub fn click_prob(&self, u: usize, j: usize) -> f64 {
        let z: f64 = (0..3).map(|k| self.users[u][k] * self.items[j][k]).sum::<f64>() + self.item_bias[j] - 0.5;
        sigmoid(z)
    }

    fn draw(&self, n: usize, skewed: bool, origin: Origin, rng: &mut rng::Rng) -> Vec<Interaction> {
        let weights: Vec<f64> = (0..self.n_items)
            .map(|j| if skewed { self.exposure[j] } else { 1.0 })
            .collect();
        let total: f64 = weights.iter().sum();
        (0..n)
            .map(|_| {
                let u = rng.gen_range(0..self.n_users);
                let mut x = rng.gen::<f64>() * total;
                let mut j = 0;
                while j + 1 < self.n_items && x >= weights[j] {
                    x -= weights[j];
                    j += 1;
                }
                let label = rng.gen::<f64>() < self.click_prob(u, j);
                Interaction::new(u as u32, j as u32, label, origin)
            })
            .collect()
    }

    pub fn bundle(&self, n_control: usize, n_treatment: usize, n_test: usize, seed: u64) -> SplitBundle {
        let mut rng = rng::stream(seed, "world-events");
        let train_control = self.draw(n_control, true, Origin::Control, &mut rng);
        let train_treatment = self.draw(n_treatment, false, Origin::Treatment, &mut rng);
        let validation = self.draw(n_test / 2, true, Origin::Control, &mut rng);
        let test = self.draw(n_test, false, Origin::Treatment, &mut rng);
        let propensity = build_propensity(&train_control, self.n_items, 10.0).unwrap();
        SplitBundle {
            train_control,
            train_treatment,
            validation,
            test,
            propensity,
            n_users: self.n_users,
            n_items: self.n_items,
        }
    }
}
