//! Shared domain types: feedback events, id maps, datasets and split bundles.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

/// Which policy logged an event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    /// Logged under the biased production policy.
    Control,
    /// Logged under uniform exposure.
    Treatment,
}

impl Origin {
    pub fn code(self) -> char {
        match self {
            Origin::Control => 'c',
            Origin::Treatment => 't',
        }
    }

    pub fn from_code(c: &str) -> Option<Self> {
        match c {
            "c" => Some(Origin::Control),
            "t" => Some(Origin::Treatment),
            _ => None,
        }
    }
}

/// One binary feedback event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Interaction {
    pub user: u32,
    pub item: u32,
    pub label: bool,
    pub origin: Origin,
}

impl Interaction {
    pub fn new(user: u32, item: u32, label: bool, origin: Origin) -> Self {
        Self {
            user,
            item,
            label,
            origin,
        }
    }

    /// The label as a real target, 0.0 or 1.0.
    #[inline]
    pub fn y(&self) -> f64 {
        if self.label {
            1.0
        } else {
            0.0
        }
    }

    #[inline]
    pub fn user(&self) -> usize {
        self.user as usize
    }

    #[inline]
    pub fn item(&self) -> usize {
        self.item as usize
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = origin;
        self
    }
}

/// Bijection between external tokens and dense indices assigned in
/// first-appearance order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdMap {
    forward: BTreeMap<String, u32>,
    backward: Vec<String>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the index of `external_id`, assigning the next unused one if
    /// the token has not been seen yet.
    pub fn register(&mut self, external_id: &str) -> u32 {
        if let Some(&idx) = self.forward.get(external_id) {
            return idx;
        }
        let idx = self.backward.len() as u32;
        self.forward.insert(String::from(external_id), idx);
        self.backward.push(String::from(external_id));
        idx
    }

    pub fn get(&self, external_id: &str) -> Option<u32> {
        self.forward.get(external_id).copied()
    }

    pub fn external(&self, idx: u32) -> Option<&str> {
        self.backward.get(idx as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.backward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.backward.is_empty()
    }

    /// Tokens in index order.
    pub fn tokens(&self) -> &[String] {
        &self.backward
    }
}

/// An in-memory event log over a fixed user and item universe.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub interactions: Vec<Interaction>,
    pub user_map: IdMap,
    pub item_map: IdMap,
    pub n_users: usize,
    pub n_items: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.interactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }

    /// Dataset over dense indices only, with synthetic tokens.
    pub fn from_indexed(interactions: Vec<Interaction>, n_users: usize, n_items: usize) -> Self {
        let mut user_map = IdMap::new();
        let mut item_map = IdMap::new();
        for u in 0..n_users {
            user_map.register(&alloc::format!("{u}"));
        }
        for i in 0..n_items {
            item_map.register(&alloc::format!("{i}"));
        }
        Self {
            interactions,
            user_map,
            item_map,
            n_users,
            n_items,
        }
    }
}

/// Per-item logging probabilities and clipped importance weights.
#[derive(Clone, Debug, PartialEq)]
pub struct PropensityTable {
    /// Item marginal under the control policy; sums to one.
    pub control_prob: Vec<f64>,
    /// Item marginal under uniform exposure.
    pub treatment_prob: Vec<f64>,
    /// `min(treatment_prob / control_prob, cap)`.
    pub weight: Vec<f64>,
}

impl PropensityTable {
    pub fn n_items(&self) -> usize {
        self.control_prob.len()
    }

    /// Raw ratio `treatment_prob / control_prob` clipped at `cap`.
    pub fn capped_ratio(&self, item: usize, cap: f64) -> f64 {
        let r = self.treatment_prob[item] / self.control_prob[item];
        if r > cap {
            cap
        } else {
            r
        }
    }
}

/// The event sets consumed by trainers and evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitBundle {
    pub train_control: Vec<Interaction>,
    pub train_treatment: Vec<Interaction>,
    pub validation: Vec<Interaction>,
    pub test: Vec<Interaction>,
    pub propensity: PropensityTable,
    pub n_users: usize,
    pub n_items: usize,
}

impl SplitBundle {
    pub fn total_events(&self) -> usize {
        self.train_control.len() + self.train_treatment.len() + self.validation.len() + self.test.len()
    }
}
