//! Causal embeddings for recommendation.
//!
//! The crate jointly factorizes a large feedback sample logged under a biased
//! control policy and a small sample logged under uniform exposure, and ships
//! the machinery needed to evaluate that against standard baselines:
//!
//! * [`data`] and [`ingest`]: events, id maps, ratings parsing and binarization.
//! * [`split`]: the regular and popularity-skewed split protocols and the
//!   propensity table.
//! * [`model`], [`loss`] and [`optim`]: the two-branch embedding model, its
//!   losses and exact gradients, and SGD with momentum.
//! * [`train`]: SP2V, WSP2V, BPR, BanditNet and CausE trainers.
//! * [`eval`]: MSE, NLL, AUC and lifts over the average-rate predictor.
//! * [`policy`]: policies, rewards, ITE and IPS on small explicit worlds.
//!
//! Everything here is pure computation over in-memory data. File formats and
//! the command line live in the companion `cause` crate.
#![no_std]
// `!(x > 0.0)` deliberately rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod data;
pub mod eval;
pub mod ingest;
pub mod loss;
pub mod model;
pub mod optim;
pub mod policy;
pub mod rng;
pub mod split;
pub mod train;

pub use data::{Dataset, IdMap, Interaction, Origin, PropensityTable, SplitBundle};
pub use eval::MetricReport;
pub use model::{Branch, EmbeddingModel, HyperParams, Layout};
pub use train::{Adaptation, Method, TrainSpec};
