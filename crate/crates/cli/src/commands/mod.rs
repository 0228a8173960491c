//! Subcommand implementations. Each returns its results so the acceptance
//! suite can drive the same code paths without spawning processes.

mod evaluate;
mod prepare;
mod simulate;
mod sweep;
mod train;

pub use evaluate::{append_metrics_row, cmd_evaluate, metrics_row, METRICS_HEADER};
pub use prepare::{cmd_prepare, load_dataset, split_for_seed};
pub use simulate::{cmd_simulate, SimRow};
pub use sweep::{cmd_sweep, inject_prefix, SweepRow, SWEEP_HEADER};
pub use train::{cmd_train, default_model_path, fit, FittedRun};
