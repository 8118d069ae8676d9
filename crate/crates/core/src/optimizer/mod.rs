//! Empirical-Bayes hyperparameter learning: gradient ascent on the log
//! marginal likelihood in log-parameter space, plus a grid search over
//! fundamental frequencies to start it in the right basin.

mod fit;
mod grid;

pub use fit::{fit, write_trace_csv, FitResult, OptimConfig, StopReason, TraceRecord};
pub use grid::{frequency_grid_init, FrequencyGrid};
