//! Exact dense GP inference: prior sampling, log marginal likelihood and
//! its gradient, and posterior prediction of the noise-free function.

mod factor;
mod model;
mod prediction;
mod series;

pub use factor::MAX_JITTER;
pub use model::{GpModel, Posterior, DEFAULT_JITTER, DEFAULT_MAX_N};
pub use prediction::{write_samples_csv, PosteriorPrediction};
pub use series::TimeSeries;
