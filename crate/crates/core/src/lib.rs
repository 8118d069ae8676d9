//! Gaussian-process models of audio built from change-windowed stationary
//! kernels, with pitch estimation and gap filling on top.

pub mod audio;
pub mod error;
pub mod gp;
pub mod kernels;
pub mod optimizer;
pub mod tasks;

/// Linear algebra backend; dense matrices in this API are `faer::Mat`.
pub use faer;

pub use audio::{load_wav, resample_to_8k, AudioBuffer};
pub use error::{Error, ErrorClass, Result};
pub use gp::{GpModel, Posterior, PosteriorPrediction, TimeSeries};
pub use kernels::{
    kernel_spectrum, ChangeWindow, CompositeKernel, Event, KernelFamily, KernelParam, KernelSpec,
    Param, SpectralDensity,
};
pub use optimizer::{fit, frequency_grid_init, FitResult, FrequencyGrid, OptimConfig};
pub use tasks::{
    estimate_pitch, fill_gaps, hz_to_midi, EventConfig, GapFillResult, GapSpec, PitchOptions,
    PitchResult,
};
