//! Stationary kernels, change-windows, their composition into the
//! non-stationary music covariance, and kernel spectra.

mod composite;
mod lattice;
mod params;
mod spectrum;
mod stationary;
mod window;

pub use composite::{CompositeKernel, Event};
pub(crate) use composite::check_time_grid;
pub use params::{KernelParam, Param};
pub use spectrum::{kernel_spectrum, LagTaper, SpectralDensity, SpectralLine, SpectrumWarning};
pub use stationary::{KernelFamily, KernelSpec};
pub use window::ChangeWindow;
