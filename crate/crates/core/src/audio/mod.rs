//! Audio ingestion: WAV files, decimation to 8 kHz and conversion to a
//! time series.

mod resample;
mod wav;

pub use resample::{resample_to_8k, PASSBAND_HZ, STOPBAND_HZ, TARGET_RATE};
pub use wav::{load_wav, parse_wav, write_wav, WavEncoding};

use crate::error::{Error, Result};
use crate::gp::TimeSeries;

/// Mono audio at an integer sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    sample_rate: u32,
    samples: Vec<f64>,
}

impl AudioBuffer {
    pub fn new(sample_rate: u32, samples: Vec<f64>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::UnsupportedRate(0));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::input("audio", format!("sample {i} is not finite")));
        }
        Ok(AudioBuffer {
            sample_rate,
            samples,
        })
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Samples at times `i / sample_rate`. With `normalize`, values are
    /// scaled so the peak magnitude is 1; the applied factor is returned
    /// (1 otherwise).
    pub fn to_time_series(&self, normalize: bool) -> Result<(TimeSeries, f64)> {
        if self.samples.is_empty() {
            return Err(Error::input("audio", "buffer holds no samples"));
        }
        let scale = if normalize {
            let peak = self.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if peak == 0.0 {
                return Err(Error::DegenerateNormalization);
            }
            1.0 / peak
        } else {
            1.0
        };
        let rate = self.sample_rate as f64;
        let times = (0..self.samples.len()).map(|i| i as f64 / rate).collect();
        let values = self.samples.iter().map(|v| v * scale).collect();
        Ok((TimeSeries::new(times, values)?, scale))
    }
}
