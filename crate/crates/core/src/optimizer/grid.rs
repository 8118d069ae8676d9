use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{GpModel, TimeSeries};
use crate::kernels::{KernelFamily, Param};

fn default_min_hz() -> f64 {
    27.5
}

fn default_steps() -> usize {
    12
}

/// Geometric candidate grid for fundamental frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGrid {
    #[serde(default = "default_min_hz")]
    pub min_hz: f64,
    /// Upper end; a quarter of the Nyquist frequency when absent.
    #[serde(default)]
    pub max_hz: Option<f64>,
    #[serde(default = "default_steps")]
    pub steps_per_octave: usize,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        FrequencyGrid {
            min_hz: default_min_hz(),
            max_hz: None,
            steps_per_octave: default_steps(),
        }
    }
}

impl FrequencyGrid {
    /// Candidates `min_hz * 2^(k / steps_per_octave)` up to the upper end.
    pub fn candidates(&self, sample_rate: f64) -> Result<Vec<f64>> {
        let max_hz = self.max_hz.unwrap_or(sample_rate / 8.0);
        if !(self.min_hz.is_finite() && self.min_hz > 0.0) {
            return Err(Error::InvalidParameter {
                name: "min_hz",
                value: self.min_hz,
                reason: "must be positive",
            });
        }
        if !(max_hz.is_finite() && max_hz >= self.min_hz && max_hz < 0.5 * sample_rate) {
            return Err(Error::InvalidParameter {
                name: "max_hz",
                value: max_hz,
                reason: "must lie between min_hz and the Nyquist frequency",
            });
        }
        if self.steps_per_octave == 0 {
            return Err(Error::InvalidParameter {
                name: "steps_per_octave",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        let steps = self.steps_per_octave as f64;
        let count = (steps * (max_hz / self.min_hz).log2() + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|k| self.min_hz * (k as f64 / steps).exp2())
            .collect())
    }
}

/// Picks the candidate fundamental (Hz) for `event` that maximizes the log
/// marginal likelihood on the samples where the event's window exceeds 0.5,
/// with every other hyperparameter fixed. Ties go to the lowest frequency.
pub fn frequency_grid_init(
    model: &GpModel,
    data: &TimeSeries,
    event: usize,
    candidates: &[f64],
) -> Result<f64> {
    let spec = model
        .kernel
        .events()
        .get(event)
        .ok_or_else(|| Error::UnknownParam(Param::omega(event).to_string()))?;
    if spec.kernel.family() == KernelFamily::Eq {
        return Err(Error::UnknownParam(Param::omega(event).to_string()));
    }
    if candidates.is_empty() {
        return Err(Error::input("optimizer", "no candidate frequencies"));
    }
    let nyquist = 0.5
        * data
            .median_sample_rate()
            .ok_or_else(|| Error::input("optimizer", "need at least two samples"))?;
    if let Some(&bad) = candidates.iter().find(|&&f| !(f > 0.0 && f < nyquist)) {
        return Err(Error::input(
            "optimizer",
            format!("candidate {bad} Hz outside (0, {nyquist}) Hz"),
        ));
    }
    let window = spec.window;
    let subset = data
        .filter(|_, t| window.eval(t) > 0.5)
        .ok_or(Error::EmptyWindow { event })?;
    model.check_size(subset.len())?;

    // Gram of the events that do not change, shared by every candidate.
    let times = subset.times();
    let n = times.len();
    let mut fixed = faer::Mat::<f64>::zeros(n, n);
    if let Some(others) = model.kernel.subset(|i| i != event) {
        others.add_symmetric_gram(&mut fixed, times);
    }

    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[a].total_cmp(&candidates[b]));
    let mut best: Option<(f64, f64)> = None;
    for i in order {
        let hz = candidates[i];
        let kernel = model.kernel.with_param(Param::omega(event), 2.0 * PI * hz)?;
        let own = kernel.subset(|i| i == event).expect("event exists");
        let mut k = fixed.clone();
        own.add_symmetric_gram(&mut k, times);
        let trial = GpModel {
            kernel,
            ..model.clone()
        };
        let lml = trial.condition_gram(&subset, &k)?.log_marginal_likelihood();
        log::trace!("optimizer: event {event} candidate {hz} Hz lml {lml}");
        if best.is_none_or(|(_, b)| lml > b) {
            best = Some((hz, lml));
        }
    }
    Ok(best.expect("non-empty candidates").0)
}
