use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{GpModel, TimeSeries};
use crate::kernels::{
    ChangeWindow, CompositeKernel, Event, KernelFamily, KernelParam, KernelSpec, Param,
};
use crate::optimizer::{fit, frequency_grid_init, FrequencyGrid, OptimConfig, TraceRecord};

/// MIDI note number of a frequency: `69 + 12 log2(f / 440)`.
pub fn hz_to_midi(hz: f64) -> Result<f64> {
    if !(hz.is_finite() && hz > 0.0) {
        return Err(Error::input("tasks", format!("frequency must be positive, got {hz}")));
    }
    Ok(69.0 + 12.0 * (hz / 440.0).log2())
}

/// One sound event of a pitch or fill task: its window, kernel family and
/// the hyperparameters held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventConfig {
    pub window: ChangeWindow,
    pub kernel_family: KernelFamily,
    #[serde(default)]
    pub fixed_params: BTreeMap<String, f64>,
    /// Ground-truth fundamental in Hz, used only for scoring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_pitch: Option<f64>,
}

impl EventConfig {
    fn fixed(&self, param: KernelParam) -> Result<f64> {
        self.fixed_params.get(param.name()).copied().ok_or_else(|| {
            Error::Config(format!(
                "tasks: {} event needs fixed parameter `{}`",
                self.kernel_family,
                param.name()
            ))
        })
    }

    /// Kernel for this event with fundamental `omega`; every other
    /// hyperparameter comes from `fixed_params`.
    pub fn kernel_with_omega(&self, omega: f64) -> Result<KernelSpec> {
        for key in self.fixed_params.keys() {
            let known = KernelParam::from_name(key)
                .filter(|p| *p != KernelParam::Omega && self.kernel_family.params().contains(p));
            if known.is_none() {
                return Err(Error::Config(format!(
                    "tasks: `{key}` is not a fixed parameter of the {} family",
                    self.kernel_family
                )));
            }
        }
        match self.kernel_family {
            KernelFamily::Eq => Err(Error::UnsupportedFamily("EQ")),
            KernelFamily::Ec => KernelSpec::ec(self.fixed(KernelParam::Z)?, omega),
            KernelFamily::Ecq => KernelSpec::ecq(
                self.fixed(KernelParam::Z)?,
                omega,
                self.fixed(KernelParam::Lengthscale)?,
            ),
        }
    }
}

fn default_refine_events() -> bool {
    true
}

/// Schedule of the pitch search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PitchOptions {
    #[serde(default)]
    pub grid: FrequencyGrid,
    /// Refine each fundamental on its own window's samples before the joint
    /// refinement on all samples.
    #[serde(default = "default_refine_events")]
    pub refine_events: bool,
    /// Iteration cap of the joint refinement; the optimizer's `max_iters`
    /// when absent.
    #[serde(default)]
    pub joint_max_iters: Option<usize>,
}

impl Default for PitchOptions {
    fn default() -> Self {
        PitchOptions {
            grid: FrequencyGrid::default(),
            refine_events: default_refine_events(),
            joint_max_iters: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PitchEstimate {
    /// Fitted fundamental, rad/s.
    pub omega: f64,
    pub hz: f64,
    pub midi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_hz: Option<f64>,
    /// `midi - midi(reference)`, semitones.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_semitones: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PitchResult {
    pub events: Vec<PitchEstimate>,
    /// Present when every event has a reference pitch.
    pub rms_semitones: Option<f64>,
    pub final_lml: f64,
    pub converged: bool,
    pub model: GpModel,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

/// Estimates the fundamental of every event. All hyperparameters except the
/// fundamentals are fixed; each fundamental is initialized by a grid search
/// on its window's samples, optionally refined there, and finally refined
/// jointly on all samples.
pub fn estimate_pitch(
    data: &TimeSeries,
    events: &[EventConfig],
    noise_variance: f64,
    optim: &OptimConfig,
    options: &PitchOptions,
) -> Result<PitchResult> {
    estimate_pitch_with(|k| Ok(GpModel::new(k)), data, events, noise_variance, optim, options)
}

/// As [`estimate_pitch`], with `make_model` controlling jitter and size cap.
pub fn estimate_pitch_with(
    make_model: impl FnOnce(CompositeKernel) -> Result<GpModel>,
    data: &TimeSeries,
    events: &[EventConfig],
    noise_variance: f64,
    optim: &OptimConfig,
    options: &PitchOptions,
) -> Result<PitchResult> {
    if events.is_empty() {
        return Err(Error::input("tasks", "pitch estimation needs at least one event"));
    }
    if let Some(e) = events.iter().find(|e| e.kernel_family == KernelFamily::Eq) {
        return Err(Error::UnsupportedFamily(e.kernel_family.name()));
    }
    if !optim.free_params.is_empty() {
        return Err(Error::Config(
            "pitch: optimizer.free_params must be empty; pitch estimation learns the fundamentals only".into(),
        ));
    }
    let rate = data
        .median_sample_rate()
        .ok_or_else(|| Error::input("tasks", "need at least two samples"))?;
    let candidates = options.grid.candidates(rate)?;
    let start = candidates[candidates.len() / 2];

    let kernel_events = events
        .iter()
        .map(|e| Ok(Event::new(e.window, e.kernel_with_omega(2.0 * PI * start)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut model = make_model(CompositeKernel::new(kernel_events, noise_variance)?)?;

    for m in 0..events.len() {
        let hz = frequency_grid_init(&model, data, m, &candidates)?;
        log::info!("tasks: event {m} grid estimate {hz:.3} Hz");
        model.kernel = model.kernel.with_param(Param::omega(m), 2.0 * PI * hz)?;
    }

    if options.refine_events {
        for m in 0..events.len() {
            let window = events[m].window;
            let subset = data
                .filter(|_, t| window.eval(t) > 0.5)
                .ok_or(Error::EmptyWindow { event: m })?;
            let config = OptimConfig {
                free_params: vec![Param::omega(m)],
                ..optim.clone()
            };
            let local = fit(&model, &subset, &config)?;
            model.kernel = model
                .kernel
                .with_param(Param::omega(m), local.model.kernel.get(Param::omega(m))?)?;
            log::info!(
                "tasks: event {m} refined to {:.4} Hz",
                model.kernel.get(Param::omega(m))? / (2.0 * PI)
            );
        }
    }

    let config = OptimConfig {
        free_params: (0..events.len()).map(Param::omega).collect(),
        max_iters: options.joint_max_iters.unwrap_or(optim.max_iters),
        ..optim.clone()
    };
    let joint = fit(&model, data, &config)?;

    let estimates = events
        .iter()
        .enumerate()
        .map(|(m, e)| {
            let omega = joint.model.kernel.get(Param::omega(m))?;
            let hz = omega / (2.0 * PI);
            let midi = hz_to_midi(hz)?;
            let error_semitones = match e.reference_pitch {
                Some(r) => Some(midi - hz_to_midi(r)?),
                None => None,
            };
            Ok(PitchEstimate {
                omega,
                hz,
                midi,
                reference_hz: e.reference_pitch,
                error_semitones,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rms_semitones = estimates
        .iter()
        .map(|e| e.error_semitones)
        .collect::<Option<Vec<f64>>>()
        .map(|errs| (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt());

    Ok(PitchResult {
        events: estimates,
        rms_semitones,
        final_lml: joint.final_lml,
        converged: joint.converged,
        model: joint.model,
        trace: joint.trace,
    })
}
