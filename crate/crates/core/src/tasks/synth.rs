//! Synthetic excerpts shaped like the two evaluation recordings: a 0.7 s
//! monophonic bass line of three notes and a 1.14 s polyphonic passage with
//! a transient gap and a decay gap, both at 8 kHz.
//!
//! Each note is an ECQ prior draw on its window's support, scaled by an
//! exponential decay from its onset, so amplitudes vary in time as in real
//! plucked or struck notes.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::gaps::GapSpec;
use super::pitch::{EventConfig, PitchOptions};
use crate::error::{Error, Result};
use crate::gp::{GpModel, TimeSeries};
use crate::kernels::{ChangeWindow, CompositeKernel, Event, KernelFamily, KernelSpec};
use crate::optimizer::{FrequencyGrid, OptimConfig};

pub const SAMPLE_RATE: f64 = 8000.0;

/// Window steepness of every synthetic event, 1/s.
pub const VARSIGMA: f64 = 1000.0;

/// Exponentiated-cosine concentration of every synthetic note.
pub const Z: f64 = 2.0;

/// Jitter used when drawing notes. It adds white noise far below the
/// observation noise and keeps the nearly low-rank ECQ Gram factorizable
/// without escalation.
const DRAW_JITTER: f64 = 1e-6;

/// Window values below this are treated as outside the event's support.
const SUPPORT_FLOOR: f64 = 1e-9;

/// Preset names accepted by [`generate`].
pub const PRESETS: [&str; 2] = ["paper-pitch", "paper-gaps"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthNote {
    pub window: ChangeWindow,
    pub hz: f64,
    /// Time constant of the amplitude decay after the onset, s.
    pub decay: f64,
}

#[derive(Debug, Clone)]
pub struct PitchExcerpt {
    pub data: TimeSeries,
    pub notes: Vec<SynthNote>,
    pub lengthscale: f64,
    pub noise_variance: f64,
}

impl PitchExcerpt {
    /// Pitch-search schedule suited to this preset: a semitone grid
    /// covering the drawn range, one refinement pass per event and a
    /// single joint step. Refinement stops once the gradient is small on
    /// the scale of the excerpt's likelihood (thousands of nats), which is
    /// far below what moves a fundamental by a cent.
    pub fn search_settings() -> (OptimConfig, PitchOptions) {
        let mut optim = OptimConfig::new(Vec::new());
        optim.max_iters = 30;
        optim.grad_tol = 1.0;
        optim.step_size = 1e-4;
        let options = PitchOptions {
            grid: FrequencyGrid {
                min_hz: 82.0,
                max_hz: Some(221.0),
                steps_per_octave: 12,
            },
            refine_events: true,
            joint_max_iters: Some(1),
        };
        (optim, options)
    }

    /// Event configurations for the pitch task with the generating
    /// hyperparameters held fixed and the true fundamentals as references.
    /// For `Ec` the lengthscale is dropped.
    pub fn events(&self, family: KernelFamily) -> Vec<EventConfig> {
        self.notes
            .iter()
            .map(|note| {
                let mut fixed_params = BTreeMap::from([("z".to_string(), Z)]);
                if family == KernelFamily::Ecq {
                    fixed_params.insert("l".to_string(), self.lengthscale);
                }
                EventConfig {
                    window: note.window,
                    kernel_family: family,
                    fixed_params,
                    reference_pitch: Some(note.hz),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct GapExcerpt {
    /// Observed signal, zero inside the gaps.
    pub data: TimeSeries,
    /// Complete signal, including the samples inside the gaps.
    pub truth: TimeSeries,
    pub gaps: GapSpec,
    pub notes: Vec<SynthNote>,
    pub lengthscale: f64,
    pub noise_variance: f64,
    /// Lengthscale of the EQ comparison model, s.
    pub eq_lengthscale: f64,
}

impl GapExcerpt {
    /// Index of the transient gap (around an onset) in `gaps`.
    pub const TRANSIENT: usize = 0;
    /// Index of the decay gap (late in sustained notes) in `gaps`.
    pub const DECAY: usize = 1;

    /// Manually tuned fill model of the given family: the generating windows
    /// with ECQ at the true hyperparameters, EC at the true `z` and
    /// fundamentals, or EQ with unit variance and a short lengthscale.
    pub fn model(&self, family: KernelFamily) -> Result<GpModel> {
        let events = self
            .notes
            .iter()
            .map(|note| {
                let omega = 2.0 * PI * note.hz;
                let kernel = match family {
                    KernelFamily::Ecq => KernelSpec::ecq(Z, omega, self.lengthscale)?,
                    KernelFamily::Ec => KernelSpec::ec(Z, omega)?,
                    KernelFamily::Eq => KernelSpec::eq(1.0, self.eq_lengthscale)?,
                };
                Ok(Event::new(note.window, kernel))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GpModel::new(CompositeKernel::new(events, self.noise_variance)?))
    }
}

fn grid(duration: f64) -> Vec<f64> {
    let n = (duration * SAMPLE_RATE).round() as usize;
    (0..n).map(|i| i as f64 / SAMPLE_RATE).collect()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Sum of the notes drawn on `times` plus white noise.
fn render(
    times: &[f64],
    notes: &[SynthNote],
    lengthscale: f64,
    noise_variance: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let mut signal = vec![0.0; times.len()];
    for note in notes {
        let support: Vec<usize> = (0..times.len())
            .filter(|&i| note.window.eval(times[i]) > SUPPORT_FLOOR)
            .collect();
        let support_times: Vec<f64> = support.iter().map(|&i| times[i]).collect();
        let kernel = CompositeKernel::single(
            note.window,
            KernelSpec::ecq(Z, 2.0 * PI * note.hz, lengthscale)?,
            0.0,
        )?;
        let draw = GpModel::new(kernel)
            .with_jitter(DRAW_JITTER)?
            .with_max_n(usize::MAX)
            .sample_prior(&support_times, 1, rng.random())?
            .remove(0);
        let onset = note.window.alpha();
        for (&i, v) in support.iter().zip(draw) {
            let envelope = (-(times[i] - onset).max(0.0) / note.decay).exp();
            signal[i] += envelope * v;
        }
    }
    let noise = Normal::new(0.0, noise_variance.sqrt()).expect("positive variance");
    for v in &mut signal {
        *v += noise.sample(rng);
    }
    Ok(signal)
}

/// Three consecutive bass notes over 0.7 s. Fundamentals are drawn
/// log-uniformly from 82–220 Hz unless given.
pub fn paper_pitch(seed: u64, fundamentals: Option<[f64; 3]>) -> Result<PitchExcerpt> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hz = match fundamentals {
        Some(hz) => hz,
        None => std::array::from_fn(|_| log_uniform(&mut rng, 82.0, 220.0)),
    };
    let bounds = [(0.0, 0.235), (0.235, 0.47), (0.47, 0.7)];
    let notes = bounds
        .iter()
        .zip(hz)
        .map(|(&(alpha, beta), hz)| {
            Ok(SynthNote {
                window: ChangeWindow::new(VARSIGMA, alpha, beta)?,
                hz,
                decay: 0.2,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let times = grid(0.7);
    let (lengthscale, noise_variance) = (0.03, 1e-3);
    let values = render(&times, &notes, lengthscale, noise_variance, &mut rng)?;
    Ok(PitchExcerpt {
        data: TimeSeries::new(times, values)?,
        notes,
        lengthscale,
        noise_variance,
    })
}

/// Four overlapping notes over 1.14 s with fundamentals drawn
/// log-uniformly from 110–440 Hz. The transient gap spans the third onset;
/// the decay gap lies 250 ms after the last onset, where every sounding
/// note is decaying smoothly.
pub fn paper_gaps(seed: u64) -> Result<GapExcerpt> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = [(0.0, 0.6), (0.25, 1.14), (0.5, 1.14), (0.75, 1.14)];
    let notes = bounds
        .iter()
        .map(|&(alpha, beta)| {
            Ok(SynthNote {
                window: ChangeWindow::new(VARSIGMA, alpha, beta)?,
                hz: log_uniform(&mut rng, 110.0, 440.0),
                decay: 1.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let times = grid(1.14);
    let (lengthscale, noise_variance) = (0.5, 1e-4);
    let values = render(&times, &notes, lengthscale, noise_variance, &mut rng)?;
    let gaps = GapSpec::new(vec![[0.49, 0.54], [1.0, 1.05]])?;
    let truth = TimeSeries::new(times.clone(), values.clone())?;
    let observed = times
        .iter()
        .zip(values)
        .map(|(&t, v)| if gaps.locate(t).is_some() { 0.0 } else { v })
        .collect();
    Ok(GapExcerpt {
        data: TimeSeries::new(times, observed)?,
        truth,
        gaps,
        notes,
        lengthscale,
        noise_variance,
        eq_lengthscale: 5e-4,
    })
}

/// Generated excerpt of either preset.
#[derive(Debug, Clone)]
pub enum Excerpt {
    Pitch(PitchExcerpt),
    Gaps(GapExcerpt),
}

pub fn generate(preset: &str, seed: u64) -> Result<Excerpt> {
    match preset {
        "paper-pitch" => Ok(Excerpt::Pitch(paper_pitch(seed, None)?)),
        "paper-gaps" => Ok(Excerpt::Gaps(paper_gaps(seed)?)),
        other => Err(Error::Config(format!(
            "gen: unknown preset `{other}` (expected one of {})",
            PRESETS.join(", ")
        ))),
    }
}
