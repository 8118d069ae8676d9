//! One function per subcommand. Each reads its section of the run
//! configuration, performs the computation and returns the files to write.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use gp_audio_core::gp::write_samples_csv;
use gp_audio_core::kernels::{LagTaper, SpectralLine, SpectrumWarning};
use gp_audio_core::optimizer::write_trace_csv;
use gp_audio_core::tasks::synth::{self, Excerpt, GapExcerpt, PitchExcerpt};
use gp_audio_core::tasks::{estimate_pitch_with, GapSummary, PitchResult};
use gp_audio_core::{
    fill_gaps, hz_to_midi, kernel_spectrum, load_wav, resample_to_8k, Error, GpModel, KernelFamily,
    Result, TimeSeries,
};
use serde::Serialize;

use crate::config::{FillConfig, GenConfig, PitchConfig, RunConfig};
use crate::output::Outputs;

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Context {
    /// Directory that relative input paths are resolved against.
    pub base_dir: PathBuf,
    /// `--seed` if given, else the configuration's seed, else 0.
    pub seed: u64,
    /// Whether a seed was given explicitly, on the command line or in the
    /// configuration.
    pub seed_given: bool,
    /// Override of the dense-inference size cap.
    pub max_n: Option<usize>,
    pub normalize: bool,
}

impl Context {
    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    fn model(&self, model: GpModel, jitter: Option<f64>) -> Result<GpModel> {
        let model = match jitter {
            Some(j) => model.with_jitter(j)?,
            None => model,
        };
        Ok(match self.max_n {
            Some(cap) => model.with_max_n(cap),
            None => model,
        })
    }
}

/// Loads a WAV (resampled to 8 kHz) or `time,value` CSV signal. Returns
/// the signal, scaled to unit peak magnitude when normalizing, and the
/// applied factor.
fn load_signal(path: &Path, normalize: bool) -> Result<(TimeSeries, f64)> {
    let is_wav = path
        .extension()
        .is_some_and(|ext| ext.eq_ignore_ascii_case("wav"));
    if is_wav {
        let audio = resample_to_8k(&load_wav(path)?)?;
        log::info!(
            "loaded {} ({:.3} s at {} Hz)",
            path.display(),
            audio.duration(),
            audio.sample_rate()
        );
        return audio.to_time_series(normalize);
    }
    let series = TimeSeries::load_csv(path)?;
    log::info!("loaded {} ({} samples)", path.display(), series.len());
    if !normalize {
        return Ok((series, 1.0));
    }
    let peak = series.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Err(Error::DegenerateNormalization);
    }
    let scale = 1.0 / peak;
    Ok((scale_series(series, scale)?, scale))
}

fn scale_series(series: TimeSeries, scale: f64) -> Result<TimeSeries> {
    let (times, values) = series.into_parts();
    TimeSeries::new(times, values.into_iter().map(|v| v * scale).collect())
}

fn section<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T> {
    section
        .as_ref()
        .ok_or_else(|| Error::Config(format!("the `{name}` subcommand needs a `{name}` section")))
}

pub fn sample(config: &RunConfig, ctx: &Context) -> Result<Outputs> {
    let section = section(&config.sample, "sample")?;
    if section.n_samples == 0 {
        return Err(Error::Config("sample.n_samples must be at least 1".into()));
    }
    let times = section.grid.times()?;
    let model = ctx.model(GpModel::new(section.kernel.clone()), section.jitter)?;
    log::info!("drawing {} samples on {} points", section.n_samples, times.len());
    let samples = model.sample_prior(&times, section.n_samples, ctx.seed)?;
    let mut out = Outputs::new();
    out.add("samples.csv", |w| write_samples_csv(w, &times, &samples));
    Ok(out)
}

#[derive(Serialize)]
struct SpectrumReport<'a> {
    lines: &'a [SpectralLine],
    warnings: &'a [SpectrumWarning],
    taper: LagTaper,
    lag_step: f64,
    max_lag: f64,
    bin_width: f64,
}

pub fn spectrum(config: &RunConfig) -> Result<Outputs> {
    let section = section(&config.spectrum, "spectrum")?;
    let density = kernel_spectrum(&section.kernel, section.f_max, section.n_points)?;
    for warning in &density.warnings {
        log::warn!("{warning:?}");
    }
    let mut out = Outputs::new();
    out.add("spectrum.csv", |w| density.write_csv(w));
    out.add_json(
        "spectrum_report.json",
        &SpectrumReport {
            lines: &density.lines,
            warnings: &density.warnings,
            taper: density.taper,
            lag_step: density.lag_step,
            max_lag: density.max_lag,
            bin_width: density.bin_width(),
        },
    );
    Ok(out)
}

#[derive(Serialize)]
struct PitchReport<'a> {
    input: &'a Path,
    normalization_factor: f64,
    n_samples: usize,
    #[serde(flatten)]
    result: &'a PitchResult,
}

pub fn pitch(config: &RunConfig, ctx: &Context) -> Result<Outputs> {
    let section: &PitchConfig = section(&config.pitch, "pitch")?;
    let (data, scale) = load_signal(&ctx.resolve(&section.input), ctx.normalize)?;
    let mut optim = section.optimizer.clone();
    if ctx.seed_given {
        optim.seed = ctx.seed;
    }
    log::info!("estimating {} fundamentals from {} samples", section.events.len(), data.len());
    let result = estimate_pitch_with(
        |kernel| ctx.model(GpModel::new(kernel), section.jitter),
        &data,
        &section.events,
        section.noise_variance,
        &optim,
        &section.options,
    )?;
    for (i, e) in result.events.iter().enumerate() {
        log::info!("event {i}: {:.3} Hz (MIDI {:.3})", e.hz, e.midi);
    }
    let mut out = Outputs::new();
    out.add_json(
        "pitch_report.json",
        &PitchReport {
            input: &section.input,
            normalization_factor: scale,
            n_samples: data.len(),
            result: &result,
        },
    );
    out.add("trace.csv", |w| write_trace_csv(w, &result.trace));
    Ok(out)
}

#[derive(Serialize)]
struct FillReport<'a> {
    input: &'a Path,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth: Option<&'a Path>,
    normalization_factor: f64,
    n_samples: usize,
    gaps: Vec<GapSummary>,
}

pub fn fill(config: &RunConfig, ctx: &Context) -> Result<Outputs> {
    let section: &FillConfig = section(&config.fill, "fill")?;
    let (data, scale) = load_signal(&ctx.resolve(&section.input), ctx.normalize)?;
    let truth = match &section.truth {
        Some(path) => {
            let (truth, _) = load_signal(&ctx.resolve(path), false)?;
            Some(scale_series(truth, scale)?)
        }
        None => None,
    };
    let model = ctx.model(GpModel::new(section.kernel.clone()), section.jitter)?;
    log::info!("filling {} gaps in {} samples", section.gaps.len(), data.len());
    let result = fill_gaps(&data, &section.gaps, &model, truth.as_ref(), section.full_covariance)?;
    let gaps = result.summaries();
    for (i, g) in gaps.iter().enumerate() {
        match g.rms {
            Some(rms) => log::info!("gap {}: [{}, {}) rms {rms:.6}", i + 1, g.start, g.end),
            None => log::info!("gap {}: [{}, {})", i + 1, g.start, g.end),
        }
    }
    let mut out = Outputs::new();
    out.add_json(
        "fill_report.json",
        &FillReport {
            input: &section.input,
            truth: section.truth.as_deref(),
            normalization_factor: scale,
            n_samples: data.len(),
            gaps,
        },
    );
    for (i, gap) in result.gaps.iter().enumerate() {
        out.add(format!("gap_{}.csv", i + 1), |w| gap.prediction.write_csv(w));
        if section.full_covariance {
            out.add(format!("gap_{}_covariance.csv", i + 1), |w| {
                gap.prediction.write_covariance_csv(w).expect("covariance was requested")
            });
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct NoteReport {
    onset: f64,
    offset: f64,
    hz: f64,
    midi: f64,
    omega: f64,
    decay: f64,
}

#[derive(Serialize)]
struct GenReport<'a> {
    preset: &'a str,
    seed: u64,
    sample_rate: f64,
    n_samples: usize,
    lengthscale: f64,
    noise_variance: f64,
    notes: Vec<NoteReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gaps: Option<&'a [[f64; 2]]>,
}

fn note_reports(notes: &[synth::SynthNote]) -> Result<Vec<NoteReport>> {
    notes
        .iter()
        .map(|n| {
            Ok(NoteReport {
                onset: n.window.alpha(),
                offset: n.window.beta(),
                hz: n.hz,
                midi: hz_to_midi(n.hz)?,
                omega: 2.0 * PI * n.hz,
                decay: n.decay,
            })
        })
        .collect()
}

const GEN_DATA: &str = "data.csv";
const GEN_TRUTH: &str = "truth.csv";

pub fn gen(config: &RunConfig, ctx: &Context) -> Result<Outputs> {
    let section: &GenConfig = section(&config.gen, "gen")?;
    log::info!("generating preset `{}` with seed {}", section.preset, ctx.seed);
    let mut out = Outputs::new();
    match synth::generate(&section.preset, ctx.seed)? {
        Excerpt::Pitch(excerpt) => gen_pitch(&mut out, section, ctx.seed, &excerpt)?,
        Excerpt::Gaps(excerpt) => gen_gaps(&mut out, section, ctx.seed, &excerpt)?,
    }
    Ok(out)
}

/// A configuration for the generated data. The data are written on their
/// natural scale, so normalization is off.
fn generated_config(seed: u64) -> RunConfig {
    RunConfig {
        seed: Some(seed),
        normalize: false,
        ..RunConfig::empty()
    }
}

fn gen_pitch(out: &mut Outputs, section: &GenConfig, seed: u64, excerpt: &PitchExcerpt) -> Result<()> {
    out.add(GEN_DATA, |w| excerpt.data.write_csv(w));
    let (optimizer, options) = PitchExcerpt::search_settings();
    for (family, name) in [(KernelFamily::Ecq, "pitch_ecq.json"), (KernelFamily::Ec, "pitch_ec.json")] {
        let config = RunConfig {
            pitch: Some(PitchConfig {
                input: GEN_DATA.into(),
                events: excerpt.events(family),
                noise_variance: excerpt.noise_variance,
                optimizer: optimizer.clone(),
                options: options.clone(),
                jitter: None,
            }),
            ..generated_config(seed)
        };
        out.add_json(name, &config);
    }
    out.add_json(
        "gen_report.json",
        &GenReport {
            preset: &section.preset,
            seed,
            sample_rate: synth::SAMPLE_RATE,
            n_samples: excerpt.data.len(),
            lengthscale: excerpt.lengthscale,
            noise_variance: excerpt.noise_variance,
            notes: note_reports(&excerpt.notes)?,
            gaps: None,
        },
    );
    Ok(())
}

fn gen_gaps(out: &mut Outputs, section: &GenConfig, seed: u64, excerpt: &GapExcerpt) -> Result<()> {
    out.add(GEN_DATA, |w| excerpt.data.write_csv(w));
    out.add(GEN_TRUTH, |w| excerpt.truth.write_csv(w));
    for (family, name) in [
        (KernelFamily::Ecq, "fill_ecq.json"),
        (KernelFamily::Ec, "fill_ec.json"),
        (KernelFamily::Eq, "fill_eq.json"),
    ] {
        let model = excerpt.model(family)?;
        let config = RunConfig {
            fill: Some(FillConfig {
                input: GEN_DATA.into(),
                truth: Some(GEN_TRUTH.into()),
                gaps: excerpt.gaps.clone(),
                kernel: model.kernel,
                jitter: None,
                full_covariance: false,
            }),
            ..generated_config(seed)
        };
        out.add_json(name, &config);
    }
    out.add_json(
        "gen_report.json",
        &GenReport {
            preset: &section.preset,
            seed,
            sample_rate: synth::SAMPLE_RATE,
            n_samples: excerpt.data.len(),
            lengthscale: excerpt.lengthscale,
            noise_variance: excerpt.noise_variance,
            notes: note_reports(&excerpt.notes)?,
            gaps: Some(excerpt.gaps.intervals()),
        },
    );
    Ok(())
}
