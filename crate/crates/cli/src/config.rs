//! The run configuration document: one JSON file holding a section per
//! subcommand. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use gp_audio_core::optimizer::OptimConfig;
use gp_audio_core::tasks::{EventConfig, GapSpec, PitchOptions};
use gp_audio_core::{CompositeKernel, Error, KernelSpec, Result};
use serde::{Deserialize, Serialize};

fn default_normalize() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for sampling, generation and optimizer restarts; `--seed`
    /// overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Scale audio input so its peak magnitude is 1.
    #[serde(default = "default_normalize")]
    pub normalize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch: Option<PitchConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill: Option<FillConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen: Option<GenConfig>,
}

/// Uniform grid `start + i * step` for `i < n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub step: f64,
    pub n: usize,
}

impl GridConfig {
    pub fn times(&self) -> Result<Vec<f64>> {
        if !(self.step.is_finite() && self.step > 0.0 && self.start.is_finite()) || self.n == 0 {
            return Err(Error::Config(format!(
                "sample.grid: need a finite start, a positive step and n >= 1 (got start {}, step {}, n {})",
                self.start, self.step, self.n
            )));
        }
        Ok((0..self.n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub kernel: CompositeKernel,
    pub grid: GridConfig,
    pub n_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub kernel: KernelSpec,
    pub f_max: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PitchConfig {
    /// WAV or `time,value` CSV, relative to the config file.
    pub input: PathBuf,
    pub events: Vec<EventConfig>,
    pub noise_variance: f64,
    #[serde(default = "pitch_optimizer")]
    pub optimizer: OptimConfig,
    #[serde(default)]
    pub options: PitchOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter: Option<f64>,
}

fn pitch_optimizer() -> OptimConfig {
    OptimConfig::new(Vec::new())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FillConfig {
    /// WAV or `time,value` CSV, relative to the config file.
    pub input: PathBuf,
    /// Complete signal for scoring, same formats as `input`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
    pub gaps: GapSpec,
    pub kernel: CompositeKernel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter: Option<f64>,
    /// Also write each gap's full posterior covariance, row-major.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub full_covariance: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub preset: String,
}

impl RunConfig {
    /// Parses a configuration document. Errors name the offending field
    /// path and the line and column where parsing stopped.
    pub fn parse(text: &str, origin: &Path) -> Result<RunConfig> {
        let mut de = serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            Error::Config(format!(
                "{}: line {} column {}: field `{field}`: {}",
                origin.display(),
                inner.line(),
                inner.column(),
                strip_position(&inner.to_string())
            ))
        })?;
        de.end().map_err(|e| {
            Error::Config(format!(
                "{}: line {} column {}: {}",
                origin.display(),
                e.line(),
                e.column(),
                strip_position(&e.to_string())
            ))
        })?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        RunConfig::parse(&text, path)
    }

    /// Empty configuration with only the given section set by the caller.
    pub fn empty() -> RunConfig {
        RunConfig {
            seed: None,
            normalize: default_normalize(),
            sample: None,
            spectrum: None,
            pitch: None,
            fill: None,
            gen: None,
        }
    }
}

/// serde_json appends " at line L column C"; the position is reported
/// separately.
fn strip_position(message: &str) -> &str {
    match message.rfind(" at line ") {
        Some(i) => &message[..i],
        None => message,
    }
}
