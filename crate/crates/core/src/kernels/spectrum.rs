//! Spectral density of stationary kernels.
//!
//! Convention: `S(f) = ∫ k(τ) exp(-2πi f τ) dτ` over ordinary frequency `f`
//! in Hz, two-sided, so that `∫_{-∞}^{∞} S(f) df = k(0)`. Only the
//! non-negative half `[0, f_max]` is returned; because `k` is even the
//! negative half is its mirror image. With this convention the EQ kernel
//! has `S(0) = σ² l √(2π)`.
//!
//! The transform is evaluated as a Riemann sum over a symmetric lag grid.
//! EQ and ECQ decay, and the grid extends until `|k(τ)| < 1e-8 k(0)`. EC never
//! decays; it is truncated to 64 fundamental periods under a Hann taper, so
//! its line *positions* and relative weights are meaningful but peak
//! heights depend on the taper.
//!
//! Reported power is clamped at zero, and values below `1e-13` of the peak
//! (the rounding floor of the lag sum) are flushed to zero. Line weights are
//! integrated from the unclamped estimate so that the taper's negative
//! sidelobes do not bias them.

use std::f64::consts::PI;

use serde::Serialize;

use super::stationary::KernelSpec;
use crate::error::{Error, Result};

/// Relative level at which a decaying kernel is considered negligible. Far
/// below the 1e-8 needed for the density itself, so that truncation ripple
/// stays under the rounding floor and Gaussian tails decrease monotonically.
const DECAY_FLOOR: f64 = 1e-18;
/// Periods of an EC kernel kept under the Hann taper.
const EC_PERIODS: f64 = 64.0;
/// Upper bound on lags per side.
const MAX_LAGS: usize = 1 << 22;
/// Exact phase re-seeding interval for the rotation recurrence.
const RESEED: usize = 256;
/// Density values below this fraction of the peak are rounding noise.
const ROUNDING_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LagTaper {
    /// Lag grid reaches the decay floor; no taper.
    None,
    /// Hann taper over the truncated lag window.
    Hann,
}

/// One harmonic line of an EC/ECQ spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralLine {
    pub harmonic: usize,
    /// `harmonic * f0`.
    pub nominal_hz: f64,
    /// Grid frequency of the largest density value near the line.
    pub peak_hz: f64,
    /// Two-sided power within half a fundamental of the line. For the DC line
    /// both halves are counted.
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumWarning {
    /// The fundamental lies above `f_max`; no harmonic lines are visible.
    FundamentalAboveRange { fundamental_hz: f64, f_max: f64 },
    /// The lag grid hit its size cap before the kernel decayed.
    LagGridTruncated { max_lag: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralDensity {
    /// Uniform grid on `[0, f_max]`, Hz.
    pub frequencies: Vec<f64>,
    /// Two-sided density at each frequency, clamped at zero.
    pub power: Vec<f64>,
    pub lines: Vec<SpectralLine>,
    pub warnings: Vec<SpectrumWarning>,
    pub taper: LagTaper,
    /// Lag step and extent actually used.
    pub lag_step: f64,
    pub max_lag: f64,
}

impl SpectralDensity {
    pub fn bin_width(&self) -> f64 {
        self.frequencies[1] - self.frequencies[0]
    }

    /// `2 ∫_0^{f_max} S(f) df` by the trapezoid rule: the two-sided power
    /// captured within `|f| <= f_max`.
    pub fn total_power(&self) -> f64 {
        let df = self.bin_width();
        let inner: f64 = self.power.windows(2).map(|w| 0.5 * (w[0] + w[1]) * df).sum();
        2.0 * inner
    }

    /// `frequency_hz,power` CSV.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "frequency_hz,power")?;
        for (f, p) in self.frequencies.iter().zip(&self.power) {
            writeln!(out, "{f},{p}")?;
        }
        out.flush()
    }

    /// Indices of interior local maxima plus index 0 when the density
    /// decreases away from DC.
    pub fn local_maxima(&self) -> Vec<usize> {
        let p = &self.power;
        let mut out = Vec::new();
        if p.len() > 1 && p[0] > p[1] {
            out.push(0);
        }
        for i in 1..p.len().saturating_sub(1) {
            if p[i] > p[i - 1] && p[i] >= p[i + 1] {
                out.push(i);
            }
        }
        out
    }
}

/// Frequency above which the density is negligible (below ~1e-16 of its scale).
fn content_limit(spec: &KernelSpec) -> f64 {
    let gaussian_width = |l: f64| (16.0 * std::f64::consts::LN_10 / (2.0 * PI * PI)).sqrt() / l;
    match *spec {
        KernelSpec::Eq { l, .. } => gaussian_width(l),
        KernelSpec::Ec { z, omega } => (harmonic_limit(z) + 1) as f64 * omega / (2.0 * PI),
        KernelSpec::Ecq { z, omega, l } => {
            (harmonic_limit(z) + 1) as f64 * omega / (2.0 * PI) + gaussian_width(l)
        }
    }
}

/// Smallest `n` past which `exp(-z) I_n(z) < 1e-16`, from the bound
/// `I_n(z) <= (z/2)^n / n! * exp(z^2 / 4)`.
fn harmonic_limit(z: f64) -> usize {
    let target = -16.0 * std::f64::consts::LN_10;
    let mut log_bound = z * z / 4.0 - z;
    let mut n = 0usize;
    while ((n as f64) < z || log_bound > target) && n < 10_000 {
        n += 1;
        log_bound += (0.5 * z).ln() - (n as f64).ln();
    }
    n
}

/// Numerical spectral density of a stationary kernel on `[0, f_max]`.
pub fn kernel_spectrum(spec: &KernelSpec, f_max: f64, n_points: usize) -> Result<SpectralDensity> {
    spec.validate()?;
    if !(f_max.is_finite() && f_max > 0.0) {
        return Err(Error::input("kernels", format!("f_max must be positive, got {f_max}")));
    }
    if n_points < 64 {
        return Err(Error::input(
            "kernels",
            format!("spectrum needs at least 64 points, got {n_points}"),
        ));
    }

    let nyquist = 1.25 * f_max.max(content_limit(spec));
    let lag_step = 0.5 / nyquist;
    let k0 = spec.value(0.0);
    let (wanted_lag, mut taper) = match *spec {
        KernelSpec::Eq { l, .. } | KernelSpec::Ecq { l, .. } => {
            (l * (2.0 * (1.0 / DECAY_FLOOR).ln()).sqrt(), LagTaper::None)
        }
        KernelSpec::Ec { omega, .. } => (EC_PERIODS * 2.0 * PI / omega, LagTaper::Hann),
    };
    let mut warnings = Vec::new();
    let mut n_lags = (wanted_lag / lag_step).ceil() as usize;
    if n_lags > MAX_LAGS {
        n_lags = MAX_LAGS;
        taper = LagTaper::Hann;
        warnings.push(SpectrumWarning::LagGridTruncated {
            max_lag: n_lags as f64 * lag_step,
        });
    }
    let max_lag = n_lags as f64 * lag_step;

    // Symmetric sum folded onto non-negative lags: k(0) + 2 sum_j w_j k(τ_j) cos(2π f τ_j).
    let weighted: Vec<f64> = (1..=n_lags)
        .map(|j| {
            let tau = j as f64 * lag_step;
            let w = match taper {
                LagTaper::None => 1.0,
                LagTaper::Hann => 0.5 * (1.0 + (PI * tau / max_lag).cos()),
            };
            2.0 * w * spec.value(tau)
        })
        .collect();

    let df = f_max / (n_points - 1) as f64;
    let frequencies: Vec<f64> = (0..n_points).map(|i| i as f64 * df).collect();
    let raw: Vec<f64> = frequencies
        .iter()
        .map(|&f| {
            let theta = 2.0 * PI * f * lag_step;
            let (step_sin, step_cos) = theta.sin_cos();
            let mut acc = k0;
            let (mut c, mut s) = (1.0, 0.0);
            for (j, &w) in weighted.iter().enumerate() {
                let lag = j + 1;
                if lag % RESEED == 0 {
                    let (sn, cs) = (theta * lag as f64).sin_cos();
                    c = cs;
                    s = sn;
                } else {
                    let next_c = c * step_cos - s * step_sin;
                    s = s * step_cos + c * step_sin;
                    c = next_c;
                }
                acc += w * c;
            }
            acc * lag_step
        })
        .collect();
    let floor = ROUNDING_FLOOR * raw.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    let power = raw
        .iter()
        .map(|&p| if p < floor { 0.0 } else { p })
        .collect();

    let mut density = SpectralDensity {
        frequencies,
        power,
        lines: Vec::new(),
        warnings,
        taper,
        lag_step,
        max_lag,
    };

    if let Some(f0) = spec.fundamental_hz() {
        if f0 > f_max {
            density.warnings.push(SpectrumWarning::FundamentalAboveRange {
                fundamental_hz: f0,
                f_max,
            });
        } else {
            density.lines = find_lines(&density.frequencies, &raw, f0);
        }
    }
    Ok(density)
}

fn find_lines(frequencies: &[f64], power: &[f64], f0: f64) -> Vec<SpectralLine> {
    let df = frequencies[1] - frequencies[0];
    let f_max = *frequencies.last().expect("non-empty grid");
    let mut lines = Vec::new();
    for harmonic in 0usize.. {
        let nominal = harmonic as f64 * f0;
        let lo = (nominal - 0.5 * f0).max(0.0);
        let hi = nominal + 0.5 * f0;
        if hi > f_max {
            break;
        }
        let first = (lo / df).ceil() as usize;
        let last = ((hi / df).floor() as usize).min(power.len() - 1);
        if last <= first {
            continue;
        }
        let band = first..=last;
        let peak = band
            .clone()
            .max_by(|&a, &b| power[a].total_cmp(&power[b]))
            .expect("non-empty band");
        let mut weight: f64 = (first..last)
            .map(|i| 0.5 * (power[i] + power[i + 1]) * df)
            .sum();
        if harmonic == 0 {
            weight *= 2.0;
        }
        lines.push(SpectralLine {
            harmonic,
            nominal_hz: nominal,
            peak_hz: frequencies[peak],
            weight,
        });
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Modified Bessel function of the first kind by its power series.
    fn bessel_i(n: u32, x: f64) -> f64 {
        let half = 0.5 * x;
        let mut term = half.powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
        let mut sum = term;
        for k in 1..200 {
            let k = k as f64;
            term *= half * half / (k * (k + n as f64));
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        sum
    }

    #[test]
    fn bessel_oracle_sanity() {
        // Tabulated: I0(1) = 1.2660658777, I1(2) = 1.5906368546, I2(2) = 0.6889484477
        assert_relative_eq!(bessel_i(0, 1.0), 1.2660658777, max_relative = 1e-9);
        assert_relative_eq!(bessel_i(1, 2.0), 1.5906368546, max_relative = 1e-9);
        assert_relative_eq!(bessel_i(2, 2.0), 0.6889484477, max_relative = 1e-9);
    }

    #[test]
    fn eq_spectrum_is_gaussian() {
        let (sigma2, l) = (1.0, 0.01);
        let s = kernel_spectrum(&KernelSpec::eq(sigma2, l).unwrap(), 200.0, 2001).unwrap();
        assert_relative_eq!(s.power[0], sigma2 * l * (2.0 * PI).sqrt(), max_relative = 1e-6);
        for (f, p) in s.frequencies.iter().zip(&s.power).step_by(50) {
            let exact = sigma2 * l * (2.0 * PI).sqrt() * (-2.0 * PI * PI * l * l * f * f).exp();
            assert!((p - exact).abs() < 1e-9, "S({f}) = {p} vs {exact}");
        }
        assert!(s.power.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(s.local_maxima(), vec![0]);
        assert!(s.lines.is_empty() && s.warnings.is_empty());
    }

    #[test]
    fn eq_integrates_to_variance() {
        for l in [0.005, 0.01, 0.1] {
            let f_max = 3.0 / l;
            let s = kernel_spectrum(&KernelSpec::eq(2.5, l).unwrap(), f_max, 4096).unwrap();
            assert_relative_eq!(s.total_power(), 2.5, max_relative = 0.01);
        }
    }

    #[test]
    fn ec_lines_follow_bessel_weights() {
        let z = 2.0;
        let s = kernel_spectrum(&KernelSpec::ec(z, 2.0 * PI * 6.0).unwrap(), 40.0, 4001).unwrap();
        assert_eq!(s.taper, LagTaper::Hann);
        let bin = s.bin_width();
        let maxima: Vec<f64> = s.local_maxima().iter().map(|&i| s.frequencies[i]).collect();
        for target in [0.0, 6.0, 12.0, 18.0] {
            assert!(
                maxima.iter().any(|f| (f - target).abs() <= bin),
                "no maximum near {target} Hz in {maxima:?}"
            );
        }
        let weights: Vec<f64> = s.lines.iter().map(|l| l.weight).collect();
        let expected_ratio = bessel_i(1, z) / bessel_i(2, z);
        assert_relative_eq!(weights[1] / weights[2], expected_ratio, max_relative = 0.02);
        for (n, line) in s.lines.iter().enumerate().take(4) {
            let exact = (-z).exp() * bessel_i(n as u32, z);
            assert_relative_eq!(line.weight, exact, max_relative = 0.02);
        }
    }

    #[test]
    fn ecq_peaks_are_broadened_harmonics() {
        let s = kernel_spectrum(&KernelSpec::ecq(5.0, 2.0 * PI * 6.0, 4.0).unwrap(), 20.0, 2001)
            .unwrap();
        assert_eq!(s.taper, LagTaper::None);
        for (n, line) in s.lines.iter().enumerate().take(3) {
            assert!((line.peak_hz - 6.0 * n as f64).abs() <= 0.1, "{line:?}");
            let peak = (line.peak_hz / s.bin_width()).round() as usize;
            // Neighbouring bins carry power: the line has nonzero width.
            assert!(s.power[peak + 1] > 0.01 * s.power[peak]);
        }
    }

    #[test]
    fn fundamental_above_range_is_flagged() {
        let s = kernel_spectrum(&KernelSpec::ec(2.0, 2.0 * PI * 100.0).unwrap(), 50.0, 64).unwrap();
        assert!(s.lines.is_empty());
        assert!(matches!(
            s.warnings[0],
            SpectrumWarning::FundamentalAboveRange { .. }
        ));
    }

    #[test]
    fn rejects_bad_requests() {
        let spec = KernelSpec::eq(1.0, 0.01).unwrap();
        assert!(kernel_spectrum(&spec, 0.0, 128).is_err());
        assert!(kernel_spectrum(&spec, 100.0, 63).is_err());
    }

    #[test]
    fn power_is_non_negative() {
        let s = kernel_spectrum(&KernelSpec::ecq(3.0, 2.0 * PI * 110.0, 0.02).unwrap(), 1000.0, 512)
            .unwrap();
        assert!(s.power.iter().all(|&p| p >= 0.0));
    }
}
