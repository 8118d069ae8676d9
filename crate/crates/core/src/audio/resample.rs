//! Rational-ratio decimation to 8 kHz with a Kaiser-windowed sinc.

use std::f64::consts::PI;
use std::sync::OnceLock;

use super::AudioBuffer;
use crate::error::{Error, Result};

pub const TARGET_RATE: u32 = 8000;

/// Upper edge of the passband, Hz.
pub const PASSBAND_HZ: f64 = 3600.0;

/// Lower edge of the stopband (the output Nyquist frequency), Hz.
pub const STOPBAND_HZ: f64 = 4000.0;

/// Kaiser window shape; about 80 dB of stopband attenuation.
const KAISER_BETA: f64 = 8.0;

/// Designed attenuation used to size the filter, dB.
const ATTENUATION_DB: f64 = 80.0;

/// Supported input rates with their interpolation and decimation factors.
const RATIOS: [(u32, usize, usize); 2] = [(44_100, 80, 441), (48_000, 1, 6)];

/// Zero-phase lowpass prototype at `up * rate`, stored from its centre tap
/// outwards (it is symmetric).
struct Prototype {
    half: Vec<f64>,
}

impl Prototype {
    fn design(rate: u32, up: usize) -> Prototype {
        let fs = rate as f64 * up as f64;
        let cutoff = 0.5 * (PASSBAND_HZ + STOPBAND_HZ) / fs;
        let transition = 2.0 * PI * (STOPBAND_HZ - PASSBAND_HZ) / fs;
        let taps = ((ATTENUATION_DB - 7.95) / (2.285 * transition)).ceil() as usize;
        let half_len = taps / 2 + 1;
        let denom = bessel_i0(KAISER_BETA);
        let half = (0..half_len)
            .map(|k| {
                let x = k as f64;
                let sinc = if k == 0 {
                    2.0 * cutoff
                } else {
                    (2.0 * PI * cutoff * x).sin() / (PI * x)
                };
                let r = x / half_len as f64;
                let window = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / denom;
                up as f64 * sinc * window
            })
            .collect();
        Prototype { half }
    }

    #[inline]
    fn at(&self, offset: i64) -> f64 {
        self.half.get(offset.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    fn reach(&self) -> i64 {
        self.half.len() as i64 - 1
    }
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

fn prototype(rate: u32, up: usize) -> &'static Prototype {
    static CACHE: [OnceLock<Prototype>; 2] = [OnceLock::new(), OnceLock::new()];
    let slot = RATIOS.iter().position(|&(r, _, _)| r == rate).expect("supported rate");
    CACHE[slot].get_or_init(|| Prototype::design(rate, up))
}

/// Resamples to 8 kHz. 8 kHz input passes through unchanged; 44.1 and
/// 48 kHz input is lowpass filtered (flat to 3.6 kHz, at least 60 dB down
/// from 4 kHz) without delay. The output has `round(N * 8000 / rate)`
/// samples.
pub fn resample_to_8k(buf: &AudioBuffer) -> Result<AudioBuffer> {
    let rate = buf.sample_rate();
    if rate == TARGET_RATE {
        return Ok(buf.clone());
    }
    let &(_, up, down) = RATIOS
        .iter()
        .find(|&&(r, _, _)| r == rate)
        .ok_or(Error::UnsupportedRate(rate))?;
    let h = prototype(rate, up);
    let x = buf.samples();
    let n_in = x.len() as i64;
    let n_out = (x.len() as f64 * TARGET_RATE as f64 / rate as f64).round() as usize;
    let (up, down) = (up as i64, down as i64);
    let reach = h.reach();
    let samples = (0..n_out as i64)
        .map(|m| {
            // Output m sits at up-rate position m * down; input k at k * up.
            let centre = m * down;
            let first = (centre - reach).div_euclid(up).max(0);
            let last = (centre + reach).div_euclid(up).min(n_in - 1);
            (first..=last).map(|k| x[k as usize] * h.at(centre - k * up)).sum()
        })
        .collect();
    AudioBuffer::new(TARGET_RATE, samples)
}
