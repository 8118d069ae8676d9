//! Workloads shared by the benchmarks: audio-rate grids and a three-note
//! ECQ composite like the pitch task's.

use std::f64::consts::PI;

use gp_audio_core::{ChangeWindow, CompositeKernel, Event, GpModel, KernelSpec, TimeSeries};

pub const SAMPLE_RATE: f64 = 8000.0;

/// Three consecutive ECQ notes spanning `duration` seconds.
pub fn three_notes(duration: f64) -> CompositeKernel {
    let edges = [0.0, duration / 3.0, 2.0 * duration / 3.0, duration];
    let events = [110.0, 146.8, 196.0]
        .iter()
        .enumerate()
        .map(|(i, &hz)| {
            let window = ChangeWindow::new(1000.0, edges[i], edges[i + 1]).unwrap();
            Event::new(window, KernelSpec::ecq(2.0, 2.0 * PI * hz, 0.03).unwrap())
        })
        .collect();
    CompositeKernel::new(events, 1e-3).unwrap()
}

/// `n` samples at 8 kHz of a deterministic test signal.
pub fn signal(n: usize) -> TimeSeries {
    let times: Vec<f64> = (0..n).map(|i| i as f64 / SAMPLE_RATE).collect();
    let values = times.iter().map(|&t| (2.0 * PI * 146.8 * t).sin() * (-3.0 * t).exp()).collect();
    TimeSeries::new(times, values).unwrap()
}

/// The pitch-task model on `n` samples.
pub fn model(n: usize) -> GpModel {
    GpModel::new(three_notes(n as f64 / SAMPLE_RATE))
}

/// `n` sorted times jittered off the 8 kHz grid, which defeats the
/// uniform-lattice Gram path.
pub fn irregular_times(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (i as f64 + 0.25 * ((i * 7919) % 13) as f64 / 13.0) / SAMPLE_RATE)
        .collect()
}
