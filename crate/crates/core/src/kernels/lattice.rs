//! Integer lag indices for time grids lying on a common uniform lattice.
//!
//! Audio is sampled uniformly, so every lag `t_i - t_j` in a Gram matrix is
//! a multiple of the sample period, even when samples have been removed.
//! Stationary kernels then need one evaluation per distinct lag instead of
//! one per pair.

/// Largest deviation from the lattice, relative to its step, for a time to
/// count as on it. Grids built as `i / rate` deviate by rounding only
/// (about `1e-12` of a step); the resulting kernel error stays far below
/// `1e-10`.
const LATTICE_TOL: f64 = 1e-9;

/// Lag tables larger than this multiple of the point count are not worth
/// building; such grids are evaluated pair by pair.
const MAX_SPAN_RATIO: usize = 4;

pub(crate) struct Lattice {
    pub step: f64,
    /// Lattice index of each time of each input grid.
    pub indices: Vec<Vec<usize>>,
    /// Largest lag index that can occur.
    pub max_lag: usize,
}

impl Lattice {
    /// Expresses every grid in `grids` on one uniform lattice, if they share
    /// one. Grids are strictly increasing.
    pub fn detect(grids: &[&[f64]]) -> Option<Lattice> {
        let min_step = grids
            .iter()
            .flat_map(|g| g.windows(2).map(|w| w[1] - w[0]))
            .min_by(f64::total_cmp)?;
        let origin = grids.iter().map(|g| g[0]).min_by(f64::total_cmp)?;
        let end = grids.iter().map(|g| g[g.len() - 1]).max_by(f64::total_cmp)?;
        let count: usize = grids.iter().map(|g| g.len()).sum();
        let span = ((end - origin) / min_step).round();
        if !(span.is_finite() && span <= (MAX_SPAN_RATIO * count) as f64) {
            return None;
        }
        let max_lag = span as usize;
        let step = (end - origin) / span;
        let indices = grids
            .iter()
            .map(|g| {
                g.iter()
                    .map(|&t| {
                        let k = ((t - origin) / step).round();
                        let off = (t - origin) - k * step;
                        (off.abs() <= LATTICE_TOL * step).then_some(k as usize)
                    })
                    .collect::<Option<Vec<usize>>>()
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Lattice {
            step,
            indices,
            max_lag,
        })
    }

    /// `f(k * step)` for every lag index `k` in `0..=max_lag`.
    pub fn table(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..=self.max_lag).map(|k| f(k as f64 * self.step)).collect()
    }
}

#[inline]
pub(crate) fn lag(a: usize, b: usize) -> usize {
    a.abs_diff(b)
}
