use faer::Mat;
use serde::{Deserialize, Serialize};

use super::lattice::{lag, Lattice};
use super::params::{KernelParam, Param};
use super::stationary::KernelSpec;
use super::window::ChangeWindow;
use crate::error::{Error, Result};

/// One modelled sound event: a stationary kernel gated by a change-window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub window: ChangeWindow,
    pub kernel: KernelSpec,
}

impl Event {
    pub fn new(window: ChangeWindow, kernel: KernelSpec) -> Self {
        Event { window, kernel }
    }
}

/// Non-stationary covariance `k(t, t') = sum_m phi_m(t) k_m(t - t') phi_m(t')`
/// plus the observation-noise variance used on the diagonal of `K_y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawComposite", into = "RawComposite")]
pub struct CompositeKernel {
    events: Vec<Event>,
    noise_variance: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComposite {
    noise_variance: f64,
    events: Vec<Event>,
}

impl TryFrom<RawComposite> for CompositeKernel {
    type Error = Error;

    fn try_from(raw: RawComposite) -> Result<Self> {
        CompositeKernel::new(raw.events, raw.noise_variance)
    }
}

impl From<CompositeKernel> for RawComposite {
    fn from(k: CompositeKernel) -> Self {
        RawComposite {
            noise_variance: k.noise_variance,
            events: k.events,
        }
    }
}

pub(crate) fn check_time_grid(module: &'static str, times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::input(module, "time grid is empty"));
    }
    if let Some(i) = times.iter().position(|t| !t.is_finite()) {
        return Err(Error::input(module, format!("time {i} is not finite")));
    }
    if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::input(
            module,
            format!("times must be strictly increasing (index {})", i + 1),
        ));
    }
    Ok(())
}

impl CompositeKernel {
    pub fn new(events: Vec<Event>, noise_variance: f64) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::input("kernels", "a composite kernel needs at least one event"));
        }
        if !(noise_variance.is_finite() && noise_variance >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "noise_variance",
                value: noise_variance,
                reason: "must be finite and non-negative",
            });
        }
        for event in &events {
            event.kernel.validate()?;
        }
        Ok(CompositeKernel {
            events,
            noise_variance,
        })
    }

    /// Single event with the given window.
    pub fn single(window: ChangeWindow, kernel: KernelSpec, noise_variance: f64) -> Result<Self> {
        CompositeKernel::new(vec![Event::new(window, kernel)], noise_variance)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn get(&self, param: Param) -> Result<f64> {
        match param {
            Param::Noise => Ok(self.noise_variance),
            Param::Event { index, param: p } => self
                .events
                .get(index)
                .and_then(|e| e.kernel.get(p))
                .ok_or_else(|| Error::UnknownParam(param.to_string())),
        }
    }

    /// Returns an error if `param` does not name a hyperparameter of this kernel.
    pub fn check_param(&self, param: Param) -> Result<()> {
        self.get(param).map(|_| ())
    }

    /// Copy with one hyperparameter replaced and re-validated.
    pub fn with_param(&self, param: Param, value: f64) -> Result<Self> {
        let mut next = self.clone();
        match param {
            Param::Noise => {
                return CompositeKernel::new(next.events, value);
            }
            Param::Event { index, param: p } => {
                let event = next
                    .events
                    .get_mut(index)
                    .ok_or_else(|| Error::UnknownParam(param.to_string()))?;
                event.kernel = event
                    .kernel
                    .with(p, value)
                    .ok_or_else(|| Error::UnknownParam(param.to_string()))??;
            }
        }
        Ok(next)
    }

    /// Kernel restricted to a subset of events (same noise variance).
    pub(crate) fn subset(&self, keep: impl Fn(usize) -> bool) -> Option<Self> {
        let events: Vec<Event> = self
            .events
            .iter()
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .map(|(_, e)| *e)
            .collect();
        (!events.is_empty()).then(|| CompositeKernel {
            events,
            noise_variance: self.noise_variance,
        })
    }

    /// `k(t, t')` without the noise term.
    pub fn eval(&self, t: f64, t_prime: f64) -> f64 {
        let tau = t - t_prime;
        let mut acc = 0.0;
        for event in &self.events {
            acc += (event.window.eval(t) * event.window.eval(t_prime)) * event.kernel.value(tau);
        }
        acc
    }

    /// Prior variance `k(t, t)` at each time.
    pub fn prior_variance(&self, times: &[f64]) -> Vec<f64> {
        times.iter().map(|&t| self.eval(t, t)).collect()
    }

    fn weights(&self, times: &[f64]) -> Vec<Vec<f64>> {
        self.events
            .iter()
            .map(|e| times.iter().map(|&t| e.window.eval(t)).collect())
            .collect()
    }

    /// Gram matrix `[k(a_i, b_j)]`. Square inputs with identical grids give
    /// an exactly symmetric result.
    pub fn gram(&self, times_a: &[f64], times_b: &[f64]) -> Result<Mat<f64>> {
        check_time_grid("kernels", times_a)?;
        check_time_grid("kernels", times_b)?;
        let mut out = Mat::zeros(times_a.len(), times_b.len());
        if times_a == times_b {
            self.add_symmetric_gram(&mut out, times_a);
        } else {
            self.add_cross_gram(&mut out, times_a, times_b);
        }
        Ok(out)
    }

    /// Adds the Gram matrix of `times` (with itself) into `out`.
    pub(crate) fn add_symmetric_gram(&self, out: &mut Mat<f64>, times: &[f64]) {
        let n = times.len();
        debug_assert_eq!((out.nrows(), out.ncols()), (n, n));
        let weights = self.weights(times);
        match Lattice::detect(&[times]) {
            Some(lattice) => {
                let k = &lattice.indices[0];
                let tables: Vec<Vec<f64>> = self
                    .events
                    .iter()
                    .map(|e| lattice.table(|tau| e.kernel.value(tau)))
                    .collect();
                for j in 0..n {
                    for i in 0..=j {
                        let lag = lag(k[i], k[j]);
                        let mut acc = 0.0;
                        for (table, w) in tables.iter().zip(&weights) {
                            acc += (w[i] * w[j]) * table[lag];
                        }
                        out[(i, j)] += acc;
                    }
                }
            }
            None => {
                for j in 0..n {
                    for i in 0..=j {
                        let tau = times[i] - times[j];
                        let mut acc = 0.0;
                        for (event, w) in self.events.iter().zip(&weights) {
                            let (wi, wj) = (w[i], w[j]);
                            if wi == 0.0 || wj == 0.0 {
                                continue;
                            }
                            acc += (wi * wj) * event.kernel.value(tau);
                        }
                        out[(i, j)] += acc;
                    }
                }
            }
        }
        for j in 0..n {
            for i in (j + 1)..n {
                out[(i, j)] = out[(j, i)];
            }
        }
    }

    fn add_cross_gram(&self, out: &mut Mat<f64>, times_a: &[f64], times_b: &[f64]) {
        let wa = self.weights(times_a);
        let wb = self.weights(times_b);
        let lattice = Lattice::detect(&[times_a, times_b]);
        let tables: Option<Vec<Vec<f64>>> = lattice.as_ref().map(|l| {
            self.events
                .iter()
                .map(|e| l.table(|tau| e.kernel.value(tau)))
                .collect()
        });
        for (j, &tb) in times_b.iter().enumerate() {
            for (i, &ta) in times_a.iter().enumerate() {
                let mut acc = 0.0;
                match (&lattice, &tables) {
                    (Some(l), Some(tables)) => {
                        let lag = lag(l.indices[0][i], l.indices[1][j]);
                        for (table, (wa, wb)) in tables.iter().zip(wa.iter().zip(&wb)) {
                            acc += (wa[i] * wb[j]) * table[lag];
                        }
                    }
                    _ => {
                        let tau = ta - tb;
                        for (event, (wa, wb)) in self.events.iter().zip(wa.iter().zip(&wb)) {
                            let (wi, wj) = (wa[i], wb[j]);
                            if wi == 0.0 || wj == 0.0 {
                                continue;
                            }
                            acc += (wi * wj) * event.kernel.value(tau);
                        }
                    }
                }
                out[(i, j)] += acc;
            }
        }
    }

    /// Elementwise `dK/dparam` on a square grid. The noise derivative is the
    /// identity.
    pub fn gram_gradient(&self, times: &[f64], param: Param) -> Result<Mat<f64>> {
        check_time_grid("kernels", times)?;
        self.check_param(param)?;
        let n = times.len();
        let (index, p) = match param {
            Param::Noise => return Ok(Mat::identity(n, n)),
            Param::Event { index, param } => (index, param),
        };
        let event = &self.events[index];
        let w: Vec<f64> = times.iter().map(|&t| event.window.eval(t)).collect();
        Ok(Mat::from_fn(n, n, |i, j| {
            let d = event
                .kernel
                .derivative(p, times[i] - times[j])
                .expect("selector checked");
            (w[i] * w[j]) * d
        }))
    }

    /// `sum_ij weights_ij dK_ij/dparam` for each parameter, where `weights`
    /// is symmetric. Only the lower triangle of `weights` is read.
    pub(crate) fn contract_gradient(
        &self,
        times: &[f64],
        weights: &Mat<f64>,
        params: &[Param],
    ) -> Vec<f64> {
        let n = times.len();
        let mut out = vec![0.0; params.len()];
        let mut by_event: Vec<Vec<(usize, KernelParam)>> = vec![Vec::new(); self.events.len()];
        for (slot, param) in params.iter().enumerate() {
            match *param {
                Param::Noise => out[slot] = (0..n).map(|i| weights[(i, i)]).sum(),
                Param::Event { index, param } => by_event[index].push((slot, param)),
            }
        }
        let lattice = Lattice::detect(&[times]);
        for (event, wanted) in self.events.iter().zip(&by_event) {
            if wanted.is_empty() {
                continue;
            }
            let w: Vec<f64> = times.iter().map(|&t| event.window.eval(t)).collect();
            let derivative = |p: KernelParam, tau: f64| {
                event.kernel.derivative(p, tau).expect("selector checked")
            };
            let tables: Option<Vec<Vec<f64>>> = lattice.as_ref().map(|l| {
                wanted.iter().map(|&(_, p)| l.table(|tau| derivative(p, tau))).collect()
            });
            let mut sums = vec![0.0; wanted.len()];
            for j in 0..n {
                if w[j] == 0.0 {
                    continue;
                }
                let column = weights.col(j);
                for i in j..n {
                    if w[i] == 0.0 {
                        continue;
                    }
                    let scale = if i == j { 1.0 } else { 2.0 };
                    let c = scale * column[i] * w[i] * w[j];
                    match (&lattice, &tables) {
                        (Some(l), Some(tables)) => {
                            let lag = lag(l.indices[0][i], l.indices[0][j]);
                            for (s, table) in sums.iter_mut().zip(tables) {
                                *s += c * table[lag];
                            }
                        }
                        _ => {
                            let tau = times[i] - times[j];
                            for (s, &(_, p)) in sums.iter_mut().zip(wanted) {
                                *s += c * derivative(p, tau);
                            }
                        }
                    }
                }
            }
            for (s, (slot, _)) in sums.into_iter().zip(wanted) {
                out[*slot] = s;
            }
        }
        out
    }
}
