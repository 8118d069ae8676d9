use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{GpModel, Posterior, TimeSeries};
use crate::kernels::Param;

/// Halvings tried by the backtracking line search before giving up.
const MAX_HALVINGS: usize = 30;
/// Largest change of any log-parameter in one iteration.
const MAX_MOVE: f64 = 1.0;
/// Improvement below which an iteration counts as stalled.
const STALL_IMPROVEMENT: f64 = 1e-9;
/// Consecutive stalled iterations that end the run.
const STALL_ITERATIONS: usize = 5;
/// Standard deviation of the log-space perturbation of random restarts.
const RESTART_SPREAD: f64 = 0.1;

fn default_max_iters() -> usize {
    500
}

fn default_step_size() -> f64 {
    0.01
}

fn default_grad_tol() -> f64 {
    1e-5
}

fn default_restarts() -> usize {
    1
}

/// Gradient-ascent settings. All free parameters are optimized as their
/// logarithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimConfig {
    /// Hyperparameters to learn. Pitch estimation chooses its own (the
    /// fundamentals) and requires this to be empty.
    #[serde(default)]
    pub free_params: Vec<Param>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Largest log-space move of the first step.
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    /// Convergence threshold on the infinity norm of the log-space gradient.
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    /// Number of starts; the first is the model as given, the rest are
    /// seeded perturbations of it.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
}

impl OptimConfig {
    pub fn new(free_params: Vec<Param>) -> Self {
        OptimConfig {
            free_params,
            max_iters: default_max_iters(),
            step_size: default_step_size(),
            grad_tol: default_grad_tol(),
            restarts: default_restarts(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, value: f64, reason: &'static str| {
            Err(Error::InvalidParameter {
                name,
                value,
                reason,
            })
        };
        if self.free_params.is_empty() {
            return Err(Error::Config("optimizer: free_params must not be empty".into()));
        }
        if self.max_iters == 0 {
            return bad("max_iters", 0.0, "must be at least 1");
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return bad("step_size", self.step_size, "must be positive");
        }
        if !(self.grad_tol.is_finite() && self.grad_tol > 0.0) {
            return bad("grad_tol", self.grad_tol, "must be positive");
        }
        if self.restarts == 0 {
            return bad("restarts", 0.0, "must be at least 1");
        }
        for (i, p) in self.free_params.iter().enumerate() {
            if self.free_params[..i].contains(p) {
                return Err(Error::Config(format!("optimizer: {p} listed twice in free_params")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    /// Best log marginal likelihood so far.
    pub lml: f64,
    /// Infinity norm of the log-space gradient at the current iterate.
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientTolerance,
    /// Improvement below 1e-9 for five consecutive iterations.
    Stalled,
    /// No non-decreasing step within 30 halvings.
    LineSearchFailed,
    MaxIterations,
}

impl StopReason {
    pub fn converged(self) -> bool {
        matches!(self, StopReason::GradientTolerance | StopReason::Stalled)
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: GpModel,
    pub initial_lml: f64,
    pub final_lml: f64,
    /// Accepted steps of the selected restart.
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
    /// Index of the selected restart.
    pub restart: usize,
    pub trace: Vec<TraceRecord>,
}

impl FitResult {
    /// `iter,lml,grad_norm` CSV of the selected restart.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_trace_csv(out, &self.trace)
    }
}

/// Writes an optimization trace as `iter,lml,grad_norm` CSV.
pub fn write_trace_csv<W: Write>(mut out: W, trace: &[TraceRecord]) -> std::io::Result<()> {
    writeln!(out, "iter,lml,grad_norm")?;
    for r in trace {
        writeln!(out, "{},{},{}", r.iter, r.lml, r.grad_norm)?;
    }
    out.flush()
}

/// Current point of the ascent, in log space, with its conditioning session.
struct Iterate {
    x: Vec<f64>,
    model: GpModel,
    lml: f64,
    grad: Vec<f64>,
}

fn named_iterate(params: &[Param], x: &[f64]) -> Vec<(String, f64)> {
    params.iter().zip(x).map(|(p, v)| (p.to_string(), v.exp())).collect()
}

fn with_log_params(base: &GpModel, params: &[Param], x: &[f64]) -> Result<GpModel> {
    let mut kernel = base.kernel.clone();
    for (&p, &v) in params.iter().zip(x) {
        kernel = kernel.with_param(p, v.exp())?;
    }
    Ok(GpModel {
        kernel,
        ..base.clone()
    })
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, g| m.max(g.abs()))
}

/// Log marginal likelihood and its log-space gradient `theta * dL/dtheta`.
fn evaluate(posterior: &Posterior, params: &[Param]) -> Result<(f64, Vec<f64>)> {
    let (lml, grad) = posterior.lml_and_gradient(params)?;
    let kernel = &posterior.model().kernel;
    let log_grad = params
        .iter()
        .zip(grad)
        .map(|(&p, g)| Ok(kernel.get(p)? * g))
        .collect::<Result<Vec<f64>>>()?;
    Ok((lml, log_grad))
}

/// Maximizes the log marginal likelihood over `config.free_params` by
/// gradient ascent in log space with a backtracking line search. The best
/// iterate of the best restart is returned; parameters outside
/// `free_params` are left untouched.
pub fn fit(model: &GpModel, data: &TimeSeries, config: &OptimConfig) -> Result<FitResult> {
    config.validate()?;
    for &p in &config.free_params {
        model.kernel.check_param(p)?;
    }
    let mut best: Option<FitResult> = None;
    for restart in 0..config.restarts {
        let result = run(model, data, config, restart)?;
        if best.as_ref().is_none_or(|b| result.final_lml > b.final_lml) {
            best = Some(result);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn run(model: &GpModel, data: &TimeSeries, config: &OptimConfig, restart: usize) -> Result<FitResult> {
    let params = &config.free_params;
    let x0: Vec<f64> = params
        .iter()
        .map(|&p| Ok(model.kernel.get(p)?.ln()))
        .collect::<Result<_>>()?;
    let (x0, start_model) = if restart == 0 {
        (x0, model.clone())
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(restart as u64);
        let spread = Normal::new(0.0, RESTART_SPREAD).expect("valid spread");
        let x: Vec<f64> = x0.iter().map(|v| v + spread.sample(&mut rng)).collect();
        let m = with_log_params(model, params, &x)?;
        (x, m)
    };

    let at = |x: &[f64], e: Error| Error::AtIterate {
        iterate: named_iterate(params, x),
        source: Box::new(e),
    };
    let posterior = start_model.condition(data).map_err(|e| at(&x0, e))?;
    let (lml, grad) = evaluate(&posterior, params).map_err(|e| at(&x0, e))?;
    if !lml.is_finite() {
        return Err(Error::InvalidStart(lml));
    }
    let initial_lml = lml;
    let mut current = Iterate {
        x: x0,
        model: start_model,
        lml,
        grad,
    };
    let mut trace = vec![TraceRecord {
        iter: 0,
        lml,
        grad_norm: inf_norm(&current.grad),
    }];

    let mut step = config.step_size / inf_norm(&current.grad).max(1.0);
    let mut stalled = 0;
    let mut iterations = 0;
    let stop = loop {
        let grad_norm = inf_norm(&current.grad);
        if grad_norm < config.grad_tol {
            break StopReason::GradientTolerance;
        }
        if iterations == config.max_iters {
            break StopReason::MaxIterations;
        }
        step = step.min(MAX_MOVE / grad_norm);

        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let x: Vec<f64> = current.x.iter().zip(&current.grad).map(|(x, g)| x + step * g).collect();
            let trial = with_log_params(&current.model, params, &x).map_err(|e| at(&x, e))?;
            let posterior = trial.condition(data).map_err(|e| at(&x, e))?;
            let lml = posterior.log_marginal_likelihood();
            if lml >= current.lml {
                accepted = Some((x, trial, posterior));
                break;
            }
            step *= 0.5;
        }
        let Some((x, trial, posterior)) = accepted else {
            break StopReason::LineSearchFailed;
        };
        let (lml, grad) = evaluate(&posterior, params).map_err(|e| at(&x, e))?;
        iterations += 1;

        // Barzilai-Borwein step from the change in position and gradient; the
        // ascent objective is locally concave when dx . dg < 0.
        let (dx_dx, dx_dg) = x
            .iter()
            .zip(&current.x)
            .zip(grad.iter().zip(&current.grad))
            .fold((0.0, 0.0), |(xx, xg), ((xn, xo), (gn, go))| {
                let dx = xn - xo;
                (xx + dx * dx, xg + dx * (gn - go))
            });
        step = if dx_dg < 0.0 { dx_dx / -dx_dg } else { 2.0 * step };

        let improvement = lml - current.lml;
        current = Iterate {
            x,
            model: trial,
            lml,
            grad,
        };
        trace.push(TraceRecord {
            iter: iterations,
            lml,
            grad_norm: inf_norm(&current.grad),
        });
        log::debug!("optimizer: restart {restart} iter {iterations} lml {lml}");
        if improvement < STALL_IMPROVEMENT {
            stalled += 1;
            if stalled >= STALL_ITERATIONS {
                break StopReason::Stalled;
            }
        } else {
            stalled = 0;
        }
    };

    Ok(FitResult {
        model: current.model,
        initial_lml,
        final_lml: current.lml,
        iterations,
        converged: stop.converged(),
        stop,
        restart,
        trace,
    })
}
