//! Random GP instances and naive dense references (explicit inverse and
//! determinant via nalgebra, central finite differences), shared by the
//! oracle tests and the acceptance suite.

#![allow(dead_code)]

use std::f64::consts::PI;

use gp_audio_core::faer::Mat;
use gp_audio_core::{ChangeWindow, CompositeKernel, Event, GpModel, KernelSpec, Param, TimeSeries};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Window that is 1 everywhere near the origin.
pub fn saturated() -> ChangeWindow {
    ChangeWindow::new(1e4, -10.0, 10.0).unwrap()
}

pub fn random_spec(rng: &mut ChaCha8Rng) -> KernelSpec {
    let omega = 2.0 * PI * rng.random_range(40.0..250.0);
    let z = rng.random_range(0.5..4.0);
    let l = rng.random_range(0.002..0.05);
    match rng.random_range(0..3) {
        0 => KernelSpec::eq(rng.random_range(0.2..2.0), l).unwrap(),
        1 => KernelSpec::ec(z, omega).unwrap(),
        _ => KernelSpec::ecq(z, omega, l).unwrap(),
    }
}

pub fn random_kernel(rng: &mut ChaCha8Rng, span: f64) -> CompositeKernel {
    let n_events = rng.random_range(1..=2);
    let events = (0..n_events)
        .map(|_| {
            let alpha = rng.random_range(-0.2..0.5) * span;
            let beta = alpha + rng.random_range(0.3..1.0) * span;
            let window = ChangeWindow::new(rng.random_range(20.0..400.0) / span, alpha, beta).unwrap();
            Event::new(window, random_spec(rng))
        })
        .collect();
    CompositeKernel::new(events, rng.random_range(1e-2..1e-1)).unwrap()
}

pub fn random_grid(rng: &mut ChaCha8Rng, n: usize, span: f64) -> Vec<f64> {
    let mut t: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * span).collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

pub fn random_instance(seed: u64, n: usize) -> (GpModel, TimeSeries) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = 0.03;
    let kernel = random_kernel(&mut rng, span);
    let times = random_grid(&mut rng, n, span);
    let values = times.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
    (GpModel::new(kernel), TimeSeries::new(times, values).unwrap())
}

pub fn dense(m: &Mat<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn dense_ky(model: &GpModel, data: &TimeSeries) -> DMatrix<f64> {
    let n = data.len();
    let k = dense(&model.kernel.gram(data.times(), data.times()).unwrap());
    k + DMatrix::identity(n, n) * (model.kernel.noise_variance() + model.jitter)
}

pub fn dense_lml(model: &GpModel, data: &TimeSeries) -> f64 {
    let ky = dense_ky(model, data);
    let inv = ky.clone().try_inverse().unwrap();
    let y = DVector::from_column_slice(data.values());
    let n = data.len() as f64;
    -0.5 * (y.transpose() * inv * &y)[(0, 0)] - 0.5 * ky.determinant().ln() - 0.5 * n * (2.0 * PI).ln()
}

pub fn all_params(kernel: &CompositeKernel) -> Vec<Param> {
    let mut params = vec![Param::Noise];
    for (index, event) in kernel.events().iter().enumerate() {
        for &p in event.kernel.family().params() {
            params.push(Param::Event { index, param: p });
        }
    }
    params
}

/// Absolute difference between the Cholesky and dense-inverse LML.
pub fn lml_oracle_error(model: &GpModel, data: &TimeSeries) -> f64 {
    (model.log_marginal_likelihood(data).unwrap() - dense_lml(model, data)).abs()
}

/// Largest absolute difference of the predictive mean, variance and full
/// covariance from the dense-inverse formulas.
pub fn posterior_oracle_error(model: &GpModel, data: &TimeSeries, test: &[f64]) -> f64 {
    let pred = model.posterior_predict(data, test, true).unwrap();
    let inv = dense_ky(model, data).try_inverse().unwrap();
    let k_sf = dense(&model.kernel.gram(test, data.times()).unwrap());
    let k_ss = dense(&model.kernel.gram(test, test).unwrap());
    let y = DVector::from_column_slice(data.values());
    let mean = &k_sf * &inv * y;
    let cov = k_ss - &k_sf * &inv * k_sf.transpose();
    let full = pred.covariance.as_ref().unwrap();
    let mut worst = 0.0f64;
    for i in 0..test.len() {
        worst = worst.max((pred.mean[i] - mean[i]).abs());
        worst = worst.max((pred.variance[i] - cov[(i, i)].max(0.0)).abs());
        for j in 0..test.len() {
            if i != j {
                worst = worst.max((full[(i, j)] - cov[(i, j)]).abs());
            }
        }
    }
    worst
}

/// Largest relative error of the analytic LML gradient against central
/// differences with a relative step, over every hyperparameter.
pub fn lml_gradient_fd_error(model: &GpModel, data: &TimeSeries) -> f64 {
    let params = all_params(&model.kernel);
    let grad = model.lml_gradient(data, &params).unwrap();
    let mut worst = 0.0f64;
    for (&p, &g) in params.iter().zip(&grad) {
        let theta = model.kernel.get(p).unwrap();
        let h = 1e-5 * theta.abs();
        let at = |v: f64| {
            let m = GpModel {
                kernel: model.kernel.with_param(p, v).unwrap(),
                ..model.clone()
            };
            m.log_marginal_likelihood(data).unwrap()
        };
        let fd = (at(theta + h) - at(theta - h)) / (2.0 * h);
        worst = worst.max((g - fd).abs() / fd.abs().max(g.abs()).max(1e-6 / theta.abs()));
    }
    worst
}

/// Largest relative Frobenius error of every Gram derivative against
/// central differences.
pub fn gram_gradient_fd_error(kernel: &CompositeKernel, times: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for p in all_params(kernel) {
        let analytic = dense(&kernel.gram_gradient(times, p).unwrap());
        // K is a sum over events, so only the owning event's term is
        // differenced; otherwise a gated-off event's tiny derivative is
        // lost in the rounding of the other terms.
        let (own, own_p) = match p {
            Param::Noise => (kernel.clone(), p),
            Param::Event { index, param } => (
                CompositeKernel::new(vec![kernel.events()[index]], 0.0).unwrap(),
                Param::Event { index: 0, param },
            ),
        };
        let theta = own.get(own_p).unwrap();
        // Relative step: lengthscales are milliseconds, where an absolute
        // 1e-6 step is large enough for truncation error to dominate.
        let h = 1e-6 * theta.abs();
        let gram_at = |v: f64| {
            let k = own.with_param(own_p, v).unwrap();
            let mut g = dense(&k.gram(times, times).unwrap());
            if p == Param::Noise {
                g += DMatrix::identity(times.len(), times.len()) * v;
            }
            g
        };
        let fd = (gram_at(theta + h) - gram_at(theta - h)) / (2.0 * h);
        worst = worst.max((&analytic - &fd).norm() / fd.norm().max(analytic.norm()).max(1e-300));
    }
    worst
}

/// Draws `n_draws` prior samples on a 6-point grid and returns the largest
/// entrywise deviation of their empirical covariance from `K_f`, together
/// with the tolerance `5 k(0) / 100`.
pub fn sample_covariance_error(n_draws: usize, seed: u64) -> (f64, f64) {
    let kernel = CompositeKernel::single(
        ChangeWindow::new(200.0, 0.0, 0.05).unwrap(),
        KernelSpec::ecq(1.5, 2.0 * PI * 30.0, 0.02).unwrap(),
        0.0,
    )
    .unwrap();
    let model = GpModel::new(kernel.clone());
    let times: Vec<f64> = (0..6).map(|i| 0.005 + i as f64 * 0.008).collect();
    let draws = model.sample_prior(&times, n_draws, seed).unwrap();
    let k = kernel.gram(&times, &times).unwrap();
    let k0 = kernel.events()[0].kernel.eval(0.0).unwrap();
    let mut worst = 0.0f64;
    for i in 0..6 {
        for j in 0..6 {
            let emp: f64 = draws.iter().map(|d| d[i] * d[j]).sum::<f64>() / draws.len() as f64;
            worst = worst.max((emp - k[(i, j)]).abs());
        }
    }
    (worst, 5.0 * k0 / 100.0)
}
