use faer::linalg::matmul::triangular::{matmul as tri_matmul, BlockStructure};
use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Accum, Mat, Par};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::factor::{factorize, Factor};
use super::prediction::PosteriorPrediction;
use super::series::TimeSeries;
use crate::error::{Error, Result};
use crate::kernels::{check_time_grid, CompositeKernel, Param};

/// Default diagonal stabilizer added to every Gram matrix.
pub const DEFAULT_JITTER: f64 = 1e-8;

/// Default cap on the number of samples in a dense factorization
/// (about two seconds of audio at 8 kHz).
pub const DEFAULT_MAX_N: usize = 16_384;

/// Largest negative posterior variance silently clamped to zero.
const VARIANCE_CLAMP: f64 = 1e-10;

/// Test points processed per block in [`Posterior::predict`] when the full
/// covariance is not requested, bounding memory to `N x BLOCK` values.
const PREDICT_BLOCK: usize = 1024;

/// Zero-mean GP prior over `f` with a composite kernel and Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpModel {
    pub kernel: CompositeKernel,
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    /// Largest sample count accepted by dense inference.
    #[serde(skip, default = "default_max_n")]
    pub max_n: usize,
}

fn default_jitter() -> f64 {
    DEFAULT_JITTER
}

fn default_max_n() -> usize {
    DEFAULT_MAX_N
}

impl GpModel {
    pub fn new(kernel: CompositeKernel) -> Self {
        GpModel {
            kernel,
            jitter: DEFAULT_JITTER,
            max_n: DEFAULT_MAX_N,
        }
    }

    pub fn with_jitter(mut self, jitter: f64) -> Result<Self> {
        if !(jitter.is_finite() && jitter >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "jitter",
                value: jitter,
                reason: "must be finite and non-negative",
            });
        }
        self.jitter = jitter;
        Ok(self)
    }

    pub fn with_max_n(mut self, max_n: usize) -> Self {
        self.max_n = max_n;
        self
    }

    pub(crate) fn check_size(&self, n: usize) -> Result<()> {
        if n > self.max_n {
            return Err(Error::TooLarge { n, cap: self.max_n });
        }
        Ok(())
    }

    /// Draws `n_samples` realizations of `f` (noise excluded) on `times`.
    /// Row `s` of the result is sample `s`; identical seeds give identical
    /// output.
    pub fn sample_prior(&self, times: &[f64], n_samples: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        check_time_grid("gp", times)?;
        if n_samples == 0 {
            return Err(Error::input("gp", "n_samples must be at least 1"));
        }
        self.check_size(times.len())?;
        let n = times.len();
        let k = self.kernel.gram(times, times)?;
        let factor = factorize(&k, 0.0, self.jitter)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = Mat::<f64>::zeros(n, n_samples);
        for s in 0..n_samples {
            for i in 0..n {
                z[(i, s)] = StandardNormal.sample(&mut rng);
            }
        }
        let mut x = Mat::<f64>::zeros(n, n_samples);
        tri_matmul(
            x.as_mut(),
            BlockStructure::Rectangular,
            Accum::Replace,
            factor.l(),
            BlockStructure::TriangularLower,
            z.as_ref(),
            BlockStructure::Rectangular,
            1.0,
            Par::Seq,
        );
        Ok((0..n_samples)
            .map(|s| (0..n).map(|i| x[(i, s)]).collect())
            .collect())
    }

    /// Factorizes `K_y = K_f + (noise + jitter) I` for `data`, producing a
    /// reusable conditioning session.
    pub fn condition(&self, data: &TimeSeries) -> Result<Posterior> {
        self.check_size(data.len())?;
        let k = self.kernel.gram(data.times(), data.times())?;
        self.condition_gram(data, &k)
    }

    /// As [`condition`](Self::condition) with a precomputed noise-free Gram
    /// matrix of `data.times()`.
    pub(crate) fn condition_gram(&self, data: &TimeSeries, k_f: &Mat<f64>) -> Result<Posterior> {
        self.check_size(data.len())?;
        let factor = factorize(k_f, self.kernel.noise_variance(), self.jitter)?;
        let alpha = factor.solve_vec(data.values());
        Ok(Posterior {
            model: self.clone(),
            data: data.clone(),
            factor,
            alpha,
        })
    }

    /// `ln p(y) = -1/2 y^T K_y^-1 y - 1/2 ln|K_y| - N/2 ln(2 pi)`.
    pub fn log_marginal_likelihood(&self, data: &TimeSeries) -> Result<f64> {
        Ok(self.condition(data)?.log_marginal_likelihood())
    }

    /// Partial derivatives of the log marginal likelihood with respect to
    /// `free_params`, in the same order.
    pub fn lml_gradient(&self, data: &TimeSeries, free_params: &[Param]) -> Result<Vec<f64>> {
        Ok(self.condition(data)?.lml_and_gradient(free_params)?.1)
    }

    /// Posterior over the noise-free function at `test_times`.
    pub fn posterior_predict(
        &self,
        data: &TimeSeries,
        test_times: &[f64],
        want_full_cov: bool,
    ) -> Result<PosteriorPrediction> {
        self.condition(data)?.predict(test_times, want_full_cov)
    }
}

/// A model conditioned on one data set. Holds the Cholesky factor of `K_y`
/// and `alpha = K_y^-1 y`; immutable and shareable once built.
pub struct Posterior {
    model: GpModel,
    data: TimeSeries,
    factor: Factor,
    alpha: Vec<f64>,
}

impl Posterior {
    pub fn model(&self) -> &GpModel {
        &self.model
    }

    pub fn data(&self) -> &TimeSeries {
        &self.data
    }

    /// Jitter actually used, after any escalation.
    pub fn jitter(&self) -> f64 {
        self.factor.jitter()
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.data.len() as f64;
        let fit: f64 = self.data.values().iter().zip(&self.alpha).map(|(y, a)| y * a).sum();
        -0.5 * fit - 0.5 * self.factor.log_det() - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }

    /// Log marginal likelihood and its gradient
    /// `1/2 sum_ij (alpha alpha^T - K_y^-1)_ij dK_ij/dtheta`.
    pub fn lml_and_gradient(&self, free_params: &[Param]) -> Result<(f64, Vec<f64>)> {
        if free_params.is_empty() {
            return Err(Error::input("gp", "no free hyperparameters selected"));
        }
        for &p in free_params {
            self.model.kernel.check_param(p)?;
        }
        let n = self.data.len();
        let l = self.factor.l();
        // K_y^-1 = L^-T L^-1, formed in the lower triangle only.
        let mut w = Mat::<f64>::zeros(n, n);
        faer::linalg::triangular_inverse::invert_lower_triangular(w.as_mut(), l, Par::Seq);
        let mut m = Mat::<f64>::zeros(n, n);
        tri_matmul(
            m.as_mut(),
            BlockStructure::TriangularLower,
            Accum::Replace,
            w.transpose(),
            BlockStructure::TriangularUpper,
            w.as_ref(),
            BlockStructure::TriangularLower,
            1.0,
            Par::Seq,
        );
        drop(w);
        for j in 0..n {
            let aj = self.alpha[j];
            let mut col = m.col_mut(j);
            for i in j..n {
                col[i] = 0.5 * (self.alpha[i] * aj - col[i]);
            }
        }
        let grad = self
            .model
            .kernel
            .contract_gradient(self.data.times(), &m, free_params);
        Ok((self.log_marginal_likelihood(), grad))
    }

    /// Posterior mean and variance of `f` at `test_times`, with the full
    /// covariance if requested. Uses triangular solves only.
    pub fn predict(&self, test_times: &[f64], want_full_cov: bool) -> Result<PosteriorPrediction> {
        check_time_grid("gp", test_times)?;
        let kernel = &self.model.kernel;
        let train = self.data.times();
        let n = train.len();
        let l = self.factor.l();
        let prior = kernel.prior_variance(test_times);
        let mut mean = Vec::with_capacity(test_times.len());
        let mut variance = Vec::with_capacity(test_times.len());

        let block = if want_full_cov {
            test_times.len()
        } else {
            PREDICT_BLOCK
        };
        let mut covariance = None;
        for (b, chunk) in test_times.chunks(block).enumerate() {
            let offset = b * block;
            // K_f* (N x T), then V = L^-1 K_f*.
            let mut v = kernel.gram(train, chunk)?;
            for c in 0..chunk.len() {
                let col = v.col(c);
                mean.push((0..n).map(|i| col[i] * self.alpha[i]).sum::<f64>());
            }
            solve_lower_triangular_in_place(l, v.as_mut(), Par::Seq);
            for c in 0..chunk.len() {
                let col = v.col(c);
                let explained: f64 = (0..n).map(|i| col[i] * col[i]).sum();
                variance.push(clamp_variance(offset + c, prior[offset + c] - explained)?);
            }
            if want_full_cov {
                let mut cov = kernel.gram(chunk, chunk)?;
                tri_matmul(
                    cov.as_mut(),
                    BlockStructure::Rectangular,
                    Accum::Add,
                    v.transpose(),
                    BlockStructure::Rectangular,
                    v.as_ref(),
                    BlockStructure::Rectangular,
                    -1.0,
                    Par::Seq,
                );
                for j in 0..chunk.len() {
                    for i in (j + 1)..chunk.len() {
                        let s = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                        cov[(i, j)] = s;
                        cov[(j, i)] = s;
                    }
                    cov[(j, j)] = variance[j];
                }
                covariance = Some(cov);
            }
        }
        Ok(PosteriorPrediction {
            test_times: test_times.to_vec(),
            mean,
            variance,
            covariance,
        })
    }
}

fn clamp_variance(index: usize, value: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -VARIANCE_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::NegativeVariance { index, value })
    }
}
