use faer::linalg::solvers::Llt;
use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Largest jitter tried before giving up.
pub const MAX_JITTER: f64 = 1e-4;

/// First escalation step when the caller asked for zero jitter.
const ZERO_JITTER_SEED: f64 = 1e-10;

/// Cholesky factor of `A + jitter * I` for a symmetric positive
/// semi-definite `A`, remembering the jitter that made it succeed.
pub(crate) struct Factor {
    llt: Llt<f64>,
    jitter: f64,
}

impl Factor {
    pub fn l(&self) -> MatRef<'_, f64> {
        self.llt.L()
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `ln |A + jitter * I|`.
    pub fn log_det(&self) -> f64 {
        let l = self.l();
        2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
    }

    pub fn solve_vec(&self, rhs: &[f64]) -> Vec<f64> {
        use faer::linalg::solvers::Solve;
        let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = self.llt.solve(b);
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }
}

/// Factorizes `a + diag * I`, adding `jitter` and escalating it tenfold on
/// failure up to [`MAX_JITTER`].
pub(crate) fn factorize(a: &Mat<f64>, diag: f64, jitter: f64) -> Result<Factor> {
    let n = a.nrows();
    let mut work = a.clone();
    let mut current = jitter;
    loop {
        for i in 0..n {
            work[(i, i)] = a[(i, i)] + diag + current;
        }
        match work.llt(Side::Lower) {
            Ok(llt) => {
                if current != jitter {
                    log::debug!("gp: Cholesky succeeded after escalating jitter to {current:e}");
                }
                return Ok(Factor {
                    llt,
                    jitter: current,
                });
            }
            Err(faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index }) => {
                let next = if current == 0.0 {
                    ZERO_JITTER_SEED
                } else {
                    current * 10.0
                };
                if next > MAX_JITTER * (1.0 + 1e-9) {
                    let (min_diag, max_diag) = (0..n)
                        .map(|i| a[(i, i)] + diag)
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
                            (lo.min(d), hi.max(d))
                        });
                    return Err(Error::Numerical {
                        jitter: current,
                        pivot: index,
                        min_diag,
                        max_diag,
                    });
                }
                current = next;
            }
        }
    }
}
