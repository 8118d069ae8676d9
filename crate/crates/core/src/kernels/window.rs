use serde::{Deserialize, Serialize};

use super::stationary::check_positive;
use crate::error::{Error, Result};

/// Log-weight below which a window is treated as closed. Products of two
/// weights then stay far above the subnormal range, where Gram entries would
/// slow dense factorizations by several times; `exp(-150) ~ 7e-66` is
/// negligible next to any noise or jitter level.
const LOG_FLOOR: f64 = -150.0;

/// Smooth gate `phi(t)` for one sound event: the product of a rising sigmoid
/// at the onset `alpha` and a falling sigmoid at the offset `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWindow", into = "RawWindow")]
pub struct ChangeWindow {
    varsigma: f64,
    alpha: f64,
    beta: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWindow {
    varsigma: f64,
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawWindow> for ChangeWindow {
    type Error = Error;

    fn try_from(raw: RawWindow) -> Result<Self> {
        ChangeWindow::new(raw.varsigma, raw.alpha, raw.beta)
    }
}

impl From<ChangeWindow> for RawWindow {
    fn from(w: ChangeWindow) -> Self {
        RawWindow {
            varsigma: w.varsigma,
            alpha: w.alpha,
            beta: w.beta,
        }
    }
}

/// `ln(1 / (1 + e^-x))` without overflow for large `|x|`.
#[inline]
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

impl ChangeWindow {
    /// `varsigma` is the steepness (1/s); `alpha` and `beta` are onset and
    /// offset times in seconds.
    pub fn new(varsigma: f64, alpha: f64, beta: f64) -> Result<Self> {
        check_positive("varsigma", varsigma)?;
        for (name, value) in [("alpha", alpha), ("beta", beta)] {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite",
                });
            }
        }
        if alpha >= beta {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "offset must come after the onset",
            });
        }
        Ok(ChangeWindow {
            varsigma,
            alpha,
            beta,
        })
    }

    pub fn varsigma(&self) -> f64 {
        self.varsigma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn centre(&self) -> f64 {
        0.5 * (self.alpha + self.beta)
    }

    /// Window weight at `t`. Evaluated in log space, so arbitrarily steep
    /// windows underflow cleanly to zero instead of producing NaN. Weights
    /// below `exp(LOG_FLOOR)` are flushed to exactly zero.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let rise = log_sigmoid(self.varsigma * (t - self.alpha));
        let fall = log_sigmoid(self.varsigma * (self.beta - t));
        let log_phi = rise + fall;
        if log_phi < LOG_FLOOR {
            0.0
        } else {
            log_phi.exp()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn documented_values() {
        let w = ChangeWindow::new(1000.0, 0.1, 0.5).unwrap();
        assert_abs_diff_eq!(w.eval(0.3), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(w.eval(0.1), 0.5, epsilon = 1e-10);
        let far = w.eval(-10.0);
        assert!(far.is_finite());
        assert_abs_diff_eq!(far, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn extreme_steepness_stays_finite() {
        let w = ChangeWindow::new(1e4, 0.0, 1.0).unwrap();
        for t in [-1e3, -1.0, 0.0, 0.5, 1.0, 2.0, 1e3] {
            let v = w.eval(t);
            assert!(v.is_finite() && (0.0..=1.0).contains(&v), "phi({t}) = {v}");
        }
    }

    #[test]
    fn rejects_bad_windows() {
        assert!(ChangeWindow::new(0.0, 0.0, 1.0).is_err());
        assert!(ChangeWindow::new(10.0, 1.0, 1.0).is_err());
        assert!(ChangeWindow::new(10.0, 2.0, 1.0).is_err());
        assert!(ChangeWindow::new(10.0, f64::NEG_INFINITY, 1.0).is_err());
        assert!(serde_json::from_str::<ChangeWindow>(
            r#"{"varsigma": 1.0, "alpha": 0.0, "beta": 1.0, "gamma": 2.0}"#
        )
        .is_err());
    }

    proptest! {
        // Strictly inside (0, 1) wherever both sigmoids are representable
        // away from saturation; the closed interval holds everywhere.
        #[test]
        fn bounded(varsigma in 1.0f64..1e4, alpha in -1.0f64..1.0, width in 1e-3f64..2.0, t in -20.0f64..20.0) {
            let w = ChangeWindow::new(varsigma, alpha, alpha + width).unwrap();
            let v = w.eval(t);
            prop_assert!((0.0..=1.0).contains(&v));
            let margin = (varsigma * (t - alpha)).abs().max((varsigma * (alpha + width - t)).abs());
            if margin < 30.0 {
                prop_assert!(v > 0.0 && v < 1.0);
            }
        }

        #[test]
        fn rises_before_centre(varsigma in 50.0f64..1e4, alpha in -1.0f64..1.0, width in 0.1f64..2.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let w = ChangeWindow::new(varsigma, alpha, alpha + width).unwrap();
            let lo = alpha - 1.0 + a.min(b) * (w.centre() - alpha + 1.0);
            let hi = alpha - 1.0 + a.max(b) * (w.centre() - alpha + 1.0);
            prop_assert!(w.eval(lo) <= w.eval(hi) * (1.0 + 4.0 * f64::EPSILON));
        }
    }
}
