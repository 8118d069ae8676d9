use std::fmt;

use serde::{Deserialize, Serialize};

use super::params::KernelParam;
use crate::error::{Error, Result};

/// Kernel family tag, without hyperparameter values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelFamily {
    #[serde(rename = "EQ")]
    Eq,
    #[serde(rename = "EC")]
    Ec,
    #[serde(rename = "ECQ")]
    Ecq,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Eq => "EQ",
            KernelFamily::Ec => "EC",
            KernelFamily::Ecq => "ECQ",
        }
    }

    /// Hyperparameters carried by this family, in canonical order.
    pub fn params(self) -> &'static [KernelParam] {
        match self {
            KernelFamily::Eq => &[KernelParam::Sigma2, KernelParam::Lengthscale],
            KernelFamily::Ec => &[KernelParam::Z, KernelParam::Omega],
            KernelFamily::Ecq => &[KernelParam::Z, KernelParam::Omega, KernelParam::Lengthscale],
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A stationary covariance function of the lag `tau = t - t'`.
///
/// * `Eq`: `sigma2 * exp(-tau^2 / (2 l^2))`
/// * `Ec`: `exp(-z) * exp(z cos(omega tau))`
/// * `Ecq`: `exp(-z) * exp(z cos(omega tau) - tau^2 / (2 l^2))`
///
/// The exponentiated-cosine variants have no free variance: their amplitude
/// is fixed to `exp(-z)` so that `k(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernelSpec", into = "RawKernelSpec")]
pub enum KernelSpec {
    Eq { sigma2: f64, l: f64 },
    Ec { z: f64, omega: f64 },
    Ecq { z: f64, omega: f64, l: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
enum RawKernelSpec {
    #[serde(rename = "EQ")]
    Eq { sigma2: f64, l: f64 },
    #[serde(rename = "EC")]
    Ec { z: f64, omega: f64 },
    #[serde(rename = "ECQ")]
    Ecq { z: f64, omega: f64, l: f64 },
}

impl TryFrom<RawKernelSpec> for KernelSpec {
    type Error = Error;

    fn try_from(raw: RawKernelSpec) -> Result<Self> {
        let spec = match raw {
            RawKernelSpec::Eq { sigma2, l } => KernelSpec::Eq { sigma2, l },
            RawKernelSpec::Ec { z, omega } => KernelSpec::Ec { z, omega },
            RawKernelSpec::Ecq { z, omega, l } => KernelSpec::Ecq { z, omega, l },
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<KernelSpec> for RawKernelSpec {
    fn from(spec: KernelSpec) -> Self {
        match spec {
            KernelSpec::Eq { sigma2, l } => RawKernelSpec::Eq { sigma2, l },
            KernelSpec::Ec { z, omega } => RawKernelSpec::Ec { z, omega },
            KernelSpec::Ecq { z, omega, l } => RawKernelSpec::Ecq { z, omega, l },
        }
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        });
    }
    if value <= 0.0 {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive",
        });
    }
    Ok(())
}

impl KernelSpec {
    pub fn eq(sigma2: f64, l: f64) -> Result<Self> {
        let spec = KernelSpec::Eq { sigma2, l };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ec(z: f64, omega: f64) -> Result<Self> {
        let spec = KernelSpec::Ec { z, omega };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ecq(z: f64, omega: f64, l: f64) -> Result<Self> {
        let spec = KernelSpec::Ecq { z, omega, l };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Eq { sigma2, l } => {
                check_positive("sigma2", sigma2)?;
                check_positive("l", l)
            }
            KernelSpec::Ec { z, omega } => {
                check_positive("z", z)?;
                check_positive("omega", omega)
            }
            KernelSpec::Ecq { z, omega, l } => {
                check_positive("z", z)?;
                check_positive("omega", omega)?;
                check_positive("l", l)
            }
        }
    }

    pub fn family(&self) -> KernelFamily {
        match self {
            KernelSpec::Eq { .. } => KernelFamily::Eq,
            KernelSpec::Ec { .. } => KernelFamily::Ec,
            KernelSpec::Ecq { .. } => KernelFamily::Ecq,
        }
    }

    /// Effective amplitude `k(0)`.
    pub fn variance(&self) -> f64 {
        match *self {
            KernelSpec::Eq { sigma2, .. } => sigma2,
            KernelSpec::Ec { .. } | KernelSpec::Ecq { .. } => 1.0,
        }
    }

    /// Fundamental frequency in Hz for the periodic families.
    pub fn fundamental_hz(&self) -> Option<f64> {
        match *self {
            KernelSpec::Eq { .. } => None,
            KernelSpec::Ec { omega, .. } | KernelSpec::Ecq { omega, .. } => {
                Some(omega / (2.0 * std::f64::consts::PI))
            }
        }
    }

    /// Covariance at lag `tau` (seconds), after checking the hyperparameters.
    pub fn eval(&self, tau: f64) -> Result<f64> {
        self.validate()?;
        if !tau.is_finite() {
            return Err(Error::input("kernels", format!("lag {tau} is not finite")));
        }
        Ok(self.value(tau))
    }

    #[inline]
    pub(crate) fn value(&self, tau: f64) -> f64 {
        match *self {
            KernelSpec::Eq { sigma2, l } => sigma2 * (-(tau * tau) / (2.0 * l * l)).exp(),
            KernelSpec::Ec { z, omega } => (z * ((omega * tau).cos() - 1.0)).exp(),
            KernelSpec::Ecq { z, omega, l } => {
                (z * ((omega * tau).cos() - 1.0) - (tau * tau) / (2.0 * l * l)).exp()
            }
        }
    }

    pub fn get(&self, param: KernelParam) -> Option<f64> {
        match (*self, param) {
            (KernelSpec::Eq { sigma2, .. }, KernelParam::Sigma2) => Some(sigma2),
            (KernelSpec::Eq { l, .. }, KernelParam::Lengthscale) => Some(l),
            (KernelSpec::Ecq { l, .. }, KernelParam::Lengthscale) => Some(l),
            (KernelSpec::Ec { z, .. } | KernelSpec::Ecq { z, .. }, KernelParam::Z) => Some(z),
            (KernelSpec::Ec { omega, .. } | KernelSpec::Ecq { omega, .. }, KernelParam::Omega) => {
                Some(omega)
            }
            _ => None,
        }
    }

    /// Copy with one hyperparameter replaced. `None` if the family lacks it.
    pub fn with(&self, param: KernelParam, value: f64) -> Option<Result<Self>> {
        self.get(param)?;
        let mut spec = *self;
        match (&mut spec, param) {
            (KernelSpec::Eq { sigma2, .. }, KernelParam::Sigma2) => *sigma2 = value,
            (KernelSpec::Eq { l, .. } | KernelSpec::Ecq { l, .. }, KernelParam::Lengthscale) => {
                *l = value
            }
            (KernelSpec::Ec { z, .. } | KernelSpec::Ecq { z, .. }, KernelParam::Z) => *z = value,
            (
                KernelSpec::Ec { omega, .. } | KernelSpec::Ecq { omega, .. },
                KernelParam::Omega,
            ) => *omega = value,
            _ => unreachable!("presence checked above"),
        }
        Some(spec.validate().map(|()| spec))
    }

    /// `dk(tau)/dparam`, or `None` when the family lacks `param`.
    ///
    /// For EC/ECQ the derivative in `z` includes the `exp(-z)` amplitude.
    #[inline]
    pub(crate) fn derivative(&self, param: KernelParam, tau: f64) -> Option<f64> {
        match (*self, param) {
            (KernelSpec::Eq { l, .. }, KernelParam::Sigma2) => {
                Some((-(tau * tau) / (2.0 * l * l)).exp())
            }
            (KernelSpec::Eq { l, .. } | KernelSpec::Ecq { l, .. }, KernelParam::Lengthscale) => {
                Some(self.value(tau) * tau * tau / (l * l * l))
            }
            (KernelSpec::Ec { omega, .. } | KernelSpec::Ecq { omega, .. }, KernelParam::Z) => {
                Some(self.value(tau) * ((omega * tau).cos() - 1.0))
            }
            (KernelSpec::Ec { z, omega } | KernelSpec::Ecq { z, omega, .. }, KernelParam::Omega) => {
                Some(-self.value(tau) * z * tau * (omega * tau).sin())
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn documented_values() {
        let eq = KernelSpec::eq(1.0, 0.01).unwrap();
        assert_eq!(eq.eval(0.0).unwrap(), 1.0);

        let ec = KernelSpec::ec(2.0, 2.0 * PI * 6.0).unwrap();
        assert_eq!(ec.eval(0.0).unwrap(), 1.0);
        assert_relative_eq!(ec.eval(1.0 / 6.0).unwrap(), 1.0, epsilon = 1e-14);

        // exp(5 cos(2 pi) - (1/6)^2 / 32 - 5) by hand: exp(-1/1152)
        let ecq = KernelSpec::ecq(5.0, 2.0 * PI * 6.0, 4.0).unwrap();
        let expected = (-1.0f64 / 1152.0).exp();
        assert_relative_eq!(ecq.eval(1.0 / 6.0).unwrap(), expected, max_relative = 1e-12);
        assert_relative_eq!(expected, 0.999132, epsilon = 1e-6);
    }

    #[test]
    fn rejects_non_positive_hyperparameters() {
        assert!(matches!(
            KernelSpec::eq(0.0, 1.0),
            Err(Error::InvalidParameter { name: "sigma2", .. })
        ));
        assert!(KernelSpec::eq(1.0, -1.0).is_err());
        assert!(KernelSpec::ec(-2.0, 1.0).is_err());
        assert!(KernelSpec::ecq(2.0, 1.0, f64::NAN).is_err());
        let bad = KernelSpec::Ec { z: 1.0, omega: 0.0 };
        assert!(bad.eval(0.0).is_err());
    }

    #[test]
    fn json_shape_and_strictness() {
        let spec: KernelSpec =
            serde_json::from_str(r#"{"type":"ECQ","z":5.0,"omega":37.7,"l":4.0}"#).unwrap();
        assert_eq!(spec, KernelSpec::Ecq { z: 5.0, omega: 37.7, l: 4.0 });
        let text = serde_json::to_string(&KernelSpec::Eq { sigma2: 1.0, l: 0.5 }).unwrap();
        assert_eq!(text, r#"{"type":"EQ","sigma2":1.0,"l":0.5}"#);
        assert!(serde_json::from_str::<KernelSpec>(r#"{"type":"EC","z":1.0,"omega":2.0,"l":1.0}"#).is_err());
        assert!(serde_json::from_str::<KernelSpec>(r#"{"type":"EC","z":-1.0,"omega":2.0}"#).is_err());
        assert!(serde_json::from_str::<KernelSpec>(r#"{"type":"RBF","l":1.0}"#).is_err());
    }

    fn any_spec() -> impl Strategy<Value = KernelSpec> {
        prop_oneof![
            (0.01f64..10.0, 1e-3f64..1.0).prop_map(|(s, l)| KernelSpec::Eq { sigma2: s, l }),
            (0.1f64..8.0, 1.0f64..3000.0).prop_map(|(z, w)| KernelSpec::Ec { z, omega: w }),
            (0.1f64..8.0, 1.0f64..3000.0, 1e-3f64..5.0)
                .prop_map(|(z, w, l)| KernelSpec::Ecq { z, omega: w, l }),
        ]
    }

    proptest! {
        #[test]
        fn symmetric_and_peaked_at_zero(spec in any_spec(), tau in -2.0f64..2.0) {
            let k0 = spec.value(0.0);
            prop_assert_eq!(spec.value(tau), spec.value(-tau));
            prop_assert!(spec.value(tau) <= k0);
        }

        #[test]
        fn ec_is_periodic(z in 0.1f64..8.0, omega in 1.0f64..300.0, tau in -0.3f64..0.3) {
            let spec = KernelSpec::Ec { z, omega };
            let a = spec.value(tau);
            let b = spec.value(tau + 2.0 * PI / omega);
            prop_assert!((a - b).abs() <= 1e-12 * a, "k({}) = {} vs {}", tau, a, b);
        }

        #[test]
        fn ecq_factorizes(z in 0.1f64..8.0, omega in 1.0f64..3000.0, l in 1e-3f64..5.0, tau in -1.0f64..1.0) {
            let ecq = KernelSpec::Ecq { z, omega, l }.value(tau);
            let ec = KernelSpec::Ec { z, omega }.value(tau) * (-(tau * tau) / (2.0 * l * l)).exp();
            prop_assert!((ecq - ec).abs() <= 1e-12 * ecq.abs().max(f64::MIN_POSITIVE));
        }
    }
}
