use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Scalar hyperparameter of a stationary kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KernelParam {
    /// Variance of the exponentiated-quadratic kernel.
    Sigma2,
    /// Lengthscale in seconds (EQ and ECQ).
    Lengthscale,
    /// Harmonic shape of the exponentiated-cosine kernels.
    Z,
    /// Angular frequency in rad/s.
    Omega,
}

impl KernelParam {
    pub fn name(self) -> &'static str {
        match self {
            KernelParam::Sigma2 => "sigma2",
            KernelParam::Lengthscale => "l",
            KernelParam::Z => "z",
            KernelParam::Omega => "omega",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sigma2" => Some(KernelParam::Sigma2),
            "l" => Some(KernelParam::Lengthscale),
            "z" => Some(KernelParam::Z),
            "omega" => Some(KernelParam::Omega),
            _ => None,
        }
    }
}

impl fmt::Display for KernelParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Selects one scalar hyperparameter of a [`CompositeKernel`](super::CompositeKernel).
///
/// The text form is `noise` for the observation-noise variance and
/// `<event>.<param>` otherwise, e.g. `0.omega` or `2.l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    Noise,
    Event { index: usize, param: KernelParam },
}

impl Param {
    pub fn event(index: usize, param: KernelParam) -> Self {
        Param::Event { index, param }
    }

    pub fn omega(index: usize) -> Self {
        Param::event(index, KernelParam::Omega)
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Noise => f.write_str("noise"),
            Param::Event { index, param } => write!(f, "{index}.{param}"),
        }
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "noise" {
            return Ok(Param::Noise);
        }
        let (index, name) = s
            .split_once('.')
            .ok_or_else(|| Error::UnknownParam(s.to_string()))?;
        let index = index
            .parse::<usize>()
            .map_err(|_| Error::UnknownParam(s.to_string()))?;
        let param = KernelParam::from_name(name).ok_or_else(|| Error::UnknownParam(s.to_string()))?;
        Ok(Param::Event { index, param })
    }
}

impl Serialize for Param {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Param {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
