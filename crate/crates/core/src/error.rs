use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad hyperparameters, selectors, task options or configuration values.
    Config,
    /// Unreadable or malformed files (WAV, CSV, JSON).
    Format,
    /// Factorization failures and non-finite objectives.
    Numerical,
    /// Inputs that are well-formed but unusable for the requested operation.
    Input,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("kernels: invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("kernels: unknown hyperparameter selector `{0}`")]
    UnknownParam(String),

    #[error("{module}: invalid input: {message}")]
    InvalidInput {
        module: &'static str,
        message: String,
    },

    #[error(
        "gp: Cholesky factorization failed at pivot {pivot} with jitter {jitter:e} \
         (diagonal range [{min_diag:e}, {max_diag:e}])"
    )]
    Numerical {
        jitter: f64,
        pivot: usize,
        min_diag: f64,
        max_diag: f64,
    },

    #[error("gp: {n} samples exceed the dense-inference cap of {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("gp: posterior variance {value:e} at test index {index} is significantly negative")]
    NegativeVariance { index: usize, value: f64 },

    #[error("optimizer: log marginal likelihood is not finite at the initial point ({0})")]
    InvalidStart(f64),

    #[error("optimizer: numerical failure at iterate [{}]: {source}", format_iterate(.iterate))]
    AtIterate {
        iterate: Vec<(String, f64)>,
        #[source]
        source: Box<Error>,
    },

    #[error("optimizer: no samples with window weight above 0.5 for event {event}")]
    EmptyWindow { event: usize },

    #[error("tasks: kernel family {0} is not supported by the pitch task")]
    UnsupportedFamily(&'static str),

    #[error("tasks: truth series does not align with the samples of gap [{start}, {end})")]
    Alignment { start: f64, end: f64 },

    #[error("audio: {path}: malformed WAV at byte {offset}: {message}")]
    Wav {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("audio: unsupported sample rate {0} Hz (expected 8000, 44100 or 48000)")]
    UnsupportedRate(u32),

    #[error("audio: cannot normalize an all-zero buffer")]
    DegenerateNormalization,

    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("config: {0}")]
    Config(String),
}

fn format_iterate(iterate: &[(String, f64)]) -> String {
    iterate
        .iter()
        .map(|(name, value)| format!("{name}={value:e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub(crate) fn input(module: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidInput {
            module,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter { .. }
            | Error::UnknownParam(_)
            | Error::UnsupportedFamily(_)
            | Error::UnsupportedRate(_)
            | Error::Config(_) => ErrorClass::Config,
            Error::Wav { .. } | Error::Io { .. } | Error::Csv { .. } => ErrorClass::Format,
            Error::Numerical { .. }
            | Error::NegativeVariance { .. }
            | Error::InvalidStart(_) => ErrorClass::Numerical,
            Error::AtIterate { source, .. } => source.class(),
            Error::InvalidInput { .. }
            | Error::TooLarge { .. }
            | Error::EmptyWindow { .. }
            | Error::Alignment { .. }
            | Error::DegenerateNormalization => ErrorClass::Input,
        }
    }
}
