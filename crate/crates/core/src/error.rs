use thiserror::Error;

/// Errors produced by the link, kernel, spectra and estimation engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NliError {
    #[error("invalid link: {0}")]
    InvalidLink(String),

    #[error("position z = {z} m lies outside the link [0, {length}] m")]
    OutOfDomain { z: f64, length: f64 },

    #[error("invalid spectrum: {0}")]
    InvalidPsd(String),

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("invalid trial configuration: {0}")]
    InvalidTrialConfig(String),

    #[error(
        "kernel quadrature did not converge at F = {f_hz2:e} Hz^2: \
         achieved error {achieved:e}, requested {requested:e}"
    )]
    Convergence {
        f_hz2: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("kernel evaluation failed at (f1, f2) = ({f1:e}, {f2:e}) Hz: {source}")]
    KernelAt {
        f1: f64,
        f2: f64,
        #[source]
        source: Box<NliError>,
    },

    #[error("invalid moment specification: {0}")]
    InvalidMoment(String),

    #[error("io error: {0}")]
    Io(String),
}

impl NliError {
    /// True for numerical-convergence failures, possibly wrapped with the
    /// offending frequency pair.
    pub fn is_convergence(&self) -> bool {
        match self {
            NliError::Convergence { .. } => true,
            NliError::KernelAt { source, .. } => source.is_convergence(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, NliError>;
