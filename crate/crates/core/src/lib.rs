//! Nonlinear-interference PSD of dispersion-uncompensated dual-polarization
//! optical links.
//!
//! The crate evaluates the closed-form GN-model integrals ([`gn`]) and ships
//! two independent verification engines: a Monte Carlo simulator over
//! circular-Gaussian spectral lines ([`montecarlo`]) and brute-force
//! complex-Gaussian moment checks ([`moments`]).

pub mod config;
pub mod error;
pub mod gn;
pub mod kernel;
pub mod link;
pub mod moments;
pub mod montecarlo;
pub mod quadrature;
pub mod rng;
pub mod spectra;
pub mod stats;

pub use config::RunConfig;
pub use error::{NliError, Result};
pub use gn::{nli_psd_x, nli_psd_y, phase_term_coefficient, GnRequest, NliPsdResult};
pub use kernel::{KernelMethod, KernelModel, NonlinearPhase};
pub use link::{LinkProfile, Span};
pub use moments::{GaussianEnsemble, MomentSpec};
pub use montecarlo::{PerturbationMode, PsdEstimate, SpectralField, TrialConfig};
pub use num_complex::Complex64;
pub use spectra::{DualPolPsd, PsdShape};
