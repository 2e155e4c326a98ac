//! Run configuration with explicit units in every key name, and its
//! conversion into SI link and PSD objects.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{NliError, Result};
use crate::kernel::KernelMethod;
use crate::link::{
    db_per_km_to_per_m, per_w_per_km_to_per_w_per_m, ps2_per_km_to_s2_per_m, ps2_to_s2, LinkProfile, Span,
};
use crate::montecarlo::PerturbationMode;
use crate::spectra::{DualPolPsd, PsdShape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpanConfig {
    pub length_km: f64,
    pub alpha_db_per_km: f64,
    pub beta2_ps2_per_km: f64,
    pub gamma_per_w_per_km: f64,
    /// Amplifier gain at the span end; defaults to none.
    #[serde(default)]
    pub lumped_gain_db: f64,
}

impl SpanConfig {
    pub fn to_span(&self) -> Span {
        Span::new(
            self.length_km * 1e3,
            ps2_per_km_to_s2_per_m(self.beta2_ps2_per_km),
            db_per_km_to_per_m(self.alpha_db_per_km),
            per_w_per_km_to_per_w_per_m(self.gamma_per_w_per_km),
            self.lumped_gain_db,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    /// Dispersion pre-compensation applied before the first span.
    #[serde(default)]
    pub xi_pre_ps2: f64,
    /// Use the 8/9 Manakov factor on gamma.
    #[serde(default = "default_true")]
    pub manakov_factor: bool,
    pub spans: Vec<SpanConfig>,
}

impl LinkConfig {
    pub fn to_link(&self) -> Result<LinkProfile> {
        LinkProfile::new(
            self.spans.iter().map(SpanConfig::to_span).collect(),
            ps2_to_s2(self.xi_pre_ps2),
            self.manakov_factor,
        )
    }
}

/// Normalized PSD shape; its integral is the power relative to `p0_w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeConfig {
    Zero,
    Rectangular {
        center_hz: f64,
        bandwidth_hz: f64,
        height_per_hz: f64,
    },
    RaisedCosine {
        center_hz: f64,
        bandwidth_hz: f64,
        rolloff: f64,
        height_per_hz: f64,
    },
    /// Two-column CSV `f_Hz,value_per_Hz`, relative to the config file.
    Tabulated { file: PathBuf },
}

impl ShapeConfig {
    pub fn to_shape(&self, base_dir: &Path) -> Result<PsdShape> {
        match self {
            ShapeConfig::Zero => Ok(PsdShape::zero()),
            ShapeConfig::Rectangular {
                center_hz,
                bandwidth_hz,
                height_per_hz,
            } => PsdShape::rectangular(*center_hz, *bandwidth_hz, *height_per_hz),
            ShapeConfig::RaisedCosine {
                center_hz,
                bandwidth_hz,
                rolloff,
                height_per_hz,
            } => PsdShape::raised_cosine(*center_hz, *bandwidth_hz, *rolloff, *height_per_hz),
            ShapeConfig::Tabulated { file } => PsdShape::from_csv_path(base_dir.join(file)),
        }
    }

    /// Makes a tabulated file path absolute against `base_dir`.
    pub fn resolve_paths(&mut self, base_dir: &Path) {
        if let ShapeConfig::Tabulated { file } = self {
            if file.is_relative() {
                *file = base_dir.join(&*file);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    pub p0_w: f64,
    pub x: ShapeConfig,
    pub y: ShapeConfig,
}

impl SignalConfig {
    pub fn to_psd(&self, base_dir: &Path) -> Result<DualPolPsd> {
        DualPolPsd::new(self.x.to_shape(base_dir)?, self.y.to_shape(base_dir)?, self.p0_w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    #[serde(default)]
    pub method: KernelMethod,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_f_min")]
    pub f_start_hz2: f64,
    #[serde(default = "default_f_max")]
    pub f_stop_hz2: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_spacing")]
    pub spacing: GridSpacing,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            method: KernelMethod::default(),
            tolerance: default_tolerance(),
            f_start_hz2: default_f_min(),
            f_stop_hz2: default_f_max(),
            points: default_points(),
            spacing: default_spacing(),
        }
    }
}

impl KernelSection {
    pub fn grid(&self) -> Result<Vec<f64>> {
        grid(self.f_start_hz2, self.f_stop_hz2, self.points, self.spacing)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    #[default]
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsdSection {
    pub f_start_hz: f64,
    pub f_stop_hz: f64,
    pub points: usize,
    /// Lattice step of the double integral.
    pub inner_step_hz: f64,
    #[serde(default = "default_true")]
    pub include_phase_term: bool,
    #[serde(default)]
    pub polarization: Polarization,
}

impl PsdSection {
    pub fn grid(&self) -> Result<Vec<f64>> {
        grid(self.f_start_hz, self.f_stop_hz, self.points, GridSpacing::Linear)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    #[serde(default = "default_lines")]
    pub lines: usize,
    pub spacing_hz: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: PerturbationMode,
    #[serde(default)]
    pub polarization: Polarization,
    #[serde(default = "default_edge_margin")]
    pub edge_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub link: LinkConfig,
    pub signal: SignalConfig,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd: Option<PsdSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub montecarlo: Option<MonteCarloSection>,
}

impl RunConfig {
    /// Absolutizes file references against the config file's directory.
    pub fn resolve_paths(&mut self, base_dir: &Path) {
        self.signal.x.resolve_paths(base_dir);
        self.signal.y.resolve_paths(base_dir);
    }

    /// Link, PSD and kernel settings checked together.
    pub fn validate(&self, base_dir: &Path) -> Result<()> {
        self.link.to_link()?;
        self.signal.to_psd(base_dir)?;
        self.kernel.grid()?;
        if !(self.kernel.tolerance.is_finite() && self.kernel.tolerance > 0.0) {
            return Err(NliError::InvalidRequest("kernel tolerance must be > 0".into()));
        }
        if let Some(p) = &self.psd {
            p.grid()?;
        }
        Ok(())
    }
}

/// `points` samples from `start` to `stop` inclusive.
pub fn grid(start: f64, stop: f64, points: usize, spacing: GridSpacing) -> Result<Vec<f64>> {
    let bad = |m: &str| Err(NliError::InvalidRequest(m.into()));
    if !(start.is_finite() && stop.is_finite()) || points == 0 {
        return bad("grid needs finite bounds and at least one point");
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    let last = (points - 1) as f64;
    match spacing {
        GridSpacing::Linear => Ok((0..points)
            .map(|i| start + (stop - start) * i as f64 / last)
            .collect()),
        GridSpacing::Log => {
            if !(start > 0.0 && stop > 0.0) {
                return bad("log grid needs positive bounds");
            }
            let (a, b) = (start.ln(), stop.ln());
            Ok((0..points)
                .map(|i| match i {
                    0 => start,
                    i if i == points - 1 => stop,
                    i => (a + (b - a) * i as f64 / last).exp(),
                })
                .collect())
        }
    }
}

fn default_true() -> bool {
    true
}
fn default_tolerance() -> f64 {
    1e-12
}
fn default_f_min() -> f64 {
    1e14
}
fn default_f_max() -> f64 {
    1e22
}
fn default_points() -> usize {
    200
}
fn default_spacing() -> GridSpacing {
    GridSpacing::Log
}
fn default_lines() -> usize {
    64
}
fn default_trials() -> u64 {
    2000
}
fn default_edge_margin() -> f64 {
    crate::montecarlo::TrialConfig::DEFAULT_EDGE_MARGIN
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_units_convert_to_si() {
        let s = SpanConfig {
            length_km: 80.0,
            alpha_db_per_km: 0.2,
            beta2_ps2_per_km: -21.7,
            gamma_per_w_per_km: 1.3,
            lumped_gain_db: 16.0,
        }
        .to_span();
        assert_eq!(s.length, 80e3);
        assert!((s.beta2 + 2.17e-26).abs() < 1e-38);
        assert!((s.gamma - 1.3e-3).abs() < 1e-18);
        assert!((s.alpha - 0.2 * std::f64::consts::LN_10 / 10.0 / 1e3).abs() < 1e-18);
    }

    #[test]
    fn log_grid_hits_endpoints() {
        let g = grid(1e10, 1e20, 11, GridSpacing::Log).unwrap();
        assert_eq!(g[0], 1e10);
        assert_eq!(g[10], 1e20);
        assert!((g[5] / 1e15 - 1.0).abs() < 1e-12);
        assert!(grid(-1.0, 1.0, 3, GridSpacing::Log).is_err());
        assert_eq!(grid(-1.0, 1.0, 3, GridSpacing::Linear).unwrap(), vec![-1.0, 0.0, 1.0]);
    }
}
