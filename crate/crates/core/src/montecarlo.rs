//! Monte Carlo check of the GN formulas over circular-Gaussian spectral lines.
//!
//! Line convention: a field is a vector of line amplitudes `a_k` on the grid
//! `k·f0` with `E|a_k|² = Ĝ(k·f0)`, so a plain `E|a_k|²` recovers the PSD.
//! Carrying the continuous-frequency bookkeeping through the double integral
//! leaves a single factor `f0` on the discrete sum:
//!
//! ```text
//! Ũ_{x,p}[k] = −jΦ_NL · f0 · Σ_{m,n} η(m·n·f0²) (a_{k+m} a*_{k+m+n} a_{k+n} + a_{k+m} b*_{k+m+n} b_{k+n})
//! ```
//!
//! and `E|Ũ_{x,p}[k]|²/Φ_NL²` estimates Ĝ_{x,p}(k·f0)/Φ_NL².

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{NliError, Result};
use crate::kernel::KernelModel;
use crate::rng::{stream, DOMAIN_FIELD};
use crate::spectra::{DualPolPsd, PsdShape};
use crate::stats::SampleMoments;

/// Trials accumulated sequentially inside one work item.
const TRIAL_BLOCK: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationMode {
    /// First-order regular perturbation: B.
    #[default]
    Rp1,
    /// Dual-polarization enhanced RP1: −A + B.
    DpErp1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    /// Line spacing in Hz.
    pub f0: f64,
    /// Number of grid lines M.
    pub num_lines: usize,
    pub num_trials: u64,
    pub seed: u64,
    pub mode: PerturbationMode,
    /// Fraction of each support width excluded at both band edges when
    /// comparing against the analytic PSD.
    pub edge_margin: f64,
    /// Draw X lines from the Y stream and vice versa.
    pub swap_streams: bool,
}

impl TrialConfig {
    pub const DEFAULT_EDGE_MARGIN: f64 = 0.1;

    pub fn new(f0: f64, num_lines: usize, num_trials: u64, seed: u64, mode: PerturbationMode) -> Self {
        Self {
            f0,
            num_lines,
            num_trials,
            seed,
            mode,
            edge_margin: Self::DEFAULT_EDGE_MARGIN,
            swap_streams: false,
        }
    }

    /// Grid index of the first line.
    pub fn k_min(&self) -> i64 {
        -((self.num_lines / 2) as i64)
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let k0 = self.k_min();
        (0..self.num_lines)
            .map(|i| (k0 + i as i64) as f64 * self.f0)
            .collect()
    }

    /// Checks the config on its own and against the PSD supports: the grid
    /// must reach 1.5 support half-widths on both sides of the joint band.
    pub fn validate(&self, psd: &DualPolPsd) -> Result<()> {
        let bad = |m: String| Err(NliError::InvalidTrialConfig(m));
        if !(self.f0.is_finite() && self.f0 > 0.0) {
            return bad("line spacing f0 must be > 0".into());
        }
        if self.num_lines < 8 {
            return bad(format!("need at least 8 lines, got {}", self.num_lines));
        }
        if self.num_trials < 1 {
            return bad("need at least one trial".into());
        }
        if !(0.0..0.5).contains(&self.edge_margin) {
            return bad("edge margin must lie in [0, 0.5)".into());
        }
        if let Some((lo, hi)) = psd.joint_support() {
            let center = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let grid_lo = self.k_min() as f64 * self.f0;
            let grid_hi = (self.k_min() + self.num_lines as i64 - 1) as f64 * self.f0;
            if center - 1.5 * half < grid_lo || center + 1.5 * half > grid_hi {
                return bad(format!(
                    "grid [{grid_lo:e}, {grid_hi:e}] Hz does not cover 1.5x the support \
                     half-width around [{lo:e}, {hi:e}] Hz"
                ));
            }
        }
        Ok(())
    }

    /// Indices of grid points strictly inside `shape`'s support after
    /// trimming `edge_margin` of its width from both ends.
    pub fn in_band_indices(&self, shape: &PsdShape) -> Vec<usize> {
        if shape.is_zero() {
            return Vec::new();
        }
        let (lo, hi) = shape.support();
        let trim = self.edge_margin * (hi - lo);
        self.frequencies()
            .iter()
            .enumerate()
            .filter(|(_, &f)| f >= lo + trim && f < hi - trim && shape.evaluate(f) > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Line amplitudes of one realization (or of a perturbation) per polarization.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub f0: f64,
    /// Grid index of `lines_x[0]`.
    pub k_min: i64,
    pub lines_x: Vec<Complex64>,
    pub lines_y: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(cfg: &TrialConfig) -> Self {
        Self {
            f0: cfg.f0,
            k_min: cfg.k_min(),
            lines_x: vec![Complex64::new(0.0, 0.0); cfg.num_lines],
            lines_y: vec![Complex64::new(0.0, 0.0); cfg.num_lines],
        }
    }

    pub fn len(&self) -> usize {
        self.lines_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines_x.is_empty()
    }

    pub fn swapped(&self) -> Self {
        Self {
            f0: self.f0,
            k_min: self.k_min,
            lines_x: self.lines_y.clone(),
            lines_y: self.lines_x.clone(),
        }
    }
}

/// Per-grid-point estimate for one polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Normalized NLI PSD estimate, Ĝ_p(f)/Φ_NL², on the trial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub frequencies: Vec<f64>,
    pub x: Vec<PointEstimate>,
    pub y: Vec<PointEstimate>,
    pub trials: u64,
}

/// η(n·f0²) for every integer product n reachable on an M-line grid.
#[derive(Debug, Clone)]
pub struct EtaTable {
    offset: i64,
    values: Vec<Complex64>,
}

impl EtaTable {
    pub fn new(kernel: &KernelModel, f0: f64, num_lines: usize) -> Result<Self> {
        let span = (num_lines as i64 - 1).pow(2);
        let values = (-span..=span)
            .into_par_iter()
            .map(|n| kernel.normalized_kernel(n as f64 * f0 * f0))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            offset: span,
            values,
        })
    }

    /// η(m·n·f0²).
    #[inline]
    pub fn get(&self, m: i64, n: i64) -> Complex64 {
        self.values[(m * n + self.offset) as usize]
    }
}

/// Draws one dual-polarization realization:
/// `line = (n₁ + j·n₂)/√2 · √Ĝ(k·f0)`, keyed by (seed, trial, polarization, k).
pub fn draw_field(cfg: &TrialConfig, psd: &DualPolPsd, trial_index: u64) -> SpectralField {
    let mut field = SpectralField::zeros(cfg);
    let (sx, sy) = if cfg.swap_streams { (1, 0) } else { (0, 1) };
    fill_lines(&mut field.lines_x, cfg, &psd.gx, trial_index, sx);
    fill_lines(&mut field.lines_y, cfg, &psd.gy, trial_index, sy);
    field
}

fn fill_lines(out: &mut [Complex64], cfg: &TrialConfig, shape: &PsdShape, trial: u64, pol: u64) {
    let mut s = stream(cfg.seed, DOMAIN_FIELD, 2 * trial + pol);
    let k0 = cfg.k_min();
    for (i, line) in out.iter_mut().enumerate() {
        let xi = s.next_complex();
        let g = shape.evaluate((k0 + i as i64) as f64 * cfg.f0);
        *line = if g > 0.0 { xi * g.sqrt() } else { Complex64::new(0.0, 0.0) };
    }
}

/// B[k] = f0 Σ_{m,n} η(m n f0²) (P[k+m] X*[k+m+n] X[k+n] + P[k+m] Y*[k+m+n] Y[k+n])
/// for P = X and P = Y, with out-of-grid lines treated as zero.
fn double_sum(field: &SpectralField, eta: &EtaTable) -> (Vec<Complex64>, Vec<Complex64>) {
    let m_lines = field.len();
    let x = &field.lines_x;
    let y = &field.lines_y;

    // power[q][r] = X*[q] X[r] + Y*[q] Y[r]
    let mut power = vec![Complex64::new(0.0, 0.0); m_lines * m_lines];
    for q in 0..m_lines {
        for r in 0..m_lines {
            power[q * m_lines + r] = x[q].conj() * x[r] + y[q].conj() * y[r];
        }
    }
    let active: Vec<usize> = (0..m_lines)
        .filter(|&p| x[p] != Complex64::new(0.0, 0.0) || y[p] != Complex64::new(0.0, 0.0))
        .collect();

    let mut bx = vec![Complex64::new(0.0, 0.0); m_lines];
    let mut by = vec![Complex64::new(0.0, 0.0); m_lines];
    let mi = m_lines as i64;
    for k in 0..mi {
        let mut acc_x = Complex64::new(0.0, 0.0);
        let mut acc_y = Complex64::new(0.0, 0.0);
        for &p in &active {
            let p = p as i64;
            let m = p - k;
            // q = p + r − k must stay on the grid
            let r_lo = (k - p).max(0);
            let r_hi = (mi - 1 + k - p).min(mi - 1);
            let mut inner = Complex64::new(0.0, 0.0);
            for r in r_lo..=r_hi {
                let q = p + r - k;
                inner += eta.get(m, r - k) * power[(q * mi + r) as usize];
            }
            acc_x += x[p as usize] * inner;
            acc_y += y[p as usize] * inner;
        }
        bx[k as usize] = acc_x * field.f0;
        by[k as usize] = acc_y * field.f0;
    }
    (bx, by)
}

/// Perturbation in units of −jΦ_NL: B for RP1, B − A for DP-ERP1.
pub fn normalized_perturbation(
    field: &SpectralField,
    eta: &EtaTable,
    psd: &DualPolPsd,
    mode: PerturbationMode,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let (mut bx, mut by) = double_sum(field, eta);
    if mode == PerturbationMode::DpErp1 {
        let (tx, ty) = (psd.pt_hat_x(), psd.pt_hat_y());
        for (b, u) in bx.iter_mut().zip(&field.lines_x) {
            *b -= u * tx;
        }
        for (b, u) in by.iter_mut().zip(&field.lines_y) {
            *b -= u * ty;
        }
    }
    (bx, by)
}

fn scale_to_absolute(lines: (Vec<Complex64>, Vec<Complex64>), field: &SpectralField, phi_nl: f64) -> SpectralField {
    let factor = Complex64::new(0.0, -phi_nl);
    SpectralField {
        f0: field.f0,
        k_min: field.k_min,
        lines_x: lines.0.into_iter().map(|v| v * factor).collect(),
        lines_y: lines.1.into_iter().map(|v| v * factor).collect(),
    }
}

/// RP1 perturbation field Ũ_p = −jΦ_NL·B.
pub fn rp1_perturbation(
    field: &SpectralField,
    kernel: &KernelModel,
    cfg: &TrialConfig,
    psd: &DualPolPsd,
) -> Result<SpectralField> {
    let eta = EtaTable::new(kernel, cfg.f0, field.len())?;
    let b = normalized_perturbation(field, &eta, psd, PerturbationMode::Rp1);
    Ok(scale_to_absolute(b, field, psd.p0 * kernel.k0().re))
}

/// DP-ERP1 perturbation field Ũ_p = −jΦ_NL·(−A + B), A = P̂_T·Ũ(0, f).
pub fn erp1_perturbation(
    field: &SpectralField,
    kernel: &KernelModel,
    cfg: &TrialConfig,
    psd: &DualPolPsd,
) -> Result<SpectralField> {
    let eta = EtaTable::new(kernel, cfg.f0, field.len())?;
    let b = normalized_perturbation(field, &eta, psd, PerturbationMode::DpErp1);
    Ok(scale_to_absolute(b, field, psd.p0 * kernel.k0().re))
}

/// Runs `per_trial` over all trials in fixed blocks and merges block
/// accumulators in block order, so the result is independent of how rayon
/// schedules the blocks.
fn accumulate<F>(cfg: &TrialConfig, width: usize, per_trial: F) -> Vec<SampleMoments>
where
    F: Fn(u64, &mut [SampleMoments]) + Sync,
{
    let blocks = cfg.num_trials.div_ceil(TRIAL_BLOCK);
    let partials: Vec<Vec<SampleMoments>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![SampleMoments::default(); width];
            let end = ((b + 1) * TRIAL_BLOCK).min(cfg.num_trials);
            for t in b * TRIAL_BLOCK..end {
                per_trial(t, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![SampleMoments::default(); width];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    total
}

fn split_estimate(cfg: &TrialConfig, moments: &[SampleMoments]) -> PsdEstimate {
    let m = cfg.num_lines;
    let point = |s: &SampleMoments| PointEstimate {
        mean: s.mean(),
        stderr: s.stderr(),
    };
    PsdEstimate {
        frequencies: cfg.frequencies(),
        x: moments[..m].iter().map(point).collect(),
        y: moments[m..].iter().map(point).collect(),
        trials: cfg.num_trials,
    }
}

/// Sample mean and standard error of |Ũ_p[k]|²/Φ_NL² over the trials.
pub fn estimate_nli_psd(
    cfg: &TrialConfig,
    psd: &DualPolPsd,
    kernel: &KernelModel,
) -> Result<PsdEstimate> {
    cfg.validate(psd)?;
    let eta = EtaTable::new(kernel, cfg.f0, cfg.num_lines)?;
    let m = cfg.num_lines;
    let moments = accumulate(cfg, 2 * m, |t, acc| {
        let field = draw_field(cfg, psd, t);
        let (bx, by) = normalized_perturbation(&field, &eta, psd, cfg.mode);
        for (a, v) in acc[..m].iter_mut().zip(&bx) {
            a.push(v.norm_sqr());
        }
        for (a, v) in acc[m..].iter_mut().zip(&by) {
            a.push(v.norm_sqr());
        }
    });
    Ok(split_estimate(cfg, &moments))
}

/// Paired per-trial difference |B|² − |B − A|² between the RP1 and DP-ERP1
/// estimates on identical draws; it converges to the phase term.
pub fn estimate_phase_difference(
    cfg: &TrialConfig,
    psd: &DualPolPsd,
    kernel: &KernelModel,
) -> Result<PsdEstimate> {
    cfg.validate(psd)?;
    let eta = EtaTable::new(kernel, cfg.f0, cfg.num_lines)?;
    let m = cfg.num_lines;
    let (tx, ty) = (psd.pt_hat_x(), psd.pt_hat_y());
    let moments = accumulate(cfg, 2 * m, |t, acc| {
        let field = draw_field(cfg, psd, t);
        let (bx, by) = double_sum(&field, &eta);
        for k in 0..m {
            let ex = bx[k] - field.lines_x[k] * tx;
            let ey = by[k] - field.lines_y[k] * ty;
            acc[k].push(bx[k].norm_sqr() - ex.norm_sqr());
            acc[m + k].push(by[k].norm_sqr() - ey.norm_sqr());
        }
    });
    Ok(split_estimate(cfg, &moments))
}

/// Mean |a_k|² of the unperturbed field: recovers Ĝ on the grid.
pub fn estimate_input_psd(cfg: &TrialConfig, psd: &DualPolPsd) -> Result<PsdEstimate> {
    cfg.validate(psd)?;
    let m = cfg.num_lines;
    let moments = accumulate(cfg, 2 * m, |t, acc| {
        let field = draw_field(cfg, psd, t);
        for (a, v) in acc[..m].iter_mut().zip(&field.lines_x) {
            a.push(v.norm_sqr());
        }
        for (a, v) in acc[m..].iter_mut().zip(&field.lines_y) {
            a.push(v.norm_sqr());
        }
    });
    Ok(split_estimate(cfg, &moments))
}

/// |mean − expected| / stderr; zero stderr scores zero only on exact match.
pub fn z_score(estimate: PointEstimate, expected: f64) -> f64 {
    let d = (estimate.mean - expected).abs();
    if estimate.stderr > 0.0 {
        d / estimate.stderr
    } else if d == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Agreement of an estimate with analytic values over selected points.
#[derive(Debug, Clone, PartialEq)]
pub struct Agreement {
    pub points: usize,
    pub within: usize,
    pub max_z: f64,
}

impl Agreement {
    pub fn fraction(&self) -> f64 {
        if self.points == 0 {
            0.0
        } else {
            self.within as f64 / self.points as f64
        }
    }
}

pub fn agreement(
    estimate: &[PointEstimate],
    expected: &[f64],
    indices: &[usize],
    z_limit: f64,
) -> Agreement {
    let zs: Vec<f64> = indices
        .iter()
        .map(|&i| z_score(estimate[i], expected[i]))
        .collect();
    Agreement {
        points: zs.len(),
        within: zs.iter().filter(|z| **z <= z_limit).count(),
        max_z: zs.iter().copied().fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{LinkProfile, Span};

    fn kernel() -> KernelModel {
        KernelModel::new(
            LinkProfile::single(Span::new(50e3, -2.17e-26, 4.6e-5, 1.3e-3, 0.0), true).unwrap(),
        )
        .unwrap()
    }

    fn rect_psd(f0: f64, lines: f64, hx: f64, hy: f64) -> DualPolPsd {
        let b = lines * f0;
        DualPolPsd::new(
            PsdShape::rectangular(0.0, b, hx / b).unwrap(),
            PsdShape::rectangular(0.0, b, hy / b).unwrap(),
            1e-3,
        )
        .unwrap()
    }

    #[test]
    fn zero_psd_gives_zero_field_and_estimate() {
        let cfg = TrialConfig::new(1e9, 16, 1, 5, PerturbationMode::Rp1);
        let psd = DualPolPsd::new(PsdShape::zero(), PsdShape::zero(), 1e-3).unwrap();
        let field = draw_field(&cfg, &psd, 0);
        assert!(field.lines_x.iter().chain(&field.lines_y).all(|z| z.norm() == 0.0));
        let est = estimate_nli_psd(&cfg, &psd, &kernel()).unwrap();
        assert!(est.x.iter().chain(&est.y).all(|p| p.mean == 0.0 && p.stderr == 0.0));
    }

    #[test]
    fn draws_are_deterministic() {
        let cfg = TrialConfig::new(1e9, 16, 1, 42, PerturbationMode::Rp1);
        let psd = rect_psd(1e9, 7.0, 1.0, 0.5);
        assert_eq!(draw_field(&cfg, &psd, 3), draw_field(&cfg, &psd, 3));
        assert_ne!(draw_field(&cfg, &psd, 3), draw_field(&cfg, &psd, 4));
    }

    #[test]
    fn single_line_keeps_only_the_degenerate_term() {
        let f0 = 1e9;
        let cfg = TrialConfig::new(f0, 8, 1, 0, PerturbationMode::Rp1);
        let psd = DualPolPsd::new(PsdShape::zero(), PsdShape::zero(), 1e-3).unwrap();
        let kernel = kernel();
        let mut field = SpectralField::zeros(&cfg);
        let center = (-cfg.k_min()) as usize;
        let u = Complex64::new(0.3, -1.1);
        field.lines_x[center] = u;
        let pert = rp1_perturbation(&field, &kernel, &cfg, &psd).unwrap();
        let phi = psd.p0 * kernel.k0().re;
        let expected = Complex64::new(0.0, -phi) * u.norm_sqr() * u * f0;
        assert!((pert.lines_x[center] - expected).norm() <= 1e-15 * expected.norm());
        for (i, v) in pert.lines_x.iter().enumerate() {
            if i != center {
                assert_eq!(v.norm(), 0.0);
            }
        }
        assert!(pert.lines_y.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn erp1_differs_from_rp1_by_rotation_term() {
        let f0 = 1e9;
        let cfg = TrialConfig::new(f0, 24, 1, 9, PerturbationMode::Rp1);
        let psd = rect_psd(f0, 7.0, 1.0, 0.4);
        let kernel = kernel();
        let field = draw_field(&cfg, &psd, 0);
        let rp1 = rp1_perturbation(&field, &kernel, &cfg, &psd).unwrap();
        let erp1 = erp1_perturbation(&field, &kernel, &cfg, &psd).unwrap();
        let phi = psd.p0 * kernel.k0().re;
        for k in 0..field.len() {
            let dx = erp1.lines_x[k] - rp1.lines_x[k];
            let ex = Complex64::new(0.0, phi) * psd.pt_hat_x() * field.lines_x[k];
            assert!((dx - ex).norm() <= 1e-12 * (1.0 + ex.norm() + rp1.lines_x[k].norm()));
            let dy = erp1.lines_y[k] - rp1.lines_y[k];
            let ey = Complex64::new(0.0, phi) * psd.pt_hat_y() * field.lines_y[k];
            assert!((dy - ey).norm() <= 1e-12 * (1.0 + ey.norm() + rp1.lines_y[k].norm()));
        }
    }

    #[test]
    fn zero_field_gives_zero_perturbation() {
        let cfg = TrialConfig::new(1e9, 12, 1, 0, PerturbationMode::Rp1);
        let psd = rect_psd(1e9, 5.0, 1.0, 1.0);
        let field = SpectralField::zeros(&cfg);
        let p = erp1_perturbation(&field, &kernel(), &cfg, &psd).unwrap();
        assert!(p.lines_x.iter().chain(&p.lines_y).all(|v| v.norm() == 0.0));
    }

    #[test]
    fn coverage_and_config_errors() {
        let psd = rect_psd(1e9, 11.0, 1.0, 1.0);
        // half-width 5.5 lines needs 8.25 lines of grid half-width
        let narrow = TrialConfig::new(1e9, 16, 10, 0, PerturbationMode::Rp1);
        assert!(matches!(
            estimate_nli_psd(&narrow, &psd, &kernel()),
            Err(NliError::InvalidTrialConfig(_))
        ));
        let ok = TrialConfig::new(1e9, 20, 10, 0, PerturbationMode::Rp1);
        assert!(ok.validate(&psd).is_ok());
        assert!(TrialConfig::new(1e9, 4, 10, 0, PerturbationMode::Rp1).validate(&psd).is_err());
        assert!(TrialConfig::new(1e9, 64, 0, 0, PerturbationMode::Rp1).validate(&psd).is_err());
        assert!(TrialConfig::new(0.0, 64, 1, 0, PerturbationMode::Rp1).validate(&psd).is_err());
    }

    #[test]
    fn in_band_selection_trims_edges() {
        let cfg = TrialConfig::new(1.0, 64, 1, 0, PerturbationMode::Rp1);
        let shape = PsdShape::rectangular(0.0, 41.0, 1.0).unwrap();
        let idx = cfg.in_band_indices(&shape);
        // support [-20.5, 20.5), trimmed by 4.1 on each side -> k in [-16, 16]
        assert_eq!(idx.len(), 33);
        assert_eq!(cfg.frequencies()[idx[0]], -16.0);
    }
}
