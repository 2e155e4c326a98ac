//! Analytic NLI PSD: SPM double integral, cross-polarization double integral
//! and the optional phase term, all normalized by Φ_NL².
//!
//! The double integrals use a uniform midpoint lattice `f₁ = i·h`,
//! `f₂ = j·h` relative to the output frequency, restricted to the index box
//! where all three PSD factors can be nonzero. Since `f₁f₂ = (i·j)·h²`, the
//! kernel is memoized on the integer product `i·j`.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{NliError, Result};
use crate::kernel::KernelModel;
use crate::spectra::{DualPolPsd, PsdShape};

#[derive(Debug, Clone)]
pub struct GnRequest<'a> {
    pub psd: &'a DualPolPsd,
    pub kernel: &'a KernelModel,
    /// Output frequencies in Hz.
    pub output_grid: Vec<f64>,
    /// RP1 (true) or DP-ERP1 (false) output.
    pub include_phase_term: bool,
    /// Lattice step h in Hz for the (f₁, f₂) quadrature.
    pub inner_grid_step: f64,
}

impl GnRequest<'_> {
    pub fn validate(&self) -> Result<()> {
        if let Some(f) = self.output_grid.iter().find(|f| !f.is_finite()) {
            return Err(NliError::InvalidRequest(format!("output frequency {f} is not finite")));
        }
        let h = self.inner_grid_step;
        if !(h.is_finite() && h > 0.0) {
            return Err(NliError::InvalidRequest("inner grid step must be > 0".into()));
        }
        for shape in [&self.psd.gx, &self.psd.gy] {
            if !shape.is_zero() && h > shape.support_width() / 16.0 {
                return Err(NliError::InvalidRequest(format!(
                    "inner grid step {h:e} Hz exceeds 1/16 of a support width ({:e} Hz)",
                    shape.support_width()
                )));
            }
        }
        Ok(())
    }
}

/// Normalized NLI PSD samples, Ĝ_{p}(f)/Φ_NL², term by term.
#[derive(Debug, Clone, PartialEq)]
pub struct NliPsdResult {
    pub frequencies: Vec<f64>,
    pub spm: Vec<f64>,
    pub xpolm: Vec<f64>,
    /// Phase term Ĝ(f)(2P̂ + P̂')²; reported even when excluded from `total`.
    pub phase: Vec<f64>,
    pub total: Vec<f64>,
    pub include_phase_term: bool,
    /// Φ_NL = P0·K(0) in rad.
    pub phi_nl: f64,
    /// Reference power in W.
    pub p0: f64,
}

impl NliPsdResult {
    pub fn phi_nl_sq(&self) -> f64 {
        self.phi_nl * self.phi_nl
    }

    /// Un-normalized NLI PSD in W/Hz: P0·Φ_NL²·total.
    pub fn total_absolute(&self) -> Vec<f64> {
        let scale = self.p0 * self.phi_nl_sq();
        self.total.iter().map(|t| t * scale).collect()
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }
}

/// (2P̂x + P̂y)².
pub fn phase_term_coefficient(px_hat: f64, py_hat: f64) -> f64 {
    let s = 2.0 * px_hat + py_hat;
    s * s
}

/// NLI PSD on the X polarization.
pub fn nli_psd_x(req: &GnRequest<'_>) -> Result<NliPsdResult> {
    let psd = req.psd;
    evaluate(req, &psd.gx, &psd.gy, psd.px_hat, psd.py_hat)
}

/// NLI PSD on the Y polarization (roles of X and Y exchanged).
pub fn nli_psd_y(req: &GnRequest<'_>) -> Result<NliPsdResult> {
    let psd = req.psd;
    evaluate(req, &psd.gy, &psd.gx, psd.py_hat, psd.px_hat)
}

/// Samples of one shape on the lattice `f + i·h`, for the integer range
/// where the shape can be nonzero.
struct LatticeSamples {
    first: i64,
    values: Vec<f64>,
}

impl LatticeSamples {
    fn new(shape: &PsdShape, f: f64, h: f64) -> Self {
        if shape.is_zero() {
            return Self {
                first: 0,
                values: Vec::new(),
            };
        }
        let (lo, hi) = shape.support();
        // One index of slack on each side; evaluate() decides membership.
        let first = ((lo - f) / h).ceil() as i64 - 1;
        let last = ((hi - f) / h).ceil() as i64;
        let values = (first..=last)
            .map(|i| shape.evaluate(f + i as f64 * h))
            .collect();
        Self { first, values }
    }

    fn range(&self) -> (i64, i64) {
        (self.first, self.first + self.values.len() as i64 - 1)
    }

    fn get(&self, i: i64) -> f64 {
        let k = i - self.first;
        if k < 0 || k >= self.values.len() as i64 {
            0.0
        } else {
            self.values[k as usize]
        }
    }
}

struct EtaCache<'a> {
    kernel: &'a KernelModel,
    h2: f64,
    memo: HashMap<i64, f64>,
}

impl EtaCache<'_> {
    /// |η((i·j)·h²)|², using |η(−F)| = |η(F)|.
    fn eta_sq(&mut self, i: i64, j: i64) -> Result<f64> {
        let key = (i * j).abs();
        if let Some(v) = self.memo.get(&key) {
            return Ok(*v);
        }
        let value = self
            .kernel
            .normalized_kernel(key as f64 * self.h2)
            .map_err(|e| NliError::KernelAt {
                f1: i as f64 * self.h2.sqrt(),
                f2: j as f64 * self.h2.sqrt(),
                source: Box::new(e),
            })?
            .norm_sqr();
        self.memo.insert(key, value);
        Ok(value)
    }
}

/// ∬ |η(f₁f₂)|² A(f+f₁) B(f+f₂) B(f+f₁+f₂) df₁df₂ on the lattice.
fn triple_overlap(
    cache: &mut EtaCache<'_>,
    a: &LatticeSamples,
    b: &LatticeSamples,
    h: f64,
) -> Result<f64> {
    if a.values.is_empty() || b.values.is_empty() {
        return Ok(0.0);
    }
    let (a_lo, a_hi) = a.range();
    let (b_lo, b_hi) = b.range();
    let mut acc = 0.0;
    for i in a_lo..=a_hi {
        let ga = a.get(i);
        if ga == 0.0 {
            continue;
        }
        // j in B's range and i + j in B's range
        let j_lo = b_lo.max(b_lo - i);
        let j_hi = b_hi.min(b_hi - i);
        for j in j_lo..=j_hi {
            let gb = b.get(j);
            if gb == 0.0 {
                continue;
            }
            let gs = b.get(i + j);
            if gs == 0.0 {
                continue;
            }
            acc += cache.eta_sq(i, j)? * ga * gb * gs;
        }
    }
    Ok(acc * h * h)
}

fn evaluate(
    req: &GnRequest<'_>,
    primary: &PsdShape,
    secondary: &PsdShape,
    p_primary: f64,
    p_secondary: f64,
) -> Result<NliPsdResult> {
    req.validate()?;
    let h = req.inner_grid_step;
    let coeff = phase_term_coefficient(p_primary, p_secondary);

    let rows: Vec<(f64, f64, f64)> = req
        .output_grid
        .par_iter()
        .map_init(
            || EtaCache {
                kernel: req.kernel,
                h2: h * h,
                memo: HashMap::new(),
            },
            |cache, &f| {
                let p = LatticeSamples::new(primary, f, h);
                let s = LatticeSamples::new(secondary, f, h);
                let spm = 2.0 * triple_overlap(cache, &p, &p, h)?;
                let xpolm = triple_overlap(cache, &p, &s, h)?;
                let phase = primary.evaluate(f) * coeff;
                Ok((spm, xpolm, phase))
            },
        )
        .collect::<Result<_>>()?;

    let spm: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let xpolm: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let phase: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let total = rows
        .iter()
        .map(|&(s, x, p)| {
            if req.include_phase_term {
                s + x + p
            } else {
                s + x
            }
        })
        .collect();

    Ok(NliPsdResult {
        frequencies: req.output_grid.clone(),
        spm,
        xpolm,
        phase,
        total,
        include_phase_term: req.include_phase_term,
        phi_nl: req.psd.p0 * req.kernel.k0().re,
        p0: req.psd.p0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{LinkProfile, Span};

    const B: f64 = 32e9;

    fn flat_kernel() -> KernelModel {
        KernelModel::new(LinkProfile::single(Span::lossless(1e5, 0.0, 1e-3), true).unwrap())
            .unwrap()
    }

    #[test]
    fn zero_input_gives_zero() {
        let kernel = flat_kernel();
        let psd = DualPolPsd::new(PsdShape::zero(), PsdShape::zero(), 1e-3).unwrap();
        let req = GnRequest {
            psd: &psd,
            kernel: &kernel,
            output_grid: vec![-1e9, 0.0, 5e9],
            include_phase_term: true,
            inner_grid_step: 1e8,
        };
        for r in [nli_psd_x(&req).unwrap(), nli_psd_y(&req).unwrap()] {
            assert!(r.total.iter().chain(&r.spm).chain(&r.xpolm).chain(&r.phase).all(|v| *v == 0.0));
        }
    }

    #[test]
    fn phase_coefficient_values() {
        assert_eq!(phase_term_coefficient(1.0, 0.0), 4.0);
        assert_eq!(phase_term_coefficient(1.0, 1.0), 9.0);
    }

    #[test]
    fn phase_term_for_single_polarization() {
        let kernel = flat_kernel();
        let gx = PsdShape::rectangular(0.0, B, 2.0 / B).unwrap();
        let psd = DualPolPsd::new(gx.clone(), PsdShape::zero(), 1e-3).unwrap();
        let req = GnRequest {
            psd: &psd,
            kernel: &kernel,
            output_grid: vec![0.0, 3e9],
            include_phase_term: true,
            inner_grid_step: B / 32.0,
        };
        let r = nli_psd_x(&req).unwrap();
        for (k, f) in req.output_grid.iter().enumerate() {
            assert_eq!(r.phase[k], 4.0 * psd.px_hat * psd.px_hat * gx.evaluate(*f));
            assert_eq!(r.total[k], r.spm[k] + r.xpolm[k] + r.phase[k]);
            assert_eq!(r.xpolm[k], 0.0);
        }
    }

    #[test]
    fn step_larger_than_sixteenth_of_support_rejected() {
        let kernel = flat_kernel();
        let psd = DualPolPsd::new(
            PsdShape::rectangular(0.0, B, 1.0 / B).unwrap(),
            PsdShape::zero(),
            1e-3,
        )
        .unwrap();
        let req = GnRequest {
            psd: &psd,
            kernel: &kernel,
            output_grid: vec![0.0],
            include_phase_term: false,
            inner_grid_step: B / 8.0,
        };
        assert!(matches!(nli_psd_x(&req), Err(NliError::InvalidRequest(_))));
        let req = GnRequest {
            output_grid: vec![f64::NAN],
            inner_grid_step: B / 32.0,
            ..req
        };
        assert!(nli_psd_x(&req).is_err());
    }
}
