//! The scalar frequency kernel
//!
//! ```text
//! K(F) = ∫₀ᴸ γ'(s) G(s) exp(−j C(s) (2π)² F) ds,   F = f₁·f₂  [Hz²]
//! ```
//!
//! evaluated two independent ways: an exact per-span closed form and an
//! adaptive Gauss–Kronrod quadrature whose initial panels never span more
//! than π/8 of kernel phase. Each serves as the other's check.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{NliError, Result};
use crate::link::LinkProfile;
use crate::quadrature::{gauss_kronrod15, integrate_panels};

const TWO_PI_SQ: f64 = 4.0 * PI * PI;

/// Maximum kernel phase accumulated inside one initial quadrature panel.
pub const MAX_PANEL_PHASE: f64 = PI / 8.0;

/// Which evaluator backs [`KernelModel::kernel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    #[default]
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone)]
pub struct KernelModel {
    link: LinkProfile,
    k0: Complex64,
    quadrature_tolerance: f64,
    max_panels: usize,
    method: KernelMethod,
}

/// Cumulated nonlinear phases for a given launch power split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearPhase {
    /// Reference power P0 in W.
    pub p0: f64,
    /// Φ_NL = P0·K(0) in rad.
    pub phi_nl: f64,
    /// K(0)·(2Px + Py) in rad.
    pub phi_x: f64,
    /// K(0)·(2Py + Px) in rad.
    pub phi_y: f64,
}

impl KernelModel {
    pub const DEFAULT_TOLERANCE: f64 = 1e-12;
    pub const DEFAULT_MAX_PANELS: usize = 1 << 21;

    /// Closed-form-backed model with the default quadrature tolerance.
    pub fn new(link: LinkProfile) -> Result<Self> {
        Self::with_options(
            link,
            KernelMethod::ClosedForm,
            Self::DEFAULT_TOLERANCE,
            Self::DEFAULT_MAX_PANELS,
        )
    }

    pub fn with_options(
        link: LinkProfile,
        method: KernelMethod,
        quadrature_tolerance: f64,
        max_panels: usize,
    ) -> Result<Self> {
        if !(quadrature_tolerance.is_finite() && quadrature_tolerance > 0.0) {
            return Err(NliError::InvalidRequest(
                "quadrature tolerance must be finite and > 0".into(),
            ));
        }
        if max_panels == 0 {
            return Err(NliError::InvalidRequest("panel budget must be >= 1".into()));
        }
        let mut model = Self {
            link,
            k0: Complex64::new(0.0, 0.0),
            quadrature_tolerance,
            max_panels,
            method,
        };
        let k0 = model.kernel(0.0)?;
        if !(k0.re > 0.0) {
            return Err(NliError::InvalidLink(
                "K(0) vanishes: the link has no nonlinearity".into(),
            ));
        }
        model.k0 = k0;
        Ok(model)
    }

    pub fn link(&self) -> &LinkProfile {
        &self.link
    }

    pub fn method(&self) -> KernelMethod {
        self.method
    }

    pub fn quadrature_tolerance(&self) -> f64 {
        self.quadrature_tolerance
    }

    /// Cached K(0) in 1/W.
    pub fn k0(&self) -> Complex64 {
        self.k0
    }

    /// K(F) through the configured evaluator.
    pub fn kernel(&self, f_hz2: f64) -> Result<Complex64> {
        match self.method {
            KernelMethod::ClosedForm => Ok(self.kernel_closed_form(f_hz2)),
            KernelMethod::Quadrature => self.kernel_quadrature(f_hz2),
        }
    }

    /// η(F) = K(F)/K(0).
    pub fn normalized_kernel(&self, f_hz2: f64) -> Result<Complex64> {
        Ok(self.kernel(f_hz2)? / self.k0)
    }

    /// Sum over spans of γ' G_i e^{−jC_i(2π)²F} ∫₀^{L_i} e^{(−α + jβ₂(2π)²F) t} dt.
    pub fn kernel_closed_form(&self, f_hz2: f64) -> Complex64 {
        let w2f = TWO_PI_SQ * f_hz2;
        self.link
            .placed_spans()
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, p| {
                let gamma = self.link.kernel_gamma(&p.span);
                let rate = Complex64::new(-p.span.alpha, p.span.beta2 * w2f);
                let entry = Complex64::from_polar(gamma * p.gain_at_start, -p.dispersion_at_start * w2f);
                acc + entry * p.span.length * exp_m1_over_z(rate * p.span.length)
            })
    }

    /// Adaptive Gauss–Kronrod evaluation of K(F).
    pub fn kernel_quadrature(&self, f_hz2: f64) -> Result<Complex64> {
        if !f_hz2.is_finite() {
            return Err(NliError::InvalidRequest(format!("F = {f_hz2} is not finite")));
        }
        let w2f = TWO_PI_SQ * f_hz2;
        let placed = self.link.placed_spans();

        let integrand = |piece: usize, z: f64| {
            let (gamma, gain, dispersion) = self.link.profile_in_span(piece, z);
            Complex64::from_polar(gamma * gain, -dispersion * w2f)
        };

        // Scale for the absolute tolerance: ∫ |integrand| = ∫ γ'G.
        let scale: f64 = placed
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let modulus = |z: f64| Complex64::new(integrand(i, z).norm(), 0.0);
                gauss_kronrod15(&modulus, p.start, p.start + p.span.length).0.re
            })
            .sum();
        let abs_tol = self.quadrature_tolerance * scale;

        let mut initial = Vec::new();
        let mut needed = 0usize;
        for (i, p) in placed.iter().enumerate() {
            let phase = (p.span.beta2 * w2f).abs() * p.span.length;
            let n = ((phase / MAX_PANEL_PHASE).ceil() as usize).max(1);
            needed = needed.saturating_add(n);
            if needed > self.max_panels {
                break;
            }
            let h = p.span.length / n as f64;
            for k in 0..n {
                let a = p.start + k as f64 * h;
                let b = if k + 1 == n {
                    p.start + p.span.length
                } else {
                    a + h
                };
                initial.push((a, b, i));
            }
        }

        if needed > self.max_panels {
            let coarse: Vec<_> = placed
                .iter()
                .enumerate()
                .map(|(i, p)| (p.start, p.start + p.span.length, i))
                .collect();
            let achieved = match integrate_panels(integrand, &coarse, abs_tol, coarse.len()) {
                Ok(o) | Err(o) => o.error,
            };
            return Err(NliError::Convergence {
                f_hz2,
                achieved: achieved.max(abs_tol),
                requested: abs_tol,
            });
        }

        integrate_panels(integrand, &initial, abs_tol, self.max_panels)
            .map(|o| o.value)
            .map_err(|o| NliError::Convergence {
                f_hz2,
                achieved: o.error,
                requested: abs_tol,
            })
    }

    /// Φ_NL and the per-polarization rotation phases for powers in W.
    pub fn nonlinear_phase(&self, p0: f64, px: f64, py: f64) -> NonlinearPhase {
        let k0 = self.k0.re;
        NonlinearPhase {
            p0,
            phi_nl: p0 * k0,
            phi_x: k0 * (2.0 * px + py),
            phi_y: k0 * (2.0 * py + px),
        }
    }
}

/// (e^z − 1)/z without cancellation for small |z|.
fn exp_m1_over_z(z: Complex64) -> Complex64 {
    if z.re == 0.0 && z.im == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let half_sin = (0.5 * z.im).sin();
    let num = Complex64::new(
        z.re.exp_m1() * z.im.cos() - 2.0 * half_sin * half_sin,
        z.re.exp() * z.im.sin(),
    );
    num / z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{db_per_km_to_per_m, Span};
    use approx::assert_relative_eq;

    fn lossy(length: f64, beta2: f64) -> Span {
        Span::new(length, beta2, db_per_km_to_per_m(0.2), 1.3e-3, 0.0)
    }

    #[test]
    fn lossless_flat_kernel_is_gamma_l() {
        let link = LinkProfile::single(Span::lossless(80e3, 0.0, 1.3e-3), true).unwrap();
        let model = KernelModel::new(link).unwrap();
        let expected = 8.0 / 9.0 * 1.3e-3 * 80e3;
        for f in [0.0, 1e18, -3e21, 1e24] {
            let k = model.kernel_closed_form(f);
            assert_relative_eq!(k.re, expected, max_relative = 1e-15);
            assert_eq!(k.im, 0.0);
        }
        let kq = model.kernel_quadrature(0.0).unwrap();
        assert_relative_eq!(kq.re, expected, max_relative = 1e-13);
    }

    #[test]
    fn lossy_span_at_zero_frequency() {
        let span = lossy(100e3, -2.17e-26);
        let model = KernelModel::new(LinkProfile::single(span, true).unwrap()).unwrap();
        // γ'(1 − e^{−αL})/α by hand
        let expected = 8.0 / 9.0 * span.gamma * (1.0 - (-span.alpha * span.length).exp()) / span.alpha;
        assert_relative_eq!(model.k0().re, expected, max_relative = 1e-14);
        assert_relative_eq!(model.kernel_quadrature(0.0).unwrap().re, expected, max_relative = 1e-12);
    }

    #[test]
    fn compensated_chain_sums_effective_lengths() {
        let span = lossy(80e3, -2.17e-26).with_full_compensation();
        let n = 5;
        let link = LinkProfile::new(vec![span; n], 0.0, false).unwrap();
        let model = KernelModel::new(link).unwrap();
        let l_eff = (1.0 - (-span.alpha * span.length).exp()) / span.alpha;
        assert_relative_eq!(model.k0().re, n as f64 * span.gamma * l_eff, max_relative = 1e-12);
    }

    #[test]
    fn oscillation_reduces_kernel_magnitude() {
        let model =
            KernelModel::new(LinkProfile::single(lossy(100e3, -2.17e-26), true).unwrap()).unwrap();
        let small = model.kernel_quadrature(1e16).unwrap().norm();
        let large = model.kernel_quadrature(1e21).unwrap().norm();
        assert!(large < small);
        assert!(large < model.k0().norm());
    }

    #[test]
    fn normalized_kernel_properties() {
        let span = lossy(100e3, -2.17e-26);
        let model = KernelModel::new(LinkProfile::single(span, true).unwrap()).unwrap();
        let eta0 = model.normalized_kernel(0.0).unwrap();
        assert_eq!(eta0, Complex64::new(1.0, 0.0));

        let f = 3.3e19;
        let eta = model.normalized_kernel(f).unwrap();
        let eta_neg = model.normalized_kernel(-f).unwrap();
        assert_relative_eq!(eta.re, eta_neg.re, max_relative = 1e-14);
        assert_relative_eq!(eta.im, -eta_neg.im, max_relative = 1e-14);

        // Single-span closed form by hand: (1 − e^{aL})/(−a) normalised by (1 − e^{−αL})/α.
        let a = Complex64::new(-span.alpha, span.beta2 * TWO_PI_SQ * f);
        let num = ((a * span.length).exp() - 1.0) / a;
        let den = (1.0 - (-span.alpha * span.length).exp()) / span.alpha;
        let by_hand = num / den;
        assert!((eta - by_hand).norm() < 1e-12);
    }

    #[test]
    fn quadrature_budget_exhaustion() {
        let link = LinkProfile::single(lossy(100e3, -2.17e-26), true).unwrap();
        let model = KernelModel::new(link.clone()).unwrap();
        let tight =
            KernelModel::with_options(link, KernelMethod::ClosedForm, 1e-12, 8).unwrap();
        assert!(model.kernel_quadrature(1e23).is_ok());
        let err = tight.kernel_quadrature(1e23).unwrap_err();
        match err {
            NliError::Convergence { achieved, requested, .. } => assert!(achieved > requested),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonlinear_phase_relations() {
        let model =
            KernelModel::new(LinkProfile::single(lossy(100e3, -2.17e-26), true).unwrap()).unwrap();
        let k0 = model.k0().re;
        let a = model.nonlinear_phase(1e-3, 1e-3, 1e-3);
        let b = model.nonlinear_phase(2e-3, 1e-3, 1e-3);
        assert_eq!(b.phi_nl, 2.0 * a.phi_nl);
        assert_eq!(a.phi_x, a.phi_y);
        assert_relative_eq!(a.phi_x, 3.0 * k0 * 1e-3, max_relative = 1e-15);
        let c = model.nonlinear_phase(1e-3, 1e-3, 0.0);
        assert_relative_eq!(c.phi_x, 2.0 * k0 * 1e-3, max_relative = 1e-15);
        // effective rotation power 2P exceeds the carried power P
        assert!(c.phi_x > k0 * 1e-3);
    }

    #[test]
    fn zero_gamma_link_rejected() {
        let link = LinkProfile::single(Span::lossless(1e3, 0.0, 0.0), true).unwrap();
        assert!(matches!(KernelModel::new(link), Err(NliError::InvalidLink(_))));
    }

    #[test]
    fn exp_m1_over_z_small_argument() {
        let z = Complex64::new(1e-12, -3e-12);
        let v = exp_m1_over_z(z);
        let series = Complex64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0;
        assert!((v - series).norm() <= 4.0 * f64::EPSILON);
        let naive = (z.exp() - 1.0) / z;
        assert!((naive - series).norm() > 1e-6);
    }
}
