//! Physical link description and the two z-profiles derived from it: the
//! power gain G(z) and the cumulated dispersion C(z).
//!
//! Everything is SI. Amplifiers are ideal lumped gains sitting at span ends;
//! at a boundary point G(z) takes the post-amplifier value, including z = L.

use serde::{Deserialize, Serialize};

use crate::error::{NliError, Result};

/// Ratio between the Manakov nonlinear coefficient and the fiber gamma.
pub const MANAKOV_FACTOR: f64 = 8.0 / 9.0;

/// One fiber span followed by a lumped amplifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    /// Span length in m.
    pub length: f64,
    /// Group-velocity dispersion in s²/m.
    pub beta2: f64,
    /// Power attenuation in 1/m.
    pub alpha: f64,
    /// Fiber nonlinear coefficient in 1/(W·m).
    pub gamma: f64,
    /// Gain of the amplifier at the span end, in dB.
    pub lumped_gain_db: f64,
}

impl Span {
    pub fn new(length: f64, beta2: f64, alpha: f64, gamma: f64, lumped_gain_db: f64) -> Self {
        Self {
            length,
            beta2,
            alpha,
            gamma,
            lumped_gain_db,
        }
    }

    /// Lossless, amplifier-free span.
    pub fn lossless(length: f64, beta2: f64, gamma: f64) -> Self {
        Self::new(length, beta2, 0.0, gamma, 0.0)
    }

    /// Amplifier gain that exactly compensates this span's loss.
    pub fn with_full_compensation(mut self) -> Self {
        self.lumped_gain_db = 10.0 * (self.alpha * self.length) / std::f64::consts::LN_10;
        self
    }

    fn validate(&self, index: usize) -> Result<()> {
        let bad = |what: &str| Err(NliError::InvalidLink(format!("span {index}: {what}")));
        if !(self.length.is_finite() && self.length > 0.0) {
            return bad("length must be finite and > 0");
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad("alpha must be finite and >= 0");
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad("gamma must be finite and >= 0");
        }
        if !self.beta2.is_finite() {
            return bad("beta2 must be finite");
        }
        if !self.lumped_gain_db.is_finite() {
            return bad("lumped gain must be finite");
        }
        Ok(())
    }

    /// Linear power factor of the span-end amplifier.
    pub fn lumped_gain(&self) -> f64 {
        10f64.powf(self.lumped_gain_db / 10.0)
    }
}

/// A span placed on the z axis together with the profile values at its start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacedSpan {
    pub span: Span,
    /// Start coordinate in m.
    pub start: f64,
    /// G at the span start (after all upstream amplifiers).
    pub gain_at_start: f64,
    /// C at the span start in s².
    pub dispersion_at_start: f64,
}

/// Ordered list of spans plus the dispersion pre-compensation.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkProfile {
    spans: Vec<Span>,
    xi_pre: f64,
    manakov_factor_enabled: bool,
    placed: Vec<PlacedSpan>,
    total_length: f64,
}

impl LinkProfile {
    pub fn new(spans: Vec<Span>, xi_pre: f64, manakov_factor_enabled: bool) -> Result<Self> {
        if spans.is_empty() {
            return Err(NliError::InvalidLink("at least one span is required".into()));
        }
        for (i, s) in spans.iter().enumerate() {
            s.validate(i)?;
        }
        if !xi_pre.is_finite() {
            return Err(NliError::InvalidLink("xi_pre must be finite".into()));
        }

        let mut placed = Vec::with_capacity(spans.len());
        let mut start = 0.0;
        let mut gain = 1.0;
        let mut dispersion = xi_pre;
        for span in &spans {
            placed.push(PlacedSpan {
                span: *span,
                start,
                gain_at_start: gain,
                dispersion_at_start: dispersion,
            });
            start += span.length;
            gain *= (-span.alpha * span.length).exp() * span.lumped_gain();
            dispersion -= span.beta2 * span.length;
        }

        Ok(Self {
            spans,
            xi_pre,
            manakov_factor_enabled,
            placed,
            total_length: start,
        })
    }

    /// Single span, no pre-compensation.
    pub fn single(span: Span, manakov_factor_enabled: bool) -> Result<Self> {
        Self::new(vec![span], 0.0, manakov_factor_enabled)
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn placed_spans(&self) -> &[PlacedSpan] {
        &self.placed
    }

    pub fn xi_pre(&self) -> f64 {
        self.xi_pre
    }

    pub fn manakov_factor_enabled(&self) -> bool {
        self.manakov_factor_enabled
    }

    /// Total length L in m.
    pub fn length(&self) -> f64 {
        self.total_length
    }

    /// The coefficient entering the kernel: γ' = (8/9)γ when the Manakov
    /// factor is enabled, γ otherwise.
    pub fn kernel_gamma(&self, span: &Span) -> f64 {
        if self.manakov_factor_enabled {
            MANAKOV_FACTOR * span.gamma
        } else {
            span.gamma
        }
    }

    /// Copy of this link with every β₂ and ξ_pre negated.
    pub fn with_reversed_dispersion(&self) -> Self {
        let spans = self
            .spans
            .iter()
            .map(|s| Span {
                beta2: -s.beta2,
                ..*s
            })
            .collect();
        Self::new(spans, -self.xi_pre, self.manakov_factor_enabled)
            .expect("negating dispersion keeps a valid link valid")
    }

    fn locate(&self, z: f64) -> Result<&PlacedSpan> {
        if !(z.is_finite() && (0.0..=self.total_length).contains(&z)) {
            return Err(NliError::OutOfDomain {
                z,
                length: self.total_length,
            });
        }
        let idx = self.placed.partition_point(|p| p.start <= z).saturating_sub(1);
        Ok(&self.placed[idx])
    }

    /// Power gain G(z) from 0 to z.
    pub fn power_gain(&self, z: f64) -> Result<f64> {
        let p = self.locate(z)?;
        let dz = z - p.start;
        let mut g = p.gain_at_start * (-p.span.alpha * dz).exp();
        if z >= self.total_length {
            g *= p.span.lumped_gain();
        }
        Ok(g)
    }

    /// (γ'(z), G(z), C(z)) for a z known to be inside a span interior.
    pub(crate) fn profile_in_span(&self, span_index: usize, z: f64) -> (f64, f64, f64) {
        let p = &self.placed[span_index];
        let dz = z - p.start;
        (
            self.kernel_gamma(&p.span),
            p.gain_at_start * (-p.span.alpha * dz).exp(),
            p.dispersion_at_start - p.span.beta2 * dz,
        )
    }

    /// Cumulated dispersion C(z) = ξ_pre − ∫₀ᶻ β₂ ds, in s².
    pub fn cumulated_dispersion(&self, z: f64) -> Result<f64> {
        let p = self.locate(z)?;
        Ok(p.dispersion_at_start - p.span.beta2 * (z - p.start))
    }
}

/// 0.2 dB/km style attenuation to 1/m.
pub fn db_per_km_to_per_m(db_per_km: f64) -> f64 {
    db_per_km * std::f64::consts::LN_10 / 10.0 / 1e3
}

/// ps²/km to s²/m.
pub fn ps2_per_km_to_s2_per_m(v: f64) -> f64 {
    v * 1e-27
}

/// 1/(W·km) to 1/(W·m).
pub fn per_w_per_km_to_per_w_per_m(v: f64) -> f64 {
    v * 1e-3
}

/// ps² to s².
pub fn ps2_to_s2(v: f64) -> f64 {
    v * 1e-24
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn smf(length_km: f64) -> Span {
        Span::new(
            length_km * 1e3,
            ps2_per_km_to_s2_per_m(-21.7),
            db_per_km_to_per_m(0.2),
            per_w_per_km_to_per_w_per_m(1.3),
            0.0,
        )
    }

    #[test]
    fn lossless_gain_is_one() {
        let link = LinkProfile::single(Span::lossless(80e3, -2e-26, 1e-3), true).unwrap();
        for z in [0.0, 1.0, 4e4, 80e3] {
            assert_eq!(link.power_gain(z).unwrap(), 1.0);
        }
    }

    #[test]
    fn single_span_attenuation() {
        let span = smf(100.0);
        let link = LinkProfile::single(span, true).unwrap();
        let g = link.power_gain(50e3).unwrap();
        assert_relative_eq!(g, (-span.alpha * 50e3).exp(), max_relative = 1e-15);
        // 0.2 dB/km over 50 km is 10 dB.
        assert_relative_eq!(g, 0.1, max_relative = 1e-12);
    }

    #[test]
    fn compensated_spans_restore_unit_gain() {
        let span = smf(80.0).with_full_compensation();
        let link = LinkProfile::new(vec![span, span], 0.0, true).unwrap();
        // exp(-alpha L1) * 10^(gain/10) by hand
        let by_hand = (-span.alpha * span.length).exp() * 10f64.powf(span.lumped_gain_db / 10.0);
        assert_relative_eq!(by_hand, 1.0, max_relative = 1e-12);
        assert_relative_eq!(link.power_gain(80e3).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(link.power_gain(160e3).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn gain_is_multiplicative_over_subintervals() {
        let link = LinkProfile::new(vec![smf(60.0), smf(40.0)], 0.0, true).unwrap();
        let a = link.power_gain(20e3).unwrap();
        let b = link.power_gain(45e3).unwrap();
        // G(0->45) = G(0->20) * G(20->45) within one span
        assert_relative_eq!(b / a, (-smf(1.0).alpha * 25e3).exp(), max_relative = 1e-12);
    }

    #[test]
    fn out_of_range_z_is_rejected() {
        let link = LinkProfile::single(smf(10.0), true).unwrap();
        assert!(matches!(
            link.power_gain(-1.0),
            Err(NliError::OutOfDomain { .. })
        ));
        assert!(link.cumulated_dispersion(10e3 + 1.0).is_err());
        assert!(link.cumulated_dispersion(f64::NAN).is_err());
    }

    #[test]
    fn dispersion_profiles() {
        let span = smf(100.0);
        let link = LinkProfile::single(span, true).unwrap();
        assert_eq!(link.cumulated_dispersion(0.0).unwrap(), 0.0);
        assert_relative_eq!(
            link.cumulated_dispersion(30e3).unwrap(),
            -span.beta2 * 30e3,
            max_relative = 1e-15
        );

        let s0 = ps2_to_s2(1000.0);
        let pre = LinkProfile::new(vec![span], s0, true).unwrap();
        assert_eq!(pre.cumulated_dispersion(0.0).unwrap(), s0);

        let a = Span::lossless(50e3, 2e-26, 1e-3);
        let b = Span::lossless(30e3, -1e-26, 1e-3);
        let tent = LinkProfile::new(vec![a, b], s0, false).unwrap();
        let end = s0 - (a.beta2 * a.length + b.beta2 * b.length);
        assert_relative_eq!(tent.cumulated_dispersion(80e3).unwrap(), end, max_relative = 1e-14);
        assert_relative_eq!(
            tent.cumulated_dispersion(50e3).unwrap(),
            s0 - a.beta2 * a.length,
            max_relative = 1e-14
        );
    }

    #[test]
    fn invalid_spans_rejected() {
        assert!(LinkProfile::new(vec![], 0.0, true).is_err());
        assert!(LinkProfile::single(Span::lossless(0.0, 0.0, 1.0), true).is_err());
        assert!(LinkProfile::single(Span::new(1.0, 0.0, -1.0, 1.0, 0.0), true).is_err());
        assert!(LinkProfile::single(Span::new(1.0, 0.0, 0.0, -1.0, 0.0), true).is_err());
    }

    #[test]
    fn manakov_flag_scales_gamma() {
        let span = Span::lossless(1.0, 0.0, 9.0);
        assert_eq!(LinkProfile::single(span, true).unwrap().kernel_gamma(&span), 8.0);
        assert_eq!(LinkProfile::single(span, false).unwrap().kernel_gamma(&span), 9.0);
    }
}
