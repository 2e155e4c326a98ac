//! Normalized per-polarization input PSDs.
//!
//! Every shape has compact support `[lo, hi)`; evaluation is exactly zero
//! outside it. The half-open convention makes lattice sums over adjacent
//! supports count each sample once.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{NliError, Result};

/// A nonnegative, compactly supported PSD shape in 1/Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsdShape {
    Rectangular {
        center: f64,
        bandwidth: f64,
        height: f64,
    },
    RaisedCosine {
        center: f64,
        bandwidth: f64,
        rolloff: f64,
        height: f64,
    },
    Tabulated {
        frequencies: Vec<f64>,
        values: Vec<f64>,
    },
}

impl PsdShape {
    pub fn rectangular(center: f64, bandwidth: f64, height: f64) -> Result<Self> {
        let s = PsdShape::Rectangular {
            center,
            bandwidth,
            height,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn raised_cosine(center: f64, bandwidth: f64, rolloff: f64, height: f64) -> Result<Self> {
        let s = PsdShape::RaisedCosine {
            center,
            bandwidth,
            rolloff,
            height,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn tabulated(frequencies: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let s = PsdShape::Tabulated {
            frequencies,
            values,
        };
        s.validate()?;
        Ok(s)
    }

    /// A shape that is identically zero.
    pub fn zero() -> Self {
        PsdShape::Rectangular {
            center: 0.0,
            bandwidth: 1.0,
            height: 0.0,
        }
    }

    /// Two-column CSV `f_Hz,value_per_Hz`; a non-numeric first row is
    /// treated as a header.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| NliError::Io(format!("{}: {e}", path.display())))?;
        let mut frequencies = Vec::new();
        let mut values = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| NliError::Io(format!("{}: {e}", path.display())))?;
            if record.len() < 2 {
                return Err(NliError::InvalidPsd(format!(
                    "{}: row {} has fewer than two columns",
                    path.display(),
                    row + 1
                )));
            }
            match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
                (Ok(f), Ok(v)) => {
                    frequencies.push(f);
                    values.push(v);
                }
                _ if row == 0 => continue,
                _ => {
                    return Err(NliError::InvalidPsd(format!(
                        "{}: row {} is not numeric",
                        path.display(),
                        row + 1
                    )))
                }
            }
        }
        Self::tabulated(frequencies, values)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(NliError::InvalidPsd(m.to_string()));
        match self {
            PsdShape::Rectangular {
                center,
                bandwidth,
                height,
            } => {
                if !center.is_finite() || !(bandwidth.is_finite() && *bandwidth > 0.0) {
                    return bad("rectangular: center must be finite and bandwidth > 0");
                }
                if !(height.is_finite() && *height >= 0.0) {
                    return bad("rectangular: height must be finite and >= 0");
                }
            }
            PsdShape::RaisedCosine {
                center,
                bandwidth,
                rolloff,
                height,
            } => {
                if !center.is_finite() || !(bandwidth.is_finite() && *bandwidth > 0.0) {
                    return bad("raised cosine: center must be finite and bandwidth > 0");
                }
                if !(0.0..=1.0).contains(rolloff) {
                    return bad("raised cosine: rolloff must lie in [0, 1]");
                }
                if !(height.is_finite() && *height >= 0.0) {
                    return bad("raised cosine: height must be finite and >= 0");
                }
            }
            PsdShape::Tabulated {
                frequencies,
                values,
            } => {
                if frequencies.len() < 2 || frequencies.len() != values.len() {
                    return bad("tabulated: need >= 2 points and equal-length columns");
                }
                if frequencies.iter().any(|f| !f.is_finite()) {
                    return bad("tabulated: frequencies must be finite");
                }
                if frequencies.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("tabulated: frequencies must be strictly increasing");
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return bad("tabulated: values must be finite and >= 0");
                }
            }
        }
        Ok(())
    }

    /// Support `[lo, hi)` in Hz.
    pub fn support(&self) -> (f64, f64) {
        match self {
            PsdShape::Rectangular {
                center, bandwidth, ..
            } => (center - 0.5 * bandwidth, center + 0.5 * bandwidth),
            PsdShape::RaisedCosine {
                center,
                bandwidth,
                rolloff,
                ..
            } => {
                let half = 0.5 * bandwidth * (1.0 + rolloff);
                (center - half, center + half)
            }
            PsdShape::Tabulated { frequencies, .. } => {
                (frequencies[0], frequencies[frequencies.len() - 1])
            }
        }
    }

    pub fn support_width(&self) -> f64 {
        let (lo, hi) = self.support();
        hi - lo
    }

    /// True when the shape carries no power anywhere.
    pub fn is_zero(&self) -> bool {
        match self {
            PsdShape::Rectangular { height, .. } | PsdShape::RaisedCosine { height, .. } => {
                *height == 0.0
            }
            PsdShape::Tabulated { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// Ĝ(f) in 1/Hz.
    pub fn evaluate(&self, f: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(f >= lo && f < hi) {
            return 0.0;
        }
        match self {
            PsdShape::Rectangular { height, .. } => *height,
            PsdShape::RaisedCosine {
                center,
                bandwidth,
                rolloff,
                height,
            } => {
                let x = (f - center).abs();
                let flat = 0.5 * bandwidth * (1.0 - rolloff);
                if x <= flat {
                    *height
                } else {
                    let arg = PI / (rolloff * bandwidth) * (x - flat);
                    0.5 * height * (1.0 + arg.cos())
                }
            }
            PsdShape::Tabulated {
                frequencies,
                values,
            } => {
                let i = frequencies.partition_point(|&g| g <= f) - 1;
                let t = (f - frequencies[i]) / (frequencies[i + 1] - frequencies[i]);
                values[i] + t * (values[i + 1] - values[i])
            }
        }
    }

    /// ∫ Ĝ(f) df: exact for the parametric shapes, trapezoidal for tables.
    pub fn power_integral(&self) -> f64 {
        match self {
            // The raised-cosine taper is antisymmetric about its half-height
            // point, so the integral equals the nominal rectangle.
            PsdShape::Rectangular {
                bandwidth, height, ..
            }
            | PsdShape::RaisedCosine {
                bandwidth, height, ..
            } => height * bandwidth,
            PsdShape::Tabulated {
                frequencies,
                values,
            } => frequencies
                .windows(2)
                .zip(values.windows(2))
                .map(|(f, v)| 0.5 * (f[1] - f[0]) * (v[0] + v[1]))
                .sum(),
        }
    }

    /// Copy with every value multiplied by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut s = self.clone();
        match &mut s {
            PsdShape::Rectangular { height, .. } | PsdShape::RaisedCosine { height, .. } => {
                *height *= c
            }
            PsdShape::Tabulated { values, .. } => values.iter_mut().for_each(|v| *v *= c),
        }
        s
    }
}

/// Normalized dual-polarization input: Ĝx, Ĝy and the reference power P0.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPolPsd {
    pub gx: PsdShape,
    pub gy: PsdShape,
    /// Reference power in W; G = P0·Ĝ.
    pub p0: f64,
    /// ∫Ĝx, so that Px = P0·px_hat.
    pub px_hat: f64,
    /// ∫Ĝy.
    pub py_hat: f64,
}

impl DualPolPsd {
    pub fn new(gx: PsdShape, gy: PsdShape, p0: f64) -> Result<Self> {
        gx.validate()?;
        gy.validate()?;
        if !(p0.is_finite() && p0 > 0.0) {
            return Err(NliError::InvalidPsd("P0 must be finite and > 0".into()));
        }
        let px_hat = gx.power_integral();
        let py_hat = gy.power_integral();
        Ok(Self {
            gx,
            gy,
            p0,
            px_hat,
            py_hat,
        })
    }

    /// P̂_Tx = 2P̂x + P̂y.
    pub fn pt_hat_x(&self) -> f64 {
        2.0 * self.px_hat + self.py_hat
    }

    /// P̂_Ty = 2P̂y + P̂x.
    pub fn pt_hat_y(&self) -> f64 {
        2.0 * self.py_hat + self.px_hat
    }

    /// Px = P0·P̂x in W.
    pub fn px(&self) -> f64 {
        self.p0 * self.px_hat
    }

    pub fn py(&self) -> f64 {
        self.p0 * self.py_hat
    }

    /// Same input with the X and Y roles exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            gx: self.gy.clone(),
            gy: self.gx.clone(),
            p0: self.p0,
            px_hat: self.py_hat,
            py_hat: self.px_hat,
        }
    }

    /// Un-normalized X PSD in W/Hz.
    pub fn gx_absolute(&self, f: f64) -> f64 {
        self.p0 * self.gx.evaluate(f)
    }

    pub fn gy_absolute(&self, f: f64) -> f64 {
        self.p0 * self.gy.evaluate(f)
    }

    /// Smallest frequency interval covering both supports (ignoring
    /// all-zero shapes); `None` when both are zero.
    pub fn joint_support(&self) -> Option<(f64, f64)> {
        [&self.gx, &self.gy]
            .into_iter()
            .filter(|s| !s.is_zero())
            .map(|s| s.support())
            .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)))
    }
}
