//! Globally adaptive Gauss–Kronrod (7/15) quadrature for complex integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One GK15 panel.
#[derive(Debug, Clone, Copy)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    /// Index of the smooth piece this panel belongs to.
    pub piece: usize,
    pub value: Complex64,
    pub error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// GK15 on [a, b]; returns (Kronrod value, |Kronrod − Gauss|).
pub fn gauss_kronrod15<F>(f: &F, a: f64, b: f64) -> (Complex64, f64)
where
    F: Fn(f64) -> Complex64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * w;
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).norm();
    (value, error)
}

/// Result of an adaptive integration, successful or not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub value: Complex64,
    pub error: f64,
    pub panels: usize,
}

/// Integrates `f` over the given initial panels, bisecting the panel with
/// the largest error estimate until the summed estimate drops below
/// `abs_tol`. `Err` carries the best outcome reached when `max_panels` is
/// exhausted first.
pub fn integrate_panels<F>(
    f: F,
    initial: &[(f64, f64, usize)],
    abs_tol: f64,
    max_panels: usize,
) -> Result<Outcome, Outcome>
where
    F: Fn(usize, f64) -> Complex64,
{
    let mut heap = BinaryHeap::with_capacity(initial.len() * 2);
    let mut total_error = 0.0;
    for &(a, b, piece) in initial {
        let (value, error) = gauss_kronrod15(&|x| f(piece, x), a, b);
        total_error += error;
        heap.push(Panel {
            a,
            b,
            piece,
            value,
            error,
        });
    }

    let mut converged = total_error <= abs_tol;
    while !converged && heap.len() < max_panels {
        let worst = heap.pop().expect("heap is never empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            heap.push(worst);
            break;
        }
        total_error -= worst.error;
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gauss_kronrod15(&|x| f(worst.piece, x), a, b);
            total_error += error;
            heap.push(Panel {
                a,
                b,
                piece: worst.piece,
                value,
                error,
            });
        }
        converged = total_error <= abs_tol;
    }

    // Sum in z order so the result does not depend on the refinement history.
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().fold(Complex64::new(0.0, 0.0), |acc, p| acc + p.value);
    let error = panels.iter().map(|p| p.error).sum::<f64>();
    let outcome = Outcome {
        value,
        error,
        panels: panels.len(),
    };
    if error <= abs_tol {
        Ok(outcome)
    } else {
        Err(outcome)
    }
}
