//! Order-stable accumulators for sample means and standard errors.

use num_complex::Complex64;

/// Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.add(other.carry);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// First two raw moments of a real sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SampleMoments {
    n: u64,
    sum: CompensatedSum,
    sum_sq: CompensatedSum,
}

impl SampleMoments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    pub fn merge(&mut self, other: &Self) {
        self.n += other.n;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum.value() / self.n as f64
        }
    }

    /// Standard error of the mean; zero with fewer than two samples.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let mean = self.mean();
        let var = ((self.sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Componentwise moments of a complex sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComplexSampleMoments {
    pub re: SampleMoments,
    pub im: SampleMoments,
}

impl ComplexSampleMoments {
    pub fn push(&mut self, z: Complex64) {
        self.re.push(z.re);
        self.im.push(z.im);
    }

    pub fn merge(&mut self, other: &Self) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    pub fn mean(&self) -> Complex64 {
        Complex64::new(self.re.mean(), self.im.mean())
    }

    /// Componentwise standard errors packed as (re, im).
    pub fn stderr(&self) -> Complex64 {
        Complex64::new(self.re.stderr(), self.im.stderr())
    }
}

/// Largest componentwise |estimate − expected| / stderr. A component with
/// zero stderr scores zero only on exact agreement.
pub fn complex_z_score(estimate: Complex64, stderr: Complex64, expected: Complex64) -> f64 {
    let z = |d: f64, s: f64| {
        if s > 0.0 {
            d.abs() / s
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    z(estimate.re - expected.re, stderr.re).max(z(estimate.im - expected.im, stderr.im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn mean_and_stderr() {
        let mut m = SampleMoments::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            m.push(x);
        }
        assert_eq!(m.mean(), 2.5);
        // sample variance 5/3, stderr sqrt(5/12)
        assert!((m.stderr() - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        let mut one = SampleMoments::default();
        one.push(3.0);
        assert_eq!(one.stderr(), 0.0);
    }

    #[test]
    fn merge_equals_sequential() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut all = SampleMoments::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = SampleMoments::default();
        let mut b = SampleMoments::default();
        xs[..40].iter().for_each(|&x| a.push(x));
        xs[40..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert_eq!(a.count(), 100);
        assert!((a.mean() - all.mean()).abs() < 1e-15);
    }
}
