//! Brute-force checks of circular complex Gaussian moment identities.
//!
//! A [`GaussianEnsemble`] stores a covariance `R_ij = E[U_i U_j*]` together
//! with a factor `L` (`R = L Lᴴ`) used to draw samples `U = L ξ` from standard
//! circular normals. Moments of the form
//! `E[U*_{c1} … U*_{ck} U_{u1} … U_{uk}]` are evaluated by the k!-term
//! pairing sum and estimated by Monte Carlo.
//!
//! The stationary-process checks use circularly stationary sequences on an
//! N-point grid: each process is a circular FIR filtering of shared white
//! sources, so its unitary DFT bins are exactly uncorrelated across
//! frequency and `E[X_a[κ] X_b*[κ']] = G_ab[κ] δ_{κκ'}` holds exactly.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{NliError, Result};
use crate::rng::{stream, DOMAIN_ENSEMBLE, DOMAIN_MOMENT, DOMAIN_PROCESS};
use crate::stats::{complex_z_score, ComplexSampleMoments};

/// Largest order accepted by the pairing sum (8! = 40320 terms).
pub const MAX_CGMT_ORDER: usize = 8;
/// Fewest trials accepted by the Monte Carlo moment estimators.
pub const MIN_MOMENT_TRIALS: u64 = 10_000;
/// Acceptance threshold in standard errors.
pub const Z_THRESHOLD: f64 = 4.0;
/// Smallest grid accepted by the stationary-process checks.
pub const MIN_GRID_POINTS: usize = 32;

const TRIAL_BLOCK: u64 = 256;
const EIGEN_TOLERANCE: f64 = 1e-12;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn bad(msg: impl Into<String>) -> NliError {
    NliError::InvalidMoment(msg.into())
}

/// Hermitian PSD check with eigenvalues allowed down to −1e−12 relative.
fn check_covariance(cov: &DMatrix<Complex64>) -> Result<()> {
    if !cov.is_square() || cov.nrows() == 0 {
        return Err(bad("covariance must be a non-empty square matrix"));
    }
    if cov.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(bad("covariance has non-finite entries"));
    }
    let scale = cov.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let asym = (cov - cov.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if asym > EIGEN_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
        return Err(bad(format!("covariance is not Hermitian (residual {asym:e})")));
    }
    let eig = SymmetricEigen::new(cov.clone());
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -EIGEN_TOLERANCE * max.max(f64::MIN_POSITIVE) {
        return Err(bad(format!("covariance is not positive semidefinite (eigenvalue {min:e})")));
    }
    Ok(())
}

/// Exactly Hermitian copy: (M + Mᴴ)/2.
fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Zero-mean jointly circular complex Gaussian vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianEnsemble {
    covariance: DMatrix<Complex64>,
    factor: DMatrix<Complex64>,
}

impl GaussianEnsemble {
    /// Ensemble with covariance `L Lᴴ`; `factor` may be rectangular.
    pub fn from_factor(factor: DMatrix<Complex64>) -> Result<Self> {
        if factor.nrows() == 0 || factor.ncols() == 0 {
            return Err(bad("factor must be non-empty"));
        }
        if factor.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(bad("factor has non-finite entries"));
        }
        let covariance = hermitian_part(&(&factor * factor.adjoint()));
        Ok(Self { covariance, factor })
    }

    /// Ensemble with a given covariance, factored through its eigensystem.
    pub fn from_covariance(covariance: DMatrix<Complex64>) -> Result<Self> {
        check_covariance(&covariance)?;
        let covariance = hermitian_part(&covariance);
        let eig = SymmetricEigen::new(covariance.clone());
        let roots = eig.eigenvalues.map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0));
        let factor = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
        Ok(Self { covariance, factor })
    }

    /// Random ensemble of dimension `dim` from a square factor with
    /// independent CN(0, 1/dim) entries, addressed by `(seed, index)`.
    pub fn random(dim: usize, seed: u64, index: u64) -> Result<Self> {
        if dim == 0 {
            return Err(bad("dimension must be > 0"));
        }
        let mut s = stream(seed, DOMAIN_ENSEMBLE, index);
        let scale = 1.0 / (dim as f64).sqrt();
        let factor = DMatrix::from_fn(dim, dim, |_, _| s.next_complex() * scale);
        Self::from_factor(factor)
    }

    pub fn dimension(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<Complex64> {
        &self.covariance
    }

    pub fn factor(&self) -> &DMatrix<Complex64> {
        &self.factor
    }

    /// E[U_a* U_b].
    pub fn pair(&self, a: usize, b: usize) -> Complex64 {
        self.covariance[(b, a)]
    }

    /// One draw `L ξ` using the standard normals of stream `(seed, trial)`.
    pub fn sample(&self, seed: u64, trial: u64) -> Vec<Complex64> {
        let mut s = stream(seed, DOMAIN_MOMENT, trial);
        let xi: Vec<Complex64> = (0..self.factor.ncols()).map(|_| s.next_complex()).collect();
        (0..self.factor.nrows())
            .map(|i| (0..xi.len()).map(|j| self.factor[(i, j)] * xi[j]).sum())
            .collect()
    }
}

/// Index pattern of `E[U*_{c1} … U*_{ck} U_{u1} … U_{uk}]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentSpec {
    /// Variables in the conjugated slots.
    pub conjugated: Vec<usize>,
    /// Variables in the unconjugated slots.
    pub unconjugated: Vec<usize>,
}

impl MomentSpec {
    pub fn new(conjugated: Vec<usize>, unconjugated: Vec<usize>) -> Result<Self> {
        if conjugated.is_empty() {
            return Err(bad("moment order must be >= 1"));
        }
        if conjugated.len() != unconjugated.len() {
            return Err(bad(format!(
                "{} conjugated slots but {} unconjugated slots",
                conjugated.len(),
                unconjugated.len()
            )));
        }
        Ok(Self {
            conjugated,
            unconjugated,
        })
    }

    /// `E[U_0* … U_{k−1}* U_k … U_{2k−1}]`.
    pub fn normal_form(k: usize) -> Result<Self> {
        Self::new((0..k).collect(), (k..2 * k).collect())
    }

    /// `E[|U_v|^{2k}]`.
    pub fn repeated(variable: usize, k: usize) -> Result<Self> {
        Self::new(vec![variable; k], vec![variable; k])
    }

    pub fn order(&self) -> usize {
        self.conjugated.len()
    }

    fn check_against(&self, dim: usize) -> Result<()> {
        match self.conjugated.iter().chain(&self.unconjugated).find(|&&i| i >= dim) {
            Some(i) => Err(bad(format!("variable {i} outside ensemble of dimension {dim}"))),
            None => Ok(()),
        }
    }
}

/// Rearranges `p` into the next lexicographic permutation; false after the last.
fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// One pairing term: the unconjugated slot matched to each conjugated slot
/// and the product of the pair expectations.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingTerm {
    pub permutation: Vec<usize>,
    pub value: Complex64,
}

/// Pairing terms over a raw covariance `R_ij = E[V_i V_j*]`, in lexicographic
/// order of the unconjugated-slot permutation.
pub fn cgmt_terms_covariance(cov: &DMatrix<Complex64>, spec: &MomentSpec) -> Result<Vec<PairingTerm>> {
    let k = spec.order();
    if k > MAX_CGMT_ORDER {
        return Err(bad(format!("order {k} exceeds the limit of {MAX_CGMT_ORDER}")));
    }
    if !cov.is_square() {
        return Err(bad("covariance must be square"));
    }
    spec.check_against(cov.nrows())?;
    let mut perm: Vec<usize> = (0..k).collect();
    let mut terms = Vec::new();
    loop {
        let value = spec
            .conjugated
            .iter()
            .zip(&perm)
            .map(|(&c, &p)| cov[(spec.unconjugated[p], c)])
            .product();
        terms.push(PairingTerm {
            permutation: perm.clone(),
            value,
        });
        if !next_permutation(&mut perm) {
            return Ok(terms);
        }
    }
}

/// Σ_π Π_i E[U*_{c_i} U_{u_π(i)}] over a raw covariance.
pub fn cgmt_sum_covariance(cov: &DMatrix<Complex64>, spec: &MomentSpec) -> Result<Complex64> {
    Ok(cgmt_terms_covariance(cov, spec)?.iter().map(|t| t.value).sum())
}

/// Pairing-sum value of the moment described by `spec`.
pub fn cgmt_sum(ensemble: &GaussianEnsemble, spec: &MomentSpec) -> Result<Complex64> {
    cgmt_sum_covariance(ensemble.covariance(), spec)
}

/// E[U₁*U₂*U₃U₄] = E[U₁*U₃]E[U₂*U₄] + E[U₁*U₄]E[U₂*U₃] for `indices = [1, 2, 3, 4]`.
pub fn fourth_moment_identity(ensemble: &GaussianEnsemble, indices: [usize; 4]) -> Complex64 {
    let [a, b, c, d] = indices;
    ensemble.pair(a, c) * ensemble.pair(b, d) + ensemble.pair(a, d) * ensemble.pair(b, c)
}

/// Sample mean with componentwise standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub mean: Complex64,
    pub stderr: Complex64,
    pub trials: u64,
}

fn check_trials(trials: u64) -> Result<()> {
    if trials < MIN_MOMENT_TRIALS {
        return Err(bad(format!("need at least {MIN_MOMENT_TRIALS} trials, got {trials}")));
    }
    Ok(())
}

/// Block-parallel accumulation of `width` complex statistics, merged in
/// block order so the result does not depend on the thread count.
fn accumulate<F>(trials: u64, width: usize, per_trial: F) -> Vec<ComplexSampleMoments>
where
    F: Fn(u64, &mut [ComplexSampleMoments]) + Sync,
{
    let blocks = trials.div_ceil(TRIAL_BLOCK);
    let partials: Vec<Vec<ComplexSampleMoments>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![ComplexSampleMoments::default(); width];
            for t in b * TRIAL_BLOCK..((b + 1) * TRIAL_BLOCK).min(trials) {
                per_trial(t, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![ComplexSampleMoments::default(); width];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    total
}

fn to_estimate(m: &ComplexSampleMoments, trials: u64) -> MomentEstimate {
    MomentEstimate {
        mean: m.mean(),
        stderr: m.stderr(),
        trials,
    }
}

/// Monte Carlo estimate of the moment described by `spec`.
pub fn mc_moment(
    ensemble: &GaussianEnsemble,
    spec: &MomentSpec,
    trials: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    check_trials(trials)?;
    spec.check_against(ensemble.dimension())?;
    let acc = accumulate(trials, 1, |t, acc| {
        let u = ensemble.sample(seed, t);
        let conj: Complex64 = spec.conjugated.iter().map(|&i| u[i].conj()).product();
        let plain: Complex64 = spec.unconjugated.iter().map(|&i| u[i]).product();
        acc[0].push(conj * plain);
    });
    Ok(to_estimate(&acc[0], trials))
}

/// One Monte Carlo comparison in a report.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub label: String,
    pub expected: Complex64,
    pub estimate: MomentEstimate,
    /// Largest componentwise |estimate − expected| / stderr.
    pub z: f64,
}

impl MomentCheck {
    pub fn new(label: impl Into<String>, expected: Complex64, estimate: MomentEstimate) -> Self {
        let z = complex_z_score(estimate.mean, estimate.stderr, expected);
        Self {
            label: label.into(),
            expected,
            estimate,
            z,
        }
    }

    pub fn passed(&self) -> bool {
        self.z <= Z_THRESHOLD
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub checks: Vec<MomentCheck>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(MomentCheck::passed)
    }

    pub fn max_z(&self) -> f64 {
        self.checks.iter().map(|c| c.z).fold(0.0, f64::max)
    }
}

/// Pairing sum against Monte Carlo on `ensembles` random ensembles of
/// dimension 2k, plus E|U|^{2k} = k!·σ^{2k} on the first variable of each.
pub fn pairing_sum_check(k: usize, ensembles: usize, trials: u64, seed: u64) -> Result<CheckReport> {
    if k == 0 || k > MAX_CGMT_ORDER {
        return Err(bad(format!("order must be in 1..={MAX_CGMT_ORDER}")));
    }
    let normal = MomentSpec::normal_form(k)?;
    let power = MomentSpec::repeated(0, k)?;
    let factorial: f64 = (1..=k).map(|i| i as f64).product();
    let mut report = CheckReport::default();
    for e in 0..ensembles as u64 {
        let ens = GaussianEnsemble::random(2 * k, seed, e)?;
        let trial_seed = seed.wrapping_add(e.wrapping_mul(0x2545_f491_4f6c_dd1d));
        let est = mc_moment(&ens, &normal, trials, trial_seed)?;
        report.checks.push(MomentCheck::new(
            format!("ensemble {e}: pairing sum, order {k}"),
            cgmt_sum(&ens, &normal)?,
            est,
        ));
        let sigma2 = ens.covariance()[(0, 0)].re;
        let est = mc_moment(&ens, &power, trials, trial_seed ^ 1)?;
        report.checks.push(MomentCheck::new(
            format!("ensemble {e}: E|U|^{}", 2 * k),
            Complex64::new(factorial * sigma2.powi(k as i32), 0.0),
            est,
        ));
    }
    Ok(report)
}

/// Jointly circularly stationary processes on an N-point grid, each a sum of
/// circular FIR filterings of shared independent white sources.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessBank {
    n: usize,
    /// taps[process][source], each at most N long.
    taps: Vec<Vec<Vec<Complex64>>>,
    /// Unnormalized DFT of each filter: transfer[process][source][κ].
    transfer: Vec<Vec<Vec<Complex64>>>,
}

impl ProcessBank {
    pub fn from_taps(n: usize, taps: Vec<Vec<Vec<Complex64>>>) -> Result<Self> {
        if n < MIN_GRID_POINTS {
            return Err(bad(format!("grid size must be >= {MIN_GRID_POINTS}, got {n}")));
        }
        let sources = taps.first().map_or(0, Vec::len);
        if taps.is_empty() || sources == 0 {
            return Err(bad("need at least one process and one source"));
        }
        for (p, row) in taps.iter().enumerate() {
            if row.len() != sources {
                return Err(bad(format!("process {p} has {} sources, expected {sources}", row.len())));
            }
            for h in row {
                if h.len() > n || h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(bad(format!("process {p} has an invalid filter")));
                }
            }
        }
        let transfer = taps
            .iter()
            .map(|row| row.iter().map(|h| naive_dft(h, n)).collect())
            .collect();
        Ok(Self { n, taps, transfer })
    }

    /// Builds processes whose cross-spectral matrix at bin κ is `spectra[κ]`
    /// (indexed `[a][b] = G_ab[κ]`). Each matrix must be Hermitian PSD.
    pub fn from_spectra(n: usize, spectra: &[DMatrix<Complex64>]) -> Result<Self> {
        if spectra.len() != n {
            return Err(bad(format!("need {n} spectral matrices, got {}", spectra.len())));
        }
        let dim = spectra.first().map_or(0, |m| m.nrows());
        let mut transfer = vec![vec![vec![zero(); n]; dim]; dim];
        for (kappa, g) in spectra.iter().enumerate() {
            if g.nrows() != dim {
                return Err(bad("spectral matrices must share one dimension"));
            }
            check_covariance(g).map_err(|e| bad(format!("bin {kappa}: {e}")))?;
            let ens = GaussianEnsemble::from_covariance(g.clone())?;
            for a in 0..dim {
                for s in 0..dim {
                    transfer[a][s][kappa] = ens.factor()[(a, s)];
                }
            }
        }
        let taps = transfer
            .iter()
            .map(|row| row.iter().map(|h| naive_idft(h)).collect())
            .collect();
        Self::from_taps(n, taps)
    }

    /// Random filters with `taps_len` CN(0, 1/taps_len) taps per source.
    pub fn random(n: usize, processes: usize, sources: usize, taps_len: usize, seed: u64) -> Result<Self> {
        let mut s = stream(seed, DOMAIN_ENSEMBLE, u64::MAX);
        let scale = 1.0 / (taps_len.max(1) as f64).sqrt();
        let taps = (0..processes)
            .map(|_| {
                (0..sources)
                    .map(|_| (0..taps_len).map(|_| s.next_complex() * scale).collect())
                    .collect()
            })
            .collect();
        Self::from_taps(n, taps)
    }

    pub fn grid_size(&self) -> usize {
        self.n
    }

    pub fn processes(&self) -> usize {
        self.taps.len()
    }

    pub fn sources(&self) -> usize {
        self.taps[0].len()
    }

    /// G_ab[κ] = E[X_a[κ] X_b*[κ]] = Σ_s H_as[κ] H_bs*[κ].
    pub fn cross_spectrum(&self, a: usize, b: usize, kappa: i64) -> Complex64 {
        let k = self.bin(kappa);
        self.transfer[a]
            .iter()
            .zip(&self.transfer[b])
            .map(|(ha, hb)| ha[k] * hb[k].conj())
            .sum()
    }

    fn bin(&self, kappa: i64) -> usize {
        kappa.rem_euclid(self.n as i64) as usize
    }

    /// Unitary DFT of every process for one trial: out[process][κ].
    fn draw(&self, seed: u64, trial: u64, fft: &dyn rustfft::Fft<f64>) -> Vec<Vec<Complex64>> {
        let n = self.n;
        let mut s = stream(seed, DOMAIN_PROCESS, trial);
        let white: Vec<Vec<Complex64>> = (0..self.sources())
            .map(|_| (0..n).map(|_| s.next_complex()).collect())
            .collect();
        let norm = 1.0 / (n as f64).sqrt();
        self.taps
            .iter()
            .map(|row| {
                let mut x = vec![zero(); n];
                for (h, w) in row.iter().zip(&white) {
                    for (m, &tap) in h.iter().enumerate() {
                        for (t, xt) in x.iter_mut().enumerate() {
                            *xt += tap * w[(t + n - m) % n];
                        }
                    }
                }
                fft.process(&mut x);
                x.iter_mut().for_each(|v| *v *= norm);
                x
            })
            .collect()
    }
}

fn naive_dft(h: &[Complex64], n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            h.iter()
                .enumerate()
                .map(|(m, &v)| v * Complex64::from_polar(1.0, -std::f64::consts::TAU * ((k * m) % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}

fn naive_idft(spectrum: &[Complex64]) -> Vec<Complex64> {
    let n = spectrum.len();
    (0..n)
        .map(|m| {
            spectrum
                .iter()
                .enumerate()
                .map(|(k, &v)| v * Complex64::from_polar(1.0, std::f64::consts::TAU * ((k * m) % n) as f64 / n as f64))
                .sum::<Complex64>()
                / n as f64
        })
        .collect()
}

/// Frequency-bin offsets of `E[Ã(f+f1) B̃*(f+f1+f2) C̃(f+f2) D̃*(u+f3) Ẽ(u+f3+f4) F̃*(u+f4)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SixFieldOffsets {
    pub f: i64,
    pub u: i64,
    pub f1: i64,
    pub f2: i64,
    pub f3: i64,
    pub f4: i64,
}

impl SixFieldOffsets {
    pub fn diagonal(f: i64, f1: i64, f2: i64, f3: i64, f4: i64) -> Self {
        Self { f, u: f, f1, f2, f3, f4 }
    }

    /// Bins of slots A..F.
    pub fn bins(&self) -> [i64; 6] {
        [
            self.f + self.f1,
            self.f + self.f1 + self.f2,
            self.f + self.f2,
            self.u + self.f3,
            self.u + self.f3 + self.f4,
            self.u + self.f4,
        ]
    }
}

/// One six-field moment: which process sits in slots A..F, and where.
#[derive(Debug, Clone, PartialEq)]
pub struct SixFieldCase {
    pub label: String,
    pub processes: [usize; 6],
    pub offsets: SixFieldOffsets,
}

/// The six delta-selected terms of the six-field moment, in the order
/// (ab·cd·ef, ab·ed·cf, cb·ad·ef, cb·ed·af, eb·ad·cf, eb·cd·af). Each entry
/// is zero unless its Kronecker deltas (and u = f) hold.
pub fn six_term_formula(bank: &ProcessBank, case: &SixFieldCase) -> [Complex64; 6] {
    let [a, b, c, d, e, f_] = case.processes;
    let o = case.offsets;
    let n = bank.grid_size() as i64;
    let is0 = |x: i64| x.rem_euclid(n) == 0;
    let g = |p: usize, q: usize, k: i64| bank.cross_spectrum(p, q, k);
    let f = o.f;
    let mut t = [zero(); 6];
    if !is0(o.u - f) {
        return t;
    }
    if is0(o.f2) && is0(o.f3) {
        t[0] = g(a, b, f + o.f1) * g(c, d, f) * g(e, f_, f + o.f4);
    }
    if is0(o.f2) && is0(o.f4) {
        t[1] = g(a, b, f + o.f1) * g(e, d, f + o.f3) * g(c, f_, f);
    }
    if is0(o.f1) && is0(o.f3) {
        t[2] = g(c, b, f + o.f2) * g(a, d, f) * g(e, f_, f + o.f4);
    }
    if is0(o.f1) && is0(o.f4) {
        t[3] = g(c, b, f + o.f2) * g(e, d, f + o.f3) * g(a, f_, f);
    }
    if is0(o.f3 - o.f1) && is0(o.f4 - o.f2) {
        t[4] = g(e, b, f + o.f1 + o.f2) * g(a, d, f + o.f1) * g(c, f_, f + o.f2);
    }
    if is0(o.f4 - o.f1) && is0(o.f3 - o.f2) {
        t[5] = g(e, b, f + o.f1 + o.f2) * g(c, d, f + o.f2) * g(a, f_, f + o.f1);
    }
    t
}

/// 6×6 covariance `E[V_i V_j*]` of the slot variables V = (Ã, B̃, C̃, D̃, Ẽ, F̃).
pub fn six_field_covariance(bank: &ProcessBank, case: &SixFieldCase) -> DMatrix<Complex64> {
    let bins = case.offsets.bins();
    let n = bank.grid_size() as i64;
    DMatrix::from_fn(6, 6, |i, j| {
        if (bins[i] - bins[j]).rem_euclid(n) == 0 {
            bank.cross_spectrum(case.processes[i], case.processes[j], bins[i])
        } else {
            zero()
        }
    })
}

/// Slots B, D, F are conjugated; A, C, E are not.
pub fn six_field_spec() -> MomentSpec {
    MomentSpec {
        conjugated: vec![1, 3, 5],
        unconjugated: vec![0, 2, 4],
    }
}

fn check_process_indices(bank: &ProcessBank, procs: &[usize]) -> Result<()> {
    match procs.iter().find(|&&p| p >= bank.processes()) {
        Some(p) => Err(bad(format!("process {p} not in bank of {}", bank.processes()))),
        None => Ok(()),
    }
}

/// Monte Carlo of each six-field case against its six-term value.
pub fn theorem3_discrete_check(
    bank: &ProcessBank,
    cases: &[SixFieldCase],
    trials: u64,
    seed: u64,
) -> Result<CheckReport> {
    check_trials(trials)?;
    for c in cases {
        check_process_indices(bank, &c.processes)?;
    }
    let fft = FftPlanner::new().plan_fft_forward(bank.grid_size());
    let acc = accumulate(trials, cases.len(), |t, acc| {
        let x = bank.draw(seed, t, fft.as_ref());
        for (case, a) in cases.iter().zip(acc.iter_mut()) {
            let bins = case.offsets.bins();
            let mut prod = Complex64::new(1.0, 0.0);
            for slot in 0..6 {
                let v = x[case.processes[slot]][bank.bin(bins[slot])];
                prod *= if slot % 2 == 1 { v.conj() } else { v };
            }
            a.push(prod);
        }
    });
    Ok(CheckReport {
        checks: cases
            .iter()
            .zip(&acc)
            .map(|(c, m)| {
                let expected = six_term_formula(bank, c).iter().sum();
                MomentCheck::new(c.label.clone(), expected, to_estimate(m, trials))
            })
            .collect(),
    })
}

/// Second-order pair `E[X_a[κ] X_b*[κ']]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCase {
    pub label: String,
    pub a: usize,
    pub b: usize,
    pub kappa: i64,
    pub kappa_prime: i64,
}

/// Monte Carlo of `E[X_a[κ] X_b*[κ']]` against `G_ab[κ] δ_{κκ'}`.
pub fn theorem1_discrete_check(
    bank: &ProcessBank,
    cases: &[PairCase],
    trials: u64,
    seed: u64,
) -> Result<CheckReport> {
    check_trials(trials)?;
    for c in cases {
        check_process_indices(bank, &[c.a, c.b])?;
    }
    let fft = FftPlanner::new().plan_fft_forward(bank.grid_size());
    let acc = accumulate(trials, cases.len(), |t, acc| {
        let x = bank.draw(seed, t, fft.as_ref());
        for (c, a) in cases.iter().zip(acc.iter_mut()) {
            a.push(x[c.a][bank.bin(c.kappa)] * x[c.b][bank.bin(c.kappa_prime)].conj());
        }
    });
    Ok(CheckReport {
        checks: cases
            .iter()
            .zip(&acc)
            .map(|(c, m)| {
                let expected = if bank.bin(c.kappa) == bank.bin(c.kappa_prime) {
                    bank.cross_spectrum(c.a, c.b, c.kappa)
                } else {
                    zero()
                };
                MomentCheck::new(c.label.clone(), expected, to_estimate(m, trials))
            })
            .collect(),
    })
}

/// Process indices in [`standard_process_bank`].
pub const BANK_X: usize = 6;
pub const BANK_Y: usize = 7;
pub const BANK_INDEPENDENT: usize = 8;

/// Eight-source bank: processes 0..6 are correlated (shared sources 0..3),
/// X = 6 and Y = 7 are independent of everything else and of each other,
/// and process 8 is independent white noise.
pub fn standard_process_bank(n: usize, seed: u64) -> Result<ProcessBank> {
    let shared = ProcessBank::random(n, 6, 3, 4, seed)?;
    let mut s = stream(seed, DOMAIN_ENSEMBLE, u64::MAX - 1);
    let sources = 6;
    let mut taps = Vec::new();
    for p in 0..6 {
        let mut row = shared.taps[p].clone();
        row.resize(sources, Vec::new());
        taps.push(row);
    }
    for (p, src) in [(BANK_X, 3), (BANK_Y, 4)] {
        let mut row = vec![Vec::new(); sources];
        row[src] = (0..3).map(|_| s.next_complex() * 0.6).collect();
        debug_assert_eq!(taps.len(), p);
        taps.push(row);
    }
    let mut white = vec![Vec::new(); sources];
    white[5] = vec![Complex64::new(1.0, 0.0)];
    taps.push(white);
    ProcessBank::from_taps(n, taps)
}

/// The configured set of six-field cases for [`standard_process_bank`]:
/// off-diagonal zeros, one case per delta pattern, all-equal processes and
/// the uncorrelated X/Y two-term pattern.
pub fn standard_six_field_cases() -> Vec<SixFieldCase> {
    let generic = [0, 1, 2, 3, 4, 5];
    let x = BANK_X;
    let y = BANK_Y;
    let w = BANK_INDEPENDENT;
    let mut cases = vec![
        SixFieldCase {
            label: "off diagonal u != f, generic offsets".into(),
            processes: generic,
            offsets: SixFieldOffsets { f: 3, u: 5, f1: 1, f2: 0, f3: 0, f4: 2 },
        },
        SixFieldCase {
            label: "off diagonal u != f, all offsets zero".into(),
            processes: generic,
            offsets: SixFieldOffsets { f: 0, u: 1, f1: 0, f2: 0, f3: 0, f4: 0 },
        },
        SixFieldCase {
            label: "independent white, no delta satisfied".into(),
            processes: [w; 6],
            offsets: SixFieldOffsets::diagonal(2, 1, 3, 4, 5),
        },
    ];
    let patterns = [
        ("ab.cd.ef: f2 = f3 = 0", (1, 0, 0, 2)),
        ("ab.ed.cf: f2 = f4 = 0", (1, 0, 2, 0)),
        ("cb.ad.ef: f1 = f3 = 0", (0, 1, 0, 2)),
        ("cb.ed.af: f1 = f4 = 0", (0, 1, 2, 0)),
        ("eb.ad.cf: f3 = f1, f4 = f2", (1, 2, 1, 2)),
        ("eb.cd.af: f4 = f1, f3 = f2", (1, 2, 2, 1)),
    ];
    for (name, (f1, f2, f3, f4)) in patterns {
        cases.push(SixFieldCase {
            label: format!("correlated processes, {name}"),
            processes: generic,
            offsets: SixFieldOffsets::diagonal(3, f1, f2, f3, f4),
        });
    }
    for (name, (f1, f2, f3, f4)) in patterns {
        cases.push(SixFieldCase {
            label: format!("single process, {name}"),
            processes: [x; 6],
            offsets: SixFieldOffsets::diagonal(-2, f1, f2, f3, f4),
        });
    }
    cases.push(SixFieldCase {
        label: "single process, all offsets zero".into(),
        processes: [x; 6],
        offsets: SixFieldOffsets::diagonal(1, 0, 0, 0, 0),
    });
    cases.push(SixFieldCase {
        label: "uncorrelated X/Y, cross pattern, all offsets zero".into(),
        processes: [x, y, y, x, y, y],
        offsets: SixFieldOffsets::diagonal(1, 0, 0, 0, 0),
    });
    cases.push(SixFieldCase {
        label: "uncorrelated X/Y, cross pattern, f1 = f3 = 0".into(),
        processes: [x, y, y, x, y, y],
        offsets: SixFieldOffsets::diagonal(1, 0, 2, 0, 3),
    });
    cases.push(SixFieldCase {
        label: "uncorrelated X/Y, cross pattern, f3 = f1, f4 = f2".into(),
        processes: [x, y, y, x, y, y],
        offsets: SixFieldOffsets::diagonal(1, 2, 3, 2, 3),
    });
    cases
}

/// Pair cases on [`standard_process_bank`]: same-bin cross spectra and
/// different-bin zeros.
pub fn standard_pair_cases() -> Vec<PairCase> {
    let mut cases = Vec::new();
    for (a, b) in [(0, 0), (0, 1), (2, 5), (BANK_X, BANK_X), (BANK_X, BANK_Y)] {
        cases.push(PairCase {
            label: format!("E[X{a}[3] X{b}*[3]]"),
            a,
            b,
            kappa: 3,
            kappa_prime: 3,
        });
        cases.push(PairCase {
            label: format!("E[X{a}[3] X{b}*[7]]"),
            a,
            b,
            kappa: 3,
            kappa_prime: 7,
        });
    }
    cases
}
