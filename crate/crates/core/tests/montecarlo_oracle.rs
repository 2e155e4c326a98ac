use gnli_core::link::{db_per_km_to_per_m, ps2_per_km_to_s2_per_m};
use gnli_core::montecarlo::{
    draw_field, erp1_perturbation, estimate_input_psd, estimate_nli_psd, normalized_perturbation, rp1_perturbation,
    z_score, EtaTable,
};
use gnli_core::{
    Complex64, DualPolPsd, KernelModel, LinkProfile, PerturbationMode, PsdShape, SpectralField, Span, TrialConfig,
};

const F0: f64 = 1e9;

fn kernel() -> KernelModel {
    let span = Span::new(
        80e3,
        ps2_per_km_to_s2_per_m(-21.7),
        db_per_km_to_per_m(0.2),
        1.3e-3,
        16.0,
    );
    KernelModel::new(LinkProfile::single(span, true).unwrap()).unwrap()
}

fn psd() -> DualPolPsd {
    DualPolPsd::new(
        PsdShape::rectangular(-0.5e9, 16e9, 1.0 / 16e9).unwrap(),
        PsdShape::rectangular(-0.5e9, 12e9, 0.4 / 12e9).unwrap(),
        1e-3,
    )
    .unwrap()
}

#[test]
fn line_draws_are_circular_unit_gaussians() {
    let flat = DualPolPsd::new(
        PsdShape::rectangular(-0.5e9, 16e9, 1.0).unwrap(),
        PsdShape::zero(),
        1e-3,
    )
    .unwrap();
    let cfg = TrialConfig::new(F0, 32, 1, 5, PerturbationMode::Rp1);
    let (mut s1, mut s2, mut s_re2, mut s_pow, mut s_pow2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.0, 0.0, 0.0);
    let trials = 100_000u64;
    let k = (-cfg.k_min()) as usize;
    assert_eq!(flat.gx.evaluate(cfg.frequencies()[k]), 1.0);
    for t in 0..trials {
        let a = draw_field(&cfg, &flat, t).lines_x[k];
        s1 += a;
        s2 += a * a;
        s_re2 += a.re * a.re;
        s_pow += a.norm_sqr();
        s_pow2 += a.norm_sqr() * a.norm_sqr();
    }
    let n = trials as f64;
    // Re and Im have variance 1/2, |a|² is Exp(1), a² has E|a²|² = 2.
    let se_mean = (0.5 / n).sqrt();
    assert!(s1.re.abs() / n <= 4.0 * se_mean && s1.im.abs() / n <= 4.0 * se_mean);
    let se_sq = (1.0 / n).sqrt();
    assert!(s2.re.abs() / n <= 4.0 * se_sq && s2.im.abs() / n <= 4.0 * se_sq);
    assert!((s_re2 / n - 0.5).abs() <= 4.0 * (0.5 / n).sqrt());
    let mean_pow = s_pow / n;
    let se_pow = ((s_pow2 / n - mean_pow * mean_pow) / n).sqrt();
    assert!((mean_pow - 1.0).abs() <= 4.0 * se_pow, "E|a|² = {mean_pow}");
}

#[test]
fn input_estimate_recovers_the_psd() {
    let psd = psd();
    let cfg = TrialConfig::new(F0, 32, 20_000, 11, PerturbationMode::Rp1);
    let est = estimate_input_psd(&cfg, &psd).unwrap();
    for (i, f) in est.frequencies.iter().enumerate() {
        for (e, shape) in [(est.x[i], &psd.gx), (est.y[i], &psd.gy)] {
            let g = shape.evaluate(*f);
            if g == 0.0 {
                assert_eq!(e.mean, 0.0);
            } else {
                assert!(z_score(e, g) <= 4.0, "f = {f:e}: {} vs {g}", e.mean);
            }
        }
    }
}

/// Every ordered triple of grid lines (p, q, r) beats onto k = p − q + r.
fn brute_force_fwm(field: &SpectralField, kernel: &KernelModel) -> (Vec<Complex64>, Vec<Complex64>) {
    let m = field.len() as i64;
    let f0 = field.f0;
    let mut bx = vec![Complex64::new(0.0, 0.0); m as usize];
    let mut by = vec![Complex64::new(0.0, 0.0); m as usize];
    for p in 0..m {
        for q in 0..m {
            for r in 0..m {
                let k = p - q + r;
                if !(0..m).contains(&k) {
                    continue;
                }
                let eta = kernel.normalized_kernel(((p - k) * (r - k)) as f64 * f0 * f0).unwrap();
                let (xp, yp) = (field.lines_x[p as usize], field.lines_y[p as usize]);
                let (xq, yq) = (field.lines_x[q as usize].conj(), field.lines_y[q as usize].conj());
                let (xr, yr) = (field.lines_x[r as usize], field.lines_y[r as usize]);
                let power = xq * xr + yq * yr;
                bx[k as usize] += eta * xp * power * f0;
                by[k as usize] += eta * yp * power * f0;
            }
        }
    }
    (bx, by)
}

#[test]
fn perturbation_matches_triple_loop_oracle() {
    let kernel = kernel();
    let psd = psd();
    let cfg = TrialConfig::new(F0, 12, 1, 3, PerturbationMode::Rp1);
    let eta = EtaTable::new(&kernel, F0, cfg.num_lines).unwrap();

    // Three X lines only.
    let mut three = SpectralField::zeros(&cfg);
    three.lines_x[4] = Complex64::new(0.7, -0.2);
    three.lines_x[5] = Complex64::new(-0.3, 0.9);
    three.lines_x[7] = Complex64::new(0.1, 0.4);
    // A random dual-polarization draw.
    let drawn = draw_field(&cfg, &psd, 0);

    for field in [three, drawn] {
        let (bx, by) = normalized_perturbation(&field, &eta, &psd, PerturbationMode::Rp1);
        let (ox, oy) = brute_force_fwm(&field, &kernel);
        let scale: f64 = ox.iter().chain(&oy).map(|v| v.norm()).fold(0.0, f64::max);
        for k in 0..field.len() {
            assert!((bx[k] - ox[k]).norm() <= 1e-12 * scale, "x line {k}: {} vs {}", bx[k], ox[k]);
            assert!((by[k] - oy[k]).norm() <= 1e-12 * scale, "y line {k}: {} vs {}", by[k], oy[k]);
        }
    }
}

#[test]
fn swapping_roles_and_streams_swaps_estimates_exactly() {
    let kernel = kernel();
    let psd = psd();
    for mode in [PerturbationMode::Rp1, PerturbationMode::DpErp1] {
        let cfg = TrialConfig::new(F0, 32, 48, 9, mode);
        let mut swapped_cfg = cfg.clone();
        swapped_cfg.swap_streams = true;
        let a = estimate_nli_psd(&cfg, &psd, &kernel).unwrap();
        let b = estimate_nli_psd(&swapped_cfg, &psd.swapped(), &kernel).unwrap();
        assert_eq!(a.x, b.y);
        assert_eq!(a.y, b.x);
    }
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let kernel = kernel();
    let psd = psd();
    let cfg = TrialConfig::new(F0, 32, 100, 21, PerturbationMode::DpErp1);
    let runs: Vec<_> = [1, 3]
        .into_iter()
        .map(|n| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
            pool.install(|| estimate_nli_psd(&cfg, &psd, &kernel).unwrap())
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn rotation_term_uses_twice_the_x_power_without_y() {
    let kernel = kernel();
    let psd = DualPolPsd::new(PsdShape::rectangular(-0.5e9, 16e9, 1.5 / 16e9).unwrap(), PsdShape::zero(), 1e-3).unwrap();
    let cfg = TrialConfig::new(F0, 32, 1, 4, PerturbationMode::DpErp1);
    let field = draw_field(&cfg, &psd, 0);
    let rp1 = rp1_perturbation(&field, &kernel, &cfg, &psd).unwrap();
    let erp1 = erp1_perturbation(&field, &kernel, &cfg, &psd).unwrap();
    let phi = psd.p0 * kernel.k0().re;
    for k in 0..field.len() {
        let expected = Complex64::new(0.0, phi * 2.0 * psd.px_hat) * field.lines_x[k];
        let d = erp1.lines_x[k] - rp1.lines_x[k];
        assert!((d - expected).norm() <= 1e-12 * (rp1.lines_x[k].norm() + expected.norm()), "line {k}");
        assert_eq!(field.lines_y[k], Complex64::new(0.0, 0.0));
        assert_eq!(erp1.lines_y[k], rp1.lines_y[k]);
    }
}
