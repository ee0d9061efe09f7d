//! Independent reference computations checked against the FFT code paths.

use std::f64::consts::PI;

use num_complex::Complex64;
use oscm::bilinear::{apply_t_sigma, decompose_symbol, default_theta3, trilinear_form, BilinearSymbol};
use oscm::experiments::{random_band_limited, sharpness_s_gt_1, SharpnessConfig};
use oscm::grid::{forward_transform, norm};
use oscm::oscillatory::{apply_sj, auto_grid, compute_kernel, verify_regimes, PhaseSpec};
use oscm::partition::{make_localizer, Localizer, LocalizerKind};
use oscm::quad::{gauss_legendre, integrate};
use oscm::{GridSpec, Norm, Region, SampledFunction, Space};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn rel_l2(a: &SampledFunction, b: &SampledFunction) -> f64 {
    let num: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.values().iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// `Σ_m f(x_m) e^{-iξ x_m} Δx`, summed directly.
fn direct_transform(f: &SampledFunction, xi: f64) -> Complex64 {
    let spec = f.spec();
    f.values()
        .iter()
        .enumerate()
        .map(|(m, v)| v * Complex64::from_polar(1.0, -xi * spec.coord(m)))
        .sum::<Complex64>()
        * spec.dx()
}

/// Composite Gauss-Legendre over equal panels.
fn panels<F: Fn(f64) -> f64>(a: f64, b: f64, count: usize, f: F) -> f64 {
    let rule = gauss_legendre(16);
    let w = (b - a) / count as f64;
    (0..count).map(|i| integrate(&rule, a + i as f64 * w, a + (i + 1) as f64 * w, &f)).sum()
}

#[test]
fn gaussian_transform_closed_form() {
    let spec = GridSpec::new(1, 32.0, 1 << 12).unwrap();
    let f = SampledFunction::physical(spec, |[x, _]| Complex64::new((-x * x / 2.0).exp(), 0.0));
    let hat = forward_transform(&f).unwrap();
    let worst = (0..spec.points)
        .map(|k| {
            let xi = spec.freq(k);
            (hat.values()[k] - (2.0 * PI).sqrt() * (-xi * xi / 2.0).exp()).norm()
        })
        .fold(0.0, f64::max);
    assert!(worst <= 1e-8, "{worst}");
    let l2 = norm(&f, Norm::L2, &Region::Whole).unwrap();
    assert!((l2 - PI.powf(0.25)).abs() <= 1e-10, "{l2}");
}

#[test]
fn kernel_l1_against_direct_sum_at_double_resolution() {
    let phase = PhaseSpec::positive(0.5).unwrap();
    let theta = make_localizer(LocalizerKind::ThetaAnnular).unwrap();
    let j = 8;
    let grid = auto_grid(1, &phase, &theta, j, 8.0).unwrap();
    let fft_l1 = compute_kernel(&phase, &theta, j, &grid).unwrap().norms.l1;

    // K(x) = π^{-1} ∫_0^∞ cos(xξ) e^{iξ^s} θ(2^{-j}ξ) dξ with half the spacing in x and ξ
    let dxi = grid.dxi() / 2.0;
    let dx = grid.dx() / 2.0;
    let scale = 2f64.powi(j);
    let k0 = (theta.inner_support() * scale / dxi).floor() as usize;
    let k1 = (theta.support_radius() * scale / dxi).ceil() as usize;
    let m: Vec<Complex64> = (k0..=k1).map(|k| phase.factor(k as f64 * dxi) * theta.dilated(j, k as f64 * dxi)).collect();
    let count = (grid.half_width / dx).round() as usize;
    let l1: f64 = (0..count)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 * dx;
            let step = Complex64::from_polar(1.0, x * dxi);
            let mut rot = Complex64::from_polar(1.0, x * k0 as f64 * dxi);
            let mut acc = Complex64::new(0.0, 0.0);
            for v in &m {
                acc += v * rot.re;
                rot *= step;
            }
            let weight = if i == 0 { 1.0 } else { 2.0 };
            weight * (acc * dxi / PI).norm() * dx
        })
        .sum();
    let ratio = fft_l1 / l1;
    assert!((0.25..=4.0).contains(&ratio), "fft {fft_l1} direct {l1}");
}

#[test]
fn main_zone_growth_matches_stationary_phase() {
    let s = 0.5;
    let phase = PhaseSpec::positive(s).unwrap();
    let theta = make_localizer(LocalizerKind::PsiNarrow).unwrap();
    let (a_prime, b_prime) = (s * 1.5f64.powf(s - 1.0), s * (2.0f64 / 3.0).powf(s - 1.0));
    let measured: Vec<f64> = [10, 11]
        .iter()
        .map(|&j| {
            let width = (b_prime - a_prime) * 2f64.powf(-j as f64 * (1.0 - s));
            let need = (2.0 * 4.0 * 64.0 / width).log2().ceil() as u32;
            let points = (1usize << need).max(GridSpec::points_for_band(4.0, 2.0 * 2f64.powi(j)));
            let grid = GridSpec::new(1, 4.0, points).unwrap();
            verify_regimes(&compute_kernel(&phase, &theta, j, &grid).unwrap()).unwrap().main_max
        })
        .collect();
    // stationary point ξ* of ξ^s - |x|ξ, amplitude (2π)^{-1} θ (2π/|φ''|)^{1/2}
    let amplitude = |j: i32, x: f64| {
        let xi = (x / s).powf(1.0 / (s - 1.0));
        let curv = s * (1.0 - s) * xi.powf(s - 2.0);
        theta.eval(xi / 2f64.powi(j)) * (2.0 * PI / curv).sqrt() / (2.0 * PI)
    };
    let oracle: Vec<f64> = [10, 11]
        .iter()
        .map(|&j| {
            let z = 2f64.powf(-j as f64 * (1.0 - s));
            (0..=2000).map(|i| amplitude(j, z * (a_prime + (b_prime - a_prime) * i as f64 / 2000.0))).fold(0.0, f64::max)
        })
        .collect();
    let ratio = measured[1] / measured[0];
    let oracle_ratio = oracle[1] / oracle[0];
    assert!((oracle_ratio / 2f64.powf(0.75) - 1.0).abs() < 1e-9, "oracle ratio {oracle_ratio}");
    assert!((ratio / oracle_ratio - 1.0).abs() <= 0.15, "measured {ratio}, oracle {oracle_ratio}");
}

#[test]
fn tensor_symbol_against_double_sum() {
    let spec = GridSpec::new(1, 4.0, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = random_band_limited(spec, 16, &mut rng).unwrap();
    let g = random_band_limited(spec, 16, &mut rng).unwrap();
    let t1 = Localizer::Ball { plateau: 2.0, support: 4.0 };
    let t2 = Localizer::Annulus { inner_support: 0.5, inner_plateau: 1.0, outer_plateau: 2.0, outer_support: 3.0 };
    let got = apply_t_sigma(&BilinearSymbol::tensor(t1, t2), &f, &g).unwrap();

    let n = spec.points as i64;
    let freqs: Vec<f64> = (-n / 2..n / 2).map(|k| k as f64 * spec.dxi()).collect();
    let fh: Vec<Complex64> = freqs.iter().map(|&xi| direct_transform(&f, xi)).collect();
    let gh: Vec<Complex64> = freqs.iter().map(|&xi| direct_transform(&g, xi)).collect();
    let w = (spec.dxi() / (2.0 * PI)).powi(2);
    let want: Vec<Complex64> = (0..spec.points)
        .map(|m| {
            let x = spec.coord(m);
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, &xa) in freqs.iter().enumerate() {
                for (b, &xb) in freqs.iter().enumerate() {
                    let sigma = t1.eval(xa.abs()) * t2.eval(xb.abs());
                    acc += fh[a] * gh[b] * sigma * Complex64::from_polar(1.0, x * (xa + xb));
                }
            }
            acc * w
        })
        .collect();
    let want = SampledFunction::new(spec, want, Space::Physical).unwrap();
    let err = rel_l2(&got, &want);
    assert!(err <= 1e-8, "{err}");
}

#[test]
fn decomposition_self_convergence() {
    let sigma = BilinearSymbol::bessel(-1.0);
    let spec = GridSpec::new(1, 8.0, 256).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = random_band_limited(spec, 40, &mut rng).unwrap();
    let g = random_band_limited(spec, 40, &mut rng).unwrap();
    let coarse = decompose_symbol(&sigma, 4, 4, 8).unwrap();
    let fine = decompose_symbol(&sigma, 4, 4, 16).unwrap();
    let a = apply_t_sigma(&coarse, &f, &g).unwrap();
    let b = apply_t_sigma(&fine, &f, &g).unwrap();
    let gap = rel_l2(&a, &b);
    // the discarded modes bound the gap pointwise in frequency
    let bound = (0..=64)
        .flat_map(|i| (0..=64).map(move |k| (i as f64 * 0.25 - 8.0, k as f64 * 0.25 - 8.0)))
        .map(|(x, y)| coarse.tail_bound(x, y) / sigma.eval(x, y).norm())
        .fold(0.0, f64::max);
    assert!(gap <= bound, "gap {gap} above relative tail bound {bound}");
    // against the direct double sum, the wider window is the better approximation
    let exact = apply_t_sigma(&sigma, &f, &g).unwrap();
    let (err_coarse, err_fine) = (rel_l2(&a, &exact), rel_l2(&b, &exact));
    assert!(err_fine < err_coarse, "A=8: {err_coarse}, A=16: {err_fine}");
    assert!(err_coarse <= bound && err_fine <= bound);
}

#[test]
fn trilinear_value_against_frequency_triple_sum() {
    let spec = GridSpec::new(1, 8.0, 128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = random_band_limited(spec, 30, &mut rng).unwrap();
    let g = random_band_limited(spec, 30, &mut rng).unwrap();
    let h = random_band_limited(spec, 30, &mut rng).unwrap();
    let phase = PhaseSpec::positive(0.5).unwrap();
    let psi = make_localizer(LocalizerKind::PsiNarrow).unwrap();
    let t3 = default_theta3(&psi, &psi);
    let j = 0;
    let res = trilinear_form(&phase, [&psi, &psi, &t3], j, &f, &g, &h, &[]).unwrap();

    let n = spec.points as i64;
    let spectrum = |u: &SampledFunction, t: &Localizer| -> Vec<Complex64> {
        (-n / 2..n / 2)
            .map(|k| {
                let xi = k as f64 * spec.dxi();
                direct_transform(u, xi) * phase.factor(xi.abs()) * t.dilated(j, xi.abs())
            })
            .collect()
    };
    let (a, b, c) = (spectrum(&f, &psi), spectrum(&g, &psi), spectrum(&h, &t3));
    // Σ_m e^{i x_m (ξ_a+ξ_b+ξ_c)} = N (-1)^{a+b+c} when a+b+c ≡ 0 (mod N)
    let mut acc = Complex64::new(0.0, 0.0);
    for ka in -n / 2..n / 2 {
        for kb in -n / 2..n / 2 {
            let kc = (-(ka + kb)).rem_euclid(n);
            let kc = if kc >= n / 2 { kc - n } else { kc };
            let sign = if (ka + kb + kc).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            acc += a[(ka + n / 2) as usize] * b[(kb + n / 2) as usize] * c[(kc + n / 2) as usize] * sign;
        }
    }
    let want = acc * (spec.dxi() / (2.0 * PI)).powi(3) * (spec.points as f64) * spec.dx();
    let gap = (res.value - want).norm() / want.norm();
    assert!(gap <= 1e-6, "value {} vs {} ({gap})", res.value, want);
}

#[test]
fn mid_frequency_integral_by_gauss_legendre() {
    // ∫∫ ρ₁(ξ+η) ρ₂(ξ) ρ₃(η) dξ dη for the bumps of the 1 < s <= 2 construction
    let ann = |a, b, c, d| Localizer::Annulus { inner_support: a, inner_plateau: b, outer_plateau: c, outer_support: d };
    let (r1, r2, r3) = (ann(0.125, 0.25, 4.0, 8.0), ann(0.5, 2.0 / 3.0, 1.5, 2.0), ann(0.25, 0.5, 2.0, 4.0));
    let half = |u: f64| {
        panels(0.25, 4.0, 120, |eta| {
            r3.eval(eta) * (r1.eval((u + eta).abs()) + r1.eval((u - eta).abs()))
        })
    };
    // both signs of ξ contribute equally
    let oracle = 2.0 * panels(0.5, 2.0, 48, |u| r2.eval(u) * half(u));

    let cfg = SharpnessConfig { j_min: 3, j_max: 5, ..SharpnessConfig::for_order(1.5) };
    let cfg = SharpnessConfig { points: Some(1 << 13), half_width: Some(128.0), ..cfg };
    let report = sharpness_s_gt_1(&cfg).unwrap();
    let note = report.notes.iter().find(|n| n.starts_with("frequency integral")).unwrap();
    let value: f64 = note.split_whitespace().nth(2).unwrap().trim_end_matches(';').parse().unwrap();
    assert!((value - oracle).abs() <= 1e-9 * oracle, "trapezoid {value} vs Gauss-Legendre {oracle}");
    for check in report.checks.iter().filter(|c| c.name.starts_with("trilinear value")) {
        assert!(check.passed(), "{check:?}");
    }
}

#[test]
fn box_atom_propagation_against_quadrature() {
    let s = 0.5;
    let phase = PhaseSpec::positive(s).unwrap();
    let theta = Localizer::DyadicPiece;
    let j = 4;
    let spec = GridSpec::new(1, 8.0, 1024).unwrap();
    let r = 0.25;
    let h = oscm::experiments::box_atom(spec, r);
    let got = apply_sj(&phase, &theta, j, &h).unwrap();
    let inside: Vec<f64> = (0..spec.points).map(|m| spec.coord(m)).filter(|x| x.abs() < r).collect();
    // transform of the sampled box as a finite cosine sum
    let h_hat = |xi: f64| inside.iter().map(|x| (xi * x).cos()).sum::<f64>() * spec.dx() / (2.0 * r);
    let scale = 2f64.powi(j);
    let peak = got.max_abs();
    // wrap-around from the periodic grid is only negligible away from the edges
    for m in (0..spec.points).step_by(37).filter(|&m| spec.coord(m).abs() <= spec.half_width / 2.0) {
        let x = spec.coord(m);
        let integrand = |xi: f64| -> Complex64 { phase.factor(xi) * theta.eval(xi / scale) * h_hat(xi) * (x * xi).cos() };
        let re = panels(0.5 * scale, 2.0 * scale, 256, |xi| integrand(xi).re) / PI;
        let im = panels(0.5 * scale, 2.0 * scale, 256, |xi| integrand(xi).im) / PI;
        let gap = (got.values()[m] - Complex64::new(re, im)).norm();
        assert!(gap <= 1e-6 * peak, "x = {x}: gap {gap}");
    }
}
