use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{Check, ExperimentReport, Series};
use super::{critical_order, random_bounded, rng, DEFAULT_SEED};
use crate::atoms::{validate_atom, Atom};
use crate::error::{Error, Result};
use crate::grid::{
    fit_levels, forward_transform, inverse_transform, norm, shell_masses, ExponentFit, GridSpec, Norm, Region,
    SampledFunction, Space,
};
use crate::oscillatory::{apply_sj, multiplier, PhaseSpec};
use crate::partition::{make_localizer, Localizer, LocalizerKind};
use crate::quad::{gauss_legendre, integrate};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Samples `f(|ξ|)` on the frequency grid in parallel.
fn radial(spec: GridSpec, f: impl Fn(f64) -> Complex64 + Sync) -> SampledFunction {
    let values = (0..spec.size()).into_par_iter().map(|i| f(spec.freq_radius(i))).collect();
    SampledFunction::new(spec, values, Space::Frequency).expect("length matches grid")
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// `(m(|ξ|))∨`
fn inverse_of(spec: GridSpec, m: impl Fn(f64) -> Complex64 + Sync) -> Result<SampledFunction> {
    inverse_transform(&radial(spec, m))
}

/// `e^{i|D|^s} f`
fn propagate(phase: &PhaseSpec, f: &SampledFunction) -> Result<SampledFunction> {
    inverse_transform(&forward_transform(f)?.mul(&radial(*f.spec(), |r| phase.factor(r)))?)
}

/// `e^{i|D|^s} θ(2^{-j}D) f` without the band check on `θ`: valid when `f̂`
/// already vanishes beyond the grid's band.
fn localize(phase: &PhaseSpec, theta: &Localizer, j: i32, f: &SampledFunction) -> Result<SampledFunction> {
    inverse_transform(&forward_transform(f)?.mul(&multiplier(phase, theta, j, f.spec()))?)
}

fn relative_l2(a: &SampledFunction, b: &SampledFunction) -> Result<f64> {
    let diff = a.add_scaled(-ONE, b)?;
    let scale = norm(b, Norm::L2, &Region::Whole)?;
    let d = norm(&diff, Norm::L2, &Region::Whole)?;
    Ok(if scale > 0.0 { d / scale } else { d })
}

fn l1(f: &SampledFunction) -> Result<f64> {
    norm(f, Norm::L1, &Region::Whole)
}

fn fit_or_fail(report: &mut ExperimentReport, criterion: u8, name: &str, series: &[(i32, f64)]) -> Option<ExponentFit> {
    match fit_levels(series) {
        Ok(f) => {
            report.fit(name, f);
            Some(f)
        }
        Err(e) => {
            report.check(Check::new(criterion, format!("{name} fit"), f64::NAN, e.to_string(), 0.0, false));
            None
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SharpnessConfig {
    pub n: usize,
    pub s: f64,
    pub j_min: i32,
    pub j_max: i32,
    /// Fixed half-width; the level rule applies when absent.
    pub half_width: Option<f64>,
    pub points: Option<usize>,
}

impl Default for SharpnessConfig {
    fn default() -> Self {
        Self::for_order(0.5)
    }
}

impl SharpnessConfig {
    pub fn for_order(s: f64) -> Self {
        if s < 1.0 {
            Self { n: 1, s, j_min: 6, j_max: 11, half_width: Some(8.0), points: None }
        } else if s <= 2.0 {
            Self { n: 1, s, j_min: 3, j_max: 8, half_width: Some(128.0), points: Some(1 << 18) }
        } else {
            Self { n: 1, s, j_min: 2, j_max: 6, half_width: None, points: None }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n != 1 {
            return Err(Error::InvalidParameter("sharpness constructions are implemented for n = 1".into()));
        }
        if self.j_max - self.j_min < 2 {
            return Err(Error::InsufficientData(format!("levels {}..{}; need at least 3", self.j_min, self.j_max)));
        }
        Ok(())
    }
}

/// Per-level measurements of the `s < 1` family.
#[derive(Debug, Clone, Copy)]
struct LowLevel {
    j: i32,
    q: f64,
    product_l1: f64,
    f_sup: f64,
    g_l1: f64,
    plateau_error: f64,
}

struct LowFamily {
    psi: Localizer,
    theta: Localizer,
    phi: Localizer,
}

impl LowFamily {
    fn new() -> Result<Self> {
        Ok(Self {
            psi: make_localizer(LocalizerKind::PsiNarrow)?,
            theta: make_localizer(LocalizerKind::ThetaAnnular)?,
            phi: make_localizer(LocalizerKind::PhiBall)?,
        })
    }

    fn grid(&self, cfg: &SharpnessConfig, j: i32) -> Result<GridSpec> {
        let l = cfg.half_width.unwrap_or(8.0);
        let band = GridSpec::points_for_band(l, self.theta.support_radius().min(self.psi.support_radius()) * 2f64.powi(j));
        GridSpec::new(1, l, cfg.points.unwrap_or(band).max(band))
    }

    /// `F_j = (e^{-i|ξ|^s} ψ(2^{-j(1-s)}ξ))∨`, `G_j = (ψ(2^{-j}ξ))∨` and
    /// `Q_j = ‖e^{i|D|^s}F_j · e^{i|D|^s}φ_j F_j · e^{i|D|^s}θ_j G_j‖₁ / (‖F_j‖∞² max(1, ‖G_j‖₁))`.
    fn level(&self, s: f64, j: i32, spec: GridSpec) -> Result<LowLevel> {
        let phase = PhaseSpec::positive(s)?;
        let slow = 2f64.powf(-(j as f64) * (1.0 - s));
        let fast = 2f64.powi(-j);
        let f = inverse_of(spec, |r| phase.conjugate().factor(r) * self.psi.eval(r * slow))?;
        let g = inverse_of(spec, |r| real(self.psi.eval(r * fast)))?;
        let a = propagate(&phase, &f)?;
        let b = localize(&phase, &self.phi, j, &f)?;
        let c = localize(&phase, &self.theta, j, &g)?;
        let expected = inverse_of(spec, |r| real(self.psi.eval(r * slow)))?;
        let plateau_error = relative_l2(&b, &expected)?;
        let product_l1 = l1(&a.mul(&b)?.mul(&c)?)?;
        let f_sup = f.max_abs();
        let g_l1 = l1(&g)?;
        Ok(LowLevel { j, q: product_l1 / (f_sup * f_sup * g_l1.max(1.0)), product_l1, f_sup, g_l1, plateau_error })
    }
}

fn low_levels(cfg: &SharpnessConfig) -> Result<(Vec<LowLevel>, Vec<GridSpec>)> {
    if !(cfg.s > 0.0 && cfg.s <= 0.95) {
        return Err(Error::InvalidParameter(format!("s = {} outside (0, 0.95]", cfg.s)));
    }
    let fam = LowFamily::new()?;
    let grids = (cfg.j_min..=cfg.j_max).map(|j| fam.grid(cfg, j)).collect::<Result<Vec<_>>>()?;
    let levels = (cfg.j_min..=cfg.j_max)
        .zip(&grids)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(j, g)| fam.level(cfg.s, j, *g))
        .collect::<Result<Vec<_>>>()?;
    Ok((levels, grids))
}

/// Lower-bound family for `0 < s < 1`.
pub fn sharpness_s_lt_1(cfg: &SharpnessConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    cfg.validate()?;
    let cr = critical_order(cfg.n, cfg.s)?;
    let (levels, grids) = low_levels(cfg)?;
    let mut report = ExperimentReport::new("sharpness_s_lt_1", cfg);
    grids.iter().for_each(|g| report.grid(*g));
    let mut table = Series::new("sharpness_levels", &["j", "q", "product_l1", "f_sup", "g_l1", "plateau_error", "points"]);
    for (lv, g) in levels.iter().zip(&grids) {
        table.push(vec![lv.j as f64, lv.q, lv.product_l1, lv.f_sup, lv.g_l1, lv.plateau_error, g.points as f64]);
    }
    report.series.push(table);
    let worst_plateau = levels.iter().map(|l| l.plateau_error).fold(0.0, f64::max);
    report.check(Check::at_most(9, "plateau identity for e^{i|D|^s}φ_j F_j (relative L2)", worst_plateau, 1e-8));
    let s = cfg.s;
    let n = cfg.n as f64;
    let q: Vec<(i32, f64)> = levels.iter().map(|l| (l.j, l.q)).collect();
    if let Some(fit) = fit_or_fail(&mut report, 9, "q", &q) {
        report.check(Check::at_least(9, "Q_j growth slope", fit.slope, -cr.m_s - 0.2).with_fit(&fit));
        report.notes.push(format!("implied bound m <= {:.3} (m_s = {})", -fit.slope, cr.m_s));
    }
    let sup: Vec<(i32, f64)> = levels.iter().map(|l| (l.j, l.f_sup)).collect();
    if let Some(fit) = fit_or_fail(&mut report, 9, "f_sup", &sup) {
        let bound = (1.0 - s) * (n - n * s / 2.0) + 0.15;
        report.check(Check::at_most(9, "‖F_j‖∞ growth slope", fit.slope, bound).with_fit(&fit));
    }
    Ok(report.finish(started))
}

/// `ψ₁`, `ψ₂`, `ψ₃` of the `1 < s <= 2` family.
fn mid_bumps() -> [Localizer; 3] {
    let ann = |a, b, c, d| Localizer::Annulus { inner_support: a, inner_plateau: b, outer_plateau: c, outer_support: d };
    [ann(0.125, 0.25, 4.0, 8.0), ann(0.5, 2.0 / 3.0, 1.5, 2.0), ann(0.25, 0.5, 2.0, 4.0)]
}

/// `∬ ψ₁(ξ+η) ψ₂(ξ) ψ₃(η) dξ dη` by the trapezoid rule on a lattice of
/// step `2^{-9}`; the integrand is smooth with compact support.
fn mid_frequency_integral(bumps: &[Localizer; 3]) -> f64 {
    let h = 2f64.powi(-9);
    let r2 = bumps[1].support_radius();
    let r3 = bumps[2].support_radius();
    let (n2, n3) = ((r2 / h) as i64, (r3 / h) as i64);
    let p2: Vec<f64> = (-n2..=n2).map(|i| bumps[1].eval((i as f64 * h).abs())).collect();
    let p3: Vec<f64> = (-n3..=n3).map(|k| bumps[2].eval((k as f64 * h).abs())).collect();
    let n1 = n2 + n3;
    let p1: Vec<f64> = (-n1..=n1).map(|m| bumps[0].eval((m as f64 * h).abs())).collect();
    // collected before summing so the result does not depend on work splitting
    let total: f64 = (0..p2.len())
        .into_par_iter()
        .map(|i| {
            if p2[i] == 0.0 {
                return 0.0;
            }
            let mut acc = 0.0;
            for (k, &w3) in p3.iter().enumerate() {
                if w3 != 0.0 {
                    acc += p1[i + k] * w3;
                }
            }
            acc * p2[i]
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    total * h * h
}

/// The same integral restricted to `||ξ| - 1| <= ε`, `||η| - 3/2| <= ε`,
/// `ε = 2^{-10}`, by Gauss-Legendre on each of the four sign patterns.
fn mid_probed_integral(bumps: &[Localizer; 3]) -> f64 {
    let eps = 2f64.powi(-10);
    let rule = gauss_legendre(16);
    let mut total = 0.0;
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            total += integrate(&rule, 1.0 - eps, 1.0 + eps, |a| {
                integrate(&rule, 1.5 - eps, 1.5 + eps, |b| {
                    bumps[0].eval((sx * a + sy * b).abs()) * bumps[1].eval(a) * bumps[2].eval(b)
                })
            });
        }
    }
    total
}

#[derive(Debug, Clone, Copy)]
struct MidLevel {
    j: i32,
    value: f64,
    predicted: f64,
    f1_sup: f64,
    f2_sup: f64,
    f3_l1: f64,
    plateau_error: f64,
}

fn mid_level(s: f64, j: i32, spec: GridSpec, bumps: &[Localizer; 3], integral: f64) -> Result<MidLevel> {
    let phase = PhaseSpec::positive(s)?;
    let theta = make_localizer(LocalizerKind::ThetaAnnular)?;
    let phi = make_localizer(LocalizerKind::PhiBall)?;
    let scale = 2f64.powi(-j);
    let fam: Vec<SampledFunction> = bumps
        .iter()
        .map(|b| inverse_of(spec, |r| phase.conjugate().factor(r) * b.eval(r * scale)))
        .collect::<Result<_>>()?;
    let p1 = apply_sj(&phase, &theta, j, &fam[0])?;
    let p2 = apply_sj(&phase, &phi, j, &fam[1])?;
    let p3 = propagate(&phase, &fam[2])?;
    let e1 = inverse_of(spec, |r| real(bumps[0].eval(r * scale)))?;
    let e2 = inverse_of(spec, |r| real(bumps[1].eval(r * scale)))?;
    let plateau_error = relative_l2(&p1, &e1)?.max(relative_l2(&p2, &e2)?);
    let value = p1.mul(&p2)?.mul(&p3)?.integral();
    let n = 1.0;
    Ok(MidLevel {
        j,
        value: value.re,
        predicted: (2.0 * PI).powf(-2.0 * n) * 2f64.powf(2.0 * n * j as f64) * integral,
        f1_sup: fam[0].max_abs(),
        f2_sup: fam[1].max_abs(),
        f3_l1: l1(&fam[2])?,
        plateau_error: plateau_error.max(value.im.abs() / value.norm()),
    })
}

#[derive(Debug, Clone, Copy)]
struct HighLevel {
    j: i32,
    value: f64,
    f_sup: f64,
    f0_l1: f64,
    plateau_error: f64,
    points: usize,
}

/// `ψ`, `φ∨` and `δ` of the `s > 2` family.
struct HighConstruction {
    psi: Localizer,
    beta: Localizer,
    /// `φ = κ β * β`, so `φ∨ = 2πκ (β∨)²`.
    kappa: f64,
    delta: f64,
    psi_check_at_zero: f64,
}

/// `(ρ)∨(x) = π^{-1} ∫_0^∞ cos(x r) ρ(r) dr` for radial `ρ` in one dimension.
fn radial_inverse_1d(rho: &Localizer, x: f64) -> f64 {
    let rule = gauss_legendre(64);
    let (a, b) = (rho.inner_support(), rho.support_radius());
    let pieces = 32;
    let w = (b - a) / pieces as f64;
    (0..pieces)
        .map(|p| integrate(&rule, a + p as f64 * w, a + (p + 1) as f64 * w, |r| (x * r).cos() * rho.eval(r)))
        .sum::<f64>()
        / PI
}

impl HighConstruction {
    fn new() -> Result<Self> {
        let base = make_localizer(LocalizerKind::PsiNarrow)?;
        let at_zero = radial_inverse_1d(&base, 0.0);
        let factor = 2.0 / at_zero;
        let psi = match base {
            Localizer::Annulus { inner_support, inner_plateau, outer_plateau, outer_support } => Localizer::Scaled {
                factor,
                base: crate::partition::Base::Annulus { inner_support, inner_plateau, outer_plateau, outer_support },
            },
            _ => unreachable!("named annulus"),
        };
        // δ: first x where |ψ∨| drops below 1
        let step = 1e-3;
        let mut x = 0.0;
        while radial_inverse_1d(&psi, x + step).abs() >= 1.0 {
            x += step;
            if x > 100.0 {
                break;
            }
        }
        let delta = x;
        if delta <= 0.0 {
            return Err(Error::Precondition("|ψ∨| >= 1 fails at every positive radius".into()));
        }
        let beta = Localizer::PHI;
        let beta_min = (0..=200)
            .map(|i| radial_inverse_1d(&beta, delta * i as f64 / 200.0).powi(2))
            .fold(f64::INFINITY, f64::min);
        if beta_min <= 0.0 {
            return Err(Error::Precondition("β∨ vanishes inside |x| <= δ".into()));
        }
        let kappa = 1.0 / (2.0 * PI * beta_min);
        Ok(Self { psi, beta, kappa, delta, psi_check_at_zero: radial_inverse_1d(&psi, 0.0) })
    }

    fn grid(&self, s: f64, j: i32) -> Result<GridSpec> {
        let reach = s * (self.psi.support_radius() * 2f64.powi(j)).powf(s - 1.0);
        let l = 2f64.powi((1.25 * reach).max(64.0).log2().ceil() as i32);
        let band = (self.psi.support_radius() * 2f64.powi(j)).max(2.0 * self.beta.support_radius());
        GridSpec::new(1, l, GridSpec::points_for_band(l, band))
    }

    fn level(&self, s: f64, j: i32, spec: GridSpec) -> Result<HighLevel> {
        let phase = PhaseSpec::positive(s)?;
        let theta = make_localizer(LocalizerKind::ThetaAnnular)?;
        let phi = make_localizer(LocalizerKind::PhiBall)?;
        let scale = 2f64.powi(-j);
        let f = inverse_of(spec, |r| phase.conjugate().factor(r) * self.psi.eval(r * scale))?;
        let a = localize(&phase, &theta, j, &f)?;
        let b = localize(&phase, &phi, j, &f)?;
        let expected = inverse_of(spec, |r| real(self.psi.eval(r * scale)))?;
        let plateau_error = relative_l2(&a, &expected)?.max(relative_l2(&b, &expected)?);
        drop(expected);
        let f_sup = f.max_abs();
        drop(f);
        // φ on the frequency grid from 2πκ(β∨)²
        let beta_v = inverse_of(spec, |r| real(self.beta.eval(r)))?;
        let varphi_v = beta_v.map(|v| real(2.0 * PI * self.kappa * v.re * v.re));
        drop(beta_v);
        let varphi = forward_transform(&varphi_v)?;
        let f0 = inverse_transform(&varphi.mul(&radial(spec, |r| phase.conjugate().factor(r)))?)?;
        let c = propagate(&phase, &f0)?;
        let value = a.mul(&b)?.mul(&c)?.integral();
        Ok(HighLevel {
            j,
            value: value.re,
            f_sup,
            f0_l1: l1(&f0)?,
            plateau_error: plateau_error.max(value.im.abs() / value.norm()),
            points: spec.points,
        })
    }
}

/// Lower-bound families for `s > 1` (both the `s <= 2` and `s > 2` cases).
pub fn sharpness_s_gt_1(cfg: &SharpnessConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    cfg.validate()?;
    if cfg.s < 1.05 {
        return Err(Error::InvalidParameter(format!("s = {} below 1.05", cfg.s)));
    }
    let cr = critical_order(cfg.n, cfg.s)?;
    let n = cfg.n as f64;
    let s = cfg.s;
    if s <= 2.0 {
        let bumps = mid_bumps();
        let integral = mid_frequency_integral(&bumps);
        let probed = mid_probed_integral(&bumps);
        let l = cfg.half_width.unwrap_or(128.0);
        let grids = (cfg.j_min..=cfg.j_max)
            .map(|j| {
                let band = GridSpec::points_for_band(l, 10.0 * 2f64.powi(j));
                GridSpec::new(1, l, cfg.points.unwrap_or(band).max(band))
            })
            .collect::<Result<Vec<_>>>()?;
        let levels = (cfg.j_min..=cfg.j_max)
            .zip(grids.iter().copied())
            .map(|(j, g)| mid_level(s, j, g, &bumps, integral))
            .collect::<Result<Vec<_>>>()?;
        let mut report = ExperimentReport::new("sharpness_s_gt_1", cfg);
        grids.iter().for_each(|g| report.grid(*g));
        let mut table = Series::new(
            "sharpness_levels",
            &["j", "value", "predicted", "relative_gap", "f1_sup", "f2_sup", "f3_l1", "plateau_error"],
        );
        for lv in &levels {
            let gap = (lv.value - lv.predicted).abs() / lv.predicted.abs();
            table.push(vec![lv.j as f64, lv.value, lv.predicted, gap, lv.f1_sup, lv.f2_sup, lv.f3_l1, lv.plateau_error]);
        }
        report.series.push(table);
        let worst_plateau = levels.iter().map(|l| l.plateau_error).fold(0.0, f64::max);
        report.check(Check::at_most(10, "plateau identities for θ_j F¹, φ_j F²", worst_plateau, 1e-8));
        for lv in levels.iter().take(2) {
            let gap = (lv.value - lv.predicted).abs() / lv.predicted.abs();
            report.check(Check::at_most(10, format!("trilinear value vs 2D frequency quadrature, j={}", lv.j), gap, 1e-6));
        }
        report.check(Check::new(10, "probed-set contribution A", probed, "> 0", 0.0, probed > 0.0));
        let series = |f: fn(&MidLevel) -> f64| levels.iter().map(|l| (l.j, f(l))).collect::<Vec<_>>();
        let f1 = fit_or_fail(&mut report, 10, "f1_sup", &series(|l| l.f1_sup));
        let f2 = fit_or_fail(&mut report, 10, "f2_sup", &series(|l| l.f2_sup));
        let f3 = fit_or_fail(&mut report, 10, "f3_l1", &series(|l| l.f3_l1));
        let v = fit_or_fail(&mut report, 10, "value", &series(|l| l.value.abs()));
        if let (Some(f1), Some(f2), Some(f3), Some(v)) = (f1, f2, f3, v) {
            report.check(Check::near(10, "‖F¹_j‖∞ slope", f1.slope, n - n * s / 2.0, 0.15).with_fit(&f1));
            report.check(Check::near(10, "‖F²_j‖∞ slope", f2.slope, n - n * s / 2.0, 0.15).with_fit(&f2));
            report.check(Check::near(10, "‖F³_j‖₁ slope", f3.slope, n * s / 2.0, 0.15).with_fit(&f3));
            let implied = f1.slope + f2.slope + f3.slope - v.slope;
            report.check(Check::near(10, "implied bound on m", implied, cr.m_s, 0.2).with_fit(&v));
        }
        report.notes.push(format!("frequency integral {integral:.12e}; probed-set integral {probed:.6e}"));
        return Ok(report.finish(started));
    }

    let con = HighConstruction::new()?;
    let grids = (cfg.j_min..=cfg.j_max)
        .map(|j| match (cfg.half_width, cfg.points) {
            (Some(l), Some(p)) => GridSpec::new(1, l, p),
            _ => con.grid(s, j),
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(g) = grids.iter().find(|g| g.points > 1 << 24) {
        return Err(Error::InvalidParameter(format!("grid {g} exceeds 2^24 points; lower j_max")));
    }
    // sequential: the top level alone needs several 2^23-point arrays
    let levels = (cfg.j_min..=cfg.j_max)
        .zip(grids.iter().copied())
        .map(|(j, g)| con.level(s, j, g))
        .collect::<Result<Vec<_>>>()?;
    let mut report = ExperimentReport::new("sharpness_s_gt_1", cfg);
    grids.iter().for_each(|g| report.grid(*g));
    let mut table = Series::new("sharpness_levels", &["j", "value", "value_over_2^jn", "f_sup", "f0_l1", "plateau_error", "points"]);
    for lv in &levels {
        let a = lv.value / 2f64.powf(n * lv.j as f64);
        table.push(vec![lv.j as f64, lv.value, a, lv.f_sup, lv.f0_l1, lv.plateau_error, lv.points as f64]);
    }
    report.series.push(table);
    report.check(Check::at_least(11, "δ with |ψ∨| >= 1 on |x| <= δ", con.delta, 1e-3));
    report.check(Check::at_least(11, "ψ∨(0)", con.psi_check_at_zero, 2.0 - 1e-9));
    let worst_plateau = levels.iter().map(|l| l.plateau_error).fold(0.0, f64::max);
    report.check(Check::at_most(11, "plateau identities for θ_j F_j, φ_j F_j", worst_plateau, 1e-8));
    let lower = 2.0 * con.delta;
    let min_a = levels.iter().map(|l| l.value / 2f64.powf(n * l.j as f64)).fold(f64::INFINITY, f64::min);
    report.check(Check::at_least(11, "value / 2^{jn} against the δ-ball bound A = 2δ", min_a, lower));
    let sup = fit_or_fail(&mut report, 11, "f_sup", &levels.iter().map(|l| (l.j, l.f_sup)).collect::<Vec<_>>());
    let val = fit_or_fail(&mut report, 11, "value", &levels.iter().map(|l| (l.j, l.value.abs())).collect::<Vec<_>>());
    if let (Some(sup), Some(val)) = (sup, val) {
        let implied = 2.0 * sup.slope - val.slope;
        report.check(Check::at_most(11, "implied bound on m", implied, cr.m_s + 0.25).with_fit(&val).with_fit(&sup));
    }
    report.notes.push(format!("δ = {:.4}, κ = {:.6e}", con.delta, con.kappa));
    Ok(report.finish(started))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RegionProbeConfig {
    pub s: f64,
    pub j_min: i32,
    pub j_max: i32,
    /// Atom radius.
    pub r: f64,
    pub half_width: f64,
    pub points: Option<usize>,
    /// `s > 1`: the near region is `|x| <= C 2^{j(s-1)+2}`.
    pub c: f64,
    pub seed: u64,
}

impl Default for RegionProbeConfig {
    fn default() -> Self {
        Self::for_order(0.5)
    }
}

impl RegionProbeConfig {
    pub fn for_order(s: f64) -> Self {
        if s < 1.0 {
            Self { s, j_min: 6, j_max: 11, r: 2f64.powi(-4), half_width: 8.0, points: None, c: 1.0, seed: DEFAULT_SEED }
        } else {
            Self { s, j_min: 1, j_max: 2, r: 0.5, half_width: 1024.0, points: Some(1 << 15), c: 4.0, seed: DEFAULT_SEED }
        }
    }
}

/// `1/(2r)` on `|x| < r`: an atom of radius `r` centered at 0.
pub fn box_atom(spec: GridSpec, r: f64) -> SampledFunction {
    SampledFunction::physical(spec, |p| real(if p[0].abs() < r { 1.0 / (2.0 * r) } else { 0.0 }))
}

/// Region-by-region `L¹` mass of `S_j f · S_j g · S_j h` with `S_j = e^{i|D|^s} ψ_j(D)`.
pub fn region_probe(cfg: &RegionProbeConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    let phase = PhaseSpec::positive(cfg.s)?;
    let cr = critical_order(1, cfg.s)?;
    let psi = Localizer::DyadicPiece;
    let spec_for = |j: i32| -> Result<GridSpec> {
        let band = GridSpec::points_for_band(cfg.half_width, psi.support_radius() * 2f64.powi(j));
        GridSpec::new(1, cfg.half_width, cfg.points.unwrap_or(band).max(band))
    };
    let top = spec_for(cfg.j_max)?;
    let h = box_atom(top, cfg.r);
    let atom = Atom::from_samples([0.0, 0.0], cfg.r, &h)?;
    let v = validate_atom(&atom);
    if !v.valid {
        return Err(Error::Precondition(format!("h is not an atom: {}", v.violations.join("; "))));
    }
    let mut r = rng(cfg.seed);
    let f = random_bounded(top, &mut r);
    let g = random_bounded(top, &mut r);
    let mut report = ExperimentReport::new("region_probe", cfg);
    report.seed = Some(cfg.seed);
    report.grid(top);
    let levels: Vec<i32> = (cfg.j_min..=cfg.j_max).collect();
    let products = levels
        .par_iter()
        .map(|&j| {
            let p = apply_sj(&phase, &psi, j, &f)?.mul(&apply_sj(&phase, &psi, j, &g)?)?;
            Ok((j, p.mul(&apply_sj(&phase, &psi, j, &h)?)?))
        })
        .collect::<Result<Vec<_>>>()?;
    if cfg.s < 1.0 {
        let regions = [Region::ball(2.0 * cfg.r), Region::annulus(2.0 * cfg.r, 4.0), Region::complement_ball(4.0)];
        let mut table = Series::new("regions", &["j", "near", "middle", "far", "near_normalized", "middle_normalized", "far_normalized"]);
        let mut near = Vec::new();
        for (j, p) in &products {
            let vals = regions.iter().map(|reg| norm(p, Norm::L1, reg)).collect::<Result<Vec<_>>>()?;
            let jf = *j as f64;
            let n1 = vals[0] * 2f64.powf(jf * cr.m_s);
            let n2 = vals[1] * 2f64.powf(jf * cr.m_s);
            let n3 = vals[2] * 2f64.powf(-jf * cfg.s / 2.0);
            near.push((*j, n1));
            table.push(vec![jf, vals[0], vals[1], vals[2], n1, n2, n3]);
        }
        report.series.push(table);
        if near.iter().all(|(_, v)| *v > 0.0) {
            if let Some(fit) = fit_or_fail(&mut report, 0, "near_normalized", &near) {
                report.check(Check::at_most(0, "normalized |x| <= 2r mass slope", fit.slope, 0.15).with_fit(&fit));
            }
        } else {
            report.notes.push("zero near-region mass; no fit".into());
        }
    } else {
        let mut table = Series::new("shells", &["j", "k", "shell_l1"]);
        for (j, p) in &products {
            let start = cfg.c * 2f64.powf(*j as f64 * (cfg.s - 1.0) + 2.0);
            let shells = shell_masses(p, start, cfg.half_width / 2.0);
            let peak = shells.iter().map(|x| x.1).fold(0.0, f64::max);
            let kept: Vec<(i32, f64)> = shells.iter().copied().filter(|(_, v)| *v > 1e-12 * peak && *v > 0.0).collect();
            for &(k, v) in &shells {
                table.push(vec![*j as f64, k as f64, v]);
            }
            if kept.len() >= 3 {
                let fit = fit_levels(&kept)?;
                report.fit(format!("shell decay j={j}"), fit);
                report.check(Check::at_most(0, format!("shell decay slope j={j}"), fit.slope, -cfg.s + 0.2).with_fit(&fit));
            } else {
                report.notes.push(format!("j={j}: {} shells above the floor; no fit", kept.len()));
            }
        }
        report.series.push(table);
        // direct-sum oracle for the first shell of the lowest level
        let (j, p) = &products[0];
        let start = cfg.c * 2f64.powf(*j as f64 * (cfg.s - 1.0) + 2.0);
        let k = start.log2().ceil() as i32;
        let region = Region::shell(k);
        let fft_value = norm(p, Norm::L1, &region)?;
        let direct = direct_shell(&phase, &psi, *j, &f, &g, &h, k)?;
        let gap = (fft_value - direct).abs() / direct.abs().max(f64::MIN_POSITIVE);
        report.check(Check::at_most(0, format!("shell j={j}, k={k} against direct sum"), gap, 1e-8));
    }
    Ok(report.finish(started))
}

/// Shell mass with `S_j h` evaluated as a direct sum `Σ_y K_j(x - y) h(y) Δx`.
#[allow(clippy::too_many_arguments)]
fn direct_shell(
    phase: &PhaseSpec,
    theta: &Localizer,
    j: i32,
    f: &SampledFunction,
    g: &SampledFunction,
    h: &SampledFunction,
    k: i32,
) -> Result<f64> {
    let spec = *f.spec();
    let kernel = inverse_transform(&multiplier(phase, theta, j, &spec))?;
    let sf = apply_sj(phase, theta, j, f)?;
    let sg = apply_sj(phase, theta, j, g)?;
    let n = spec.points;
    let support: Vec<(usize, Complex64)> =
        h.values().iter().copied().enumerate().filter(|(_, v)| *v != Complex64::new(0.0, 0.0)).collect();
    let lo = 2f64.powi(k);
    let hi = 2f64.powi(k + 1);
    let origin = n / 2;
    let total: f64 = (0..n)
        .into_par_iter()
        .filter(|&i| {
            let r = spec.coord(i).abs();
            r >= lo && r < hi
        })
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(m, hv) in &support {
                // x_i - y_m sits at index i - m + N/2 (mod N)
                let idx = (i + n + origin - m) % n;
                acc += kernel.values()[idx] * hv;
            }
            (sf.values()[i] * sg.values()[i] * acc * spec.dx()).norm()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(total * spec.dx())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceConfig {
    pub s: f64,
    /// Order for the random-input sum; `m_s - 0.2` when absent.
    pub m: Option<f64>,
    pub j_min: i32,
    pub j_max: i32,
    pub half_width: f64,
    pub points: usize,
    pub r: f64,
    pub trials: usize,
    /// The sharpness-input sum uses `m_s + sharp_offset`.
    pub sharp_offset: f64,
    pub sharp_j_min: i32,
    pub sharp_j_max: i32,
    pub seed: u64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            s: 0.5,
            m: None,
            j_min: 2,
            j_max: 12,
            half_width: 8.0,
            points: 1 << 16,
            r: 2f64.powi(-4),
            trials: 4,
            sharp_offset: 0.5,
            sharp_j_min: 6,
            sharp_j_max: 11,
            seed: DEFAULT_SEED,
        }
    }
}

/// `2^{jm} ‖S_j f · S_j g · S_j h‖₁` per level, averaged over random draws.
pub fn convergence_terms(
    phase: &PhaseSpec,
    spec: GridSpec,
    inputs: &[(SampledFunction, SampledFunction, SampledFunction)],
    levels: &[i32],
    m: f64,
) -> Result<Vec<(i32, f64)>> {
    let psi = Localizer::DyadicPiece;
    let hats = inputs
        .iter()
        .map(|(f, g, h)| Ok((forward_transform(f)?, forward_transform(g)?, forward_transform(h)?)))
        .collect::<Result<Vec<_>>>()?;
    levels
        .par_iter()
        .map(|&j| {
            spec.check_band(psi.support_radius() * 2f64.powi(j))?;
            let mult = multiplier(phase, &psi, j, &spec);
            let mut sum = 0.0;
            for (fh, gh, hh) in &hats {
                let a = inverse_transform(&fh.mul(&mult)?)?;
                let b = inverse_transform(&gh.mul(&mult)?)?;
                let c = inverse_transform(&hh.mul(&mult)?)?;
                sum += l1(&a.mul(&b)?.mul(&c)?)?;
            }
            let mean = if hats.is_empty() { 0.0 } else { sum / hats.len() as f64 };
            Ok((j, 2f64.powf(j as f64 * m) * mean))
        })
        .collect()
}

/// Partial sums of the level series on random inputs and on the sharpness family.
pub fn convergence_probe(cfg: &ConvergenceConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    let phase = PhaseSpec::positive(cfg.s)?;
    let cr = critical_order(1, cfg.s)?;
    let m = cfg.m.unwrap_or(cr.m_s - 0.2);
    let spec = GridSpec::new(1, cfg.half_width, cfg.points)?;
    let mut r = rng(cfg.seed);
    let h = box_atom(spec, cfg.r);
    let inputs: Vec<_> = (0..cfg.trials)
        .map(|_| (random_bounded(spec, &mut r), random_bounded(spec, &mut r), h.clone()))
        .collect();
    let levels: Vec<i32> = (cfg.j_min..=cfg.j_max).collect();
    let terms = convergence_terms(&phase, spec, &inputs, &levels, m)?;
    let mut report = ExperimentReport::new("convergence_probe", cfg);
    report.seed = Some(cfg.seed);
    report.grid(spec);
    let mut table = Series::new("random_inputs", &["j", "m", "term", "partial_sum", "ratio"]);
    push_partial_sums(&mut table, &terms, m);
    // the endpoint m = m_s, descriptive only
    let endpoint: Vec<(i32, f64)> = terms.iter().map(|&(j, t)| (j, t * 2f64.powf(j as f64 * (cr.m_s - m)))).collect();
    push_partial_sums(&mut table, &endpoint, cr.m_s);
    report.series.push(table);
    if m <= cr.m_s - 0.1 && terms.len() >= 3 {
        let t = &terms[terms.len() - 3..];
        let worst = (t[1].1 / t[0].1).max(t[2].1 / t[1].1);
        report.check(Check::new(
            12,
            format!("last-three-term ratios at m = {m} (random inputs, {} draws)", cfg.trials),
            worst,
            "< 0.9",
            0.9,
            worst < 0.9,
        ));
    }

    if cfg.s < 1.0 {
        let sharp_cfg = SharpnessConfig { j_min: cfg.sharp_j_min, j_max: cfg.sharp_j_max, ..SharpnessConfig::for_order(cfg.s) };
        let (levels, grids) = low_levels(&sharp_cfg)?;
        grids.iter().for_each(|g| report.grid(*g));
        let m_sharp = cr.m_s + cfg.sharp_offset;
        let sharp: Vec<(i32, f64)> = levels.iter().map(|l| (l.j, 2f64.powf(l.j as f64 * m_sharp) * l.q)).collect();
        let mut table = Series::new("sharpness_inputs", &["j", "m", "term", "partial_sum", "ratio"]);
        push_partial_sums(&mut table, &sharp, m_sharp);
        report.series.push(table);
        if cfg.sharp_offset >= 0.1 && sharp.len() >= 3 {
            let t = &sharp[sharp.len() - 3..];
            let growth = (t[1].1 / t[0].1).min(t[2].1 / t[1].1);
            report.check(Check::new(
                12,
                format!("terms increase over the top 3 levels at m = {m_sharp} (sharpness inputs)"),
                growth,
                "> 1",
                1.0,
                growth > 1.0,
            ));
        }
    } else {
        report.notes.push("sharpness-input sums are implemented for s < 1 only".into());
    }
    Ok(report.finish(started))
}

fn push_partial_sums(table: &mut Series, terms: &[(i32, f64)], m: f64) {
    let mut acc = 0.0;
    let mut prev: Option<f64> = None;
    for &(j, t) in terms {
        acc += t;
        let ratio = prev.map_or(f64::NAN, |p| if p > 0.0 { t / p } else { f64::NAN });
        table.push(vec![j as f64, m, t, acc, ratio]);
        prev = Some(t);
    }
}
