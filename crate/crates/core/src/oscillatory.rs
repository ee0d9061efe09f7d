//! The frequency-localized oscillatory operator `S_j = e^{i|D|^s} θ(2^{-j}D)`,
//! its kernel `K_j`, and the measurements made on it.
//!
//! Grids are checked with two rules. The Nyquist frequency must clear the
//! support of `θ(2^{-j}·)` by [`ALIAS_MARGIN`](crate::grid::ALIAS_MARGIN),
//! and the half-width must cover the kernel's essential radius (see
//! [`essential_radius`]) with the factor from [`periodization_factor`].

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    fit_exponent, fit_levels, forward_transform, inverse_transform, norm, shell_maxima, ExponentFit, GridSpec,
    Norm, Region, SampledFunction, Space,
};
use crate::partition::Localizer;

/// Minimum distance of `s` from 1.
pub const S_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub s: f64,
    /// +1 for `e^{i|ξ|^s}`, -1 for `e^{-i|ξ|^s}`.
    pub sign: i8,
}

impl PhaseSpec {
    pub fn new(s: f64, sign: i8) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!("order s = {s} must be positive")));
        }
        if (s - 1.0).abs() < S_MARGIN {
            return Err(Error::InvalidParameter(format!("order s = {s} is within {S_MARGIN} of 1")));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidParameter(format!("phase sign {sign} not in {{-1, +1}}")));
        }
        Ok(Self { s, sign })
    }

    pub fn positive(s: f64) -> Result<Self> {
        Self::new(s, 1)
    }

    pub fn conjugate(self) -> Self {
        Self { s: self.s, sign: -self.sign }
    }

    /// `e^{i·sign·r^s}`, with `0^s = 0`.
    pub fn factor(&self, r: f64) -> Complex64 {
        if r == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        Complex64::from_polar(1.0, self.sign as f64 * r.powf(self.s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeConstants {
    pub a: f64,
    pub b: f64,
    pub a_prime: f64,
    pub b_prime: f64,
    /// Level from which the main-zone ratio is stable; filled in by a sweep.
    pub j0: Option<i32>,
}

impl RegimeConstants {
    pub fn new(s: f64) -> Self {
        let d = (1.0 - s).abs();
        Self {
            a: s * 4f64.powf(-d),
            b: s * 4f64.powf(d),
            a_prime: s * 1.5f64.powf(-d),
            b_prime: s * 1.5f64.powf(d),
            j0: None,
        }
    }
}

/// Largest `|x|` at which `K_j` carries appreciable mass.
///
/// For `s > 1` this is the stationary radius of the outermost frequency,
/// `s (R 2^j)^{s-1}`. For `s < 1` it is the stationary radius of the innermost
/// frequency of an annular `θ`, and 2 for a ball, whose kernel keeps an
/// `|x|^{-(n+s)}` tail.
pub fn essential_radius(phase: &PhaseSpec, theta: &Localizer, j: i32) -> f64 {
    let s = phase.s;
    let scale = 2f64.powi(j);
    if s > 1.0 {
        s * (theta.support_radius() * scale).powf(s - 1.0)
    } else if theta.is_ball() {
        2.0
    } else if theta.inner_support() > 0.0 {
        s * (theta.inner_support() * scale).powf(s - 1.0)
    } else {
        0.0
    }
}

/// Half-width multiple of [`essential_radius`] a grid must provide: 4 for the
/// slowly decaying `s < 1` ball kernels, 1.25 otherwise.
pub fn periodization_factor(phase: &PhaseSpec, theta: &Localizer) -> f64 {
    if phase.s < 1.0 && theta.is_ball() {
        4.0
    } else {
        1.25
    }
}

pub fn required_half_width(phase: &PhaseSpec, theta: &Localizer, j: i32) -> f64 {
    periodization_factor(phase, theta) * essential_radius(phase, theta, j)
}

/// Checks the aliasing and periodization rules for `θ(2^{-j}·)` on `grid`.
pub fn check_grid(phase: &PhaseSpec, theta: &Localizer, j: i32, grid: &GridSpec) -> Result<()> {
    grid.check_band(theta.support_radius() * 2f64.powi(j))?;
    let required = required_half_width(phase, theta, j);
    if grid.half_width < required {
        return Err(Error::Periodization { half_width: grid.half_width, required });
    }
    Ok(())
}

/// Smallest admissible power-of-two grid with half-width at least `min_half_width`.
pub fn auto_grid(dim: usize, phase: &PhaseSpec, theta: &Localizer, j: i32, min_half_width: f64) -> Result<GridSpec> {
    let l = required_half_width(phase, theta, j).max(min_half_width).max(1.0);
    let l = 2f64.powi(l.log2().ceil() as i32);
    let n = GridSpec::points_for_band(l, theta.support_radius() * 2f64.powi(j));
    GridSpec::new(dim, l, n)
}

/// Samples `e^{i·sign|ξ|^s} θ(2^{-j}ξ)` on the frequency grid.
pub fn multiplier(phase: &PhaseSpec, theta: &Localizer, j: i32, grid: &GridSpec) -> SampledFunction {
    let scale = 2f64.powi(-j);
    let values: Vec<Complex64> = (0..grid.size())
        .into_par_iter()
        .map(|i| {
            let r = grid.freq_radius(i);
            let t = theta.eval(r * scale);
            if t == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                phase.factor(r) * t
            }
        })
        .collect();
    SampledFunction::new(*grid, values, Space::Frequency).expect("length matches grid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelNorms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

#[derive(Debug, Clone)]
pub struct KernelRecord {
    pub j: i32,
    pub phase: PhaseSpec,
    pub localizer: Localizer,
    pub samples: SampledFunction,
    pub norms: KernelNorms,
    pub regime: RegimeConstants,
    /// Fraction of the `L^1` mass in `|x| > L/2`; wrap-around diagnostic.
    pub tail_fraction: f64,
}

impl KernelRecord {
    pub fn grid(&self) -> &GridSpec {
        self.samples.spec()
    }
}

/// `K_j = (e^{i·sign|ξ|^s} θ(2^{-j}ξ))∨` sampled on `grid`.
pub fn compute_kernel(phase: &PhaseSpec, theta: &Localizer, j: i32, grid: &GridSpec) -> Result<KernelRecord> {
    check_grid(phase, theta, j, grid)?;
    let samples = inverse_transform(&multiplier(phase, theta, j, grid))?;
    let norms = KernelNorms {
        l1: norm(&samples, Norm::L1, &Region::Whole)?,
        l2: norm(&samples, Norm::L2, &Region::Whole)?,
        linf: norm(&samples, Norm::Linf, &Region::Whole)?,
    };
    let tail = norm(&samples, Norm::L1, &Region::complement_ball(grid.half_width / 2.0))?;
    let tail_fraction = if norms.l1 > 0.0 { tail / norms.l1 } else { 0.0 };
    Ok(KernelRecord {
        j,
        phase: *phase,
        localizer: *theta,
        samples,
        norms,
        regime: RegimeConstants::new(phase.s),
        tail_fraction,
    })
}

/// `S_j f = (e^{i·sign|ξ|^s} θ(2^{-j}ξ) f̂)∨`.
pub fn apply_sj(phase: &PhaseSpec, theta: &Localizer, j: i32, f: &SampledFunction) -> Result<SampledFunction> {
    f.expect_space(Space::Physical)?;
    f.spec().check_band(theta.support_radius() * 2f64.powi(j))?;
    let hat = forward_transform(f)?;
    let m = multiplier(phase, theta, j, f.spec());
    inverse_transform(&hat.mul(&m)?)
}

/// Stationary-phase amplitude of `|K_j(x)|` in one dimension:
/// `(2π)^{-1} |θ(2^{-j}ξ*)| (2π / |φ''(ξ*)|)^{1/2}` at the critical point
/// `|ξ*| = (|x|/s)^{1/(s-1)}` of `±|ξ|^s + xξ`.
pub fn stationary_amplitude(s: f64, theta: &Localizer, j: i32, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let xi = (x.abs() / s).powf(1.0 / (s - 1.0));
    let curvature = s * (s - 1.0).abs() * xi.powf(s - 2.0);
    theta.dilated(j, xi).abs() * (2.0 * PI / curvature).sqrt() / (2.0 * PI)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimeReport {
    pub j: i32,
    /// Max of `|K_j|` where `2^{j(1-s)}|x| < a`.
    pub near_max: Option<f64>,
    pub main_max: f64,
    pub main_min: f64,
    pub main_samples: usize,
    /// `main_max / 2^{j(n - ns/2)}`.
    pub main_level: f64,
    /// Stationary-phase prediction of the main-zone maximum (n = 1).
    pub predicted_main_max: Option<f64>,
    /// Spatial decay over dyadic shells where `2^{j(1-s)}|x| > b`.
    pub far_fit: Option<ExponentFit>,
}

impl RegimeReport {
    pub fn ratio(&self) -> f64 {
        self.main_max / self.main_min
    }
}

/// Near, main and far zone measurements of an annular-`θ` kernel.
pub fn verify_regimes(record: &KernelRecord) -> Result<RegimeReport> {
    let theta = &record.localizer;
    let nonvanishing = (0..=64).all(|i| theta.eval(2.0 / 3.0 + i as f64 * (1.5 - 2.0 / 3.0) / 64.0) != 0.0);
    if theta.inner_support() < 0.5 - 1e-12 || theta.support_radius() > 2.0 + 1e-12 || !nonvanishing {
        return Err(Error::Precondition(
            "regime check needs θ supported in 1/2 <= |ξ| <= 2 and nonzero on 2/3 <= |ξ| <= 3/2".into(),
        ));
    }
    let s = record.phase.s;
    let j = record.j;
    let n = record.grid().dim as f64;
    let rc = record.regime;
    let scale = 2f64.powf(j as f64 * (1.0 - s));
    let spec = *record.grid();
    let mut near: Option<f64> = None;
    let (mut main_max, mut main_min, mut count) = (0.0f64, f64::INFINITY, 0usize);
    let mut main_arg = 0.0;
    for (i, v) in record.samples.values().iter().enumerate() {
        let y = scale * spec.radius(i);
        let a = v.norm();
        if y < rc.a {
            near = Some(near.map_or(a, |m| m.max(a)));
        } else if (rc.a_prime..=rc.b_prime).contains(&y) {
            count += 1;
            if a > main_max {
                main_max = a;
                main_arg = spec.radius(i);
            }
            main_min = main_min.min(a);
        }
    }
    if count < 32 {
        return Err(Error::Resolution(format!(
            "{count} samples in the main zone at j={j}; need at least 32"
        )));
    }
    let predicted = if spec.dim == 1 {
        Some(stationary_amplitude(s, theta, j, main_arg))
    } else {
        None
    };
    let far_lo = rc.b / scale;
    let peak = record.norms.linf;
    let shells: Vec<(f64, f64)> = shell_maxima(&record.samples, far_lo, spec.half_width / 4.0)
        .into_iter()
        .filter(|(_, v)| *v > 1e-13 * peak)
        .map(|(k, v)| (k as f64, v))
        .collect();
    let far_fit = fit_exponent(&shells).ok();
    Ok(RegimeReport {
        j,
        near_max: near,
        main_max,
        main_min,
        main_samples: count,
        main_level: main_max / 2f64.powf(j as f64 * (n - n * s / 2.0)),
        predicted_main_max: predicted,
        far_fit,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimeSweep {
    pub levels: Vec<RegimeReport>,
    /// Smallest level after which every main-zone ratio lies within a factor
    /// 2 of every other.
    pub j0: Option<i32>,
    /// max/min of the main-zone ratio over the top four levels.
    pub top_variation: f64,
    /// `log2 main_max` against `j` for `j >= j0`.
    pub level_fit: Option<ExponentFit>,
    /// `log2 near_max` against `j` for `j >= near_from`.
    pub near_fit: Option<ExponentFit>,
    pub near_from: i32,
}

/// Aggregates per-level regime reports (sorted by `j`).
pub fn regime_sweep(mut levels: Vec<RegimeReport>, near_from: i32) -> RegimeSweep {
    levels.sort_by_key(|r| r.j);
    let ratios: Vec<f64> = levels.iter().map(|r| r.ratio()).collect();
    let spread = |xs: &[f64]| {
        let hi = xs.iter().cloned().fold(f64::MIN, f64::max);
        let lo = xs.iter().cloned().fold(f64::MAX, f64::min);
        hi / lo
    };
    let j0 = (0..levels.len())
        .find(|&i| levels.len() - i >= 2 && spread(&ratios[i..]) < 2.0)
        .map(|i| levels[i].j);
    let top = &ratios[ratios.len().saturating_sub(4)..];
    let top_variation = if top.is_empty() { f64::NAN } else { spread(top) };
    let level_fit = j0.and_then(|j0| {
        let pts: Vec<(i32, f64)> = levels.iter().filter(|r| r.j >= j0).map(|r| (r.j, r.main_max)).collect();
        fit_levels(&pts).ok()
    });
    let near: Vec<(i32, f64)> = levels
        .iter()
        .filter(|r| r.j >= near_from)
        .filter_map(|r| r.near_max.map(|v| (r.j, v)))
        .collect();
    RegimeSweep { j0, top_variation, level_fit, near_fit: fit_levels(&near).ok(), near_from, levels }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub j: i32,
    pub s: f64,
    /// `s < 1`: shells in `(max(32Δx, 2r_*), 1]`, `r_*` the stationary radius
    /// of the support edge.
    pub inner: Option<ExponentFit>,
    /// `s < 1`: shells in `(1, L/4]`; `s > 1`: shells beyond `C 2^{j(s-1)}`.
    pub outer: Option<ExponentFit>,
    /// `s > 1`: shells in `[1, s (p 2^j)^{s-1}]`, `p` the plateau radius.
    pub global: Option<ExponentFit>,
    /// `s > 1`: smallest dyadic `C` whose outer fit is a clean power law
    /// steeper than `-(n+s) + 0.15`.
    pub calibrated_c: Option<f64>,
    pub inner_shells: Vec<(i32, f64)>,
    pub outer_shells: Vec<(i32, f64)>,
    pub global_shells: Vec<(i32, f64)>,
}

fn fit_shells(shells: &[(i32, f64)], zone: &str) -> Result<ExponentFit> {
    if shells.len() < 4 {
        return Err(Error::InsufficientData(format!("{} shells in the {zone} zone; need 4", shells.len())));
    }
    fit_levels(shells)
}

/// Dyadic-shell envelope exponents of a ball-`θ` kernel.
pub fn verify_envelopes(record: &KernelRecord) -> Result<EnvelopeReport> {
    let theta = &record.localizer;
    if !theta.is_ball() {
        return Err(Error::Precondition("envelope check needs a ball-supported θ".into()));
    }
    let s = record.phase.s;
    let j = record.j;
    let spec = *record.grid();
    let n = spec.dim as f64;
    let peak = record.norms.linf;
    let above_floor = |v: Vec<(i32, f64)>| -> Vec<(i32, f64)> { v.into_iter().filter(|(_, x)| *x > 1e-14 * peak).collect() };
    let mut report = EnvelopeReport {
        j,
        s,
        inner: None,
        outer: None,
        global: None,
        calibrated_c: None,
        inner_shells: Vec::new(),
        outer_shells: Vec::new(),
        global_shells: Vec::new(),
    };
    if s < 1.0 {
        let edge = s * (theta.support_radius() * 2f64.powi(j)).powf(s - 1.0);
        let lo = (32.0 * spec.dx()).max(2.0 * edge);
        report.inner_shells = above_floor(shell_maxima(&record.samples, lo, 1.0));
        report.outer_shells = above_floor(shell_maxima(&record.samples, 1.0, spec.half_width / 4.0));
        report.inner = Some(fit_shells(&report.inner_shells, "inner")?);
        report.outer = Some(fit_shells(&report.outer_shells, "outer")?);
    } else {
        let plateau = theta.plateau().map_or(1.0, |p| p.1);
        let reach = s * (plateau * 2f64.powi(j)).powf(s - 1.0);
        report.global_shells = above_floor(shell_maxima(&record.samples, 1.0, reach));
        report.global = Some(fit_shells(&report.global_shells, "global")?);
        let base = 2f64.powf(j as f64 * (s - 1.0));
        for c in 0..=16 {
            let cc = 2f64.powi(c);
            let shells = above_floor(shell_maxima(&record.samples, cc * base, spec.half_width / 4.0));
            if shells.len() < 4 {
                if c == 0 {
                    fit_shells(&shells, "outer")?;
                }
                break;
            }
            let fit = fit_levels(&shells)?;
            if fit.slope <= -(n + s) + 0.15 && fit.residual <= 0.25 {
                report.calibrated_c = Some(cc);
                report.outer = Some(fit);
                report.outer_shells = shells;
                break;
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub j: i32,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub tail_fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormScaling {
    pub rows: Vec<NormRow>,
    pub l1: ExponentFit,
    /// Only for `s < 1`.
    pub linf: Option<ExponentFit>,
}

/// Computes `K_j` on each `(j, grid)` and fits `log2 ‖K_j‖` against `j`.
pub fn verify_norm_scaling(phase: &PhaseSpec, theta: &Localizer, levels: &[(i32, GridSpec)]) -> Result<NormScaling> {
    if levels.len() < 5 {
        return Err(Error::InsufficientData(format!("{} levels; need at least 5", levels.len())));
    }
    let rows = levels
        .par_iter()
        .map(|(j, grid)| {
            let k = compute_kernel(phase, theta, *j, grid)?;
            Ok(NormRow { j: *j, l1: k.norms.l1, l2: k.norms.l2, linf: k.norms.linf, tail_fraction: k.tail_fraction })
        })
        .collect::<Result<Vec<_>>>()?;
    let l1 = fit_levels(&rows.iter().map(|r| (r.j, r.l1)).collect::<Vec<_>>())?;
    let linf = if phase.s < 1.0 {
        Some(fit_levels(&rows.iter().map(|r| (r.j, r.linf)).collect::<Vec<_>>())?)
    } else {
        None
    };
    Ok(NormScaling { rows, l1, linf })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalEnergyReport {
    pub j: i32,
    /// `(A, ‖S_j f‖_{L²(|x|<=A)} / ‖f‖_∞)`
    pub rows: Vec<(f64, f64)>,
    /// Slope of `log2` value against `log2 A`; absent for `f = 0`.
    pub fit: Option<ExponentFit>,
}

/// `‖S_j f‖_{L²(|x| <= A)}` for each `A`, normalized by `‖f‖_∞`.
pub fn local_energy_probe(
    phase: &PhaseSpec,
    theta: &Localizer,
    j: i32,
    f: &SampledFunction,
    radii: &[f64],
) -> Result<LocalEnergyReport> {
    let spec = *f.spec();
    if let Some(a) = radii.iter().find(|&&a| a > spec.half_width / 2.0 || a <= 0.0) {
        return Err(Error::InvalidParameter(format!("radius {a} outside (0, L/2]")));
    }
    let sup = f.max_abs();
    let sjf = apply_sj(phase, theta, j, f)?;
    let rows = radii
        .iter()
        .map(|&a| {
            let v = norm(&sjf, Norm::L2, &Region::ball(a))?;
            Ok((a, if sup > 0.0 { v / sup } else { 0.0 }))
        })
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|&(a, v)| (a.log2(), v)).collect();
    let fit = if sup > 0.0 { Some(fit_exponent(&pts)?) } else { None };
    Ok(LocalEnergyReport { j, rows, fit })
}
