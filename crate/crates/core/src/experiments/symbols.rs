use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{Check, ExperimentReport, Series};
use super::{random_band_limited, rng, DEFAULT_SEED};
use crate::atoms::{decompose, validate_atom, AtomicDecomposition};
use crate::bilinear::{
    apply_t_sigma, decompose_symbol, default_theta3, transpose_symbol, trilinear_form, BilinearSymbol, SymbolSpec,
    Transposition,
};
use crate::error::{Error, Result};
use crate::grid::{norm, GridSpec, Norm, Region, SampledFunction, Space};
use crate::oscillatory::PhaseSpec;
use crate::partition::{make_localizer, LocalizerKind};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SymbolExpandConfig {
    pub symbol: SymbolSpec,
    pub j_max: i32,
    pub n_decay: u32,
    pub a_max: i32,
    /// Smaller window compared against `a_max` in the stability check.
    pub window: i32,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SymbolExpandConfig {
    fn default() -> Self {
        Self { symbol: SymbolSpec::Bessel { m: -1.0 }, j_max: 8, n_decay: 4, a_max: 16, window: 8, samples: 100, seed: DEFAULT_SEED }
    }
}

/// Blockwise Fourier expansion of a symbol: weighted coefficient suprema and
/// pointwise reconstruction error against the truncation tail bound.
pub fn symbol_expand(cfg: &SymbolExpandConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    if cfg.window < 1 || cfg.window > cfg.a_max {
        return Err(Error::InvalidParameter(format!("window {} outside 1..={}", cfg.window, cfg.a_max)));
    }
    let sigma = BilinearSymbol::from_spec(&cfg.symbol)?;
    let dec = decompose_symbol(&sigma, cfg.j_max, cfg.n_decay, cfg.a_max)?;
    let mut report = ExperimentReport::new("symbol_expand", cfg);
    report.seed = Some(cfg.seed);

    let mut levels = Series::new("level_sups", &["j", "weighted_sup"]);
    for &(j, v) in &dec.level_sups {
        levels.push(vec![j as f64, v]);
    }
    report.series.push(levels);
    let mut windows = Series::new("window_sups", &["window", "weighted_sup"]);
    for w in 1..=cfg.a_max {
        windows.push(vec![w as f64, dec.weighted_sup(w)]);
    }
    report.series.push(windows);

    let small = dec.weighted_sup(cfg.window);
    let large = dec.weighted_sup(cfg.a_max);
    report.check(Check::new(6, "weighted coefficient supremum finite", large, "finite", 0.0, large.is_finite()));
    report.check(Check::new(
        6,
        format!("weighted supremum stable between windows {} and {}", cfg.window, cfg.a_max),
        large / small,
        "< 2",
        2.0,
        large / small < 2.0,
    ));

    let mut r = rng(cfg.seed);
    let top = (cfg.j_max + 1) as f64;
    let points: Vec<(f64, f64)> = (0..cfg.samples)
        .map(|_| {
            let coord = |r: &mut rand_chacha::ChaCha8Rng| {
                let mag = 2f64.powf(r.random_range(-2.0..top));
                if r.random_bool(0.5) { mag } else { -mag }
            };
            (coord(&mut r), coord(&mut r))
        })
        .collect();
    let mut residuals = Series::new("reconstruction", &["xi", "eta", "residual", "tail_bound"]);
    let mut worst = 0.0f64;
    let rows: Vec<(f64, f64, f64, f64)> = points
        .par_iter()
        .map(|&(x, y)| {
            let res = (dec.reconstruct(x, y) - dec.target(&sigma, x, y)).norm();
            (x, y, res, dec.tail_bound(x, y))
        })
        .collect();
    for (x, y, res, bound) in rows {
        let ratio = if bound > 0.0 { res / bound } else if res == 0.0 { 0.0 } else { f64::INFINITY };
        worst = worst.max(ratio);
        residuals.push(vec![x, y, res, bound]);
    }
    report.series.push(residuals);
    report.check(Check::at_most(6, "reconstruction residual / tail bound (max over samples)", worst, 1.0));
    report.notes.push(format!("{} blocks, fitted C = {:.4e}", dec.blocks.len(), dec.fitted_c));
    Ok(report.finish(started))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PairingConfig {
    pub symbol: SymbolSpec,
    pub triples: usize,
    pub half_width: f64,
    pub points: usize,
    /// Largest frequency index of the random inputs.
    pub band: usize,
    pub s: f64,
    pub j: i32,
    pub seed: u64,
}

impl Default for PairingConfig {
    fn default() -> Self {
        Self {
            symbol: SymbolSpec::Bessel { m: -1.0 },
            triples: 20,
            half_width: 16.0,
            points: 256,
            band: 32,
            s: 0.5,
            j: 3,
            seed: DEFAULT_SEED,
        }
    }
}

fn relative_gap(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Transposition identity `∫ T_σ(f,g) h = ∫ T_{σ*¹}(h,g) f` on random
/// band-limited triples, plus the plateau identity of the trilinear form.
pub fn pairing(cfg: &PairingConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    let spec = GridSpec::new(1, cfg.half_width, cfg.points)?;
    if 4 * cfg.band >= cfg.points {
        return Err(Error::InvalidParameter(format!("band {} must stay below N/4 = {}", cfg.band, cfg.points / 4)));
    }
    let sigma = BilinearSymbol::from_spec(&cfg.symbol)?;
    let star = transpose_symbol(&sigma, Transposition::Star1);
    let mut r = rng(cfg.seed);
    let triples = (0..cfg.triples)
        .map(|_| {
            Ok((
                random_band_limited(spec, cfg.band, &mut r)?,
                random_band_limited(spec, cfg.band, &mut r)?,
                random_band_limited(spec, cfg.band, &mut r)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = triples
        .par_iter()
        .map(|(f, g, h)| {
            let lhs = apply_t_sigma(&sigma, f, g)?.mul(h)?.integral();
            let rhs = apply_t_sigma(&star, h, g)?.mul(f)?.integral();
            Ok((lhs, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ExperimentReport::new("pairing", cfg);
    report.seed = Some(cfg.seed);
    report.grid(spec);
    let mut table = Series::new("pairing", &["triple", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "relative_gap"]);
    let mut worst = 0.0f64;
    for (i, (lhs, rhs)) in rows.iter().enumerate() {
        let gap = relative_gap(*lhs, *rhs);
        worst = worst.max(gap);
        table.push(vec![i as f64, lhs.re, lhs.im, rhs.re, rhs.im, gap]);
    }
    report.series.push(table);
    report.check(Check::at_most(7, format!("transposition pairing over {} triples", cfg.triples), worst, 1e-8));

    // ∫ S_j f S_j g S_j h against ∫ e^{i|D|^s}(S_j f S_j g) h
    let phase = PhaseSpec::positive(cfg.s)?;
    let psi = make_localizer(LocalizerKind::PsiNarrow)?;
    let theta3 = default_theta3(&psi, &psi);
    let tri_spec = GridSpec::new(1, cfg.half_width, cfg.points.max(GridSpec::points_for_band(cfg.half_width, theta3.support_radius() * 2f64.powi(cfg.j))))?;
    report.grid(tri_spec);
    let mut r = rng(cfg.seed ^ 0x5eed);
    let (f, g, h) = (
        random_band_limited(tri_spec, cfg.band, &mut r)?,
        random_band_limited(tri_spec, cfg.band, &mut r)?,
        random_band_limited(tri_spec, cfg.band, &mut r)?,
    );
    let tri = trilinear_form(&phase, [&psi, &psi, &theta3], cfg.j, &f, &g, &h, &[])?;
    let gap = relative_gap(tri.value, tri.pairing_value);
    report.check(Check::at_most(7, "trilinear form equals phase-transposed pairing", gap, 1e-8));
    Ok(report.finish(started))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AtomsConfig {
    pub functions: usize,
    pub half_width: f64,
    pub points: usize,
    pub seed: u64,
}

impl Default for AtomsConfig {
    fn default() -> Self {
        Self { functions: 10, half_width: 8.0, points: 1024, seed: DEFAULT_SEED }
    }
}

/// Random `L¹` function: uniform noise under a random Gaussian envelope,
/// zero outside a random interval.
fn random_l1(spec: GridSpec, r: &mut rand_chacha::ChaCha8Rng) -> SampledFunction {
    let l = spec.half_width;
    let center: f64 = r.random_range(-l / 2.0..l / 2.0);
    let width: f64 = r.random_range(0.05..l / 4.0);
    let amp: f64 = 2f64.powf(r.random_range(-6.0..6.0));
    let values = (0..spec.size())
        .map(|i| {
            let x = spec.coord(i);
            let noise: f64 = r.random_range(-1.0..1.0);
            let phase: f64 = r.random_range(0.0..std::f64::consts::TAU);
            if (x - center).abs() > 3.0 * width {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(amp * noise * (-(x - center).powi(2) / (width * width)).exp(), phase)
            }
        })
        .collect();
    SampledFunction::new(spec, values, Space::Physical).expect("length matches grid")
}

struct AtomSummary {
    relative_error: f64,
    weight_ratio: f64,
    invalid: usize,
    count: usize,
    remainder: usize,
}

fn summarize(h: &SampledFunction, d: &AtomicDecomposition) -> Result<AtomSummary> {
    let err = d.reconstruct().add_scaled(Complex64::new(-1.0, 0.0), h)?.max_abs();
    let peak = h.max_abs();
    let l1 = norm(h, Norm::L1, &Region::Whole)?;
    Ok(AtomSummary {
        relative_error: if peak > 0.0 { err / peak } else { err },
        weight_ratio: if l1 > 0.0 { d.weight_sum() / l1 } else { 1.0 },
        invalid: d.atoms.iter().filter(|a| !validate_atom(a).valid).count(),
        count: d.atoms.len(),
        remainder: d.remainder_count(),
    })
}

fn atom_report(id: &str, params: impl Serialize, inputs: &[SampledFunction]) -> Result<ExperimentReport> {
    let started = Instant::now();
    let summaries = inputs
        .par_iter()
        .map(|h| summarize(h, &decompose(h)?))
        .collect::<Result<Vec<_>>>()?;
    let mut report = ExperimentReport::new(id, params);
    let mut table = Series::new("atoms", &["function", "atoms", "remainder_atoms", "weight_ratio", "relative_error", "invalid"]);
    for (i, s) in summaries.iter().enumerate() {
        table.push(vec![i as f64, s.count as f64, s.remainder as f64, s.weight_ratio, s.relative_error, s.invalid as f64]);
    }
    for h in inputs {
        report.grid(*h.spec());
    }
    report.series.push(table);
    let worst_err = summaries.iter().map(|s| s.relative_error).fold(0.0, f64::max);
    let lo = summaries.iter().map(|s| s.weight_ratio).fold(f64::INFINITY, f64::min);
    let hi = summaries.iter().map(|s| s.weight_ratio).fold(0.0, f64::max);
    let invalid: usize = summaries.iter().map(|s| s.invalid).sum();
    report.check(Check::at_most(8, "reconstruction relative max error", worst_err, 1e-10));
    if !summaries.is_empty() && lo.is_finite() {
        report.check(Check::at_least(8, "weight sum / L1 norm (min)", lo, 0.99));
        report.check(Check::at_most(8, "weight sum / L1 norm (max)", hi, 4.04));
    }
    report.check(Check::at_most(8, "invalid atoms", invalid as f64, 0.0));
    Ok(report.finish(started))
}

/// Level-set decompositions of random `L¹` functions on a 1D grid.
pub fn atoms(cfg: &AtomsConfig) -> Result<ExperimentReport> {
    let spec = GridSpec::new(1, cfg.half_width, cfg.points)?;
    let mut r = rng(cfg.seed);
    let inputs: Vec<_> = (0..cfg.functions).map(|_| random_l1(spec, &mut r)).collect();
    let mut report = atom_report("atoms", cfg, &inputs)?;
    report.seed = Some(cfg.seed);
    Ok(report)
}

/// Decomposition of a user-supplied function.
pub fn atoms_for_input(h: &SampledFunction) -> Result<ExperimentReport> {
    h.expect_space(Space::Physical)?;
    atom_report("atoms", serde_json::json!({ "input": h.spec() }), std::slice::from_ref(h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_input_has_no_atoms_and_passes() {
        let spec = GridSpec::new(1, 4.0, 64).unwrap();
        let r = atoms_for_input(&SampledFunction::zeros(spec, Space::Physical)).unwrap();
        assert_eq!(r.series[0].rows[0][1], 0.0);
        assert!(r.checks.iter().all(|c| c.passed()));
    }

    #[test]
    fn relative_gap_handles_zero() {
        assert_eq!(relative_gap(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)), 0.0);
        assert!((relative_gap(Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)) - 0.5).abs() < 1e-15);
    }
}
