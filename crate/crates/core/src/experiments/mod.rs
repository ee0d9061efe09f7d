//! Verification campaigns. Each returns an [`ExperimentReport`] holding the
//! raw series, the fitted exponents and one [`Check`] per tested claim.

mod kernels;
mod report;
mod sharpness;
mod symbols;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{inverse_transform, GridSpec, SampledFunction};
use crate::oscillatory::S_MARGIN;

pub use kernels::{
    envelope_check, kernel_scan, local_energy, regime_check, EnvelopeConfig, EnvelopeLevel, KernelScanConfig,
    LocalEnergyConfig, RegimeConfig,
};
pub use report::{Check, ExperimentReport, Series, Verdict, INCONCLUSIVE_RESIDUAL};
pub use sharpness::{
    box_atom, convergence_probe, convergence_terms, region_probe, sharpness_s_gt_1, sharpness_s_lt_1,
    ConvergenceConfig, RegionProbeConfig, SharpnessConfig,
};
pub use symbols::{atoms, atoms_for_input, pairing, symbol_expand, AtomsConfig, PairingConfig, SymbolExpandConfig};

/// Seed used when a configuration does not name one.
pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalOrder {
    pub n: usize,
    pub s: f64,
    pub m_s: f64,
}

/// `m_s = -ns/2 - ns(1-s)` for `0 < s < 1`, `-ns/2` for `1 < s <= 2`,
/// `-n(s-1)` for `s > 2`.
pub fn critical_order(n: usize, s: f64) -> Result<CriticalOrder> {
    if n != 1 && n != 2 {
        return Err(Error::InvalidParameter(format!("dimension {n} not in {{1, 2}}")));
    }
    if !(s > 0.0 && s.is_finite()) || (s - 1.0).abs() < S_MARGIN {
        return Err(Error::InvalidParameter(format!("order s = {s} must be positive and at least {S_MARGIN} from 1")));
    }
    let nf = n as f64;
    let m_s = if s < 1.0 {
        -nf * s / 2.0 - nf * s * (1.0 - s)
    } else if s <= 2.0 {
        -nf * s / 2.0
    } else {
        -nf * (s - 1.0)
    };
    Ok(CriticalOrder { n, s, m_s })
}

/// `m_s` over a list of orders, with the two-sided limit at `s = 2` checked.
pub fn critical_order_table(n: usize, orders: &[f64]) -> Result<ExperimentReport> {
    let started = std::time::Instant::now();
    let mut report = ExperimentReport::new("critical_order", serde_json::json!({ "n": n, "s": orders }));
    let mut table = Series::new("critical_order", &["n", "s", "m_s"]);
    for &s in orders {
        let c = critical_order(n, s)?;
        table.push(vec![n as f64, s, c.m_s]);
    }
    report.series.push(table);
    let below = critical_order(n, 2.0 - 1e-9)?.m_s;
    let above = critical_order(n, 2.0 + 1e-9)?.m_s;
    report.check(Check::at_most(0, "m_s continuity at s = 2", (below - above).abs(), 1e-8));
    Ok(report.finish(started))
}

/// Every campaign with its default configuration, in a fixed order.
/// Campaigns run one after another; each parallelizes over its levels.
pub fn all(seed: u64) -> Result<Vec<ExperimentReport>> {
    let tag = |mut r: ExperimentReport, suffix: &str| {
        r.id = format!("{}_{suffix}", r.id);
        r
    };
    let mut out = vec![critical_order_table(1, &[0.25, 0.5, 0.75, 1.5, 2.0, 3.0, 4.0])?];
    for s in [0.5, 1.5] {
        out.push(tag(kernel_scan(&KernelScanConfig::for_order(s))?, &format!("s{s}")));
    }
    for s in [0.5, 2.0] {
        out.push(tag(regime_check(&RegimeConfig::for_order(s))?, &format!("s{s}")));
    }
    for s in [0.5, 1.5, 3.0] {
        out.push(tag(envelope_check(&EnvelopeConfig::for_order(s))?, &format!("s{s}")));
    }
    out.push(local_energy(&LocalEnergyConfig { seed, ..LocalEnergyConfig::default() })?);
    out.push(symbol_expand(&SymbolExpandConfig { seed, ..SymbolExpandConfig::default() })?);
    out.push(pairing(&PairingConfig { seed, ..PairingConfig::default() })?);
    out.push(atoms(&AtomsConfig { seed, ..AtomsConfig::default() })?);
    out.push(tag(sharpness_s_lt_1(&SharpnessConfig::for_order(0.5))?, "s0.5"));
    for s in [1.5, 3.0] {
        out.push(tag(sharpness_s_gt_1(&SharpnessConfig::for_order(s))?, &format!("s{s}")));
    }
    for s in [0.5, 3.0] {
        out.push(tag(region_probe(&RegionProbeConfig { seed, ..RegionProbeConfig::for_order(s) })?, &format!("s{s}")));
    }
    out.push(convergence_probe(&ConvergenceConfig { seed, ..ConvergenceConfig::default() })?);
    Ok(out)
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent uniform samples in `[-1, 1]`.
pub fn random_bounded(spec: GridSpec, rng: &mut ChaCha8Rng) -> SampledFunction {
    let values = (0..spec.size()).map(|_| Complex64::new(rng.random_range(-1.0..=1.0), 0.0)).collect();
    SampledFunction::new(spec, values, crate::grid::Space::Physical).expect("length matches grid")
}

/// Random signs on blocks of `block` samples, smoothed by a moving average
/// of `width` samples (1D).
pub fn random_signs_smoothed(spec: GridSpec, block: usize, width: usize, rng: &mut ChaCha8Rng) -> SampledFunction {
    let n = spec.size();
    let raw: Vec<f64> = (0..n.div_ceil(block))
        .flat_map(|_| {
            let v = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            std::iter::repeat_n(v, block)
        })
        .take(n)
        .collect();
    let half = width / 2;
    let values = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + width - half).min(n);
            let s: f64 = raw[lo..hi].iter().sum();
            Complex64::new(s / width as f64, 0.0)
        })
        .collect();
    SampledFunction::new(spec, values, crate::grid::Space::Physical).expect("length matches grid")
}

/// Random complex spectrum on `|k| < k_max` (per axis index), tapered by a
/// smooth ball, returned in physical space.
pub fn random_band_limited(spec: GridSpec, k_max: usize, rng: &mut ChaCha8Rng) -> Result<SampledFunction> {
    let taper = crate::partition::Localizer::Ball { plateau: 0.5, support: 1.0 };
    let radius = k_max as f64 * spec.dxi();
    let mut hat = SampledFunction::zeros(spec, crate::grid::Space::Frequency);
    for (i, v) in hat.values_mut().iter_mut().enumerate() {
        let w = taper.eval(spec.freq_radius(i) / radius);
        let re: f64 = rng.random_range(-1.0..=1.0);
        let im: f64 = rng.random_range(-1.0..=1.0);
        if w > 0.0 {
            *v = Complex64::new(re, im) * w;
        }
    }
    inverse_transform(&hat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_order_examples() {
        assert!((critical_order(1, 0.5).unwrap().m_s + 0.5).abs() < 1e-15);
        assert!((critical_order(1, 3.0).unwrap().m_s + 2.0).abs() < 1e-15);
        assert!((critical_order(2, 2.0).unwrap().m_s + 2.0).abs() < 1e-15);
        // continuity across s = 2
        let below = critical_order(2, 2.0 - 1e-9).unwrap().m_s;
        let above = critical_order(2, 2.0 + 1e-9).unwrap().m_s;
        assert!((below - above).abs() < 1e-8);
        assert!(critical_order(1, 1.01).is_err());
        assert!(critical_order(3, 0.5).is_err());
    }

    #[test]
    fn random_inputs_are_reproducible() {
        let spec = GridSpec::new(1, 8.0, 256).unwrap();
        let a = random_bounded(spec, &mut rng(3));
        let b = random_bounded(spec, &mut rng(3));
        assert_eq!(a.values(), b.values());
        assert!(a.max_abs() <= 1.0);
        let s = random_signs_smoothed(spec, 16, 4, &mut rng(1));
        assert!(s.max_abs() <= 1.0 + 1e-15);
    }
}
