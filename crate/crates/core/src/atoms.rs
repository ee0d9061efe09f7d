//! Atomic decomposition of grid functions in `L¹`.
//!
//! An atom is supported in a ball `B(x₀, r)` with `0 < r <= 1` and satisfies
//! `‖a‖_∞ <= r^{-n}`. The decomposition splits `|h|` into level sets
//! `E_k = {2^k <= |h| < 2^{k+1}}`, covers each with dyadic cubes of side at
//! most `1/√n`, and emits one atom per cube with weight `2^{k+1} r^n`,
//! `r = diam Q`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{norm, GridSpec, Norm, Region, SampledFunction, Space};

/// Mass allowed below the lowest level before it goes to remainder atoms.
pub const REMAINDER_FRACTION: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Atom {
    pub center: [f64; 2],
    pub radius: f64,
    /// Level `k` of the set it came from; `None` for remainder atoms.
    pub level: Option<i32>,
    spec: GridSpec,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl Atom {
    /// Wraps the nonzero samples of `f` as a candidate atom.
    pub fn from_samples(center: [f64; 2], radius: f64, f: &SampledFunction) -> Result<Self> {
        f.expect_space(Space::Physical)?;
        let (indices, values) = f
            .values()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm_sqr() > 0.0)
            .map(|(i, v)| (i, *v))
            .unzip();
        Ok(Self { center, radius, level: None, spec: *f.spec(), indices, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Grid indices and values of the nonzero samples.
    pub fn support(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn samples(&self) -> SampledFunction {
        let mut out = SampledFunction::zeros(self.spec, Space::Physical);
        for (i, v) in self.support() {
            out.values_mut()[i] = v;
        }
        out
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomValidation {
    pub valid: bool,
    pub violations: Vec<String>,
}

/// Checks `0 < r <= 1`, support in `B(x₀, r + Δx)` and `‖a‖_∞ <= r^{-n}`.
pub fn validate_atom(atom: &Atom) -> AtomValidation {
    let mut violations = Vec::new();
    let r = atom.radius;
    let n = atom.spec.dim as i32;
    if !(r > 0.0) {
        violations.push(format!("radius {r} <= 0"));
    } else if r > 1.0 {
        violations.push(format!("radius > 1 ({r})"));
    }
    let slack = atom.spec.dx();
    let outside = atom.indices.iter().any(|&i| {
        let p = atom.spec.point(i);
        let d = ((p[0] - atom.center[0]).powi(2) + (p[1] - atom.center[1]).powi(2)).sqrt();
        d > r + slack
    });
    if outside {
        violations.push(format!("support leaves B({:?}, {r})", &atom.center[..atom.spec.dim]));
    }
    if r > 0.0 {
        let bound = r.powi(-n);
        let sup = atom.sup();
        if sup > bound * (1.0 + 1e-12) {
            violations.push(format!("size: sup {sup:.6e} exceeds r^-n = {bound:.6e}"));
        }
    }
    AtomValidation { valid: violations.is_empty(), violations }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomicDecomposition {
    pub atoms: Vec<Atom>,
    pub weights: Vec<f64>,
    pub source_l1: f64,
    pub k_min: Option<i32>,
    pub k_max: Option<i32>,
    spec: GridSpec,
}

impl AtomicDecomposition {
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ λ_k a_k` on the grid.
    pub fn reconstruct(&self) -> SampledFunction {
        let mut out = SampledFunction::zeros(self.spec, Space::Physical);
        for (atom, &w) in self.atoms.iter().zip(&self.weights) {
            for (i, v) in atom.support() {
                out.values_mut()[i] += v * w;
            }
        }
        out
    }

    pub fn remainder_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.level.is_none()).count()
    }
}

/// Dyadic cube `[i 2^{-g}, (i+1) 2^{-g})` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Cube {
    generation: i32,
    index: [i64; 2],
}

impl Cube {
    fn side(&self) -> f64 {
        2f64.powi(-self.generation)
    }

    fn containing(p: [f64; 2], generation: i32, dim: usize) -> Self {
        let side = 2f64.powi(-generation);
        let mut index = [0i64; 2];
        for (ax, slot) in index.iter_mut().enumerate().take(dim) {
            *slot = (p[ax] / side).floor() as i64;
        }
        Self { generation, index }
    }

    fn center(&self, dim: usize) -> [f64; 2] {
        let s = self.side();
        let mut c = [0.0; 2];
        for ax in 0..dim {
            c[ax] = (self.index[ax] as f64 + 0.5) * s;
        }
        c
    }
}

/// Number of grid points inside a cube, per axis product.
fn points_in_cube(spec: &GridSpec, cube: &Cube) -> usize {
    let s = cube.side();
    let dx = spec.dx();
    let l = spec.half_width;
    (0..spec.dim)
        .map(|ax| {
            let lo = cube.index[ax] as f64 * s;
            let hi = lo + s;
            // grid points x_m = -L + m Δx, m in [0, N)
            let m_lo = ((lo + l) / dx).ceil().max(0.0);
            let m_hi = ((hi + l) / dx).ceil().min(spec.points as f64);
            (m_hi - m_lo).max(0.0) as usize
        })
        .product()
}

/// Covers the grid points in `set` by dyadic cubes with fill at least 1/2,
/// starting from side `2^{-g0}` and refining down to about one grid cell.
fn cover(spec: &GridSpec, set: &[usize], g0: i32) -> Vec<(Cube, Vec<usize>)> {
    let dim = spec.dim;
    let g_max = (-spec.dx().log2()).floor() as i32;
    let mut pending: BTreeMap<Cube, Vec<usize>> = BTreeMap::new();
    for &i in set {
        pending.entry(Cube::containing(spec.point(i), g0, dim)).or_default().push(i);
    }
    let mut done = Vec::new();
    while let Some((cube, members)) = pending.pop_first() {
        let total = points_in_cube(spec, &cube);
        let filled = 2 * members.len() >= total;
        if filled || cube.generation >= g_max {
            done.push((cube, members));
            continue;
        }
        for i in members {
            pending.entry(Cube::containing(spec.point(i), cube.generation + 1, dim)).or_default().push(i);
        }
    }
    done
}

/// Level-set atomic decomposition of `h`.
pub fn decompose(h: &SampledFunction) -> Result<AtomicDecomposition> {
    h.expect_space(Space::Physical)?;
    let spec = *h.spec();
    let dim = spec.dim;
    let mags: Vec<f64> = h.values().iter().map(|v| v.norm()).collect();
    if mags.iter().any(|m| !m.is_finite()) {
        return Err(Error::InvalidParameter("h has non-finite samples".into()));
    }
    let source_l1 = norm(h, Norm::L1, &Region::Whole)?;
    let empty = |k_min, k_max| AtomicDecomposition {
        atoms: Vec::new(),
        weights: Vec::new(),
        source_l1,
        k_min,
        k_max,
        spec,
    };
    let peak = mags.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(empty(None, None));
    }
    let level = |m: f64| -> i32 {
        let mut k = m.log2().floor() as i32;
        if 2f64.powi(k) > m {
            k -= 1;
        } else if 2f64.powi(k + 1) <= m {
            k += 1;
        }
        k
    };
    let k_max = level(peak);
    let cell = spec.cell_volume();
    // each remainder cube has weight 2^k r^n <= 2^k (√n)^n |Q|, and the cover
    // has volume at most twice the set
    let remainder_cost = |k: i32| {
        let count = mags.iter().filter(|&&m| m > 0.0 && m < 2f64.powi(k)).count();
        2f64.powi(k) * 2.0 * (count as f64 * cell) * (dim as f64).powf(dim as f64 / 2.0)
    };
    let smallest = mags.iter().cloned().filter(|&m| m > 0.0).fold(f64::INFINITY, f64::min);
    let k_floor = level(smallest);
    let mut k_min = k_max;
    while k_min > k_floor && remainder_cost(k_min) > REMAINDER_FRACTION * source_l1 {
        k_min -= 1;
    }
    let g0 = if dim == 1 { 0 } else { 1 };
    let sqrt_n = (dim as f64).sqrt();
    let mut by_level: BTreeMap<Option<i32>, Vec<usize>> = BTreeMap::new();
    for (i, &m) in mags.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let k = level(m);
        by_level.entry(if k >= k_min { Some(k) } else { None }).or_default().push(i);
    }
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for (k, set) in by_level {
        let bound_exp = match k {
            Some(k) => k + 1,
            None => k_min,
        };
        for (cube, members) in cover(&spec, &set, g0) {
            let r = cube.side() * sqrt_n;
            let lambda = 2f64.powi(bound_exp) * r.powi(dim as i32);
            let values = members.iter().map(|&i| h.values()[i] / lambda).collect();
            atoms.push(Atom { center: cube.center(dim), radius: r, level: k, spec, indices: members, values });
            weights.push(lambda);
        }
    }
    Ok(AtomicDecomposition { atoms, weights, source_l1, k_min: Some(k_min), k_max: Some(k_max), spec })
}
