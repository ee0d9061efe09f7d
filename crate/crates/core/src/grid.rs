//! Uniform periodic grids, the discrete Fourier pair, region-restricted
//! norms and dyadic exponent regression.
//!
//! A grid covers `[-L, L)` per axis with `N` points, so `x_m = -L + m Δx`
//! with `Δx = 2L/N`. Frequency samples sit at `ξ_k = k Δξ`, `Δξ = π/L`,
//! for `-N/2 <= k < N/2`, stored in increasing order (index `i` holds
//! `k = i - N/2`). The transforms are Riemann sums of
//!
//! ```text
//! f̂(ξ) = ∫ e^{-iξ·x} f(x) dx,     g∨(x) = (2π)^{-n} ∫ e^{iξ·x} g(ξ) dξ
//! ```
//!
//! and are exact inverses of each other on the grid.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;

/// Required ratio between the Nyquist frequency and the largest frequency a
/// computation touches.
pub const ALIAS_MARGIN: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub half_width: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, points: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half-width {half_width} must be positive")));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "{points} points per axis; need a power of two >= 16"
            )));
        }
        Ok(Self { dim, half_width, points })
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn dxi(&self) -> f64 {
        PI / self.half_width
    }

    /// Largest representable frequency `πN/(2L)`.
    pub fn nyquist(&self) -> f64 {
        PI * self.points as f64 / (2.0 * self.half_width)
    }

    /// Total number of samples, `N^dim`.
    pub fn size(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    pub fn freq(&self, i: usize) -> f64 {
        (i as f64 - (self.points / 2) as f64) * self.dxi()
    }

    /// Per-axis indices of a flat row-major index.
    pub fn axes(&self, flat: usize) -> [usize; 2] {
        match self.dim {
            1 => [flat, 0],
            _ => [flat / self.points, flat % self.points],
        }
    }

    /// Physical position of a flat index (second entry is 0 when `dim == 1`).
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let [a, b] = self.axes(flat);
        match self.dim {
            1 => [self.coord(a), 0.0],
            _ => [self.coord(a), self.coord(b)],
        }
    }

    pub fn frequency(&self, flat: usize) -> [f64; 2] {
        let [a, b] = self.axes(flat);
        match self.dim {
            1 => [self.freq(a), 0.0],
            _ => [self.freq(a), self.freq(b)],
        }
    }

    pub fn radius(&self, flat: usize) -> f64 {
        let [x, y] = self.point(flat);
        x.hypot(y)
    }

    pub fn freq_radius(&self, flat: usize) -> f64 {
        let [x, y] = self.frequency(flat);
        x.hypot(y)
    }

    /// Flat index of the origin.
    pub fn origin(&self) -> usize {
        let h = self.points / 2;
        match self.dim {
            1 => h,
            _ => h * self.points + h,
        }
    }

    /// Anti-aliasing rule: the Nyquist frequency must exceed the largest
    /// frequency in use by [`ALIAS_MARGIN`].
    pub fn check_band(&self, max_frequency: f64) -> Result<()> {
        let required = ALIAS_MARGIN * max_frequency;
        if self.nyquist() < required {
            return Err(Error::Aliasing { nyquist: self.nyquist(), required });
        }
        Ok(())
    }

    /// Smallest power-of-two point count for which `max_frequency` passes
    /// [`check_band`](Self::check_band) at this half-width.
    pub fn points_for_band(half_width: f64, max_frequency: f64) -> usize {
        let need = 2.0 * half_width * ALIAS_MARGIN * max_frequency / PI;
        (need.ceil().max(16.0) as usize).next_power_of_two()
    }

    fn same_as(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self} vs {other}")));
        }
        Ok(())
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}D L={} N={}", self.dim, self.half_width, self.points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Physical,
    Frequency,
}

impl Space {
    fn name(self) -> &'static str {
        match self {
            Space::Physical => "physical",
            Space::Frequency => "frequency",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    spec: GridSpec,
    values: Vec<Complex64>,
    space: Space,
}

impl SampledFunction {
    pub fn new(spec: GridSpec, values: Vec<Complex64>, space: Space) -> Result<Self> {
        if values.len() != spec.size() {
            return Err(Error::LengthMismatch { expected: spec.size(), found: values.len() });
        }
        Ok(Self { spec, values, space })
    }

    pub fn zeros(spec: GridSpec, space: Space) -> Self {
        Self { spec, values: vec![Complex64::new(0.0, 0.0); spec.size()], space }
    }

    /// Samples `f` at the physical grid points.
    pub fn physical<F>(spec: GridSpec, mut f: F) -> Self
    where
        F: FnMut([f64; 2]) -> Complex64,
    {
        let values = (0..spec.size()).map(|i| f(spec.point(i))).collect();
        Self { spec, values, space: Space::Physical }
    }

    /// Samples `f` at the frequency grid points.
    pub fn frequency<F>(spec: GridSpec, mut f: F) -> Self
    where
        F: FnMut([f64; 2]) -> Complex64,
    {
        let values = (0..spec.size()).map(|i| f(spec.frequency(i))).collect();
        Self { spec, values, space: Space::Frequency }
    }

    /// Samples a radial function of `|ξ|` on the frequency grid.
    pub fn radial_multiplier<F>(spec: GridSpec, f: F) -> Self
    where
        F: Fn(f64) -> Complex64,
    {
        let values = (0..spec.size()).map(|i| f(spec.freq_radius(i))).collect();
        Self { spec, values, space: Space::Frequency }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn expect_space(&self, space: Space) -> Result<()> {
        if self.space != space {
            return Err(Error::WrongSpace { expected: space.name(), found: self.space.name() });
        }
        Ok(())
    }

    /// Pointwise product; both factors must share grid and space.
    pub fn mul(&self, other: &SampledFunction) -> Result<SampledFunction> {
        self.spec.same_as(&other.spec)?;
        if self.space != other.space {
            return Err(Error::WrongSpace { expected: self.space.name(), found: other.space.name() });
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(Self { spec: self.spec, values, space: self.space })
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: Complex64, other: &SampledFunction) -> Result<SampledFunction> {
        self.spec.same_as(&other.spec)?;
        if self.space != other.space {
            return Err(Error::WrongSpace { expected: self.space.name(), found: other.space.name() });
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + alpha * b).collect();
        Ok(Self { spec: self.spec, values, space: self.space })
    }

    pub fn scale(&self, alpha: Complex64) -> SampledFunction {
        let values = self.values.iter().map(|v| alpha * v).collect();
        Self { spec: self.spec, values, space: self.space }
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> SampledFunction {
        let values = self.values.iter().map(|&v| f(v)).collect();
        Self { spec: self.spec, values, space: self.space }
    }

    /// Riemann sum of the samples, `Δx^dim Σ f(x_m)`.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.spec.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Same samples on a different grid of identical length.
    pub fn with_spec(mut self, spec: GridSpec) -> Result<Self> {
        if spec.size() != self.values.len() {
            return Err(Error::LengthMismatch { expected: spec.size(), found: self.values.len() });
        }
        self.spec = spec;
        Ok(self)
    }
}

/// Applies a shifted 1D transform along every axis.
fn along_axes(spec: &GridSpec, values: &mut [Complex64], inverse: bool) {
    let n = spec.points;
    let sign = |i: usize| if i % 2 == 0 { 1.0 } else { -1.0 };
    let apply = |buf: &mut [Complex64]| {
        if inverse {
            for row in buf.chunks_exact_mut(n) {
                for (i, v) in row.iter_mut().enumerate() {
                    *v *= sign(i);
                }
                row.rotate_left(n / 2);
            }
            fft::inverse(buf, n);
        } else {
            fft::forward(buf, n);
            for row in buf.chunks_exact_mut(n) {
                row.rotate_left(n / 2);
                for (i, v) in row.iter_mut().enumerate() {
                    *v *= sign(i);
                }
            }
        }
    };
    apply(values);
    if spec.dim == 2 {
        let mut t = transpose(values, n);
        apply(&mut t);
        values.copy_from_slice(&transpose(&t, n));
    }
}

fn transpose(values: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    for r in 0..n {
        for c in 0..n {
            out[c * n + r] = values[r * n + c];
        }
    }
    out
}

/// Riemann-sum Fourier transform `Δx^dim Σ_m e^{-iξ_k·x_m} f(x_m)`.
pub fn forward_transform(f: &SampledFunction) -> Result<SampledFunction> {
    f.expect_space(Space::Physical)?;
    let spec = f.spec;
    let mut values = f.values.clone();
    along_axes(&spec, &mut values, false);
    let w = spec.cell_volume();
    values.iter_mut().for_each(|v| *v *= w);
    Ok(SampledFunction { spec, values, space: Space::Frequency })
}

/// Riemann-sum inverse transform `(Δξ/2π)^dim Σ_k e^{iξ_k·x_m} F(ξ_k)`.
pub fn inverse_transform(f: &SampledFunction) -> Result<SampledFunction> {
    f.expect_space(Space::Frequency)?;
    let spec = f.spec;
    let mut values = f.values.clone();
    along_axes(&spec, &mut values, true);
    let w = (spec.dxi() / (2.0 * PI)).powi(spec.dim as i32);
    values.iter_mut().for_each(|v| *v *= w);
    Ok(SampledFunction { spec, values, space: Space::Physical })
}

/// Spatial region used to restrict norms. Radii are in spatial units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Whole,
    /// `|x - c| <= radius`
    Ball {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
    },
    /// `inner <= |x - c| < outer`
    Annulus {
        #[serde(default)]
        center: [f64; 2],
        inner: f64,
        outer: f64,
    },
    /// `|x - c| > radius`
    ComplementBall {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
    },
    /// `2^k <= |x - c| < 2^{k+1}`
    Shell {
        #[serde(default)]
        center: [f64; 2],
        k: i32,
    },
}

impl Region {
    pub fn ball(radius: f64) -> Self {
        Region::Ball { center: [0.0; 2], radius }
    }

    pub fn annulus(inner: f64, outer: f64) -> Self {
        Region::Annulus { center: [0.0; 2], inner, outer }
    }

    pub fn complement_ball(radius: f64) -> Self {
        Region::ComplementBall { center: [0.0; 2], radius }
    }

    pub fn shell(k: i32) -> Self {
        Region::Shell { center: [0.0; 2], k }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            Region::Ball { radius, .. } | Region::ComplementBall { radius, .. } => {
                if !(radius >= 0.0 && radius.is_finite()) {
                    return bad(format!("region radius {radius}"));
                }
            }
            Region::Annulus { inner, outer, .. } => {
                if !(inner >= 0.0 && inner < outer) {
                    return bad(format!("annulus needs 0 <= inner < outer, got [{inner}, {outer})"));
                }
            }
            Region::Whole | Region::Shell { .. } => {}
        }
        Ok(())
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let dist = |c: [f64; 2]| (p[0] - c[0]).hypot(p[1] - c[1]);
        match *self {
            Region::Whole => true,
            Region::Ball { center, radius } => dist(center) <= radius,
            Region::Annulus { center, inner, outer } => {
                let r = dist(center);
                inner <= r && r < outer
            }
            Region::ComplementBall { center, radius } => dist(center) > radius,
            Region::Shell { center, k } => {
                let r = dist(center);
                let lo = 2f64.powi(k);
                lo <= r && r < 2.0 * lo
            }
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Whole => write!(f, "whole"),
            Region::Ball { radius, .. } => write!(f, "ball(r={radius})"),
            Region::Annulus { inner, outer, .. } => write!(f, "annulus[{inner},{outer})"),
            Region::ComplementBall { radius, .. } => write!(f, "complement(r={radius})"),
            Region::Shell { k, .. } => write!(f, "shell(k={k})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

/// Riemann-sum `L^p` norm of a physical-space function over `region`.
pub fn norm(f: &SampledFunction, p: Norm, region: &Region) -> Result<f64> {
    f.expect_space(Space::Physical)?;
    region.validate()?;
    let spec = f.spec;
    let mut count = 0usize;
    let mut acc = 0.0f64;
    for (i, v) in f.values.iter().enumerate() {
        if !region.contains(spec.point(i)) {
            continue;
        }
        count += 1;
        let a = v.norm();
        match p {
            Norm::L1 => acc += a,
            Norm::L2 => acc += a * a,
            Norm::Linf => acc = acc.max(a),
        }
    }
    if count == 0 {
        return Err(Error::EmptyRegion(region.to_string()));
    }
    let w = spec.cell_volume();
    Ok(match p {
        Norm::L1 => acc * w,
        Norm::L2 => (acc * w).sqrt(),
        Norm::Linf => acc,
    })
}

/// Maximum of `|f|` over each dyadic shell `2^k <= |x| < 2^{k+1}` lying inside
/// `(inner, outer]`, in increasing `k`. Shells without grid points are skipped.
pub fn shell_maxima(f: &SampledFunction, inner: f64, outer: f64) -> Vec<(i32, f64)> {
    shell_stat(f, inner, outer, |acc, a, _| acc.max(a))
}

/// `L^1` mass of `f` over each dyadic shell inside `(inner, outer]`.
pub fn shell_masses(f: &SampledFunction, inner: f64, outer: f64) -> Vec<(i32, f64)> {
    let w = f.spec.cell_volume();
    shell_stat(f, inner, outer, |acc, a, _| acc + a)
        .into_iter()
        .map(|(k, v)| (k, v * w))
        .collect()
}

fn shell_stat<F>(f: &SampledFunction, inner: f64, outer: f64, fold: F) -> Vec<(i32, f64)>
where
    F: Fn(f64, f64, f64) -> f64,
{
    if !(inner > 0.0 && outer > inner) {
        return Vec::new();
    }
    let k_lo = inner.log2().ceil() as i32;
    let k_hi = outer.log2().floor() as i32 - 1;
    if k_hi < k_lo {
        return Vec::new();
    }
    let count = (k_hi - k_lo + 1) as usize;
    let mut acc = vec![0.0f64; count];
    let mut hits = vec![0usize; count];
    let spec = f.spec;
    for (i, v) in f.values.iter().enumerate() {
        let r = spec.radius(i);
        if r < 2f64.powi(k_lo) || r >= 2f64.powi(k_hi + 1) {
            continue;
        }
        let mut k = r.log2().floor() as i32;
        // guard against rounding at exact powers of two
        if 2f64.powi(k) > r {
            k -= 1;
        } else if 2f64.powi(k + 1) <= r {
            k += 1;
        }
        let slot = (k - k_lo) as usize;
        acc[slot] = fold(acc[slot], v.norm(), r);
        hits[slot] += 1;
    }
    (k_lo..=k_hi)
        .zip(acc.into_iter().zip(hits))
        .filter(|(_, (_, h))| *h > 0)
        .map(|(k, (v, _))| (k, v))
        .collect()
}

/// Least-squares line through `(x, log2 value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute deviation of `log2 value` from the fitted line.
    pub residual: f64,
    pub sample_count: usize,
}

impl ExponentFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Fits `log2 value ≈ intercept + slope * x`.
pub fn fit_exponent(series: &[(f64, f64)]) -> Result<ExponentFit> {
    if series.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {}", series.len())));
    }
    if let Some(&(x, v)) = series.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Fit(format!("nonpositive value {v} at {x}")));
    }
    let n = series.len() as f64;
    let mx = series.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = series.iter().map(|(_, v)| v.log2()).sum::<f64>() / n;
    let sxx: f64 = series.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all abscissae coincide".into()));
    }
    let sxy: f64 = series.iter().map(|(x, v)| (x - mx) * (v.log2() - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = series
        .iter()
        .map(|(x, v)| (v.log2() - (intercept + slope * x)).abs())
        .fold(0.0, f64::max);
    Ok(ExponentFit { slope, intercept, residual, sample_count: series.len() })
}

/// Fits a series indexed by integer level.
pub fn fit_levels(series: &[(i32, f64)]) -> Result<ExponentFit> {
    let pts: Vec<(f64, f64)> = series.iter().map(|&(j, v)| (j as f64, v)).collect();
    fit_exponent(&pts)
}
