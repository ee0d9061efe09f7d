//! Bilinear symbols `σ(ξ, η)`, the operator
//! `T_σ(f, g)(x) = (2π)^{-2n} ∬ e^{ix·(ξ+η)} σ(ξ, η) f̂(ξ) ĝ(η) dξ dη`,
//! the Fourier-series reduction of `S^m_{1,0}` symbols to sums of
//! modulated tensor products, and the trilinear form `∫ S_j f · S_j g · S_j h`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{forward_transform, inverse_transform, norm, GridSpec, Norm, Region, SampledFunction, Space};
use crate::oscillatory::{multiplier, PhaseSpec};
use crate::partition::{central_difference, BumpProfile, Localizer};

type Evaluator = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

/// Serializable description of the built-in symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolSpec {
    Constant { re: f64, im: f64 },
    /// `(1 + |ξ|² + |η|²)^{m/2}`
    Bessel { m: f64 },
    /// `θ₁(ξ) θ₂(η)`
    Tensor { first: Localizer, second: Localizer },
}

/// A symbol on `ℝ × ℝ` with its declared order `m`.
#[derive(Clone)]
pub struct BilinearSymbol {
    eval: Evaluator,
    tensor: Option<(Localizer, Localizer)>,
    constant: Option<Complex64>,
    pub declared_order: f64,
    /// Highest derivative order checked by [`check_class`].
    pub derivative_budget: usize,
    pub label: String,
}

impl fmt::Debug for BilinearSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BilinearSymbol")
            .field("label", &self.label)
            .field("declared_order", &self.declared_order)
            .field("derivative_budget", &self.derivative_budget)
            .finish()
    }
}

impl BilinearSymbol {
    pub fn new<F>(label: impl Into<String>, declared_order: f64, derivative_budget: usize, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            tensor: None,
            constant: None,
            declared_order,
            derivative_budget,
            label: label.into(),
        }
    }

    pub fn constant(c: Complex64) -> Self {
        let mut s = Self::new(format!("constant({c})"), 0.0, 8, move |_, _| c);
        s.constant = Some(c);
        s
    }

    pub fn bessel(m: f64) -> Self {
        Self::new(format!("bessel({m})"), m, 8, move |x, y| {
            Complex64::new((1.0 + x * x + y * y).powf(m / 2.0), 0.0)
        })
    }

    pub fn tensor(first: Localizer, second: Localizer) -> Self {
        let mut s = Self::new("tensor", 0.0, 8, move |x, y| {
            Complex64::new(first.eval(x.abs()) * second.eval(y.abs()), 0.0)
        });
        s.tensor = Some((first, second));
        s
    }

    pub fn from_spec(spec: &SymbolSpec) -> Result<Self> {
        Ok(match *spec {
            SymbolSpec::Constant { re, im } => Self::constant(Complex64::new(re, im)),
            SymbolSpec::Bessel { m } => Self::bessel(m),
            SymbolSpec::Tensor { first, second } => {
                first.validate()?;
                second.validate()?;
                Self::tensor(first, second)
            }
        })
    }

    pub fn eval(&self, xi: f64, eta: f64) -> Complex64 {
        (self.eval)(xi, eta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transposition {
    /// `(ξ, η) ↦ σ(-ξ-η, η)`
    Star1,
    /// `(ξ, η) ↦ σ(ξ, -ξ-η)`
    Star2,
}

pub fn transpose_symbol(sigma: &BilinearSymbol, which: Transposition) -> BilinearSymbol {
    let inner = sigma.eval.clone();
    let label = format!("{}*{}", sigma.label, if which == Transposition::Star1 { 1 } else { 2 });
    let f: Evaluator = match which {
        Transposition::Star1 => Arc::new(move |x, y| inner(-x - y, y)),
        Transposition::Star2 => Arc::new(move |x, y| inner(x, -x - y)),
    };
    BilinearSymbol {
        eval: f,
        tensor: None,
        constant: sigma.constant,
        declared_order: sigma.declared_order,
        derivative_budget: sigma.derivative_budget,
        label,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassConstant {
    pub alpha: usize,
    pub beta: usize,
    /// `max |∂^α_ξ ∂^β_η σ| / (1+|ξ|+|η|)^{m-α-β}` over all sampled annuli.
    pub constant: f64,
    /// Same maximum restricted to the upper half of the annuli, divided by
    /// the maximum over the lower half.
    pub growth: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassReport {
    pub declared_order: f64,
    pub max_order: usize,
    pub constants: Vec<ClassConstant>,
    pub pass: bool,
}

const CLASS_LEVELS: i32 = 10;
const CLASS_ANGLES: usize = 24;

/// Finite-difference test of `|∂^α_ξ ∂^β_η σ| <= C (1+|ξ|+|η|)^{m-|α|-|β|}`
/// on the annuli `|(ξ, η)| = 2^k`, `k = 0..10`.
///
/// The class test passes when no normalized derivative grows by more than a
/// factor 2 from the lower to the upper half of the annuli.
pub fn check_class(sigma: &BilinearSymbol) -> ClassReport {
    let max_order = sigma.derivative_budget.min(6);
    let m = sigma.declared_order;
    let mut constants = Vec::new();
    for total in 0..=max_order {
        for alpha in 0..=total {
            let beta = total - alpha;
            let per_level: Vec<f64> = (0..=CLASS_LEVELS)
                .map(|k| {
                    let r = 2f64.powi(k);
                    let h = 0.05 * (1.0 + r);
                    (0..CLASS_ANGLES)
                        .map(|t| {
                            let angle = 2.0 * PI * (t as f64 + 0.5) / CLASS_ANGLES as f64;
                            let (x, y) = (r * angle.cos(), r * angle.sin());
                            let d = mixed_difference(sigma, x, y, alpha, beta, h);
                            d / (1.0 + x.abs() + y.abs()).powf(m - total as f64)
                        })
                        .fold(0.0, f64::max)
                })
                .collect();
            let half = per_level.len() / 2;
            let lower = per_level[..half].iter().cloned().fold(0.0, f64::max);
            let upper = per_level[half..].iter().cloned().fold(0.0, f64::max);
            let constant = lower.max(upper);
            let growth = if lower > 0.0 { upper / lower } else if upper > 0.0 { f64::INFINITY } else { 0.0 };
            constants.push(ClassConstant { alpha, beta, constant, growth });
        }
    }
    let pass = constants.iter().all(|c| c.growth <= 2.0 && c.constant.is_finite());
    ClassReport { declared_order: m, max_order, constants, pass }
}

fn mixed_difference(sigma: &BilinearSymbol, x: f64, y: f64, alpha: usize, beta: usize, h: f64) -> f64 {
    let part = |pick: fn(Complex64) -> f64| {
        let along_eta = |u: f64| central_difference(&|v: f64| pick(sigma.eval(u, y + v)), beta, 0.0, h);
        central_difference(&|u: f64| along_eta(x + u), alpha, 0.0, h)
    };
    part(|c| c.re).hypot(part(|c| c.im))
}

/// Frequency window of one factor of a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "j", rename_all = "snake_case")]
pub enum Window {
    /// `ψ_j`, with `ψ_0 = φ`.
    Psi(i32),
    /// `φ_j = φ(2^{-j}·)`.
    Phi(i32),
}

impl Window {
    pub fn scale(self) -> i32 {
        match self {
            Window::Psi(j) | Window::Phi(j) => j,
        }
    }

    pub fn eval(self, r: f64) -> f64 {
        match self {
            Window::Psi(0) => Localizer::PHI.eval(r),
            Window::Psi(j) => Localizer::DyadicPiece.dilated(j, r),
            Window::Phi(j) => Localizer::PHI.dilated(j, r),
        }
    }

    /// Smooth cutoff, in rescaled units `u = ξ 2^{-scale}`, equal to 1 on the
    /// window's support and vanishing before `|u| = π`. Transitions use the
    /// whole gaps `[0, 1/2]` and `[2, π]`.
    fn expansion_cutoff(self, u: f64) -> f64 {
        let s = BumpProfile::standard();
        let r = u.abs();
        let outer = 1.0 - s.eval((r - 2.0) / (PI - 2.0));
        match self {
            Window::Psi(j) if j > 0 => s.eval(r / 0.5) * outer,
            _ => outer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Part {
    /// `ψ_j(ξ) φ_{j-3}(η)`: `ξ` dominant.
    I,
    /// `ψ_j(ξ) ψ_k(η)`, `|j - k| <= 2`.
    II,
    /// `φ_{j-3}(ξ) ψ_j(η)`: `η` dominant.
    III,
}

/// One block `w_ξ(ξ) w_η(η) σ(ξ, η) = Σ c(a,b) w_ξ(ξ) e^{iaξ/2^{j_ξ}} w_η(η) e^{ibη/2^{j_η}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Block {
    pub part: Part,
    pub xi: Window,
    pub eta: Window,
    /// `(2π 2^{j_ξ}, 2π 2^{j_η})`
    pub periods: [f64; 2],
    /// Row-major over `a` then `b`, each in `-A..=A`.
    pub coefficients: Vec<Complex64>,
    /// Dominant level used in the `2^{jm}` normalization.
    pub level: i32,
}

impl Block {
    fn coefficient(&self, a_max: i32, a: i32, b: i32) -> Complex64 {
        let w = (2 * a_max + 1) as usize;
        self.coefficients[(a + a_max) as usize * w + (b + a_max) as usize]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymbolDecomposition {
    pub label: String,
    pub declared_order: f64,
    pub j_max: i32,
    pub n_decay: u32,
    pub a_max: i32,
    pub blocks: Vec<Block>,
    /// `sup |c(a,b)| 2^{-jm} (1+|a|)^N (1+|b|)^N` over all blocks.
    pub fitted_c: f64,
    /// The same supremum per dominant level `j`.
    pub level_sups: Vec<(i32, f64)>,
}

/// Samples per axis for the coefficient transforms.
const EXPANSION_POINTS: usize = 256;

/// Partial-sum ratio `Σ_{|a|<=A} (1+|a|)^{-N}`.
fn weight_sum(n: u32, a_max: i32) -> f64 {
    1.0 + 2.0 * (1..=a_max).map(|a| (1.0 + a as f64).powi(-(n as i32))).sum::<f64>()
}

fn weight_sum_infinite(n: u32) -> f64 {
    // direct sum plus integral bound for the remainder
    let cut = 100_000;
    let head = weight_sum(n, cut);
    let tail = 2.0 * (1.0 + cut as f64).powf(1.0 - n as f64) / (n as f64 - 1.0);
    head + tail
}

fn block_list(j_max: i32) -> Vec<(Part, Window, Window)> {
    let mut out = Vec::new();
    for j in 0..=j_max {
        if j >= 3 {
            out.push((Part::I, Window::Psi(j), Window::Phi(j - 3)));
        }
        for k in (j - 2).max(0)..=(j + 2).min(j_max) {
            out.push((Part::II, Window::Psi(j), Window::Psi(k)));
        }
        if j >= 3 {
            out.push((Part::III, Window::Phi(j - 3), Window::Psi(j)));
        }
    }
    out
}

/// Expands `σ` blockwise in Fourier series over the periods
/// `2π 2^{j_ξ} × 2π 2^{j_η}`, keeping modes `|a|, |b| <= A`.
///
/// The truncation at `j_max` represents `σ(ξ,η) φ_{j_max}(ξ) φ_{j_max}(η)`,
/// which equals `σ` on `|ξ|, |η| <= 2^{j_max}`.
pub fn decompose_symbol(sigma: &BilinearSymbol, j_max: i32, n_decay: u32, a_max: i32) -> Result<SymbolDecomposition> {
    if (sigma.derivative_budget as u32) < n_decay {
        return Err(Error::SymbolClass(format!(
            "derivative budget {} below decay order {n_decay}",
            sigma.derivative_budget
        )));
    }
    if n_decay < 2 || a_max < 2 || j_max < 0 || 2 * a_max as usize >= EXPANSION_POINTS {
        return Err(Error::InvalidParameter(format!(
            "need N >= 2, 2 <= A < {}, j_max >= 0; got N={n_decay}, A={a_max}, j_max={j_max}",
            EXPANSION_POINTS / 2
        )));
    }
    let class = check_class(sigma);
    if !class.pass {
        return Err(Error::SymbolClass(format!("{} fails the S^{} derivative test", sigma.label, sigma.declared_order)));
    }
    let m = sigma.declared_order;
    let grid = GridSpec::new(2, PI, EXPANSION_POINTS)?;
    let half = (EXPANSION_POINTS / 2) as i32;
    let blocks: Vec<Block> = block_list(j_max)
        .into_iter()
        .map(|(part, xi, eta)| {
            let (sx, sy) = (2f64.powi(xi.scale()), 2f64.powi(eta.scale()));
            let samples = SampledFunction::physical(grid, |[u, v]| {
                let w = xi.expansion_cutoff(u) * eta.expansion_cutoff(v);
                if w == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    sigma.eval(sx * u, sy * v) * w
                }
            });
            let hat = forward_transform(&samples)?;
            let norm = 1.0 / (4.0 * PI * PI);
            let mut coefficients = Vec::with_capacity(((2 * a_max + 1) * (2 * a_max + 1)) as usize);
            for a in -a_max..=a_max {
                for b in -a_max..=a_max {
                    let idx = (a + half) as usize * EXPANSION_POINTS + (b + half) as usize;
                    coefficients.push(hat.values()[idx] * norm);
                }
            }
            Ok(Block {
                part,
                xi,
                eta,
                periods: [2.0 * PI * sx, 2.0 * PI * sy],
                coefficients,
                level: xi.scale().max(eta.scale()),
            })
        })
        .collect::<Result<_>>()?;
    let mut decomposition = SymbolDecomposition {
        label: sigma.label.clone(),
        declared_order: m,
        j_max,
        n_decay,
        a_max,
        blocks,
        fitted_c: 0.0,
        level_sups: Vec::new(),
    };
    decomposition.fitted_c = decomposition.weighted_sup(a_max);
    decomposition.level_sups = (0..=j_max).map(|j| (j, decomposition.level_sup(j))).collect();
    // a wrong declared order shows up as a constant ratio 2^{Δm} between the top levels
    if let [.., (_, below), (_, top)] = decomposition.level_sups[..] {
        if j_max >= 3 && top > 1.5 * below {
            return Err(Error::SymbolClass(format!(
                "2^(-jm)-normalized coefficients grow with j: {top:.3e} at j = {j_max} vs {below:.3e} one level down"
            )));
        }
    }
    Ok(decomposition)
}

impl SymbolDecomposition {
    /// Truncated expansion evaluated at `(ξ, η)`.
    pub fn reconstruct(&self, xi: f64, eta: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for blk in &self.blocks {
            let w = blk.xi.eval(xi.abs()) * blk.eta.eval(eta.abs());
            if w == 0.0 {
                continue;
            }
            let (u, v) = (xi * 2f64.powi(-blk.xi.scale()), eta * 2f64.powi(-blk.eta.scale()));
            let mut s = Complex64::new(0.0, 0.0);
            for a in -self.a_max..=self.a_max {
                for b in -self.a_max..=self.a_max {
                    s += blk.coefficient(self.a_max, a, b) * Complex64::from_polar(1.0, a as f64 * u + b as f64 * v);
                }
            }
            acc += s * w;
        }
        acc
    }

    /// The function the expansion represents: `σ φ_{j_max}(ξ) φ_{j_max}(η)`.
    pub fn target(&self, sigma: &BilinearSymbol, xi: f64, eta: f64) -> Complex64 {
        sigma.eval(xi, eta) * Window::Phi(self.j_max).eval(xi.abs()) * Window::Phi(self.j_max).eval(eta.abs())
    }

    /// Bound on the discarded modes at `(ξ, η)`:
    /// `Σ_blocks w · C 2^{jm} (S_∞² - S_A²)` with `S_A = Σ_{|a|<=A} (1+|a|)^{-N}`.
    pub fn tail_bound(&self, xi: f64, eta: f64) -> f64 {
        let s_a = weight_sum(self.n_decay, self.a_max);
        let s_inf = weight_sum_infinite(self.n_decay);
        let per_unit = self.fitted_c * (s_inf * s_inf - s_a * s_a);
        self.blocks
            .iter()
            .map(|blk| {
                blk.xi.eval(xi.abs()) * blk.eta.eval(eta.abs()) * per_unit * 2f64.powf(blk.level as f64 * self.declared_order)
            })
            .sum()
    }

    /// Weighted coefficient supremum restricted to `|a|, |b| <= window`.
    pub fn weighted_sup(&self, window: i32) -> f64 {
        self.sup_over(window, |_| true)
    }

    fn level_sup(&self, level: i32) -> f64 {
        self.sup_over(self.a_max, |b| b.level == level)
    }

    fn sup_over(&self, window: i32, keep: impl Fn(&Block) -> bool) -> f64 {
        let w = window.min(self.a_max);
        let mut best = 0.0f64;
        for blk in self.blocks.iter().filter(|b| keep(b)) {
            let scale = 2f64.powf(-(blk.level as f64) * self.declared_order);
            for a in -w..=w {
                for b in -w..=w {
                    let v = blk.coefficient(self.a_max, a, b).norm()
                        * scale
                        * (1.0 + a.abs() as f64).powi(self.n_decay as i32)
                        * (1.0 + b.abs() as f64).powi(self.n_decay as i32);
                    best = best.max(v);
                }
            }
        }
        best
    }
}

/// Anything that can be applied as `T(f, g)`.
pub trait BilinearMultiplier {
    fn apply(&self, f: &SampledFunction, g: &SampledFunction) -> Result<SampledFunction>;
}

pub fn apply_t_sigma(sigma: &dyn BilinearMultiplier, f: &SampledFunction, g: &SampledFunction) -> Result<SampledFunction> {
    sigma.apply(f, g)
}

fn check_pair(f: &SampledFunction, g: &SampledFunction) -> Result<GridSpec> {
    f.expect_space(Space::Physical)?;
    g.expect_space(Space::Physical)?;
    if f.spec() != g.spec() {
        return Err(Error::GridMismatch(format!("{} vs {}", f.spec(), g.spec())));
    }
    Ok(*f.spec())
}

/// Rejects spectra with content at `|k| >= N/4` above `1e-12` relative.
fn check_half_band(hat: &SampledFunction) -> Result<()> {
    let spec = hat.spec();
    let quarter = (spec.points / 4) as i64;
    let half = (spec.points / 2) as i64;
    let peak = hat.max_abs();
    let outside = hat
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| spec.axes(*i).iter().take(spec.dim).any(|&c| (c as i64 - half).abs() >= quarter))
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    if outside > 1e-12 * peak {
        return Err(Error::Precondition(format!(
            "input spectrum reaches |k| >= N/4 (relative size {:.2e}); refine the grid",
            outside / peak
        )));
    }
    Ok(())
}

impl BilinearMultiplier for BilinearSymbol {
    fn apply(&self, f: &SampledFunction, g: &SampledFunction) -> Result<SampledFunction> {
        let spec = check_pair(f, g)?;
        if let Some(c) = self.constant {
            return f.mul(g).map(|p| p.scale(c));
        }
        if let Some((t1, t2)) = self.tensor {
            let a = inverse_transform(&forward_transform(f)?.mul(&SampledFunction::radial_multiplier(spec, |r| {
                Complex64::new(t1.eval(r), 0.0)
            }))?)?;
            let b = inverse_transform(&forward_transform(g)?.mul(&SampledFunction::radial_multiplier(spec, |r| {
                Complex64::new(t2.eval(r), 0.0)
            }))?)?;
            return a.mul(&b);
        }
        if spec.dim != 1 {
            return Err(Error::InvalidParameter(
                "general symbols are applied on one-dimensional grids only".into(),
            ));
        }
        let fh = forward_transform(f)?;
        let gh = forward_transform(g)?;
        check_half_band(&fh)?;
        check_half_band(&gh)?;
        let n = spec.points as i64;
        let q = n / 4;
        let idx = |k: i64| (k + n / 2) as usize;
        let dxi = spec.dxi();
        let mut out = vec![Complex64::new(0.0, 0.0); spec.points];
        for p in -(n / 2 - 1)..(n / 2) {
            let mut acc = Complex64::new(0.0, 0.0);
            let lo = (p - q + 1).max(-q + 1);
            let hi = (p + q - 1).min(q - 1);
            for k in lo..=hi {
                let l = p - k;
                let fk = fh.values()[idx(k)];
                let gl = gh.values()[idx(l)];
                if fk.norm_sqr() == 0.0 || gl.norm_sqr() == 0.0 {
                    continue;
                }
                acc += self.eval(k as f64 * dxi, l as f64 * dxi) * fk * gl;
            }
            out[idx(p)] = acc * (dxi / (2.0 * PI));
        }
        inverse_transform(&SampledFunction::new(spec, out, Space::Frequency)?)
    }
}

impl BilinearMultiplier for SymbolDecomposition {
    fn apply(&self, f: &SampledFunction, g: &SampledFunction) -> Result<SampledFunction> {
        let spec = check_pair(f, g)?;
        if spec.dim != 1 {
            return Err(Error::InvalidParameter("decompositions are one-dimensional".into()));
        }
        spec.check_band(2f64.powi(self.j_max + 1))?;
        let fh = forward_transform(f)?;
        let gh = forward_transform(g)?;
        let mut order: Vec<(i32, i32)> = (-self.a_max..=self.a_max)
            .flat_map(|a| (-self.a_max..=self.a_max).map(move |b| (a, b)))
            .collect();
        order.sort_by_key(|&(a, b)| (a.abs() + b.abs(), a, b));
        let mut blocks: Vec<&Block> = self.blocks.iter().collect();
        blocks.sort_by_key(|b| (b.level, b.part, b.xi.scale(), b.eta.scale()));
        let mut out = vec![Complex64::new(0.0, 0.0); spec.size()];
        for blk in blocks {
            let modes = |hat: &SampledFunction, w: Window| -> Result<Vec<SampledFunction>> {
                let scale = 2f64.powi(-w.scale());
                (-self.a_max..=self.a_max)
                    .map(|a| {
                        let m = SampledFunction::frequency(spec, |[x, _]| {
                            Complex64::from_polar(w.eval(x.abs()), a as f64 * x * scale)
                        });
                        inverse_transform(&hat.mul(&m)?)
                    })
                    .collect()
            };
            let fa = modes(&fh, blk.xi)?;
            let gb = modes(&gh, blk.eta)?;
            for &(a, b) in &order {
                let c = blk.coefficient(self.a_max, a, b);
                let (x, y) = (&fa[(a + self.a_max) as usize], &gb[(b + self.a_max) as usize]);
                for ((o, u), v) in out.iter_mut().zip(x.values()).zip(y.values()) {
                    *o += c * u * v;
                }
            }
        }
        SampledFunction::new(spec, out, Space::Physical)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrilinearResult {
    pub j: i32,
    /// `∫ S_j f · S_j g · S_j h dx`
    pub value: Complex64,
    /// `‖S_j f · S_j g · S_j h‖_{L¹}`
    pub l1_product_norm: f64,
    pub regions: Vec<(Region, f64)>,
    /// `∫ e^{i|D|^s}(S_j f · S_j g) · h dx`, equal to `value` under the
    /// plateau condition on `θ₃`.
    pub pairing_value: Complex64,
    pub sup_f: f64,
    pub sup_g: f64,
    pub l1_h: f64,
}

/// Ball with plateau `1.1 (R₁ + R₂)`.
pub fn default_theta3(theta1: &Localizer, theta2: &Localizer) -> Localizer {
    let p = 1.1 * (theta1.support_radius() + theta2.support_radius());
    Localizer::Ball { plateau: p, support: 1.25 * p }
}

/// Checks that the plateau of `θ₃` contains `supp θ₁ + supp θ₂` (radially).
pub fn check_plateau_coverage(theta1: &Localizer, theta2: &Localizer, theta3: &Localizer) -> Result<()> {
    let (a1, b1) = (theta1.inner_support(), theta1.support_radius());
    let (a2, b2) = (theta2.inner_support(), theta2.support_radius());
    let inner = (a1 - b2).max(a2 - b1).max(0.0);
    let outer = b1 + b2;
    match theta3.plateau() {
        Some((lo, hi)) if lo <= inner && hi >= outer => Ok(()),
        _ => Err(Error::Precondition(format!(
            "plateau of θ₃ must cover {inner} <= |ζ| <= {outer}"
        ))),
    }
}

/// `∫ S_j f · S_j g · S_j h` with `S_j` built from `θ₁, θ₂, θ₃` in turn.
#[allow(clippy::too_many_arguments)]
pub fn trilinear_form(
    phase: &PhaseSpec,
    thetas: [&Localizer; 3],
    j: i32,
    f: &SampledFunction,
    g: &SampledFunction,
    h: &SampledFunction,
    regions: &[Region],
) -> Result<TrilinearResult> {
    let [t1, t2, t3] = thetas;
    check_plateau_coverage(t1, t2, t3)?;
    let spec = check_pair(f, g)?;
    check_pair(f, h)?;
    let scale = 2f64.powi(j);
    spec.check_band(t3.support_radius().max(t1.support_radius() + t2.support_radius()) * scale)?;
    let apply = |x: &SampledFunction, t: &Localizer| -> Result<SampledFunction> {
        inverse_transform(&forward_transform(x)?.mul(&multiplier(phase, t, j, &spec))?)
    };
    let sf = apply(f, t1)?;
    let sg = apply(g, t2)?;
    let sh = apply(h, t3)?;
    let pair = sf.mul(&sg)?;
    let product = pair.mul(&sh)?;
    let value = product.integral();
    let l1 = norm(&product, Norm::L1, &Region::Whole)?;
    let regions = regions
        .iter()
        .map(|r| Ok((*r, norm(&product, Norm::L1, r)?)))
        .collect::<Result<Vec<_>>>()?;
    let phased = inverse_transform(
        &forward_transform(&pair)?.mul(&SampledFunction::radial_multiplier(spec, |r| phase.factor(r)))?,
    )?;
    let pairing_value = phased.mul(h)?.integral();
    Ok(TrilinearResult {
        j,
        value,
        l1_product_norm: l1,
        regions,
        pairing_value,
        sup_f: sf.max_abs(),
        sup_g: sg.max_abs(),
        l1_h: norm(&sh, Norm::L1, &Region::Whole)?,
    })
}
