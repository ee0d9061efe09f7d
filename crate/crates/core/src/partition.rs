//! Smooth cutoffs: the flat-mollifier step, ball and annulus localizers, and
//! the dyadic partition of unity built from them.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::quad::{gauss_legendre, integrate};

const KNOTS: usize = 1024;

fn mollifier(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        (-1.0 / (u * (1.0 - u))).exp()
    }
}

/// Normalized primitive of `exp(-1/(t(1-t)))` on `[0, 1]`: a `C^∞` step that
/// is identically 0 for `t <= 0` and 1 for `t >= 1`.
///
/// Values come from a table of cumulative cell integrals plus a short
/// Gauss–Legendre integral from the nearest knot, so the result is smooth to
/// quadrature precision rather than interpolated.
#[derive(Debug, Clone)]
pub struct BumpProfile {
    cumulative: Vec<f64>,
    total: f64,
    rule: (Vec<f64>, Vec<f64>),
    pub tolerance: f64,
}

impl BumpProfile {
    pub fn new() -> Self {
        let cell_rule = gauss_legendre(20);
        let h = 1.0 / KNOTS as f64;
        let mut cumulative = Vec::with_capacity(KNOTS + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for i in 0..KNOTS {
            let a = i as f64 * h;
            acc += integrate(&cell_rule, a, a + h, mollifier);
            cumulative.push(acc);
        }
        Self { cumulative, total: acc, rule: gauss_legendre(12), tolerance: 1e-12 }
    }

    /// Process-wide instance.
    pub fn standard() -> &'static BumpProfile {
        static PROFILE: OnceLock<BumpProfile> = OnceLock::new();
        PROFILE.get_or_init(BumpProfile::new)
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        if t > 0.5 {
            return 1.0 - self.eval(1.0 - t);
        }
        let i = ((t * KNOTS as f64) as usize).min(KNOTS - 1);
        let a = i as f64 / KNOTS as f64;
        let part = integrate(&self.rule, a, t, mollifier);
        (self.cumulative[i] + part) / self.total
    }

    /// Checks endpoint values, monotonicity and bounded finite differences up
    /// to order 8.
    pub fn verify(&self) -> Result<()> {
        if self.eval(0.0) != 0.0 || self.eval(1.0) != 1.0 {
            return Err(Error::InvalidParameter("profile endpoints must be 0 and 1".into()));
        }
        let h = 1.0 / 512.0;
        let samples: Vec<f64> = (0..=512).map(|i| self.eval(i as f64 * h)).collect();
        if samples.windows(2).any(|w| w[1] < w[0] - self.tolerance) {
            return Err(Error::InvalidParameter("profile is not monotone".into()));
        }
        if (self.eval(0.5) - 0.5).abs() > self.tolerance {
            return Err(Error::InvalidParameter("profile is not symmetric about 1/2".into()));
        }
        for order in 1..=8 {
            let d = max_central_difference(|t| self.eval(t), order, -0.25, 1.25, 1.0 / 64.0, 1.0 / 256.0);
            if !d.is_finite() {
                return Err(Error::InvalidParameter(format!("order-{order} differences not finite")));
            }
        }
        Ok(())
    }
}

impl Default for BumpProfile {
    fn default() -> Self {
        Self::new()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Second-order central difference `δ_h^k f(x) / h^k`.
pub(crate) fn central_difference<F: Fn(f64) -> f64>(f: &F, order: usize, x: f64, h: f64) -> f64 {
    if order == 0 {
        return f(x);
    }
    let half = order as f64 / 2.0;
    let sum: f64 = (0..=order)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(order, i) * f(x + (half - i as f64) * h)
        })
        .sum();
    sum / h.powi(order as i32)
}

fn max_central_difference<F: Fn(f64) -> f64>(f: F, order: usize, a: f64, b: f64, spacing: f64, h: f64) -> f64 {
    let n = ((b - a) / spacing).round() as usize;
    (0..=n)
        .map(|i| central_difference(&f, order, a + i as f64 * spacing, h).abs())
        .fold(0.0, f64::max)
}

/// A smooth radial cutoff, evaluated as a function of `|ξ|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Localizer {
    /// 1 on `|ξ| <= plateau`, 0 on `|ξ| >= support`.
    Ball { plateau: f64, support: f64 },
    /// 1 on `inner_plateau <= |ξ| <= outer_plateau`, 0 outside
    /// `(inner_support, outer_support)`.
    Annulus {
        inner_support: f64,
        inner_plateau: f64,
        outer_plateau: f64,
        outer_support: f64,
    },
    /// `φ(ξ) - φ(2ξ)` for the partition cutoff `φ`.
    DyadicPiece,
    /// Scalar multiple of another localizer.
    Scaled { factor: f64, base: Base },
    Zero,
}

/// Localizers that can sit under [`Localizer::Scaled`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Base {
    Ball { plateau: f64, support: f64 },
    Annulus {
        inner_support: f64,
        inner_plateau: f64,
        outer_plateau: f64,
        outer_support: f64,
    },
}

impl From<Base> for Localizer {
    fn from(b: Base) -> Self {
        match b {
            Base::Ball { plateau, support } => Localizer::Ball { plateau, support },
            Base::Annulus { inner_support, inner_plateau, outer_plateau, outer_support } => {
                Localizer::Annulus { inner_support, inner_plateau, outer_plateau, outer_support }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalizerKind {
    /// Plateau `[1/8, 8]`, support `[1/10, 10]`.
    ThetaAnnular,
    /// Plateau `|ξ| <= 2`, support `|ξ| <= 3`.
    PhiBall,
    /// Plateau `[2/3, 3/2]`, support `[1/2, 2]`.
    PsiNarrow,
    /// Explicit radii; `plateau[0] == support[0] == 0` gives a ball.
    Custom { plateau: [f64; 2], support: [f64; 2] },
}

/// Builds a named or custom localizer and checks its radii.
pub fn make_localizer(kind: LocalizerKind) -> Result<Localizer> {
    let loc = match kind {
        LocalizerKind::ThetaAnnular => Localizer::Annulus {
            inner_support: 0.1,
            inner_plateau: 0.125,
            outer_plateau: 8.0,
            outer_support: 10.0,
        },
        LocalizerKind::PhiBall => Localizer::Ball { plateau: 2.0, support: 3.0 },
        LocalizerKind::PsiNarrow => Localizer::Annulus {
            inner_support: 0.5,
            inner_plateau: 2.0 / 3.0,
            outer_plateau: 1.5,
            outer_support: 2.0,
        },
        LocalizerKind::Custom { plateau, support } => {
            if plateau[0] == 0.0 && support[0] == 0.0 {
                Localizer::Ball { plateau: plateau[1], support: support[1] }
            } else {
                Localizer::Annulus {
                    inner_support: support[0],
                    inner_plateau: plateau[0],
                    outer_plateau: plateau[1],
                    outer_support: support[1],
                }
            }
        }
    };
    loc.validate()?;
    Ok(loc)
}

impl Localizer {
    /// The partition cutoff `φ`: 1 on `|ξ| <= 1`, 0 on `|ξ| >= 2`.
    pub const PHI: Localizer = Localizer::Ball { plateau: 1.0, support: 2.0 };

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            Localizer::Ball { plateau, support } => {
                if !(plateau > 0.0 && plateau < support && support.is_finite()) {
                    return bad(format!("ball needs 0 < plateau < support, got {plateau}, {support}"));
                }
            }
            Localizer::Annulus { inner_support, inner_plateau, outer_plateau, outer_support } => {
                let ok = inner_support > 0.0
                    && inner_support < inner_plateau
                    && inner_plateau <= outer_plateau
                    && outer_plateau < outer_support
                    && outer_support.is_finite();
                if !ok {
                    return bad(format!(
                        "annulus radii must increase: {inner_support}, {inner_plateau}, {outer_plateau}, {outer_support}"
                    ));
                }
            }
            Localizer::Scaled { factor, base } => {
                if !factor.is_finite() {
                    return bad(format!("scale factor {factor}"));
                }
                Localizer::from(base).validate()?;
            }
            Localizer::DyadicPiece | Localizer::Zero => {}
        }
        Ok(())
    }

    pub fn eval(&self, r: f64) -> f64 {
        let s = BumpProfile::standard();
        match *self {
            Localizer::Ball { plateau, support } => 1.0 - s.eval((r - plateau) / (support - plateau)),
            Localizer::Annulus { inner_support, inner_plateau, outer_plateau, outer_support } => {
                s.eval((r - inner_support) / (inner_plateau - inner_support))
                    * (1.0 - s.eval((r - outer_plateau) / (outer_support - outer_plateau)))
            }
            Localizer::DyadicPiece => Self::PHI.eval(r) - Self::PHI.eval(2.0 * r),
            Localizer::Scaled { factor, base } => factor * Localizer::from(base).eval(r),
            Localizer::Zero => 0.0,
        }
    }

    /// Value at `2^{-j} r`.
    pub fn dilated(&self, j: i32, r: f64) -> f64 {
        self.eval(r * 2f64.powi(-j))
    }

    /// Radius outside which the localizer vanishes.
    pub fn support_radius(&self) -> f64 {
        match *self {
            Localizer::Ball { support, .. } => support,
            Localizer::Annulus { outer_support, .. } => outer_support,
            Localizer::DyadicPiece => 2.0,
            Localizer::Scaled { base, .. } => Localizer::from(base).support_radius(),
            Localizer::Zero => 0.0,
        }
    }

    /// Radius inside which the localizer vanishes (0 for balls).
    pub fn inner_support(&self) -> f64 {
        match *self {
            Localizer::Ball { .. } | Localizer::Zero => 0.0,
            Localizer::Annulus { inner_support, .. } => inner_support,
            Localizer::DyadicPiece => 0.5,
            Localizer::Scaled { base, .. } => Localizer::from(base).inner_support(),
        }
    }

    /// Closed radial interval on which the localizer equals its peak value,
    /// if any.
    pub fn plateau(&self) -> Option<(f64, f64)> {
        match *self {
            Localizer::Ball { plateau, .. } => Some((0.0, plateau)),
            Localizer::Annulus { inner_plateau, outer_plateau, .. } => Some((inner_plateau, outer_plateau)),
            Localizer::DyadicPiece | Localizer::Zero => None,
            Localizer::Scaled { base, .. } => Localizer::from(base).plateau(),
        }
    }

    pub fn is_ball(&self) -> bool {
        self.inner_support() == 0.0 && !matches!(self, Localizer::Zero)
    }
}

/// The dyadic partition `φ`, `ψ = φ - φ(2·)`, `ψ_0 = φ`, `ψ_j = ψ(2^{-j}·)`,
/// `φ_j = φ(2^{-j}·)` and `ζ = 1 - φ`.
#[derive(Debug, Clone, Copy)]
pub struct PartitionOfUnity {
    phi: Localizer,
}

impl PartitionOfUnity {
    pub fn phi(&self, r: f64) -> f64 {
        self.phi.eval(r)
    }

    pub fn psi(&self, r: f64) -> f64 {
        self.phi.eval(r) - self.phi.eval(2.0 * r)
    }

    pub fn psi_j(&self, j: u32, r: f64) -> f64 {
        if j == 0 {
            self.phi(r)
        } else {
            self.psi(r * 2f64.powi(-(j as i32)))
        }
    }

    pub fn varphi_j(&self, j: u32, r: f64) -> f64 {
        self.phi(r * 2f64.powi(-(j as i32)))
    }

    pub fn zeta(&self, r: f64) -> f64 {
        1.0 - self.phi(r)
    }

    /// `ψ_j` as a localizer in the unscaled variable (`j >= 1`), or `φ`.
    pub fn piece(&self, j: u32) -> Localizer {
        if j == 0 {
            self.phi
        } else {
            Localizer::DyadicPiece
        }
    }
}

/// Builds the partition and checks its support and telescoping properties on
/// a sampling grid.
pub fn build_partition(profile: &BumpProfile) -> Result<PartitionOfUnity> {
    profile.verify()?;
    let pou = PartitionOfUnity { phi: Localizer::PHI };
    let tol = 1e-10;
    let fail = |m: String| Err(Error::InvalidParameter(format!("partition check failed: {m}")));
    for i in 0..=4000 {
        let r = i as f64 * 1e-3;
        if r <= 1.0 && (pou.phi(r) - 1.0).abs() > tol {
            return fail(format!("phi({r}) != 1"));
        }
        if r >= 2.0 && pou.phi(r).abs() > tol {
            return fail(format!("phi({r}) != 0"));
        }
        if !(0.5..=2.0).contains(&r) && pou.psi(r).abs() > tol {
            return fail(format!("psi({r}) != 0"));
        }
        if (pou.zeta(r) + pou.phi(r) - 1.0).abs() > tol {
            return fail(format!("zeta + phi != 1 at {r}"));
        }
    }
    for k in 0..=10u32 {
        for i in 0..=2000 {
            let r = i as f64 * 2f64.powi(k as i32 + 1) / 2000.0;
            let sum: f64 = (0..=k).map(|j| pou.psi_j(j, r)).sum();
            if (sum - pou.varphi_j(k, r)).abs() > tol {
                return fail(format!("telescoping at k={k}, r={r}"));
            }
        }
    }
    Ok(pou)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMethod {
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CNormEstimate {
    pub order: usize,
    pub value: f64,
    pub method: DerivativeMethod,
}

/// `max_{|α| <= order} sup |∂^α θ|` over the points of `grid`, from central
/// differences with step `Δx/4` (second-order accurate).
pub fn c_norm<F>(theta: F, order: usize, grid: &GridSpec) -> Result<CNormEstimate>
where
    F: Fn([f64; 2]) -> f64,
{
    if order > 8 {
        return Err(Error::InvalidParameter(format!("C^{order} norm: orders above 8 are not certified")));
    }
    let h = grid.dx() / 4.0;
    let mut best = 0.0f64;
    for i in 0..grid.size() {
        let p = grid.point(i);
        for total in 0..=order {
            let splits: Vec<(usize, usize)> = if grid.dim == 1 {
                vec![(total, 0)]
            } else {
                (0..=total).map(|a| (a, total - a)).collect()
            };
            for (a, b) in splits {
                let d = mixed_difference(&theta, p, a, b, h);
                best = best.max(d.abs());
            }
        }
    }
    Ok(CNormEstimate { order, value: best, method: DerivativeMethod::FiniteDifference })
}

fn mixed_difference<F: Fn([f64; 2]) -> f64>(f: &F, p: [f64; 2], a: usize, b: usize, h: f64) -> f64 {
    let along_y = |x: f64| central_difference(&|y: f64| f([x, p[1] + y]), b, 0.0, h);
    central_difference(&|x: f64| along_y(p[0] + x), a, 0.0, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pou() -> PartitionOfUnity {
        build_partition(BumpProfile::standard()).unwrap()
    }

    #[test]
    fn profile_matches_direct_quadrature() {
        // independent oracle: composite Simpson on a fine mesh
        let simpson = |t: f64| {
            let n = 20000;
            let h = t / n as f64;
            let mut acc = mollifier(0.0) + mollifier(t);
            for i in 1..n {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * mollifier(i as f64 * h);
            }
            acc * h / 3.0
        };
        let z = simpson(1.0);
        let p = BumpProfile::standard();
        for t in [0.05, 0.2, 0.37, 0.5, 0.61, 0.9] {
            assert!((p.eval(t) - simpson(t) / z).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn profile_is_symmetric_and_flat() {
        let p = BumpProfile::standard();
        assert_eq!(p.eval(-1.0), 0.0);
        assert_eq!(p.eval(2.0), 1.0);
        for t in [0.01, 0.1, 0.3, 0.45] {
            assert!((p.eval(t) + p.eval(1.0 - t) - 1.0).abs() < 1e-14);
        }
        assert!(p.eval(0.01) < 1e-40);
        p.verify().unwrap();
    }

    #[test]
    fn partition_examples() {
        let pou = pou();
        assert_eq!(pou.phi(0.5), 1.0);
        let sum5: f64 = (0..=5).map(|j| pou.psi_j(j, 20.0)).sum();
        assert!((sum5 - pou.varphi_j(5, 20.0)).abs() < 1e-12);
        assert_eq!(pou.varphi_j(5, 30.0), 1.0);
        // 20 lies inside the plateau of φ_5 as well
        assert!((sum5 - 1.0).abs() < 1e-12);
        assert_eq!(pou.psi_j(3, 100.0), 0.0);
    }

    #[test]
    fn partition_sums_to_one() {
        let pou = pou();
        for i in 0..500 {
            let r = 0.013 * i as f64 * 7.3;
            let total: f64 = pou.phi(r) + (1..=12).map(|j| pou.psi_j(j, r)).sum::<f64>();
            assert!((total - 1.0).abs() < 1e-12, "r={r}");
        }
    }

    #[test]
    fn psi_j_support() {
        let pou = pou();
        for j in 1..=8u32 {
            let lo = 2f64.powi(j as i32 - 1);
            let hi = 2f64.powi(j as i32 + 1);
            for i in 0..400 {
                let r = i as f64 * hi * 3.0 / 400.0;
                if r < lo || r > hi {
                    assert_eq!(pou.psi_j(j, r), 0.0, "j={j}, r={r}");
                }
            }
        }
    }

    #[test]
    fn named_localizers() {
        let theta = make_localizer(LocalizerKind::ThetaAnnular).unwrap();
        assert_eq!(theta.eval(1.0), 1.0);
        assert_eq!(theta.eval(0.05), 0.0);
        assert_eq!(theta.eval(10.5), 0.0);
        let phi = make_localizer(LocalizerKind::PhiBall).unwrap();
        assert_eq!(phi.eval(0.0), 1.0);
        assert_eq!(phi.eval(3.5), 0.0);
        let psi = make_localizer(LocalizerKind::PsiNarrow).unwrap();
        for i in 0..=300 {
            let r = i as f64 * 0.01;
            if !(0.5..=2.0).contains(&r) {
                assert_eq!(psi.eval(r), 0.0);
            }
            if (2.0 / 3.0..=1.5).contains(&r) {
                assert!(psi.eval(r) >= 0.5);
            }
        }
    }

    #[test]
    fn inverted_radii_rejected() {
        let bad = LocalizerKind::Custom { plateau: [2.0, 1.0], support: [0.5, 3.0] };
        assert!(make_localizer(bad).is_err());
        let bad = LocalizerKind::Custom { plateau: [0.0, 3.0], support: [0.0, 2.0] };
        assert!(make_localizer(bad).is_err());
        let ok = LocalizerKind::Custom { plateau: [0.0, 1.0], support: [0.0, 2.0] };
        assert_eq!(make_localizer(ok).unwrap(), Localizer::PHI);
    }

    #[test]
    fn c_norm_examples() {
        let theta = make_localizer(LocalizerKind::ThetaAnnular).unwrap();
        // restricted to the plateau the function is constant
        let plateau = GridSpec::new(1, 1.0, 64).unwrap();
        for order in 0..=4 {
            let c = c_norm(|[x, _]| theta.eval((x + 3.0).abs()), order, &plateau).unwrap();
            assert!((c.value - 1.0).abs() < 1e-9, "order {order}: {}", c.value);
        }
        assert!(c_norm(|_| 1.0, 9, &plateau).is_err());

        let grid = GridSpec::new(1, 4.0, 256).unwrap();
        let base = c_norm(|[x, _]| Localizer::PHI.eval(x.abs()), 3, &grid).unwrap();
        let dilated = c_norm(|[x, _]| Localizer::PHI.dilated(1, x.abs()), 3, &grid).unwrap();
        assert!(dilated.value <= base.value * (1.0 + 1e-3));
        let lower = c_norm(|[x, _]| Localizer::PHI.eval(x.abs()), 2, &grid).unwrap();
        assert!(lower.value <= base.value);
    }

    #[test]
    fn radial_in_two_dimensions() {
        let phi = make_localizer(LocalizerKind::PhiBall).unwrap();
        for (i, angle) in [0.3f64, 1.1, 2.7, 4.0].iter().enumerate() {
            let r = 1.5 + 0.4 * i as f64;
            let v = phi.eval((r * angle.cos()).hypot(r * angle.sin()));
            assert!((v - phi.eval(r)).abs() < 1e-14);
        }
    }
}
