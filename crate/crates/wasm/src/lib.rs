//! Browser bindings for three interactive views: the dyadic kernel `|K_j|`,
//! the critical order curve `s ↦ m_s`, and the radial localizer profiles.
//!
//! Each view has a plain Rust function (tested natively) and a thin
//! `wasm_bindgen` wrapper that turns errors into JS exceptions.

use oscm::experiments::critical_order;
use oscm::grid::{norm, Norm, Region};
use oscm::oscillatory::{auto_grid, compute_kernel, PhaseSpec};
use oscm::partition::{make_localizer, Localizer, LocalizerKind};
use wasm_bindgen::prelude::*;

/// Largest grid the page will request; keeps one kernel under ~50 ms.
pub const MAX_POINTS: usize = 1 << 18;

pub fn localizer_by_name(name: &str) -> Result<Localizer, String> {
    let kind = match name {
        "theta_annular" => LocalizerKind::ThetaAnnular,
        "phi_ball" => LocalizerKind::PhiBall,
        "psi_narrow" => LocalizerKind::PsiNarrow,
        "phi" => return Ok(Localizer::PHI),
        other => return Err(format!("unknown localizer {other:?}")),
    };
    make_localizer(kind).map_err(|e| e.to_string())
}

/// `|K_j|` on the right half-axis, decimated to at most `plot_points` samples
/// by taking the maximum over each bucket, so oscillation peaks survive.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct KernelView {
    x: Vec<f64>,
    magnitude: Vec<f64>,
    l1: f64,
    linf: f64,
    l2: f64,
    half_width: f64,
    points: usize,
}

#[wasm_bindgen]
impl KernelView {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn magnitude(&self) -> Vec<f64> {
        self.magnitude.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn l1(&self) -> f64 {
        self.l1
    }
    #[wasm_bindgen(getter)]
    pub fn linf(&self) -> f64 {
        self.linf
    }
    #[wasm_bindgen(getter)]
    pub fn l2(&self) -> f64 {
        self.l2
    }
    #[wasm_bindgen(getter)]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    #[wasm_bindgen(getter)]
    pub fn points(&self) -> usize {
        self.points
    }
}

pub fn kernel_view(s: f64, j: i32, localizer: &str, plot_points: usize) -> Result<KernelView, String> {
    let theta = localizer_by_name(localizer)?;
    let phase = PhaseSpec::positive(s).map_err(|e| e.to_string())?;
    let grid = auto_grid(1, &phase, &theta, j, 8.0).map_err(|e| e.to_string())?;
    if grid.points > MAX_POINTS {
        return Err(format!("level j = {j} needs {} grid points; the demo stops at {MAX_POINTS}", grid.points));
    }
    let record = compute_kernel(&phase, &theta, j, &grid).map_err(|e| e.to_string())?;
    let half: Vec<(f64, f64)> = (grid.origin()..grid.points)
        .map(|i| (grid.coord(i), record.samples.values()[i].norm()))
        .collect();
    let bucket = half.len().div_ceil(plot_points.max(1));
    let (x, magnitude) = half
        .chunks(bucket)
        .map(|c| (c[0].0, c.iter().fold(0.0f64, |m, p| m.max(p.1))))
        .unzip();
    Ok(KernelView {
        x,
        magnitude,
        l1: record.norms.l1,
        linf: record.norms.linf,
        l2: record.norms.l2,
        half_width: grid.half_width,
        points: grid.points,
    })
}

/// `(s, m_s)` pairs, flattened; orders too close to 1 become NaN gaps.
pub fn critical_order_curve(n: usize, s_min: f64, s_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    if !(s_min > 0.0 && s_max > s_min) || samples < 2 {
        return Err("need 0 < s_min < s_max and at least two samples".into());
    }
    critical_order(n, 0.5).map_err(|e| e.to_string())?;
    let step = (s_max - s_min) / (samples - 1) as f64;
    Ok((0..samples)
        .flat_map(|k| {
            let s = s_min + k as f64 * step;
            [s, critical_order(n, s).map_or(f64::NAN, |c| c.m_s)]
        })
        .collect())
}

/// Localizer values on `[0, r_max]`; `r_max` defaults to the support radius
/// plus 25% when not positive.
pub fn localizer_profile(name: &str, r_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    let theta = localizer_by_name(name)?;
    let r_max = if r_max > 0.0 { r_max } else { 1.25 * theta.support_radius() };
    let samples = samples.max(2);
    Ok((0..samples).map(|k| theta.eval(r_max * k as f64 / (samples - 1) as f64)).collect())
}

/// `‖K_j‖_{L^p(|x| <= radius)}` for `p` in {1, 2, ∞}; used by the hover readout.
pub fn local_norm(s: f64, j: i32, localizer: &str, p: f64, radius: f64) -> Result<f64, String> {
    let theta = localizer_by_name(localizer)?;
    let phase = PhaseSpec::positive(s).map_err(|e| e.to_string())?;
    let grid = auto_grid(1, &phase, &theta, j, 8.0).map_err(|e| e.to_string())?;
    if grid.points > MAX_POINTS {
        return Err(format!("level j = {j} is too fine for the demo"));
    }
    let record = compute_kernel(&phase, &theta, j, &grid).map_err(|e| e.to_string())?;
    let p = match p {
        p if p == 1.0 => Norm::L1,
        p if p == 2.0 => Norm::L2,
        p if p.is_infinite() => Norm::Linf,
        _ => return Err("p must be 1, 2 or Infinity".into()),
    };
    norm(&record.samples, p, &Region::ball(radius)).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = kernelView)]
pub fn kernel_view_js(s: f64, j: i32, localizer: &str, plot_points: usize) -> Result<KernelView, JsError> {
    kernel_view(s, j, localizer, plot_points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = criticalOrderCurve)]
pub fn critical_order_curve_js(n: usize, s_min: f64, s_max: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    critical_order_curve(n, s_min, s_max, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = localizerProfile)]
pub fn localizer_profile_js(name: &str, r_max: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    localizer_profile(name, r_max, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = localNorm)]
pub fn local_norm_js(s: f64, j: i32, localizer: &str, p: f64, radius: f64) -> Result<f64, JsError> {
    local_norm(s, j, localizer, p, radius).map_err(|e| JsError::new(&e))
}
