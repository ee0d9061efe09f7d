//! Shared FFT plans.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Direction {
    Forward,
    Inverse,
}

type PlanCache = Mutex<HashMap<(usize, Direction), Arc<dyn Fft<f64>>>>;

fn cache() -> &'static PlanCache {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn plan(len: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    let mut guard = cache().lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry((len, dir))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            match dir {
                Direction::Forward => planner.plan_fft_forward(len),
                Direction::Inverse => planner.plan_fft_inverse(len),
            }
        })
        .clone()
}

/// Unnormalized forward DFT, applied to consecutive chunks of `len`.
pub(crate) fn forward(buf: &mut [Complex64], len: usize) {
    plan(len, Direction::Forward).process(buf);
}

/// Unnormalized inverse DFT, applied to consecutive chunks of `len`.
pub(crate) fn inverse(buf: &mut [Complex64], len: usize) {
    plan(len, Direction::Inverse).process(buf);
}
