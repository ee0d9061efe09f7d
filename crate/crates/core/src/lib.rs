//! Oscillatory bilinear Fourier multipliers with phase `|ξ|^s + |η|^s + |ξ+η|^s`
//! on sampled grids, together with the numerical experiments that measure
//! their kernel estimates, norm growth and sharpness.

pub mod atoms;
pub mod bilinear;
pub mod error;
pub mod experiments;
mod fft;
pub mod grid;
pub mod io;
pub mod oscillatory;
pub mod partition;
pub mod quad;

pub use error::{Error, Result};
pub use grid::{ExponentFit, GridSpec, Norm, Region, SampledFunction, Space};
