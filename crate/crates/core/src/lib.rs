//! Radiative decay of a two-level atom, and of the transmon-cavity polariton
//! that realizes it, in broadband squeezed vacuum.
//!
//! Units: time in µs, rates in µs⁻¹, detunings and modulation frequencies in
//! MHz (ordinary frequency), circuit energies in GHz. A frequency becomes an
//! angular rate only through [`mhz_to_rad_per_us`].

// Negated comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blochdyn;
pub mod error;
pub mod estimation;
pub mod numerics;
pub mod polariton;
pub mod protocols;
pub mod reservoir;

pub use error::{Error, Result};

use std::f64::consts::TAU;

/// Ordinary frequency in MHz to angular rate in rad/µs.
#[inline]
pub fn mhz_to_rad_per_us(f_mhz: f64) -> f64 {
    TAU * f_mhz
}

/// Angular rate in rad/µs to ordinary frequency in MHz.
#[inline]
pub fn rad_per_us_to_mhz(w: f64) -> f64 {
    w / TAU
}

/// Format a value with 9 significant digits, as used by every CSV writer.
pub fn fmt_sig9(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}
