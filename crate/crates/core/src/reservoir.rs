//! Broadband squeezed vacuum: moments, physicality, loss, quadrature
//! variances and the Gaussian Wigner distribution.
//!
//! Variances follow the convention where vacuum has `σ_I² = σ_Q² = 1`, and
//! the squeezed quadrature is always `Q`. Only `|M|` enters here; the
//! squeezing phase is a dynamical quantity handled in [`crate::blochdyn`].

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fmt_sig9;

const PHYSICALITY_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezedReservoir {
    n: f64,
    m: C64,
    omega0_ghz: f64,
    bandwidth_mhz: f64,
    n_th: f64,
}

impl SqueezedReservoir {
    pub fn new(n: f64, m: C64, omega0_ghz: f64, bandwidth_mhz: f64, n_th: f64) -> Result<Self> {
        if !(n >= 0.0) || !n.is_finite() {
            return Err(invalid(format!("photon number N must be finite and >= 0, got {n}")));
        }
        if !(n_th >= 0.0) || !n_th.is_finite() {
            return Err(invalid(format!("thermal floor N_th must be finite and >= 0, got {n_th}")));
        }
        if !(bandwidth_mhz > 0.0) {
            return Err(invalid(format!("bandwidth must be positive, got {bandwidth_mhz} MHz")));
        }
        if !(m.re.is_finite() && m.im.is_finite()) || !omega0_ghz.is_finite() {
            return Err(invalid("M and omega0 must be finite"));
        }
        if !is_physical(n, m.norm()) {
            return Err(invalid(format!(
                "|M|^2 = {} exceeds N(N+1) = {}",
                m.norm_sqr(),
                n * (n + 1.0)
            )));
        }
        Ok(Self { n, m, omega0_ghz, bandwidth_mhz, n_th })
    }

    /// Reservoir with real squeezing moment and no thermal floor.
    pub fn real(n: f64, m: f64, omega0_ghz: f64, bandwidth_mhz: f64) -> Result<Self> {
        Self::new(n, C64::new(m, 0.0), omega0_ghz, bandwidth_mhz, 0.0)
    }

    pub fn vacuum(omega0_ghz: f64, bandwidth_mhz: f64) -> Result<Self> {
        Self::real(0.0, 0.0, omega0_ghz, bandwidth_mhz)
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn m(&self) -> C64 {
        self.m
    }

    pub fn m_abs(&self) -> f64 {
        self.m.norm()
    }

    pub fn omega0_ghz(&self) -> f64 {
        self.omega0_ghz
    }

    pub fn bandwidth_mhz(&self) -> f64 {
        self.bandwidth_mhz
    }

    pub fn n_th(&self) -> f64 {
        self.n_th
    }

    pub fn with_omega0(mut self, omega0_ghz: f64) -> Self {
        self.omega0_ghz = omega0_ghz;
        self
    }

    pub fn is_squeezed(&self) -> bool {
        self.m_abs() > self.n
    }
}

/// `|M|² ≤ N(N+1)` up to a small slack.
pub fn is_physical(n: f64, m_abs: f64) -> bool {
    m_abs * m_abs <= n * (n + 1.0) + PHYSICALITY_SLACK
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureVariances {
    pub sigma_i_sq: f64,
    pub sigma_q_sq: f64,
}

impl QuadratureVariances {
    pub fn new(sigma_i_sq: f64, sigma_q_sq: f64) -> Result<Self> {
        if !(sigma_i_sq > 0.0 && sigma_q_sq > 0.0) {
            return Err(invalid(format!(
                "quadrature variances must be positive, got ({sigma_i_sq}, {sigma_q_sq})"
            )));
        }
        if sigma_i_sq * sigma_q_sq < 1.0 - 1e-12 {
            return Err(invalid(format!(
                "variances ({sigma_i_sq}, {sigma_q_sq}) violate the uncertainty relation"
            )));
        }
        Ok(Self { sigma_i_sq, sigma_q_sq })
    }

    pub fn vacuum() -> Self {
        Self { sigma_i_sq: 1.0, sigma_q_sq: 1.0 }
    }

    /// Gaussian half widths `(σ_I, σ_Q)`.
    pub fn half_widths(&self) -> (f64, f64) {
        (self.sigma_i_sq.sqrt(), self.sigma_q_sq.sqrt())
    }

    pub fn product(&self) -> f64 {
        self.sigma_i_sq * self.sigma_q_sq
    }
}

/// `σ_I² = 2(N+|M|+½)`, `σ_Q² = 2(N−|M|+½)`.
pub fn variances(r: &SqueezedReservoir) -> QuadratureVariances {
    variances_from_moments(r.n(), r.m_abs()).expect("physical reservoir has valid variances")
}

/// Variances for raw moments, which may come from a measurement and so are
/// checked rather than trusted.
pub fn variances_from_moments(n: f64, m_abs: f64) -> Result<QuadratureVariances> {
    QuadratureVariances::new(2.0 * (n + m_abs + 0.5), 2.0 * (n - m_abs + 0.5))
}

/// Minimum-uncertainty squeezing moment `√(N(N+1))`.
pub fn ideal_m(n: f64) -> Result<f64> {
    if !(n >= 0.0) {
        return Err(invalid(format!("N must be >= 0, got {n}")));
    }
    Ok((n * (n + 1.0)).sqrt())
}

/// Beam-splitter loss with power transmission `eta`, mixing in an
/// environment with `env_n_th` thermal photons.
pub fn attenuate(r: &SqueezedReservoir, eta: f64) -> Result<SqueezedReservoir> {
    attenuate_with_floor(r, eta, 0.0)
}

pub fn attenuate_with_floor(r: &SqueezedReservoir, eta: f64, env_n_th: f64) -> Result<SqueezedReservoir> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid(format!("eta must lie in (0, 1], got {eta}")));
    }
    if !(env_n_th >= 0.0) {
        return Err(invalid(format!("environment floor must be >= 0, got {env_n_th}")));
    }
    SqueezedReservoir::new(
        eta * r.n + (1.0 - eta) * env_n_th,
        r.m * eta,
        r.omega0_ghz,
        r.bandwidth_mhz,
        r.n_th,
    )
}

/// `M − N` for an ideal source attenuated by `eta` to a measured `N`:
/// `√(N² + ηN) − N`.
pub fn eta_curve(n_measured: f64, eta: f64) -> Result<f64> {
    if !(n_measured >= 0.0) {
        return Err(invalid(format!("N must be >= 0, got {n_measured}")));
    }
    Ok((n_measured * n_measured + eta * n_measured).sqrt() - n_measured)
}

/// Thermal occupation from the equilibrium excited-state population,
/// inverting `p_e = N_th / (2 N_th + 1)`.
pub fn thermal_from_population(p_e: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&p_e) {
        return Err(invalid(format!("excited population must lie in [0, 0.5), got {p_e}")));
    }
    Ok(p_e / (1.0 - 2.0 * p_e))
}

/// Equilibrium excited-state population of a thermal bath.
pub fn population_from_thermal(n_th: f64) -> f64 {
    n_th / (2.0 * n_th + 1.0)
}

/// Rectangular sampling grid in the (I, Q) plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub i_range: (f64, f64),
    pub q_range: (f64, f64),
    pub n_i: usize,
    pub n_q: usize,
}

impl GridSpec {
    pub fn square(half_extent: f64, n: usize) -> Self {
        Self { i_range: (-half_extent, half_extent), q_range: (-half_extent, half_extent), n_i: n, n_q: n }
    }

    /// Grid covering `k` standard deviations along each axis.
    pub fn covering(v: &QuadratureVariances, k: f64, n_i: usize, n_q: usize) -> Self {
        // Standard deviation of I under the Wigner function is σ_I / 2.
        let (si, sq) = v.half_widths();
        Self { i_range: (-k * si / 2.0, k * si / 2.0), q_range: (-k * sq / 2.0, k * sq / 2.0), n_i, n_q }
    }

    fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (range.0 + range.1)];
        }
        let step = (range.1 - range.0) / (n - 1) as f64;
        (0..n).map(|k| range.0 + k as f64 * step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub i_axis: Vec<f64>,
    pub q_axis: Vec<f64>,
    /// `values[a][b]` is `W(i_axis[a], q_axis[b])`.
    pub values: Vec<Vec<f64>>,
}

impl WignerGrid {
    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        let wi = trapezoid_weights(&self.i_axis);
        let wq = trapezoid_weights(&self.q_axis);
        self.values
            .iter()
            .zip(&wi)
            .map(|(row, a)| a * row.iter().zip(&wq).map(|(w, b)| w * b).sum::<f64>())
            .sum()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV with a `#schema=` line, a header row of Q values and one row per
    /// I value; numbers carry 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("#schema=wigner/v1 rows=I cols=Q value=W\n");
        out.push_str("I\\Q");
        for q in &self.q_axis {
            out.push(',');
            out.push_str(&fmt_sig9(*q));
        }
        out.push('\n');
        for (i, row) in self.i_axis.iter().zip(&self.values) {
            out.push_str(&fmt_sig9(*i));
            for w in row {
                out.push(',');
                out.push_str(&fmt_sig9(*w));
            }
            out.push('\n');
        }
        out
    }
}

fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut w = vec![0.0; n];
    for k in 0..n - 1 {
        let h = 0.5 * (x[k + 1] - x[k]);
        w[k] += h;
        w[k + 1] += h;
    }
    w
}

/// Wigner value at one phase-space point.
pub fn wigner_at(v: &QuadratureVariances, i: f64, q: f64) -> f64 {
    2.0 / (PI * v.product().sqrt()) * (-2.0 * i * i / v.sigma_i_sq - 2.0 * q * q / v.sigma_q_sq).exp()
}

/// Samples the normalized Gaussian Wigner distribution; vacuum gives
/// `(2/π) exp(−2(I² + Q²))`.
pub fn wigner(v: &QuadratureVariances, grid: &GridSpec) -> Result<WignerGrid> {
    if grid.n_i == 0 || grid.n_q == 0 {
        return Err(invalid("Wigner grid needs at least one point per axis"));
    }
    if !(grid.i_range.0 <= grid.i_range.1 && grid.q_range.0 <= grid.q_range.1) {
        return Err(invalid("Wigner grid ranges must be ordered"));
    }
    let i_axis = GridSpec::axis(grid.i_range, grid.n_i);
    let q_axis = GridSpec::axis(grid.q_range, grid.n_q);
    let values = i_axis.iter().map(|&i| q_axis.iter().map(|&q| wigner_at(v, i, q)).collect()).collect();
    Ok(WignerGrid { i_axis, q_axis, values })
}
