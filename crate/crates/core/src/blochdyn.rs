//! Two-level dynamics in a broadband squeezed reservoir.
//!
//! Conventions: the ground state is `σz = +1`. Coherences are written
//! `c = sx + i·sy = 2σ₊`. On resonance the Bloch components obey
//!
//! ```text
//! ṡx = −(γ(N−M+½) + γφ) sx
//! ṡy = −(γ(N+M+½) + γφ) sy
//! ṡz = −γ(2N+1) sz + γ
//! ```
//!
//! With detuning δ = ω₀ − ω_q the squeezing correlations rotate at 2δ in the
//! qubit frame. In the frame co-rotating with the squeezing at δ the
//! polarizations obey a constant 2×2 linear system, which
//! [`polarization_propagator`] exponentiates in closed form. `σz` is taken as
//! detuning independent.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mhz_to_rad_per_us;
use crate::numerics::{solve_spd, ComplexMatrix};
use crate::reservoir::{is_physical, SqueezedReservoir};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl BlochState {
    pub const GROUND: BlochState = BlochState { sx: 0.0, sy: 0.0, sz: 1.0 };
    pub const EXCITED: BlochState = BlochState { sx: 0.0, sy: 0.0, sz: -1.0 };

    pub fn new(sx: f64, sy: f64, sz: f64) -> Self {
        Self { sx, sy, sz }
    }

    /// Pure state `|θ, φ⟩` with θ measured from the ground state:
    /// `(sin θ sin φ, sin θ cos φ, cos θ)`, so φ = π/2 is +x̂ and φ = π is −ŷ.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self { sx: theta.sin() * phi.sin(), sy: theta.sin() * phi.cos(), sz: theta.cos() }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.sx * self.sx + self.sy * self.sy + self.sz * self.sz
    }

    pub fn is_valid(&self) -> bool {
        self.norm_sqr() <= 1.0 + 1e-9
    }

    pub fn coherence(&self) -> C64 {
        C64::new(self.sx, self.sy)
    }

    pub fn from_coherence(c: C64, sz: f64) -> Self {
        Self { sx: c.re, sy: c.im, sz }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.sx, self.sy, self.sz]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { sx: a[0], sy: a[1], sz: a[2] }
    }

    pub fn distance(&self, other: &BlochState) -> f64 {
        ((self.sx - other.sx).powi(2) + (self.sy - other.sy).powi(2) + (self.sz - other.sz).powi(2)).sqrt()
    }
}

/// Coherent drive as a Rabi vector in rad/µs; it acts as the torque `Ω × s`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub omega_x: f64,
    pub omega_y: f64,
    pub omega_z: f64,
}

impl Drive {
    /// Drive about x̂, which moves population inversion into `sy`.
    pub fn about_x(rabi_rad_per_us: f64) -> Self {
        Self { omega_x: rabi_rad_per_us, ..Self::default() }
    }

    fn torque(&self, s: &BlochState) -> [f64; 3] {
        [
            self.omega_y * s.sz - self.omega_z * s.sy,
            self.omega_z * s.sx - self.omega_x * s.sz,
            self.omega_x * s.sy - self.omega_y * s.sx,
        ]
    }
}

/// Radiative and dephasing rates of the effective two-level system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRates {
    /// Radiative rate γ = 1/T1 in µs⁻¹.
    pub gamma: f64,
    /// Pure dephasing rate γφ = 1/Tφ in µs⁻¹.
    pub gamma_phi: f64,
    pub n: f64,
    pub m_abs: f64,
    /// Squeezing center minus transition frequency, MHz.
    pub delta_mhz: f64,
}

impl DecayRates {
    pub fn new(gamma: f64, gamma_phi: f64, n: f64, m_abs: f64, delta_mhz: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(invalid(format!("gamma must be positive, got {gamma}")));
        }
        if !(gamma_phi >= 0.0) || !gamma_phi.is_finite() {
            return Err(invalid(format!("gamma_phi must be >= 0, got {gamma_phi}")));
        }
        if !(n >= 0.0 && m_abs >= 0.0) {
            return Err(invalid(format!("N and |M| must be >= 0, got ({n}, {m_abs})")));
        }
        if !is_physical(n, m_abs) {
            return Err(invalid(format!("(N, M) = ({n}, {m_abs}) violates M^2 <= N(N+1)")));
        }
        if !delta_mhz.is_finite() {
            return Err(invalid("detuning must be finite"));
        }
        Ok(Self { gamma, gamma_phi, n, m_abs, delta_mhz })
    }

    /// Rates from T1 and Tφ (µs); `t_phi = ∞` means no pure dephasing.
    pub fn from_times(t1_us: f64, t_phi_us: f64, n: f64, m_abs: f64) -> Result<Self> {
        if !(t1_us > 0.0) || !(t_phi_us > 0.0) {
            return Err(invalid("T1 and T_phi must be positive"));
        }
        Self::new(1.0 / t1_us, 1.0 / t_phi_us, n, m_abs, 0.0)
    }

    pub fn from_reservoir(gamma: f64, gamma_phi: f64, r: &SqueezedReservoir, delta_mhz: f64) -> Result<Self> {
        Self::new(gamma, gamma_phi, r.n(), r.m_abs(), delta_mhz)
    }

    pub fn with_delta(mut self, delta_mhz: f64) -> Self {
        self.delta_mhz = delta_mhz;
        self
    }

    /// Same γ, γφ with the squeezing switched off.
    pub fn vacuum(&self) -> Self {
        Self { n: 0.0, m_abs: 0.0, ..*self }
    }

    pub fn t1(&self) -> f64 {
        1.0 / self.gamma
    }

    /// Γ_N = γ(N+½) + γφ.
    pub fn gamma_n(&self) -> f64 {
        self.gamma * (self.n + 0.5) + self.gamma_phi
    }

    /// Γ_M = γ|M|.
    pub fn gamma_m(&self) -> f64 {
        self.gamma * self.m_abs
    }

    /// Detuning as an angular rate, rad/µs.
    pub fn delta_rad(&self) -> f64 {
        mhz_to_rad_per_us(self.delta_mhz)
    }

    pub fn rate_x(&self) -> f64 {
        self.gamma * (self.n - self.m_abs + 0.5) + self.gamma_phi
    }

    pub fn rate_y(&self) -> f64 {
        self.gamma * (self.n + self.m_abs + 0.5) + self.gamma_phi
    }

    pub fn rate_z(&self) -> f64 {
        self.gamma * (2.0 * self.n + 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisTimescales {
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
    pub tx_tilde: f64,
    pub ty_tilde: f64,
}

/// Resonant Bloch-equation derivative, including an optional drive torque.
pub fn bloch_rhs(s: &BlochState, r: &DecayRates, drive: Option<&Drive>) -> BlochState {
    let torque = drive.map_or([0.0; 3], |d| d.torque(s));
    BlochState {
        sx: -r.rate_x() * s.sx + torque[0],
        sy: -r.rate_y() * s.sy + torque[1],
        sz: -r.rate_z() * s.sz + r.gamma + torque[2],
    }
}

/// `T̃x = T1/(N−M+½)`, `T̃y = T1/(N+M+½)`, `Tz = T1/(2N+1)`; `Tx`, `Ty` add γφ.
pub fn axis_timescales(r: &DecayRates) -> Result<AxisTimescales> {
    let x = r.n - r.m_abs + 0.5;
    if !(x > 0.0) {
        return Err(Error::UnphysicalRates(format!("N - M + 1/2 = {x} is not positive")));
    }
    let rad_x = r.gamma * x;
    let rad_y = r.gamma * (r.n + r.m_abs + 0.5);
    Ok(AxisTimescales {
        tx: 1.0 / (rad_x + r.gamma_phi),
        ty: 1.0 / (rad_y + r.gamma_phi),
        tz: 1.0 / r.rate_z(),
        tx_tilde: 1.0 / rad_x,
        ty_tilde: 1.0 / rad_y,
    })
}

/// Decay rates `Γ_N ± √(Γ_M² − (2πδ)²)`; complex when the detuning exceeds
/// `Γ_M`. These are minus the eigenvalues of the co-rotating generator.
pub fn decay_eigenrates(r: &DecayRates) -> (C64, C64) {
    let disc = C64::new(r.gamma_m().powi(2) - r.delta_rad().powi(2), 0.0).sqrt();
    let gn = C64::new(r.gamma_n(), 0.0);
    (gn + disc, gn - disc)
}

/// Generator of the co-rotating polarizations `(σ̃₊, σ̃₋)`:
/// `[[−Γ_N − iΔ, Γ_M], [Γ_M, −Γ_N + iΔ]]` with Δ = 2πδ.
pub fn polarization_generator(r: &DecayRates) -> ComplexMatrix {
    let gn = r.gamma_n();
    let gm = r.gamma_m();
    let d = r.delta_rad();
    ComplexMatrix::from_vec(
        2,
        2,
        vec![C64::new(-gn, -d), C64::new(gm, 0.0), C64::new(gm, 0.0), C64::new(-gn, d)],
    )
    .expect("2x2")
}

/// Closed-form `exp(G t)` for [`polarization_generator`].
///
/// With `B = G + Γ_N`, `B² = κ² I` where `κ² = Γ_M² − Δ²`, so
/// `exp(Bt) = cosh(κt) I + sinh(κt)/κ · B`.
pub fn polarization_propagator(r: &DecayRates, t: f64) -> ComplexMatrix {
    let gn = r.gamma_n();
    let gm = r.gamma_m();
    let d = r.delta_rad();
    let kappa_sq = gm * gm - d * d;
    let (ch, sh_over_k) = cosh_sinhc(kappa_sq, t);
    let damp = (-gn * t).exp();
    let a = C64::new(ch, -d * sh_over_k) * damp;
    let b = C64::new(gm * sh_over_k, 0.0) * damp;
    let dd = C64::new(ch, d * sh_over_k) * damp;
    ComplexMatrix::from_vec(2, 2, vec![a, b, b, dd]).expect("2x2")
}

/// `(cosh(κt), sinh(κt)/κ)` for real `κ²` of either sign, stable near 0.
fn cosh_sinhc(kappa_sq: f64, t: f64) -> (f64, f64) {
    let x = kappa_sq * t * t;
    if x.abs() < 1e-4 {
        // Series in x = κ²t².
        let ch = 1.0 + x / 2.0 + x * x / 24.0 + x * x * x / 720.0;
        let sh = t * (1.0 + x / 6.0 + x * x / 120.0 + x * x * x / 5040.0);
        (ch, sh)
    } else if kappa_sq > 0.0 {
        let k = kappa_sq.sqrt();
        ((k * t).cosh(), (k * t).sinh() / k)
    } else {
        let w = (-kappa_sq).sqrt();
        ((w * t).cos(), (w * t).sin() / w)
    }
}

/// Applies the co-rotating propagator to a Bloch coherence `c = sx + i sy`.
pub fn propagate_coherence(r: &DecayRates, c0: C64, t: f64) -> C64 {
    let p = polarization_propagator(r, t);
    // (σ₊, σ₋) = (c/2, c*/2); the map returns c(t) = 2σ₊(t).
    p[(0, 0)] * c0 + p[(0, 1)] * c0.conj()
}

/// `sz(t)` relaxing towards `1/(2N+1)` at `γ(2N+1)`.
pub fn relax_sz(r: &DecayRates, sz0: f64, t: f64) -> f64 {
    let ss = r.gamma / r.rate_z();
    ss + (sz0 - ss) * (-r.rate_z() * t).exp()
}

/// Free evolution for time `t` in the qubit frame.
///
/// The transverse part is propagated in the squeezing frame and rotated back
/// by `e^{iΔt}`; on resonance the two frames coincide.
pub fn evolve(r: &DecayRates, s0: &BlochState, t: f64) -> BlochState {
    let c_rot = propagate_coherence(r, s0.coherence(), t);
    let c = c_rot * C64::from_polar(1.0, r.delta_rad() * t);
    BlochState { sx: c.re, sy: c.im, sz: relax_sz(r, s0.sz, t) }
}

/// Free evolution over `[t0, t0 + dt]` with the squeezing phase referenced to
/// `t = 0`.
pub fn evolve_from(r: &DecayRates, s0: &BlochState, t0: f64, dt: f64) -> BlochState {
    let frame = C64::from_polar(1.0, r.delta_rad() * t0);
    let shifted = BlochState::from_coherence(s0.coherence() * frame.conj(), s0.sz);
    let out = evolve(r, &shifted, dt);
    BlochState::from_coherence(out.coherence() * frame, out.sz)
}

/// Right-hand side for the qubit-frame polarizations `(sx, sy)` with the
/// squeezing correlation rotating as `e^{2iΔt}`:
/// `σ̇₊ = −Γ_N σ₊ + Γ_M e^{2iΔt} σ₋`.
pub fn qubit_frame_transverse_rhs(r: &DecayRates, t: f64, sx: f64, sy: f64) -> (f64, f64) {
    let c = C64::new(sx, sy);
    let dc = -r.gamma_n() * c + r.gamma_m() * C64::from_polar(1.0, 2.0 * r.delta_rad() * t) * c.conj();
    (dc.re, dc.im)
}

/// Fixed point of the resonant Bloch equations, optionally driven.
pub fn steady_state(r: &DecayRates, drive: Option<&Drive>) -> Result<BlochState> {
    if !(r.rate_x() > 0.0 && r.rate_y() > 0.0 && r.rate_z() > 0.0) {
        return Err(invalid("steady state needs strictly positive decay rates"));
    }
    let Some(d) = drive else {
        return Ok(BlochState { sx: 0.0, sy: 0.0, sz: r.gamma / r.rate_z() });
    };
    // Solve A s = b with ṡ = A s + b, i.e. (−A) s = b.
    let a = [
        [-r.rate_x(), -d.omega_z, d.omega_y],
        [d.omega_z, -r.rate_y(), -d.omega_x],
        [-d.omega_y, d.omega_x, -r.rate_z()],
    ];
    let b = [0.0, 0.0, r.gamma];
    // Normal equations of the 3x3 system keep the solver SPD.
    let mut ata = vec![0.0; 9];
    let mut atb = vec![0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            ata[i * 3 + j] = (0..3).map(|k| a[k][i] * a[k][j]).sum();
        }
        atb[i] = (0..3).map(|k| -a[k][i] * b[k]).sum();
    }
    let s = solve_spd(&ata, &atb).ok_or_else(|| invalid("singular steady-state system"))?;
    Ok(BlochState { sx: s[0], sy: s[1], sz: s[2] })
}
