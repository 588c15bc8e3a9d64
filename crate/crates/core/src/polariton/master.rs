//! Multi-level master equation under a squeezed reservoir.
//!
//! Written in the interaction picture of the dressed Hamiltonian, so every
//! level pair `(i, j)` with `i < j` contributes jump operators
//! `S⁺ = |j⟩⟨i|`, `S⁻ = |i⟩⟨j|` and squeezing terms that rotate at twice the
//! detuning of the transition from the squeezing center. Lamb shifts are
//! neglected.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;

use super::PolaritonSystem;
use crate::blochdyn::BlochState;
use crate::error::{invalid, Result};
use crate::numerics::{integrate_ode, ComplexMatrix, OdeOptions};
use crate::reservoir::SqueezedReservoir;

/// Vacuum radiative rate per unit `|A_ij|²`, in µs⁻¹.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaMap {
    pub base: f64,
    /// Per-pair overrides `((i, j), rate)` with `i < j`.
    pub overrides: Vec<((usize, usize), f64)>,
}

impl GammaMap {
    pub fn uniform(base: f64) -> Self {
        Self { base, overrides: Vec::new() }
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.overrides.iter().find(|(p, _)| *p == (i, j)).map_or(self.base, |(_, r)| *r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DissipatorKind {
    /// `(N + 1) D[S⁻]`
    Emission,
    /// `N D[S⁺]`
    Absorption,
    /// `M S⁺ρS⁺` with phase `e^{−2iδt}`
    Squeeze,
    /// `M* S⁻ρS⁻` with phase `e^{+2iδt}`
    SqueezeConj,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DissipatorTerm {
    pub kind: DissipatorKind,
    /// `(lower, upper)` level indices.
    pub pair: (usize, usize),
    /// Prefactor multiplying the superoperator, µs⁻¹.
    pub coeff: C64,
    /// Angular frequency of the rotating phase, rad/µs (zero for N terms).
    pub phase_rate: f64,
}

/// Right-hand side `dρ/dt = L(t)[ρ]`.
#[derive(Clone, Debug)]
pub struct MasterEquationRHS {
    dim: usize,
    terms: Vec<DissipatorTerm>,
    dephasing: Option<(f64, (usize, usize))>,
}

impl MasterEquationRHS {
    /// Transitions within half a bandwidth of the squeezing center see the
    /// reservoir moments; all others see vacuum.
    pub fn new(ps: &PolaritonSystem, gamma: &GammaMap, r: &SqueezedReservoir) -> Result<Self> {
        let dim = ps.dim();
        let mut terms = Vec::new();
        for i in 0..dim {
            for j in (i + 1)..dim {
                let a = ps.a(i, j);
                if a.norm() < 1e-12 {
                    continue;
                }
                let g = gamma.rate(i, j);
                if !(g >= 0.0 && g.is_finite()) {
                    return Err(invalid(format!("rate for pair ({i}, {j}) must be non-negative")));
                }
                let kappa = 0.5 * g * a.norm_sqr();
                if kappa == 0.0 {
                    continue;
                }
                let detuning_mhz = (r.omega0_ghz() - ps.transition_ghz(i, j)) * 1e3;
                let in_band = detuning_mhz.abs() <= 0.5 * r.bandwidth_mhz();
                let (n, m) = if in_band { (r.n(), r.m()) } else { (0.0, C64::new(0.0, 0.0)) };
                let push = |terms: &mut Vec<DissipatorTerm>, kind, coeff: C64, phase_rate| {
                    terms.push(DissipatorTerm { kind, pair: (i, j), coeff, phase_rate })
                };
                push(&mut terms, DissipatorKind::Emission, C64::new(kappa * (n + 1.0), 0.0), 0.0);
                if n > 0.0 {
                    push(&mut terms, DissipatorKind::Absorption, C64::new(kappa * n, 0.0), 0.0);
                }
                if m.norm() > 0.0 {
                    // A_ij² carries the phase of the dressed matrix element.
                    let a_phase = (a * a) / a.norm_sqr();
                    let c = kappa * a_phase.conj() * m;
                    let w = 2.0 * TAU * detuning_mhz;
                    push(&mut terms, DissipatorKind::Squeeze, c, w);
                    push(&mut terms, DissipatorKind::SqueezeConj, c.conj(), w);
                }
            }
        }
        Ok(Self { dim, terms, dephasing: None })
    }

    /// Adds pure dephasing `(γ_φ/2) D[σ_z]` on the level pair.
    pub fn with_dephasing(mut self, gamma_phi: f64, pair: (usize, usize)) -> Result<Self> {
        if !(gamma_phi >= 0.0) || pair.0 >= self.dim || pair.1 >= self.dim || pair.0 == pair.1 {
            return Err(invalid("dephasing needs a non-negative rate and a valid level pair"));
        }
        self.dephasing = Some((gamma_phi, pair));
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[DissipatorTerm] {
        &self.terms
    }

    /// Checked evaluation on a density matrix.
    pub fn apply(&self, rho: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
        if rho.rows() != self.dim || rho.cols() != self.dim {
            return Err(invalid(format!("density matrix must be {0}x{0}", self.dim)));
        }
        if !rho.is_hermitian() {
            return Err(invalid("density matrix is not Hermitian"));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(invalid(format!("density matrix trace is {tr}")));
        }
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        self.apply_raw(rho.as_slice(), t, out.as_mut_slice());
        Ok(out)
    }

    /// Unchecked evaluation on row-major storage.
    pub fn apply_raw(&self, rho: &[C64], t: f64, out: &mut [C64]) {
        let d = self.dim;
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        let at = |r: usize, c: usize| r * d + c;
        for term in &self.terms {
            let (i, j) = term.pair;
            let c = term.coeff;
            match term.kind {
                DissipatorKind::Emission | DissipatorKind::Absorption => {
                    // Emission: fills i from j; absorption: fills j from i.
                    let (from, to) = if term.kind == DissipatorKind::Emission { (j, i) } else { (i, j) };
                    out[at(to, to)] += 2.0 * c * rho[at(from, from)];
                    for k in 0..d {
                        out[at(from, k)] -= c * rho[at(from, k)];
                        out[at(k, from)] -= c * rho[at(k, from)];
                    }
                }
                DissipatorKind::Squeeze => {
                    let ph = C64::from_polar(1.0, -term.phase_rate * t);
                    out[at(j, i)] += 2.0 * c * ph * rho[at(i, j)];
                }
                DissipatorKind::SqueezeConj => {
                    let ph = C64::from_polar(1.0, term.phase_rate * t);
                    out[at(i, j)] += 2.0 * c * ph * rho[at(j, i)];
                }
            }
        }
        if let Some((gp, (p, q))) = self.dephasing {
            // σ_z = |p⟩⟨p| − |q⟩⟨q|; coherences with other levels decay at γ_φ/4.
            out[at(p, q)] -= gp * rho[at(p, q)];
            out[at(q, p)] -= gp * rho[at(q, p)];
            let quarter = 0.25 * gp;
            for k in 0..d {
                if k != p && k != q {
                    out[at(p, k)] -= quarter * rho[at(p, k)];
                    out[at(k, p)] -= quarter * rho[at(k, p)];
                    out[at(q, k)] -= quarter * rho[at(q, k)];
                    out[at(k, q)] -= quarter * rho[at(k, q)];
                }
            }
        }
    }

    /// Integrates from `t = 0` and returns `ρ` at each sample time.
    pub fn evolve(&self, rho0: &ComplexMatrix, times: &[f64], opts: &OdeOptions) -> Result<Vec<ComplexMatrix>> {
        self.apply(rho0, 0.0)?;
        let d = self.dim;
        let y0: Vec<f64> = rho0.as_slice().iter().flat_map(|z| [z.re, z.im]).collect();
        let t_end = times.iter().copied().fold(0.0, f64::max);
        if t_end <= 0.0 {
            return Ok(times.iter().map(|_| rho0.clone()).collect());
        }
        let mut buf_in = vec![C64::new(0.0, 0.0); d * d];
        let mut buf_out = buf_in.clone();
        let traj = integrate_ode(
            |t, y, dy| {
                for (k, z) in buf_in.iter_mut().enumerate() {
                    *z = C64::new(y[2 * k], y[2 * k + 1]);
                }
                self.apply_raw(&buf_in, t, &mut buf_out);
                for (k, z) in buf_out.iter().enumerate() {
                    dy[2 * k] = z.re;
                    dy[2 * k + 1] = z.im;
                }
            },
            &y0,
            (0.0, t_end),
            times,
            opts,
        )?;
        traj.states
            .iter()
            .map(|y| ComplexMatrix::from_vec(d, d, y.chunks(2).map(|p| C64::new(p[0], p[1])).collect()))
            .collect()
    }
}

/// Bloch vector of the `(lower, upper)` pair with the lower level at `sz = +1`.
pub fn bloch_from_density(rho: &ComplexMatrix, pair: (usize, usize)) -> BlochState {
    let (g, e) = pair;
    let c = 2.0 * rho[(g, e)];
    BlochState::new(c.re, c.im, (rho[(g, g)] - rho[(e, e)]).re)
}

/// Pure-state density matrix for a Bloch vector embedded on a level pair.
pub fn density_from_bloch(s: &BlochState, pair: (usize, usize), dim: usize) -> ComplexMatrix {
    let (g, e) = pair;
    let mut rho = ComplexMatrix::zeros(dim, dim);
    rho[(g, g)] = C64::new(0.5 * (1.0 + s.sz), 0.0);
    rho[(e, e)] = C64::new(0.5 * (1.0 - s.sz), 0.0);
    let c = 0.5 * C64::new(s.sx, s.sy);
    rho[(g, e)] = c;
    rho[(e, g)] = c.conj();
    rho
}
