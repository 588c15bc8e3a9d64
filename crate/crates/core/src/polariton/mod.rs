//! Transmon-cavity polaritons.
//!
//! The transmon is diagonalized exactly in the charge basis, truncated to a
//! few levels and coupled to the cavity in rotating-wave form,
//! `H = H_q ⊗ 1 + 1 ⊗ ω_c a†a + g (b̃† a + b̃ a†)`, with `b̃` built from charge
//! matrix elements and normalized so `⟨0|b̃|1⟩ = 1`. Dressed transitions are
//! weighted by the cavity quadrature `A = ⟨i|(a + a†)|j⟩`.

mod master;

pub use master::{bloch_from_density, density_from_bloch, DissipatorKind, DissipatorTerm, GammaMap, MasterEquationRHS};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::blochdyn::DecayRates;
use crate::error::{invalid, Error, Result};
use crate::numerics::{eigh, ComplexMatrix};
use crate::reservoir::SqueezedReservoir;

/// Circuit parameters. Energies are ordinary frequencies in GHz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmonCavityParams {
    pub e_c: f64,
    pub e_j: f64,
    pub omega_c: f64,
    pub g: f64,
    pub n_transmon: usize,
    pub n_photon: usize,
    /// Charge states run over `−n_charge..=n_charge`.
    pub n_charge: usize,
}

impl TransmonCavityParams {
    /// The device characterized in the experiment, with default cutoffs.
    pub fn measured_device() -> Self {
        Self { e_c: 0.208, e_j: 23.27, omega_c: 6.0456, g: 0.126, n_transmon: 5, n_photon: 6, n_charge: 20 }
    }

    pub fn dim(&self) -> usize {
        self.n_transmon * self.n_photon
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_transmon < 2 || self.n_photon < 2 || self.n_charge < 3 {
            return Err(invalid(format!(
                "need n_transmon, n_photon >= 2 and n_charge >= 3 (got {}, {}, {})",
                self.n_transmon, self.n_photon, self.n_charge
            )));
        }
        if self.n_transmon > 2 * self.n_charge + 1 {
            return Err(invalid(format!(
                "{} transmon levels requested from {} charge states",
                self.n_transmon,
                2 * self.n_charge + 1
            )));
        }
        if !(self.e_c > 0.0 && self.e_j > 0.0 && self.omega_c > 0.0 && self.g >= 0.0) {
            return Err(invalid("E_C, E_J, omega_c must be positive and g non-negative"));
        }
        Ok(())
    }

    /// `E_J/E_C` below 20 is outside the transmon regime.
    pub fn regime_warning(&self) -> Option<String> {
        let ratio = self.e_j / self.e_c;
        (ratio < 20.0).then(|| format!("E_J/E_C = {ratio:.1} is below the transmon regime (>= 20)"))
    }

    /// Asymptotic transmon frequency `√(8 E_J E_C) − E_C`.
    pub fn asymptotic_qubit_frequency(&self) -> f64 {
        (8.0 * self.e_j * self.e_c).sqrt() - self.e_c
    }
}

/// Bare transmon levels and the normalized lowering operator.
#[derive(Clone, Debug)]
pub struct TransmonSpectrum {
    /// Level energies relative to the ground level, GHz.
    pub energies: Vec<f64>,
    /// `b̃[(j, k)]` for `j < k`, normalized so `b̃[(0, 1)] = 1`.
    pub lowering: ComplexMatrix,
}

/// Exact charge-basis diagonalization of `4E_C n̂² − E_J cos φ̂` (n_g = 0).
pub fn transmon_spectrum(p: &TransmonCavityParams) -> Result<TransmonSpectrum> {
    p.validate()?;
    let nc = p.n_charge as i64;
    let dim = 2 * p.n_charge + 1;
    let mut h = ComplexMatrix::zeros(dim, dim);
    for (k, n) in (-nc..=nc).enumerate() {
        h[(k, k)] = C64::new(4.0 * p.e_c * (n * n) as f64, 0.0);
        if k + 1 < dim {
            h[(k, k + 1)] = C64::new(-0.5 * p.e_j, 0.0);
            h[(k + 1, k)] = C64::new(-0.5 * p.e_j, 0.0);
        }
    }
    let eig = eigh(&h)?;
    let levels = p.n_transmon;
    let e0 = eig.values[0];
    let energies: Vec<f64> = eig.values[..levels].iter().map(|e| e - e0).collect();

    let charge: Vec<f64> = (-nc..=nc).map(|n| n as f64).collect();
    let vecs: Vec<Vec<C64>> = (0..levels).map(|k| eig.vector(k)).collect();
    let n_elem = |a: usize, b: usize| -> C64 {
        vecs[a].iter().zip(&vecs[b]).zip(&charge).map(|((x, y), n)| x.conj() * y * *n).sum()
    };
    // Sign convention: nearest-neighbour charge elements positive.
    let mut sign = vec![1.0; levels];
    for k in 0..levels - 1 {
        let e = n_elem(k, k + 1).re;
        sign[k + 1] = if sign[k] * e >= 0.0 { 1.0 } else { -1.0 };
    }
    let norm = n_elem(0, 1).re * sign[0] * sign[1];
    if norm.abs() < 1e-12 {
        return Err(invalid("vanishing 0-1 charge matrix element"));
    }
    let mut lowering = ComplexMatrix::zeros(levels, levels);
    for j in 0..levels {
        for k in (j + 1)..levels {
            lowering[(j, k)] = n_elem(j, k) * (sign[j] * sign[k] / norm);
        }
    }
    lowering[(0, 1)] = C64::new(1.0, 0.0);
    Ok(TransmonSpectrum { energies, lowering })
}

fn photon_lowering(n: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// Transmon-cavity Hamiltonian in GHz over the product basis
/// `|q⟩ ⊗ |n⟩` with index `q * n_photon + n`.
pub fn build_hamiltonian(p: &TransmonCavityParams) -> Result<ComplexMatrix> {
    let tr = transmon_spectrum(p)?;
    let hq = ComplexMatrix::diagonal(&tr.energies);
    let id_q = ComplexMatrix::identity(p.n_transmon);
    let id_c = ComplexMatrix::identity(p.n_photon);
    let a = photon_lowering(p.n_photon);
    let num: Vec<f64> = (0..p.n_photon).map(|k| k as f64 * p.omega_c).collect();
    let hc = ComplexMatrix::diagonal(&num);

    let b = &tr.lowering;
    let coupling = &b.adjoint().kron(&a) + &b.kron(&a.adjoint());
    let h = &(&hq.kron(&id_c) + &id_q.kron(&hc)) + &coupling.scale(C64::new(p.g, 0.0));
    Ok(h)
}

/// Cavity quadrature `a + a†` on the product basis.
pub fn cavity_quadrature(p: &TransmonCavityParams) -> ComplexMatrix {
    let a = photon_lowering(p.n_photon);
    ComplexMatrix::identity(p.n_transmon).kron(&(&a + &a.adjoint()))
}

/// Dressed spectrum of the transmon-cavity system.
#[derive(Clone, Debug)]
pub struct PolaritonSystem {
    /// Ascending energies in GHz with the ground state at 0.
    pub energies: Vec<f64>,
    /// Dressed quadrature `⟨i|(a + a†)|j⟩`; Hermitian with zero diagonal.
    pub quadrature: ComplexMatrix,
    /// `g`, `-`, `+` for the ground state and single-excitation polaritons;
    /// other states are tagged by excitation number and dominant bare state.
    pub labels: Vec<String>,
    /// Eigenvectors (columns) over the bare product basis.
    pub basis: ComplexMatrix,
    pub excitations: Vec<usize>,
    pub params: TransmonCavityParams,
}

/// Serializable digest of a [`PolaritonSystem`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolaritonSummary {
    pub energies_ghz: Vec<f64>,
    pub abs_a: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub qubit_frequency_ghz: f64,
    pub polariton_splitting_mhz: f64,
}

impl PolaritonSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `A_ij` for `i < j` (upper triangle of the dressed quadrature).
    pub fn a(&self, i: usize, j: usize) -> C64 {
        self.quadrature[(i, j)]
    }

    /// `ε_j − ε_i` in GHz.
    pub fn transition_ghz(&self, i: usize, j: usize) -> f64 {
        self.energies[j] - self.energies[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    fn labelled(&self, label: &str) -> usize {
        self.index_of(label).unwrap_or_else(|| panic!("polariton spectrum lacks a '{label}' state"))
    }

    /// `|g⟩ → |−⟩` frequency, GHz.
    pub fn qubit_frequency(&self) -> f64 {
        self.transition_ghz(0, self.labelled("-"))
    }

    /// Distance between the `|g⟩ → |−⟩` and `|g⟩ → |+⟩` lines, GHz.
    pub fn polariton_splitting(&self) -> f64 {
        self.transition_ghz(self.labelled("-"), self.labelled("+"))
    }

    pub fn summary(&self) -> PolaritonSummary {
        let n = self.dim();
        PolaritonSummary {
            energies_ghz: self.energies.clone(),
            abs_a: (0..n).map(|i| (0..n).map(|j| self.quadrature[(i, j)].norm()).collect()).collect(),
            labels: self.labels.clone(),
            qubit_frequency_ghz: self.qubit_frequency(),
            polariton_splitting_mhz: 1e3 * self.polariton_splitting(),
        }
    }
}

/// Diagonalizes `H` and expresses the cavity quadrature in the dressed basis.
pub fn diagonalize_polaritons(h: &ComplexMatrix, p: &TransmonCavityParams) -> Result<PolaritonSystem> {
    p.validate()?;
    if h.rows() != p.dim() || !h.is_square() {
        return Err(invalid(format!("Hamiltonian is {}x{}, expected dimension {}", h.rows(), h.cols(), p.dim())));
    }
    let eig = eigh(h)?;
    let e0 = eig.values[0];
    let energies: Vec<f64> = eig.values.iter().map(|e| e - e0).collect();
    let v = &eig.vectors;
    let x = cavity_quadrature(p);
    let mut quadrature = &(&v.adjoint() * &x) * v;
    let n = energies.len();
    for i in 0..n {
        quadrature[(i, i)] = C64::new(0.0, 0.0);
    }

    // Excitation number and dominant bare state of each eigenvector.
    let mut excitations = Vec::with_capacity(n);
    let mut dominant = Vec::with_capacity(n);
    for k in 0..n {
        let col = v.column(k);
        let mut exc = 0.0;
        let mut best = (0, 0.0);
        for (idx, z) in col.iter().enumerate() {
            let w = z.norm_sqr();
            exc += w * (idx / p.n_photon + idx % p.n_photon) as f64;
            if w > best.1 + 1e-12 {
                best = (idx, w);
            }
        }
        excitations.push(exc.round() as usize);
        dominant.push(best.0);
    }
    let mut rank_in_manifold = vec![0usize; n];
    let mut seen = std::collections::BTreeMap::<usize, usize>::new();
    for k in 0..n {
        let r = seen.entry(excitations[k]).or_insert(0);
        rank_in_manifold[k] = *r;
        *r += 1;
    }
    let labels = (0..n)
        .map(|k| match (excitations[k], rank_in_manifold[k]) {
            (0, 0) => "g".to_string(),
            (1, 0) => "-".to_string(),
            (1, 1) => "+".to_string(),
            (exc, rank) => {
                let d = dominant[k];
                format!("n{exc}.{rank}(q{},c{})", d / p.n_photon, d % p.n_photon)
            }
        })
        .collect();

    Ok(PolaritonSystem { energies, quadrature, labels, basis: eig.vectors, excitations, params: *p })
}

/// Builds and diagonalizes in one step.
pub fn polariton_system(p: &TransmonCavityParams) -> Result<PolaritonSystem> {
    diagonalize_polaritons(&build_hamiltonian(p)?, p)
}

/// Minimum spacing between the addressed transition and any other line
/// touching the same levels, in units of the squeezing bandwidth.
pub const BANDWIDTH_SEPARATION: f64 = 5.0;

/// Reduces the polariton system to the ground state and the dressed level
/// whose transition lies closest to the squeezing center.
pub fn two_level_reduction(ps: &PolaritonSystem, gamma01_base: f64, r: &SqueezedReservoir) -> Result<DecayRates> {
    let upper = (1..ps.dim())
        .filter(|&j| ps.a(0, j).norm() > 1e-6)
        .min_by(|&a, &b| {
            let da = (ps.transition_ghz(0, a) - r.omega0_ghz()).abs();
            let db = (ps.transition_ghz(0, b) - r.omega0_ghz()).abs();
            da.total_cmp(&db)
        })
        .ok_or_else(|| invalid("no bright transition out of the ground state"))?;
    two_level_reduction_for(ps, (0, upper), gamma01_base, r)
}

/// Two-level reduction for an explicit level pair `(lower, upper)`.
pub fn two_level_reduction_for(
    ps: &PolaritonSystem,
    pair: (usize, usize),
    gamma01_base: f64,
    r: &SqueezedReservoir,
) -> Result<DecayRates> {
    let (lo, hi) = pair;
    if !(lo < hi && hi < ps.dim()) {
        return Err(invalid(format!("invalid level pair ({lo}, {hi})")));
    }
    if !(gamma01_base > 0.0) {
        return Err(invalid("base radiative rate must be positive"));
    }
    let f_sel = ps.transition_ghz(lo, hi);
    let min_sep_ghz = BANDWIDTH_SEPARATION * r.bandwidth_mhz() * 1e-3;
    let a_sel = ps.a(lo, hi).norm();
    for i in 0..ps.dim() {
        for j in (i + 1)..ps.dim() {
            if (i, j) == (lo, hi) || !(i == lo || i == hi || j == lo || j == hi) {
                continue;
            }
            if ps.a(i, j).norm() <= 1e-3 * a_sel {
                continue;
            }
            let sep = (ps.transition_ghz(i, j) - f_sel).abs();
            if sep < min_sep_ghz {
                return Err(Error::MultiTransition(format!(
                    "transition {}->{} lies {:.1} MHz from the addressed line, within {}x the {} MHz bandwidth",
                    ps.labels[i],
                    ps.labels[j],
                    sep * 1e3,
                    BANDWIDTH_SEPARATION,
                    r.bandwidth_mhz()
                )));
            }
        }
    }
    let gamma = a_sel * a_sel * gamma01_base;
    let delta_mhz = (r.omega0_ghz() - f_sel) * 1e3;
    DecayRates::new(gamma, 0.0, r.n(), r.m_abs(), delta_mhz)
}

/// Base rate that makes the `|g⟩ → |−⟩` radiative rate equal `1/T1`.
pub fn calibrate_base_rate(ps: &PolaritonSystem, t1_us: f64) -> Result<f64> {
    let a = ps.a(0, ps.labelled("-")).norm();
    if !(t1_us > 0.0) || a == 0.0 {
        return Err(invalid("calibration needs T1 > 0 and a bright g -> - transition"));
    }
    Ok(1.0 / (t1_us * a * a))
}
