use num_complex::Complex64 as C64;
use proptest::prelude::*;

use sqvac::blochdyn::{evolve, BlochState, DecayRates};
use sqvac::numerics::{ComplexMatrix, OdeOptions};
use sqvac::polariton::{
    bloch_from_density, calibrate_base_rate, density_from_bloch, polariton_system, two_level_reduction,
    DissipatorKind, GammaMap, MasterEquationRHS, PolaritonSystem, TransmonCavityParams,
};
use sqvac::reservoir::SqueezedReservoir;

const T1: f64 = 0.65;
const T_PHI: f64 = 6.6;

fn device() -> TransmonCavityParams {
    TransmonCavityParams::measured_device()
}

fn squeezed_on_qubit(ps: &PolaritonSystem, delta_mhz: f64) -> SqueezedReservoir {
    SqueezedReservoir::real(0.88, 1.08, ps.qubit_frequency() + 1e-3 * delta_mhz, 13.0).unwrap()
}

fn random_density(dim: usize, entries: &[(f64, f64)]) -> ComplexMatrix {
    let g = ComplexMatrix::from_vec(dim, dim, entries.iter().map(|&(a, b)| C64::new(a, b)).collect()).unwrap();
    let rho = &g * &g.adjoint();
    let tr = rho.trace().re;
    let mut rho = rho.scale(C64::new(1.0 / tr, 0.0));
    // Enforce exact Hermiticity after rounding.
    let h = &rho + &rho.adjoint();
    rho = h.scale(C64::new(0.5, 0.0));
    rho
}

fn small_device() -> TransmonCavityParams {
    TransmonCavityParams { n_transmon: 3, n_photon: 4, ..device() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generator_preserves_trace_and_hermiticity(
        entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 144),
        t in 0.0f64..5.0,
        delta in -5.0f64..5.0,
    ) {
        let ps = polariton_system(&small_device()).unwrap();
        let r = squeezed_on_qubit(&ps, delta);
        let rhs = MasterEquationRHS::new(&ps, &GammaMap::uniform(1.0 / T1), &r)
            .unwrap()
            .with_dephasing(1.0 / T_PHI, (0, 1))
            .unwrap();
        let rho = random_density(ps.dim(), &entries);
        let d = rhs.apply(&rho, t).unwrap();
        prop_assert!(d.trace().norm() <= 1e-12 * rho.frobenius_norm().max(1.0));
        prop_assert!(d.hermitian_defect() <= 1e-12);
    }
}

#[test]
fn rejects_invalid_density_matrices() {
    let ps = polariton_system(&small_device()).unwrap();
    let rhs = MasterEquationRHS::new(&ps, &GammaMap::uniform(1.0), &squeezed_on_qubit(&ps, 0.0)).unwrap();
    let mut rho = ComplexMatrix::zeros(ps.dim(), ps.dim());
    rho[(0, 0)] = C64::new(0.5, 0.0);
    assert!(rhs.apply(&rho, 0.0).is_err());
    rho[(1, 1)] = C64::new(0.5, 0.0);
    assert!(rhs.apply(&rho, 0.0).is_ok());
    rho[(0, 1)] = C64::new(0.1, 0.0);
    assert!(rhs.apply(&rho, 0.0).is_err());
    assert!(rhs.apply(&ComplexMatrix::identity(2), 0.0).is_err());
}

#[test]
fn only_the_addressed_transition_sees_squeezing() {
    let ps = polariton_system(&device()).unwrap();
    let rhs = MasterEquationRHS::new(&ps, &GammaMap::uniform(1.0), &squeezed_on_qubit(&ps, 0.0)).unwrap();
    for term in rhs.terms() {
        let n_type = matches!(term.kind, DissipatorKind::Absorption | DissipatorKind::Squeeze | DissipatorKind::SqueezeConj);
        if n_type {
            assert_eq!(term.pair, (0, 1), "{term:?}");
        }
        if term.kind != DissipatorKind::SqueezeConj && term.kind != DissipatorKind::Squeeze {
            assert!(term.coeff.re >= 0.0 && term.coeff.im == 0.0);
        }
    }
}

#[test]
fn cutoffs_are_converged() {
    let base = polariton_system(&device()).unwrap();
    let p = TransmonCavityParams { n_photon: 9, n_charge: 30, ..device() };
    let big = polariton_system(&p).unwrap();
    for k in 1..=2 {
        let shift_mhz = 1e3 * (big.energies[k] - base.energies[k]).abs();
        assert!(shift_mhz < 1.0, "level {k} moved {shift_mhz} MHz");
    }
}

#[test]
fn vacuum_relaxes_to_ground() {
    let ps = polariton_system(&small_device()).unwrap();
    let base = calibrate_base_rate(&ps, T1).unwrap();
    let r = SqueezedReservoir::vacuum(ps.qubit_frequency(), 13.0).unwrap();
    let rhs = MasterEquationRHS::new(&ps, &GammaMap::uniform(base), &r).unwrap();
    let d = ps.dim();
    let mut rho = ComplexMatrix::zeros(d, d);
    for k in 1..6 {
        rho[(k, k)] = C64::new(0.2, 0.0);
    }
    let out = rhs.evolve(&rho, &[1.0, 40.0], &OdeOptions::with_tol(1e-10)).unwrap();
    assert!(out[0][(0, 0)].re < 0.99);
    let fin = &out[1];
    assert!((fin[(0, 0)].re - 1.0).abs() < 1e-6, "{}", fin[(0, 0)]);
    assert!((fin.trace().re - 1.0).abs() < 1e-9);
}

fn equivalence_error(delta_mhz: f64, t_phi: Option<f64>, tol: f64) -> f64 {
    let ps = polariton_system(&device()).unwrap();
    let base = calibrate_base_rate(&ps, T1).unwrap();
    let r = squeezed_on_qubit(&ps, delta_mhz);
    let reduced = two_level_reduction(&ps, base, &r).unwrap();
    let gamma_phi = t_phi.map_or(0.0, |t| 1.0 / t);
    let rates = DecayRates::new(reduced.gamma, gamma_phi, reduced.n, reduced.m_abs, reduced.delta_mhz).unwrap();
    let mut rhs = MasterEquationRHS::new(&ps, &GammaMap::uniform(base), &r).unwrap();
    if gamma_phi > 0.0 {
        rhs = rhs.with_dephasing(gamma_phi, (0, 1)).unwrap();
    }
    let times: Vec<f64> = (1..=50).map(|k| 0.1 * k as f64).collect();
    let starts = [
        BlochState::from_angles(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
        BlochState::from_angles(std::f64::consts::FRAC_PI_2, std::f64::consts::PI),
        BlochState::from_angles(0.67 * std::f64::consts::PI, 0.83 * std::f64::consts::PI),
        BlochState::EXCITED,
    ];
    let mut worst: f64 = 0.0;
    for s0 in starts {
        let rho0 = density_from_bloch(&s0, (0, 1), ps.dim());
        let out = rhs.evolve(&rho0, &times, &OdeOptions::with_tol(tol)).unwrap();
        for (t, rho) in times.iter().zip(&out) {
            let me = bloch_from_density(rho, (0, 1));
            let exact = evolve(&rates, &s0, *t);
            worst = worst.max(me.distance(&exact));
        }
    }
    worst
}

#[test]
fn two_level_equivalence_on_resonance() {
    let err = equivalence_error(0.0, None, 1e-12);
    assert!(err < 1e-8, "{err}");
}

#[test]
fn two_level_equivalence_with_dephasing() {
    let err = equivalence_error(0.0, Some(T_PHI), 1e-10);
    assert!(err < 1e-6, "{err}");
}

#[test]
fn two_level_equivalence_detuned() {
    let err = equivalence_error(0.35, Some(T_PHI), 1e-10);
    assert!(err < 1e-6, "{err}");
}
