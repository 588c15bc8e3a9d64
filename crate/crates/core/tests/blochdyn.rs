use num_complex::Complex64 as C64;
use proptest::prelude::*;

use sqvac::blochdyn::{
    axis_timescales, bloch_rhs, decay_eigenrates, evolve, polarization_generator, polarization_propagator,
    steady_state, BlochState, DecayRates,
};
use sqvac::numerics::{integrate_ode, OdeOptions};

fn rates() -> impl Strategy<Value = DecayRates> {
    (0.2f64..5.0, 0.0f64..1.0, 0.0f64..3.0, 0.0f64..=1.0, -1.0f64..1.0).prop_map(|(gamma, gphi, n, frac, delta)| {
        DecayRates::new(gamma, gphi, n, frac * (n * (n + 1.0)).sqrt(), delta).unwrap()
    })
}

fn resonant_rates() -> impl Strategy<Value = DecayRates> {
    rates().prop_map(|r| r.with_delta(0.0))
}

fn integrate(r: &DecayRates, s0: BlochState, times: &[f64]) -> Vec<BlochState> {
    let t_end = *times.last().unwrap();
    let traj = integrate_ode(
        |_, y, dy| {
            let d = bloch_rhs(&BlochState::from_array([y[0], y[1], y[2]]), r, None);
            dy.copy_from_slice(&d.as_array());
        },
        &s0.as_array(),
        (0.0, t_end),
        times,
        &OdeOptions::with_tol(1e-12),
    )
    .unwrap();
    traj.states.iter().map(|y| BlochState::new(y[0], y[1], y[2])).collect()
}

fn unit_sphere() -> impl Strategy<Value = BlochState> {
    (0.0f64..std::f64::consts::PI, 0.0f64..std::f64::consts::TAU).prop_map(|(t, p)| BlochState::from_angles(t, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn propagator_is_a_semigroup(r in rates(), t1 in 0.0f64..3.0, t2 in 0.0f64..3.0) {
        let lhs = polarization_propagator(&r, t1 + t2);
        let rhs = &polarization_propagator(&r, t2) * &polarization_propagator(&r, t1);
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-10);
    }

    #[test]
    fn eigenrates_are_generator_eigenvalues(r in rates()) {
        let g = polarization_generator(&r);
        let (l1, l2) = decay_eigenrates(&r);
        // Characteristic polynomial λ² − tr λ + det at λ = −rate.
        let tr = g.trace();
        let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        for rate in [l1, l2] {
            let lam = -rate;
            let p = lam * lam - tr * lam + det;
            prop_assert!(p.norm() <= 1e-10 * (1.0 + det.norm()), "{p}");
        }
        prop_assert!(((l1 + l2) + tr).norm() <= 1e-10 * (1.0 + tr.norm()));
    }

    #[test]
    fn axis_decays_are_pure_exponentials(r in resonant_rates()) {
        let ts = axis_timescales(&r).unwrap();
        let scaled = |tau: f64| [0.25 * tau, 0.5 * tau, tau, 2.0 * tau];
        for (axis, tau) in [(0usize, ts.tx), (1, ts.ty)] {
            let mut s0 = [0.0; 3];
            s0[axis] = 1.0;
            let times = scaled(tau);
            let traj = integrate(&r, BlochState::from_array(s0), &times);
            for (t, s) in times.iter().zip(&traj) {
                let expected = (-t / tau).exp();
                prop_assert!((s.as_array()[axis] / expected - 1.0).abs() <= 1e-6);
            }
        }
        // sz relaxes towards 1/(2N+1) at the Tz rate.
        let ss = 1.0 / (2.0 * r.n + 1.0);
        let times = scaled(ts.tz);
        let traj = integrate(&r, BlochState::GROUND, &times);
        for (t, s) in times.iter().zip(&traj) {
            let expected = ss + (1.0 - ss) * (-t / ts.tz).exp();
            prop_assert!((s.sz / expected - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn closed_form_matches_integration(r in rates(), s0 in unit_sphere()) {
        let times = [0.3, 1.0, 2.5];
        let traj = integrate_qubit_frame(&r, s0, &times);
        for (t, s) in times.iter().zip(&traj) {
            prop_assert!(evolve(&r, &s0, *t).distance(s) <= 1e-8);
        }
    }

    #[test]
    fn converges_to_steady_state(r in resonant_rates(), s0 in unit_sphere()) {
        let slowest = r.rate_x().min(r.rate_y()).min(r.rate_z());
        let t = 20.0 / slowest;
        let end = integrate(&r, s0, &[t])[0];
        let ss = steady_state(&r, None).unwrap();
        prop_assert!(end.distance(&ss) <= 1e-6);
    }

    #[test]
    fn bloch_ball_contracts(r in rates(), s0 in unit_sphere(), t in 0.0f64..10.0) {
        prop_assert!(evolve(&r, &s0, t).norm_sqr() <= 1.0 + 1e-9);
    }
}

fn integrate_qubit_frame(r: &DecayRates, s0: BlochState, times: &[f64]) -> Vec<BlochState> {
    let t_end = *times.last().unwrap();
    let traj = integrate_ode(
        |t, y, dy| {
            let (dx, dyy) = sqvac::blochdyn::qubit_frame_transverse_rhs(r, t, y[0], y[1]);
            dy[0] = dx;
            dy[1] = dyy;
            dy[2] = -r.rate_z() * y[2] + r.gamma;
        },
        &s0.as_array(),
        (0.0, t_end),
        times,
        &OdeOptions::with_tol(1e-12),
    )
    .unwrap();
    traj.states.iter().map(|y| BlochState::new(y[0], y[1], y[2])).collect()
}

#[test]
fn coherence_matches_generator_on_resonance() {
    let r = DecayRates::from_times(0.65, 6.6, 0.88, 1.08).unwrap();
    let c = sqvac::blochdyn::propagate_coherence(&r, C64::new(1.0, 0.0), 1.0);
    let ts = axis_timescales(&r).unwrap();
    assert!((c.re - (-1.0 / ts.tx).exp()).abs() < 1e-12);
    assert!(c.im.abs() < 1e-15);
}
