use std::f64::consts::{FRAC_PI_2, PI, TAU};

use proptest::prelude::*;

use sqvac::blochdyn::{axis_timescales, evolve, evolve_from, BlochState, DecayRates};
use sqvac::protocols::{
    apply_rotation, detuning_sweep, measure, prep_state, ramsey, tomography_trajectory, Readout, SweepWindow,
};

fn rates() -> impl Strategy<Value = DecayRates> {
    (0.2f64..5.0, 0.0f64..1.0, 0.0f64..3.0, 0.0f64..=1.0, -1.0f64..1.0).prop_map(|(gamma, gphi, n, frac, delta)| {
        DecayRates::new(gamma, gphi, n, frac * (n * (n + 1.0)).sqrt(), delta).unwrap()
    })
}

fn ball() -> impl Strategy<Value = BlochState> {
    (0.0f64..=1.0, 0.0f64..PI, 0.0f64..TAU).prop_map(|(rad, t, p)| {
        let s = BlochState::from_angles(t, p);
        BlochState::new(rad * s.sx, rad * s.sy, rad * s.sz)
    })
}

fn measured_rates() -> DecayRates {
    DecayRates::from_times(0.65, 6.6, 0.88, 1.08).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rotation_preserves_norm(s in ball(), angle in -7.0f64..7.0, az in -7.0f64..7.0) {
        let out = apply_rotation(&s, angle, az);
        prop_assert!((out.norm_sqr() - s.norm_sqr()).abs() <= 1e-14);
    }

    #[test]
    fn tomography_bookkeeping(s in ball()) {
        prop_assert!((measure(&s, Readout::XViaRotation) - s.sx).abs() <= 1e-12);
        prop_assert!((measure(&s, Readout::YViaRotation) - s.sy).abs() <= 1e-12);
        prop_assert!((measure(&s, Readout::Z) - s.sz).abs() <= 1e-15);
    }

    #[test]
    fn opposite_preparations_mirror(r in rates(), phi in 0.0f64..TAU, on in any::<bool>()) {
        let times: Vec<f64> = (0..40).map(|k| 0.05 * k as f64).collect();
        let a = ramsey(&r, phi, 5.0, &times, on).unwrap();
        let b = ramsey(&r, phi + PI, 5.0, &times, on).unwrap();
        for (x, y) in a.sz_values.iter().zip(&b.sz_values) {
            prop_assert!((x + y).abs() <= 1e-12);
        }
    }

    #[test]
    fn segmented_evolution_composes(r in rates(), s in ball(), t0 in 0.0f64..3.0, dt in 0.0f64..3.0) {
        let direct = evolve(&r, &s, t0 + dt);
        let split = evolve_from(&r, &evolve(&r, &s, t0), t0, dt);
        prop_assert!(direct.distance(&split) <= 1e-12);
    }
}

#[test]
fn lossless_ramsey_is_undamped() {
    let r = DecayRates::new(1e-300, 0.0, 0.0, 0.0, 0.0).unwrap();
    let times: Vec<f64> = (0..100).map(|k| 0.037 * k as f64).collect();
    let tr = ramsey(&r, 0.4, 5.0, &times, true).unwrap();
    for (t, v) in times.iter().zip(&tr.sz_values) {
        assert!((v - (0.4 - TAU * 5.0 * t).sin()).abs() < 1e-12);
    }
}

#[test]
fn tomography_starts_at_prep_and_relaxes() {
    let r = measured_rates();
    let prep = (0.67 * PI, 0.83 * PI);
    let tr = tomography_trajectory(&r, prep, &[0.0, 30.0]).unwrap();
    assert!(tr.states[0].distance(&prep_state(prep.0, prep.1)) < 1e-15);
    let end = tr.states[1];
    assert!(end.sx.abs() < 1e-6 && end.sy.abs() < 1e-6);
    assert!((end.sz - 1.0 / 2.76).abs() < 1e-6);

    let vac = r.vacuum();
    let tr = tomography_trajectory(&vac, (PI, 0.0), &[0.65]).unwrap();
    assert!((tr.states[0].sz - (1.0 - 2.0 * (-1.0f64).exp())).abs() < 1e-12);
}

#[test]
fn resonant_sweep_point_recovers_axis_times() {
    let r = measured_rates();
    let ts = axis_timescales(&r).unwrap();
    let window = SweepWindow::default();
    let x = detuning_sweep(&r, &[0.0], FRAC_PI_2, 5.0, &window).unwrap();
    let y = detuning_sweep(&r, &[0.0], PI, 5.0, &window).unwrap();
    assert!((x[0].t_eff().unwrap() / ts.tx - 1.0).abs() < 1e-6);
    assert!((y[0].t_eff().unwrap() / ts.ty - 1.0).abs() < 1e-6);
}

#[test]
fn detuning_sweep_is_symmetric() {
    let r = measured_rates();
    let deltas = [-0.9, -0.4, -0.1, 0.1, 0.4, 0.9];
    for phi in [FRAC_PI_2, PI] {
        let pts = detuning_sweep(&r, &deltas, phi, 5.0, &SweepWindow::default()).unwrap();
        for k in 0..3 {
            let a = pts[k].t_eff().unwrap();
            let b = pts[5 - k].t_eff().unwrap();
            assert!((a / b - 1.0).abs() < 1e-6, "{a} vs {b}");
        }
    }
}

#[test]
fn ramsey_fit_gives_t2_star() {
    let r = measured_rates();
    let times: Vec<f64> = (0..201).map(|k| 0.025 * k as f64).collect();
    let tr = ramsey(&r, FRAC_PI_2, 5.0, &times, false).unwrap();
    let f = sqvac::estimation::fit_damped_sinusoid(&tr.times, &tr.sz_values, 5.0).unwrap();
    assert!((f.t - 1.0861).abs() < 1e-4, "{}", f.t);
    assert!((f.phase - FRAC_PI_2).abs() < 1e-6);
}
