use num_complex::Complex64 as C64;
use proptest::prelude::*;

use sqvac::numerics::{eigh, fit_least_squares, integrate_ode, ComplexMatrix, FitOptions, OdeOptions};

fn hermitian(n: usize, entries: &[(f64, f64)]) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            let (re, im) = entries[k];
            k += 1;
            if i == j {
                h[(i, i)] = C64::new(re, 0.0);
            } else {
                h[(i, j)] = C64::new(re, im);
                h[(j, i)] = C64::new(re, -im);
            }
        }
    }
    h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigh_is_unitary_and_trace_preserving(
        n in 1usize..9,
        entries in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 45),
    ) {
        let h = hermitian(n, &entries);
        let e = eigh(&h).unwrap();
        prop_assert!(e.vectors.unitarity_defect() <= 1e-9);
        let sum: f64 = e.values.iter().sum();
        let tr = h.trace().re;
        prop_assert!((sum - tr).abs() <= 1e-9 * tr.abs().max(1.0));
        prop_assert!((&e.reconstruct() - &h).max_abs() <= 1e-9 * h.max_abs().max(1.0));
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn ode_matches_damped_rotation(
        a in 0.0f64..3.0,
        w in -10.0f64..10.0,
        x0 in -1.0f64..1.0,
        y0 in -1.0f64..1.0,
        t_end in 0.1f64..5.0,
    ) {
        let tol = 1e-9;
        let times: Vec<f64> = (1..=10).map(|k| (t_end * k as f64 / 10.0).min(t_end)).collect();
        let traj = integrate_ode(
            |_, y, dy| {
                dy[0] = -a * y[0] + w * y[1];
                dy[1] = -w * y[0] - a * y[1];
            },
            &[x0, y0],
            (0.0, t_end),
            &times,
            &OdeOptions::with_tol(tol),
        )
        .unwrap();
        for (t, s) in times.iter().zip(&traj.states) {
            let damp = (-a * t).exp();
            let (c, sn) = ((w * t).cos(), (w * t).sin());
            let ex = damp * (c * x0 + sn * y0);
            let ey = damp * (-sn * x0 + c * y0);
            prop_assert!((s[0] - ex).abs() <= 10.0 * tol * t_end.max(1.0) * (1.0 + w.abs()), "{} vs {}", s[0], ex);
            prop_assert!((s[1] - ey).abs() <= 10.0 * tol * t_end.max(1.0) * (1.0 + w.abs()), "{} vs {}", s[1], ey);
        }
    }

    #[test]
    fn least_squares_round_trip(
        amp in 0.5f64..2.0,
        rate in 0.3f64..3.0,
        offset in -0.5f64..0.5,
        jitter in 0.8f64..1.2,
    ) {
        let model = |t: f64, p: &[f64]| p[0] * (-p[1] * t).exp() + p[2];
        let t: Vec<f64> = (0..80).map(|k| 0.05 * k as f64).collect();
        let y: Vec<f64> = t.iter().map(|&x| model(x, &[amp, rate, offset])).collect();
        let fit = fit_least_squares(model, &t, &y, &[amp * jitter, rate / jitter, offset + 0.1], &FitOptions::default()).unwrap();
        prop_assert!(fit.converged);
        for (got, want) in fit.params.iter().zip([amp, rate, offset]) {
            prop_assert!((got - want).abs() <= 1e-6 * want.abs().max(1.0), "{got} vs {want}");
        }
    }
}
