use num_complex::Complex64 as C64;
use proptest::prelude::*;

use sqvac::reservoir::{
    attenuate, ideal_m, is_physical, population_from_thermal, thermal_from_population, variances, wigner, GridSpec,
    SqueezedReservoir,
};

fn physical() -> impl Strategy<Value = SqueezedReservoir> {
    (0.0f64..5.0, 0.0f64..=1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(n, frac, arg)| {
        let m = frac * (n * (n + 1.0)).sqrt();
        SqueezedReservoir::new(n, C64::from_polar(m, arg), 5.8989, 13.0, 0.0).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn variance_product_formula(r in physical()) {
        let v = variances(&r);
        let expected = (2.0 * r.n() + 1.0).powi(2) - 4.0 * r.m_abs().powi(2);
        prop_assert!((v.product() - expected).abs() <= 1e-9 * expected.max(1.0));
        prop_assert!(v.product() >= 1.0 - 1e-9);
    }

    #[test]
    fn ideal_squeezing_saturates_uncertainty(n in 0.0f64..5.0) {
        let m = ideal_m(n).unwrap();
        let r = SqueezedReservoir::real(n, m, 5.8989, 13.0).unwrap();
        prop_assert!((variances(&r).product() - 1.0).abs() <= 1e-9 * (2.0 * n + 1.0).powi(2));
    }

    #[test]
    fn attenuation_composes(r in physical(), a in 0.01f64..=1.0, b in 0.01f64..=1.0) {
        let two = attenuate(&attenuate(&r, a).unwrap(), b).unwrap();
        let one = attenuate(&r, a * b).unwrap();
        prop_assert!((two.n() - one.n()).abs() <= 1e-14 * r.n().max(1.0));
        prop_assert!((two.m() - one.m()).norm() <= 1e-14 * r.m_abs().max(1.0));
    }

    #[test]
    fn attenuation_preserves_physicality(r in physical(), eta in 0.001f64..=1.0) {
        let out = attenuate(&r, eta).unwrap();
        prop_assert!(is_physical(out.n(), out.m_abs()));
    }

    #[test]
    fn thermal_population_round_trip(n_th in 0.0f64..50.0) {
        let back = thermal_from_population(population_from_thermal(n_th)).unwrap();
        prop_assert!((back - n_th).abs() <= 1e-12 * n_th.max(1.0));
    }

    #[test]
    fn wigner_is_reflection_symmetric(r in physical(), n in 2usize..30) {
        let g = wigner(&variances(&r), &GridSpec::square(3.0, n)).unwrap();
        for a in 0..n {
            for b in 0..n {
                let w = g.values[a][b];
                prop_assert!((w - g.values[n - 1 - a][b]).abs() <= 1e-15 * w.max(1.0));
                prop_assert!((w - g.values[a][n - 1 - b]).abs() <= 1e-15 * w.max(1.0));
            }
        }
    }
}
