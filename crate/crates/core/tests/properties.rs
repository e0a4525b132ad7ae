use diracgap::closed_forms::{g_prime, g_profile, m_prime, potential_m_forms, potential_w, solitary_wave};
use diracgap::discretization::assemble_a;
use diracgap::grid::build_grid;
use diracgap::spectral::gap_eigs;
use diracgap::ModelParams;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (0.05f64..0.95, 0.3f64..4.0).prop_map(|(omega, p)| ModelParams::new(1.0, omega, p, 0.0).unwrap())
}

proptest! {
    #[test]
    fn profile_is_even_and_bounded(pm in params(), x in -60.0f64..60.0) {
        let g = g_profile(&pm, x);
        prop_assert_eq!(g, g_profile(&pm, -x));
        prop_assert!(g >= 0.0 && g <= pm.m() - pm.omega() + 1e-15);
    }

    #[test]
    fn derivatives_are_odd(pm in params(), x in -60.0f64..60.0) {
        prop_assert_eq!(g_prime(&pm, x), -g_prime(&pm, -x));
        prop_assert_eq!(m_prime(&pm, x), -m_prime(&pm, -x));
    }

    #[test]
    fn w_is_increasing_on_the_half_line(pm in params(), a in 0.0f64..30.0, b in 0.0f64..30.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(potential_w(&pm, lo) <= potential_w(&pm, hi));
    }

    #[test]
    fn mass_forms_agree(pm in params(), x in -40.0f64..40.0) {
        let (a, b) = potential_m_forms(&pm, x);
        prop_assert!((a - b).abs() <= 1e-12 * pm.m().max(a.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn solitary_wave_parity(pm in params(), x in -20.0f64..20.0) {
        let s = solitary_wave(&pm, x).unwrap();
        let r = solitary_wave(&pm, -x).unwrap();
        prop_assert!(s.c1 > 0.0);
        prop_assert!((s.c1 - r.c1).abs() <= 1e-14 * s.c1.abs().max(1e-300));
        prop_assert!((s.c2 + r.c2).abs() <= 1e-14 * s.c1.abs().max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gap_spectrum_is_symmetric(omega in 0.2f64..0.8, p in 0.7f64..3.0) {
        let pm = ModelParams::new(1.0, omega, p, 0.0).unwrap();
        let grid = build_grid(40.0 / pm.kappa(), 512).unwrap();
        let r = gap_eigs(&assemble_a(&pm, &grid)).unwrap();
        let e = &r.eigenvalues;
        let k = e.len();
        prop_assert!(k.is_multiple_of(2), "{:?}", e);
        for i in 0..k {
            prop_assert!((e[i] + e[k - 1 - i]).abs() < 1e-10, "{:?}", e);
        }
    }
}
