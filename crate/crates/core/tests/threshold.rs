use diracgap::discretization::ConjugateSign;
use diracgap::grid::build_grid;
use diracgap::threshold::{
    assemble_hermitian_dirac, gauge_symmetrize, kneser_check, pauli_decompose, propagate, schrodinger_zero_count,
    shoot_threshold_with, threshold_report, wronskian_check, Mat2, MatrixPotential, SampledPotential, ShootOptions,
    Side, Spinor,
};
use diracgap::{Error, ModelParams};
use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn sampled(f: impl Fn(f64) -> Mat2) -> MatrixPotential {
    let xs: Vec<f64> = (0..=2400).map(|k| -12.0 + 0.01 * k as f64).collect();
    let values = xs.iter().map(|&x| f(x)).collect();
    MatrixPotential::Sampled(SampledPotential::new(xs, values).unwrap())
}

/// Soler potential at p = 1 plus `alpha_2 sigma_2` with `alpha_2 = exp(-x^2)`.
fn twisted() -> MatrixPotential {
    let soler = MatrixPotential::Soler(ModelParams::reference());
    sampled(|x| {
        let mut v = soler.value(x);
        let a2 = Complex64::from((-x * x).exp());
        v[0][1] -= I * a2;
        v[1][0] += I * a2;
        v
    })
}

#[test]
fn gauge_removes_alpha2() {
    let g = gauge_symmetrize(&twisted()).unwrap();
    let d = pauli_decompose(&g.potential, None).unwrap();
    let worst = d.alpha[2].iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(worst < 1e-12, "{worst}");
    // theta = -int_0^x exp(-t^2)
    let want = -0.5 * std::f64::consts::PI.sqrt() * 0.842_700_792_949_714_9;
    assert!((g.phase(1.0) - want).abs() < 1e-8, "{} vs {want}", g.phase(1.0));
}

#[test]
fn gauge_preserves_solution_moduli() {
    let original = twisted();
    let sym = gauge_symmetrize(&original).unwrap().potential;
    let one = Complex64::from(1.0);
    let zero = Complex64::from(0.0);
    let init: [Spinor; 2] = [[one, zero], [zero, one]];
    let opts = ShootOptions::default();
    let a = propagate(&original, 1.0, 0.3, -6.0, 6.0, init, &opts).unwrap();
    let b = propagate(&sym, 1.0, 0.3, -6.0, 6.0, init, &opts).unwrap();
    let mut worst = 0.0f64;
    for (x, y) in a.first.iter().zip(&b.first).step_by(16).chain(a.first.iter().zip(&b.first).next_back()) {
        let scale = x[0].norm().max(x[1].norm()).max(1.0);
        for k in 0..2 {
            worst = worst.max((x[k].norm() - y[k].norm()).abs() / scale);
        }
    }
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn gauge_preserves_discrete_eigenvalues() {
    let original = twisted();
    let sym = gauge_symmetrize(&original).unwrap().potential;
    let grid = build_grid(12.0, 1200).unwrap();
    let a = assemble_hermitian_dirac(1.0, &grid, &original).unwrap();
    let b = assemble_hermitian_dirac(1.0, &grid, &sym).unwrap();
    let ea = a.eigenvalues_in(-1.0, 1.0);
    let eb = b.eigenvalues_in(-1.0, 1.0);
    assert_eq!(ea.len(), eb.len());
    assert!(!ea.is_empty());
    for (x, y) in ea.iter().zip(&eb) {
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn complex_alpha2_is_rejected() {
    let v = sampled(|x| {
        let b = Complex64::from(0.3 * (-x * x).exp());
        [[Complex64::from(0.0), b], [Complex64::from(0.0), Complex64::from(0.0)]]
    });
    assert!(matches!(gauge_symmetrize(&v), Err(Error::AssumptionViolated(_))));
}

#[test]
fn sigma1_conjugation_swaps_thresholds() {
    for p in [0.8, 1.0, 2.0] {
        let v = MatrixPotential::Soler(ModelParams::new(1.0, 0.5, p, 0.0).unwrap());
        let lower = threshold_report(&v, 1.0, -1.0).unwrap();
        let upper = threshold_report(&v.sigma1_conjugated(), 1.0, 1.0).unwrap();
        assert_eq!(lower.classification, upper.classification);
        assert!((lower.match_defect - upper.match_defect).abs() < 1e-10);
        assert!((lower.l_minus - upper.l_minus).norm() < 1e-10);
        assert!((lower.l_plus - upper.l_plus).norm() < 1e-10);
    }
}

#[test]
fn wronskian_drift_shrinks_with_step() {
    let v = MatrixPotential::Soler(ModelParams::reference());
    let cutoff = v.tail_cutoff(1e-12);
    let drift = |steps| {
        let opts = ShootOptions { fixed_steps: Some(steps), ..ShootOptions::default() };
        let s = shoot_threshold_with(&v, 1.0, Side::Left, 1.0, cutoff, &opts).unwrap();
        wronskian_check(&s.bounded.first, &s.bounded.second)
    };
    let (coarse, fine) = (drift(64), drift(128));
    assert!(coarse > 1e-12, "{coarse}");
    assert!(fine * 4.0 <= coarse, "{coarse} -> {fine}");
}

#[test]
fn kneser_margin_at_reference() {
    let k = kneser_check(&ModelParams::reference(), 1.0, 30.0);
    assert!(k.pass && k.sup_value < 1e-6, "{}", k.sup_value);
}

#[test]
fn schrodinger_zero_counts_are_stable() {
    let pm = ModelParams::reference();
    for sign in [ConjugateSign::Minus, ConjugateSign::Plus] {
        let counts: Vec<usize> =
            [4001, 8001, 16001].iter().map(|&n| schrodinger_zero_count(&pm, sign, 1.0, 40.0, n).unwrap()).collect();
        assert!(counts.windows(2).all(|w| w[0] == w[1]), "{sign:?}: {counts:?}");
    }
}
