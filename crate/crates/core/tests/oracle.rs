//! Closed forms checked against a 256-bit evaluation of an algebraically
//! different expression: `g = (m - omega) / (cosh^2 - nu sinh^2)`.

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use diracgap::closed_forms::{constants, g_profile};
use diracgap::ModelParams;

const P: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

fn big(x: f64) -> BigFloat {
    BigFloat::from_f64(x, P)
}

fn to_f64(x: &BigFloat, cc: &mut Consts) -> f64 {
    x.format(Radix::Dec, RM, cc).unwrap().parse().unwrap()
}

fn g_oracle(m: f64, omega: f64, x: f64, cc: &mut Consts) -> f64 {
    let (m, omega, x) = (big(m), big(omega), big(x));
    let kappa = m.sub(&omega, P, RM).mul(&m.add(&omega, P, RM), P, RM).sqrt(P, RM);
    let nu = m.sub(&omega, P, RM).div(&m.add(&omega, P, RM), P, RM);
    let y = kappa.mul(&x, P, RM);
    let ch = y.cosh(P, RM, cc);
    let sh = y.sinh(P, RM, cc);
    let den = ch.mul(&ch, P, RM).sub(&nu.mul(&sh, P, RM).mul(&sh, P, RM), P, RM);
    to_f64(&m.sub(&omega, P, RM).div(&den, P, RM), cc)
}

#[test]
fn profile_matches_extended_precision() {
    let mut cc = Consts::new().unwrap();
    for (omega, x) in [(0.5, 1.0), (0.5, 0.0), (0.2, 3.7), (0.8, -12.5), (0.5, 25.0)] {
        let pm = ModelParams::new(1.0, omega, 1.0, 0.0).unwrap();
        let want = g_oracle(1.0, omega, x, &mut cc);
        let got = g_profile(&pm, x);
        // sech^2(y) has condition number about 2|y|, so rounding in kappa x is amplified.
        let tol = 4.0 * f64::EPSILON * (1.0 + 2.0 * (pm.kappa() * x).abs()) * want;
        assert!((got - want).abs() <= tol, "omega={omega} x={x}: {got} vs {want}");
    }
}

#[test]
fn reference_profile_value() {
    let mut cc = Consts::new().unwrap();
    let pm = ModelParams::reference();
    let want = g_oracle(1.0, 0.5, 1.0, &mut cc);
    assert!((g_profile(&pm, 1.0) - want).abs() <= 2.0 * f64::EPSILON * want);
}

#[test]
fn log_ratio_matches_extended_precision() {
    let mut cc = Consts::new().unwrap();
    let pm = ModelParams::reference();
    let c = constants(&pm).unwrap();
    let (m, omega) = (big(1.0), big(0.5));
    let kappa = m.mul(&m, P, RM).sub(&omega.mul(&omega, P, RM), P, RM).sqrt(P, RM);
    let want = to_f64(&m.add(&kappa, P, RM).div(&omega, P, RM).ln(P, RM, &mut cc), &mut cc);
    assert!((c.log_ratio - want).abs() <= 4.0 * f64::EPSILON * want);
    // E_star reduces to this logarithm at p = 1.
    assert!((c.e_star - want).abs() < 1e-9, "{} vs {want}", c.e_star);
}
