//! Threshold analysis by two-sided shooting: resonance/eigenvalue
//! classification, Wronskians, simplicity and zero counts.

mod potential;

pub use potential::{
    assemble_hermitian_dirac, gauge_symmetrize, pauli_at, pauli_decompose, GaugeTransform, Mat2, MatrixPotential,
    PauliSamples, SampledPotential,
};

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::Serialize;

use crate::closed_forms::{m_prime, potential_m_forms};
use crate::discretization::ConjugateSign;
use crate::error::{Error, Result};
use crate::params::ModelParams;

pub type Spinor = [Complex64; 2];

/// Tail mass of `|V|` neglected beyond the integration window.
pub const TAIL_TOL: f64 = 1e-12;
/// Relative connection determinant below which two sides match.
pub const MATCH_TOL: f64 = 1e-6;
/// Relative size of a boundary limit treated as zero.
pub const LIMIT_TOL: f64 = 1e-6;
const BLOW_UP: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    None,
    Resonance,
    Eigenvalue,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::None => "none",
            Classification::Resonance => "resonance",
            Classification::Eigenvalue => "eigenvalue",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ShootOptions {
    pub initial_steps: usize,
    pub rel_tol: f64,
    pub max_doublings: usize,
    /// Use exactly this many RK4 steps, without step control.
    pub fixed_steps: Option<usize>,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { initial_steps: 512, rel_tol: 1e-11, max_doublings: 10, fixed_steps: None }
    }
}

/// Two columns propagated through the first-order system on a uniform grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub xs: Vec<f64>,
    pub first: Vec<Spinor>,
    pub second: Vec<Spinor>,
    pub steps: usize,
}

/// One-sided threshold solution: the bounded branch and its secular
/// companion, sampled from the outer end of the window to 0.
#[derive(Debug, Clone)]
pub struct ShotSolution {
    pub side: Side,
    pub lambda: f64,
    pub m: f64,
    pub cutoff: f64,
    pub bounded: Trajectory,
}

impl ShotSolution {
    pub fn at_origin(&self) -> Spinor {
        *self.bounded.first.last().expect("trajectory is never empty")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub lambda: f64,
    pub l_minus: Complex64,
    pub l_plus: Complex64,
    /// Smaller of the two one-sided decay rates of the decaying component.
    pub decay_exponent: Option<f64>,
    pub decay_exponents: [Option<f64>; 2],
    pub classification: Classification,
    pub wronskian_drift: f64,
    pub matched: bool,
    pub match_defect: f64,
    /// The matched solution has no decaying component at all (free case).
    pub trivial_branch: bool,
    pub cutoff: f64,
    pub steps: usize,
}

fn system_matrix(v: &Mat2, m: f64, lambda: f64) -> [[Complex64; 2]; 2] {
    let b11 = Complex64::new(lambda - m, 0.0) - v[0][0];
    let b12 = -v[0][1];
    let b21 = -v[1][0];
    let b22 = Complex64::new(lambda + m, 0.0) - v[1][1];
    // (D_m + V) psi = lambda psi with D_m = m sigma_3 + i sigma_2 d/dx.
    [[-b21, -b22], [b11, b12]]
}

fn apply(k: &[[Complex64; 2]; 2], y: &Spinor) -> Spinor {
    [k[0][0] * y[0] + k[0][1] * y[1], k[1][0] * y[0] + k[1][1] * y[1]]
}

fn axpy(y: &Spinor, a: f64, d: &Spinor) -> Spinor {
    [y[0] + d[0] * a, y[1] + d[1] * a]
}

fn spinor_norm(y: &Spinor) -> f64 {
    (y[0].norm_sqr() + y[1].norm_sqr()).sqrt()
}

fn rk4(
    potential: &MatrixPotential,
    m: f64,
    lambda: f64,
    from: f64,
    to: f64,
    init: [Spinor; 2],
    steps: usize,
) -> Result<Trajectory> {
    let h = (to - from) / steps as f64;
    let k_at = |x: f64| system_matrix(&potential.value(x), m, lambda);
    let mut xs = Vec::with_capacity(steps + 1);
    let mut first = Vec::with_capacity(steps + 1);
    let mut second = Vec::with_capacity(steps + 1);
    let (mut a, mut b) = (init[0], init[1]);
    xs.push(from);
    first.push(a);
    second.push(b);
    let mut k_lo = k_at(from);
    for s in 0..steps {
        let x = from + s as f64 * h;
        let k_mid = k_at(x + 0.5 * h);
        let k_hi = k_at(if s + 1 == steps { to } else { x + h });
        let step = |y: &Spinor| {
            let d1 = apply(&k_lo, y);
            let d2 = apply(&k_mid, &axpy(y, 0.5 * h, &d1));
            let d3 = apply(&k_mid, &axpy(y, 0.5 * h, &d2));
            let d4 = apply(&k_hi, &axpy(y, h, &d3));
            let mut out = *y;
            for c in 0..2 {
                out[c] += (d1[c] + (d2[c] + d3[c]) * 2.0 + d4[c]) * (h / 6.0);
            }
            out
        };
        a = step(&a);
        b = step(&b);
        k_lo = k_hi;
        let xn = x + h;
        if !(spinor_norm(&a) <= BLOW_UP) || !(spinor_norm(&b) <= BLOW_UP) {
            return Err(Error::BlowUp { x: xn });
        }
        xs.push(if s + 1 == steps { to } else { xn });
        first.push(a);
        second.push(b);
    }
    Ok(Trajectory { xs, first, second, steps })
}

/// Propagates two initial columns from `from` to `to` with RK4, doubling the
/// step count until both end values agree to `opts.rel_tol`.
pub fn propagate(
    potential: &MatrixPotential,
    m: f64,
    lambda: f64,
    from: f64,
    to: f64,
    init: [Spinor; 2],
    opts: &ShootOptions,
) -> Result<Trajectory> {
    if let Some(steps) = opts.fixed_steps {
        return rk4(potential, m, lambda, from, to, init, steps.max(1));
    }
    let mut steps = opts.initial_steps.max(8);
    let mut coarse = rk4(potential, m, lambda, from, to, init, steps)?;
    for _ in 0..opts.max_doublings {
        steps *= 2;
        let fine = rk4(potential, m, lambda, from, to, init, steps)?;
        let end = |t: &Trajectory| (*t.first.last().unwrap(), *t.second.last().unwrap());
        let ((fa, fb), (ca, cb)) = (end(&fine), end(&coarse));
        let diff = spinor_norm(&[fa[0] - ca[0], fa[1] - ca[1]]) + spinor_norm(&[fb[0] - cb[0], fb[1] - cb[1]]);
        let scale = spinor_norm(&fa) + spinor_norm(&fb);
        if diff <= opts.rel_tol * scale.max(1.0) {
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(Error::solver(format!("step control did not converge with {steps} steps")))
}

fn unit(k: usize) -> Spinor {
    let mut s = [Complex64::new(0.0, 0.0); 2];
    s[k] = Complex64::new(1.0, 0.0);
    s
}

/// Index of the component that stays bounded but need not decay at the
/// threshold `lambda`: the upper one at `+m`, the lower one at `-m`.
fn plateau_component(lambda: f64) -> usize {
    if lambda >= 0.0 {
        0
    } else {
        1
    }
}

fn check_threshold(m: f64, lambda: f64) -> Result<()> {
    if !(m > 0.0) || ((lambda.abs() - m).abs() > 1e-12 * m) {
        return Err(Error::invalid(format!("lambda = {lambda} is not a threshold of mass {m}")));
    }
    Ok(())
}

pub fn shoot_threshold(potential: &MatrixPotential, m: f64, side: Side, lambda: f64) -> Result<ShotSolution> {
    let cutoff = potential.tail_cutoff(TAIL_TOL);
    shoot_threshold_with(potential, m, side, lambda, cutoff, &ShootOptions::default())
}

/// Integrates from `-cutoff` (left) or `+cutoff` (right) towards 0 starting
/// on the bounded branch; the companion column starts on the secular one.
pub fn shoot_threshold_with(
    potential: &MatrixPotential,
    m: f64,
    side: Side,
    lambda: f64,
    cutoff: f64,
    opts: &ShootOptions,
) -> Result<ShotSolution> {
    check_threshold(m, lambda)?;
    let plateau = plateau_component(lambda);
    let start = match side {
        Side::Left => -cutoff,
        Side::Right => cutoff,
    };
    let bounded = propagate(potential, m, lambda, start, 0.0, [unit(plateau), unit(1 - plateau)], opts)?;
    Ok(ShotSolution { side, lambda, m, cutoff, bounded })
}

/// `max |W(x) - W(0)| / max(1, |W(0)|)` for `W = det(phi | xi)`, where the
/// last sample is taken as the reference point.
pub fn wronskian_check(phi: &[Spinor], xi: &[Spinor]) -> f64 {
    let w: Vec<Complex64> = phi.iter().zip(xi).map(|(a, b)| a[0] * b[1] - a[1] * b[0]).collect();
    let Some(&w0) = w.last() else { return 0.0 };
    let drift = w.iter().map(|wx| (wx - w0).norm()).fold(0.0, f64::max);
    drift / w0.norm().max(1.0)
}

/// Fits `ln|f| = a - rate |x|` over `0.35 X <= |x| <= 0.65 X` and returns the
/// rate if the fit is clean (`R^2 > 0.999`) and decaying.
fn decay_fit(xs: &[f64], f: impl Fn(usize) -> f64, cutoff: f64) -> Option<f64> {
    let mut pts = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        let ax = x.abs();
        let val = f(i);
        if ax >= 0.35 * cutoff && ax <= 0.65 * cutoff && val > 0.0 {
            pts.push((ax, val.ln()));
        }
    }
    if pts.len() < 8 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = sxy * sxy / (sxx * syy);
    (r2 > 0.999 && slope < 0.0).then_some(-slope)
}

/// Matches the two one-sided solutions at 0 and classifies the threshold.
pub fn classify_threshold(left: &ShotSolution, right: &ShotSolution) -> Result<ThresholdReport> {
    if left.side != Side::Left || right.side != Side::Right {
        return Err(Error::invalid("expected a left and a right shot"));
    }
    if (left.lambda - right.lambda).abs() > 1e-14 * left.lambda.abs().max(1.0) {
        return Err(Error::invalid("shots are at different energies"));
    }
    let lambda = left.lambda;
    let plateau = plateau_component(lambda);
    let decaying = 1 - plateau;
    let (a, b) = (left.at_origin(), right.at_origin());
    let (na, nb) = (spinor_norm(&a), spinor_norm(&b));
    if na == 0.0 && nb == 0.0 {
        return Err(Error::MatchingSingularity("both solutions vanish at 0".into()));
    }
    let det = a[0] * b[1] - a[1] * b[0];
    let match_defect = det.norm() / (na * nb).max(f64::MIN_POSITIVE);
    let matched = match_defect < MATCH_TOL;

    let wronskian_drift = wronskian_check(&left.bounded.first, &left.bounded.second)
        .max(wronskian_check(&right.bounded.first, &right.bounded.second));

    // Right solution rescaled so that it continues the left one through 0.
    let scale = if nb > 0.0 { (b[0].conj() * a[0] + b[1].conj() * a[1]) / (nb * nb) } else { Complex64::new(0.0, 0.0) };
    let l_minus = left.bounded.first[0][plateau];
    let l_plus = scale * right.bounded.first[0][plateau];

    let sup_left = left.bounded.first.iter().map(spinor_norm).fold(0.0, f64::max);
    let sup_right = right.bounded.first.iter().map(spinor_norm).fold(0.0, f64::max) * scale.norm();
    let sup = sup_left.max(sup_right);
    let decay_left = left.bounded.first.iter().map(|s| s[decaying].norm()).fold(0.0, f64::max);
    let decay_right = right.bounded.first.iter().map(|s| s[decaying].norm()).fold(0.0, f64::max);
    let trivial_branch = matched && decay_left.max(decay_right) <= 1e-14 * sup;

    let fit = |s: &ShotSolution| decay_fit(&s.bounded.xs, |i| s.bounded.first[i][decaying].norm(), s.cutoff);
    let decay_exponents = [fit(left), fit(right)];
    let decay_exponent = match decay_exponents {
        [Some(l), Some(r)] => Some(l.min(r)),
        [l, r] => l.or(r),
    };

    let vanishing = |l: Complex64| l.norm() < LIMIT_TOL * sup;
    let classification = if !matched || trivial_branch {
        Classification::None
    } else if vanishing(l_minus) && vanishing(l_plus) {
        let left_fit = decay_fit(&left.bounded.xs, |i| left.bounded.first[i][plateau].norm(), left.cutoff);
        let right_fit = decay_fit(&right.bounded.xs, |i| right.bounded.first[i][plateau].norm(), right.cutoff);
        if left_fit.is_some() && right_fit.is_some() {
            Classification::Eigenvalue
        } else {
            Classification::None
        }
    } else {
        Classification::Resonance
    };

    Ok(ThresholdReport {
        lambda,
        l_minus,
        l_plus,
        decay_exponent,
        decay_exponents,
        classification,
        wronskian_drift,
        matched,
        match_defect,
        trivial_branch,
        cutoff: left.cutoff,
        steps: left.bounded.steps.max(right.bounded.steps),
    })
}

/// Shoots from both sides at `lambda` and classifies.
pub fn threshold_report(potential: &MatrixPotential, m: f64, lambda: f64) -> Result<ThresholdReport> {
    let left = shoot_threshold(potential, m, Side::Left, lambda)?;
    let right = shoot_threshold(potential, m, Side::Right, lambda)?;
    classify_threshold(&left, &right)
}

/// Global matched solution on `[-X, X]`, normalized by its sup norm, with
/// the right half rescaled to continue the left half.
pub fn matched_solution(left: &ShotSolution, right: &ShotSolution) -> (Vec<f64>, Vec<Spinor>) {
    let (a, b) = (left.at_origin(), right.at_origin());
    let nb2 = b[0].norm_sqr() + b[1].norm_sqr();
    let scale = (b[0].conj() * a[0] + b[1].conj() * a[1]) / nb2;
    let mut xs = left.bounded.xs.clone();
    let mut vals = left.bounded.first.clone();
    for (x, s) in right.bounded.xs.iter().zip(&right.bounded.first).rev().skip(1) {
        xs.push(*x);
        vals.push([s[0] * scale, s[1] * scale]);
    }
    let sup = vals.iter().map(spinor_norm).fold(0.0, f64::max);
    for v in &mut vals {
        v[0] /= sup;
        v[1] /= sup;
    }
    (xs, vals)
}

#[derive(Debug, Clone, Serialize)]
pub struct SimplicityReport {
    /// Dimension of the space of solutions bounded on both sides.
    pub dimension: usize,
    pub singular_values: [f64; 2],
    pub trivial_branch: bool,
    pub cutoff: f64,
}

/// Counts independent solutions bounded at both ends. Propagates the
/// fundamental matrix from 0 outwards; boundedness at each end is one linear
/// condition (the secular coefficient, i.e. the decaying component at the
/// window edge, must vanish), so the dimension is `2 - rank`.
pub fn simplicity_check(potential: &MatrixPotential, m: f64, lambda: f64) -> Result<SimplicityReport> {
    check_threshold(m, lambda)?;
    let cutoff = potential.tail_cutoff(TAIL_TOL);
    let opts = ShootOptions::default();
    let decaying = 1 - plateau_component(lambda);
    let right = propagate(potential, m, lambda, 0.0, cutoff, [unit(0), unit(1)], &opts)?;
    let left = propagate(potential, m, lambda, 0.0, -cutoff, [unit(0), unit(1)], &opts)?;
    let row = |t: &Trajectory| {
        let (c0, c1) = (t.first.last().unwrap(), t.second.last().unwrap());
        [c0[decaying], c1[decaying]]
    };
    let rows = [row(&right), row(&left)];
    let mat = Matrix2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1]);
    let sv = mat.svd(false, false).singular_values;
    let (s_max, s_min) = (sv[0].max(sv[1]), sv[0].min(sv[1]));
    let frob = |t: &Trajectory| {
        let (c0, c1) = (t.first.last().unwrap(), t.second.last().unwrap());
        (spinor_norm(c0).powi(2) + spinor_norm(c1).powi(2)).sqrt()
    };
    let reference = frob(&right).max(frob(&left));
    let small = |s: f64| s < MATCH_TOL * reference.max(s_max);
    let rank = if s_max < MATCH_TOL * reference {
        0
    } else if small(s_min) {
        1
    } else {
        2
    };
    let dimension = 2 - rank;
    let trivial_branch = dimension == 1 && potential.l1_norm() <= TAIL_TOL;
    Ok(SimplicityReport { dimension, singular_values: [s_max, s_min], trivial_branch, cutoff })
}

/// Strict sign changes between consecutive nonzero samples.
pub fn count_sign_changes(f: &[f64]) -> usize {
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in f {
        if v != 0.0 && v.is_finite() {
            if last != 0.0 && (v > 0.0) != (last > 0.0) {
                count += 1;
            }
            last = v;
        }
    }
    count
}

#[derive(Debug, Clone, Serialize)]
pub struct KneserReport {
    pub sup_value: f64,
    pub pass: bool,
    pub window: (f64, f64),
}

/// `sup x^2 q(x)` over `R <= |x| <= x_max`.
pub fn kneser_sup<F: Fn(f64) -> f64>(q: F, r: f64, x_max: f64, samples: usize) -> f64 {
    let dx = (x_max - r) / samples as f64;
    (0..=samples)
        .flat_map(|k| {
            let x = r + k as f64 * dx;
            [x, -x]
        })
        .map(|x| x * x * q(x))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Kneser test for both Schrodinger conjugates at energy `lambda` (in the
/// squared frame): `q = lambda - M^2 -+ M'` must satisfy `x^2 q < 1/4` for
/// `|x| > R`.
pub fn kneser_check(params: &ModelParams, lambda: f64, r: f64) -> KneserReport {
    let x_max = (2.0 * r).max(r + 80.0 / (params.p() * params.kappa()));
    let q = |s: f64| {
        move |x: f64| {
            let mass = potential_m_forms(params, x).0;
            lambda - mass * mass - s * m_prime(params, x)
        }
    };
    let sup_value = kneser_sup(q(1.0), r, x_max, 20_000).max(kneser_sup(q(-1.0), r, x_max, 20_000));
    KneserReport { sup_value, pass: sup_value < 0.25, window: (r, x_max) }
}

/// Numerov solution of `-y'' + (M^2 + s M') y = lambda y` on `[-X, X]`
/// with `n` nodes, started with zero slope at `-X`.
pub fn schrodinger_solution(
    params: &ModelParams,
    sign: ConjugateSign,
    lambda: f64,
    half_length: f64,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 3 || !(half_length > 0.0) {
        return Err(Error::invalid("need at least 3 nodes and a positive window"));
    }
    let s = match sign {
        ConjugateSign::Minus => -1.0,
        ConjugateSign::Plus => 1.0,
    };
    let h = 2.0 * half_length / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|j| -half_length + j as f64 * h).collect();
    let q: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let mass = potential_m_forms(params, x).0;
            mass * mass + s * m_prime(params, x) - lambda
        })
        .collect();
    let w = |j: usize| 1.0 - h * h * q[j] / 12.0;
    let mut y = vec![0.0; n];
    y[0] = 1.0;
    y[1] = 1.0 + 0.5 * h * h * q[0];
    for j in 1..n - 1 {
        y[j + 1] = (2.0 * y[j] * (1.0 + 5.0 * h * h * q[j] / 12.0) - y[j - 1] * w(j - 1)) / w(j + 1);
        if !y[j + 1].is_finite() {
            return Err(Error::BlowUp { x: xs[j + 1] });
        }
    }
    Ok((xs, y))
}

pub fn schrodinger_zero_count(
    params: &ModelParams,
    sign: ConjugateSign,
    lambda: f64,
    half_length: f64,
    n: usize,
) -> Result<usize> {
    let (_, y) = schrodinger_solution(params, sign, lambda, half_length, n)?;
    Ok(count_sign_changes(&y))
}

/// Sign changes of the upper component of the solution started on the
/// bounded branch at `-half_length` and integrated to 0 at energy `lambda`.
pub fn shot_sign_changes(potential: &MatrixPotential, m: f64, lambda: f64, half_length: f64) -> Result<usize> {
    let plateau = plateau_component(lambda);
    let t = propagate(
        potential,
        m,
        lambda,
        -half_length,
        0.0,
        [unit(plateau), unit(1 - plateau)],
        &ShootOptions::default(),
    )?;
    let upper: Vec<f64> = t.first.iter().map(|s| s[0].re).collect();
    Ok(count_sign_changes(&upper))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_threshold_solution_is_constant() {
        let shot = shoot_threshold(&MatrixPotential::Free, 1.0, Side::Left, 1.0).unwrap();
        for s in &shot.bounded.first {
            assert_eq!(s[0], Complex64::new(1.0, 0.0));
            assert_eq!(s[1], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn free_case_is_trivial_not_resonant() {
        let r = threshold_report(&MatrixPotential::Free, 1.0, 1.0).unwrap();
        assert!(r.matched && r.trivial_branch);
        assert_eq!(r.classification, Classification::None);
        assert!(r.wronskian_drift < 1e-12);
    }

    #[test]
    fn colinear_columns_have_zero_wronskian() {
        let phi: Vec<Spinor> =
            (0..10).map(|k| [Complex64::new(k as f64, 1.0), Complex64::new(0.5, -(k as f64))]).collect();
        let xi: Vec<Spinor> = phi.iter().map(|s| [s[0] * 2.0, s[1] * 2.0]).collect();
        assert_eq!(wronskian_check(&phi, &xi), 0.0);
    }

    #[test]
    fn sign_changes_of_sine() {
        let f: Vec<f64> = (0..1000).map(|k| (10.0 * std::f64::consts::PI * k as f64 / 999.0).sin()).collect();
        // Nine interior zeros; the last sample is -1.2e-15, on the same side as its neighbour.
        assert_eq!(count_sign_changes(&f), 9);
    }

    #[test]
    fn non_threshold_energy_is_rejected() {
        assert!(shoot_threshold(&MatrixPotential::Free, 1.0, Side::Left, 0.5).is_err());
    }
}
