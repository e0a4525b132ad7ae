//! Numerical execution of the min-max argument for an eigenvalue of
//! `A_{1-eps}` emerging just below `m`.
//!
//! The sup of the Rayleigh quotient over `F_- + span{Lambda_+ psi_delta}` is
//! the top eigenvalue of a bordered operator, found from its secular
//! equation. Solves on `F_-` use a fixed point preconditioned by
//! `mu - (1-eps) A_1`, which commutes with the projector.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::projector::{RationalProjector, SpectralProjector};
use crate::closed_forms::{self, energy_density_forms, g_profile};
use crate::discretization::{assemble_a, w_sigma3_diagonal, DiscreteOperator, OperatorKind};
use crate::error::{Error, Result};
use crate::grid::{build_grid, Grid, GridSpinor};
use crate::params::ModelParams;
use crate::quadrature;
use crate::tridiag::{SymTridiagonal, TridiagLu};

#[derive(Debug, Clone, Serialize)]
pub struct MinMaxReport {
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
    /// Top of the quotient on `F_-` alone (Lanczos estimate).
    pub gamma0: f64,
    /// Sup of the quotient over `F_- + span{Lambda_+ psi_delta}`.
    pub gamma1_upper: f64,
    pub drop: f64,
    /// `drop / (eps delta)`, to be compared with `E_star`.
    pub drop_ratio: f64,
    /// `|Lambda_- psi_delta| / |psi_delta|`.
    pub lambda_lower_check: f64,
    /// `delta / (m + omega)`, the bound for the ratio above.
    pub lambda_lower_bound: f64,
    /// Quotient of the trial state itself.
    pub trial_energy: f64,
    /// Eigenvalue of `A_{1-eps}` at the min-max index; never above `gamma1_upper`.
    pub exact_level: f64,
    /// Next eigenvalue of `A_{1-eps}` after `exact_level`. The continuum
    /// starts at `m`, so this should not fall below `m - next_level_margin`.
    pub next_level: f64,
    pub next_level_margin: f64,
    pub half_length: f64,
    pub n: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `delta = eps^(1 + 2 alpha)`.
pub fn trial_delta(eps: f64, alpha: f64) -> f64 {
    eps.powf(1.0 + 2.0 * alpha)
}

/// Grid wide enough for the trial state: `L = max(9/delta, 40/kappa)`
/// at spacing at most `h`.
pub fn minmax_grid(params: &ModelParams, eps: f64, alpha: f64, h: f64) -> Result<Grid> {
    let delta = trial_delta(eps, alpha);
    let half = (9.0 / delta).max(40.0 / params.kappa());
    let mut n = (2.0 * half / h).ceil() as usize + 1;
    n += n % 2;
    build_grid(half, n.max(16))
}

/// Min-max bound with the rational projector.
pub fn gamma_bound(a1: &DiscreteOperator, eps: f64, alpha: f64) -> Result<MinMaxReport> {
    let proj = RationalProjector::new(a1, 1e-13)?;
    gamma_bound_with(a1, eps, alpha, &proj)
}

pub fn gamma_bound_with(
    a1: &DiscreteOperator,
    eps: f64,
    alpha: f64,
    proj: &dyn SpectralProjector,
) -> Result<MinMaxReport> {
    let params = a1.params();
    if a1.kind() != OperatorKind::Ap || params.p() != 1.0 {
        return Err(Error::invalid("gamma_bound needs A_p assembled at p = 1"));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1/2), got {alpha}")));
    }
    let (m, omega) = (params.m(), params.omega());
    let eps_max = (m - omega) / (3.0 * m - omega);
    if !(eps > 0.0 && eps < eps_max) {
        return Err(Error::invalid(format!("eps must lie in (0, {eps_max}), got {eps}")));
    }
    let delta = trial_delta(eps, alpha);
    let grid = a1.grid();
    if delta * grid.half_length() < 8.0 {
        return Err(Error::invalid(format!("domain too small for the trial state: need L >= {:.1}", 8.0 / delta)));
    }

    let psi = GridSpinor::sample(grid, |x| closed_forms::trial_state(params, delta, x).expect("p = 1 checked above"))
        .to_interleaved();
    let psi_norm = norm(&psi);
    let lower = proj.project_lower(&psi);
    let upper: Vec<f64> = psi.iter().zip(&lower).map(|(a, b)| a - b).collect();
    let upper_norm = norm(&upper);
    if upper_norm < 1e-12 * psi_norm {
        return Err(Error::RankDeficiency("upper projection of the trial state vanishes".into()));
    }
    let w: Vec<f64> = upper.iter().map(|x| x / upper_norm).collect();

    let wdiag = w_sigma3_diagonal(params, grid);
    let b_mat = a1.matrix().affine(1.0 - eps, eps, &wdiag);
    let scaled_a1 = a1.matrix().affine(1.0 - eps, 0.0, &wdiag);
    let a = dot(&w, &b_mat.matvec(&w));
    let coupling: Vec<f64> = proj.project_lower(&mul(&wdiag, &w, eps));

    let mut mu = a;
    let mut y = vec![0.0; w.len()];
    let mut converged = false;
    for _ in 0..50 {
        y = solve_on_lower(&scaled_a1, &wdiag, eps, mu, &coupling, proj, &y)?;
        // y = -(mu - C)^{-1} c, so this is mu - a - c^T (mu - C)^{-1} c.
        let f = mu - a + dot(&coupling, &y);
        let step = f / (1.0 + dot(&y, &y));
        mu -= step;
        if step.abs() <= 1e-15 * mu.abs() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::solver("secular Newton iteration did not converge"));
    }

    let gamma0 = lanczos_top(a1, &b_mat, proj)?;
    let exact_level = b_mat.eigenvalue(proj.lower_rank());
    let next_level = b_mat.eigenvalue(proj.lower_rank() + 1);
    let trial_energy = dot(&psi, &b_mat.matvec(&psi)) / (psi_norm * psi_norm);
    let drop = m - mu;
    Ok(MinMaxReport {
        epsilon: eps,
        delta,
        alpha,
        gamma0,
        gamma1_upper: mu,
        drop,
        drop_ratio: drop / (eps * delta),
        lambda_lower_check: norm(&lower) / psi_norm,
        lambda_lower_bound: delta / (m + omega),
        trial_energy,
        exact_level,
        next_level,
        next_level_margin: a1.suspect_margin(),
        half_length: grid.half_length(),
        n: grid.n(),
    })
}

fn mul(d: &[f64], v: &[f64], s: f64) -> Vec<f64> {
    d.iter().zip(v).map(|(a, b)| s * a * b).collect()
}

/// Solves `(mu - C) y = -b` on `F_-`, `C = Lambda_- B Lambda_-`, by
/// conjugate gradients preconditioned with `Lambda_- (mu - (1-eps) A_1)^{-1}`,
/// which is positive on `F_-` for `mu > omega`. The projection after the
/// solve matters: the shifted inverse is huge on `F_+` near `mu / (1-eps)`.
fn solve_on_lower(
    scaled_a1: &SymTridiagonal,
    wdiag: &[f64],
    eps: f64,
    mu: f64,
    b: &[f64],
    proj: &dyn SpectralProjector,
    start: &[f64],
) -> Result<Vec<f64>> {
    let lu = TridiagLu::factor(scaled_a1, mu, f64::EPSILON);
    // (mu - C) v for v in F_-, with B = (1-eps) A_1 + eps W sigma_3.
    let apply = |v: &[f64]| -> Vec<f64> {
        let bv = scaled_a1.matvec(v);
        let full: Vec<f64> = v.iter().zip(&bv).zip(wdiag).map(|((x, a), w)| mu * x - a - eps * w * x).collect();
        proj.project_lower(&full)
    };
    let target: Vec<f64> = b.iter().map(|x| -x).collect();
    let target_norm = norm(&target);
    if target_norm == 0.0 {
        return Ok(vec![0.0; b.len()]);
    }
    let mut y = start.to_vec();
    let ay = apply(&y);
    let mut r: Vec<f64> = target.iter().zip(&ay).map(|(t, a)| t - a).collect();
    let mut z = proj.project_lower(&lu.solve(&r));
    let mut d = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..500 {
        if norm(&r) <= 1e-13 * target_norm {
            return Ok(y);
        }
        let ad = apply(&d);
        let curvature = dot(&d, &ad);
        if !(curvature > 0.0) {
            return Err(Error::solver("secular system is not positive on the lower subspace"));
        }
        let step = rz / curvature;
        y.iter_mut().zip(&d).for_each(|(a, b)| *a += step * b);
        r.iter_mut().zip(&ad).for_each(|(a, b)| *a -= step * b);
        z = proj.project_lower(&lu.solve(&r));
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        d.iter_mut().zip(&z).for_each(|(a, b)| *a = b + beta * *a);
    }
    Err(Error::solver("secular solve did not converge"))
}

/// Largest Ritz value of `Lambda_- B Lambda_-` from a short Lanczos run
/// started at the discrete ground state, which is almost an eigenvector.
fn lanczos_top(a1: &DiscreteOperator, b_mat: &SymTridiagonal, proj: &dyn SpectralProjector) -> Result<f64> {
    let omega = a1.params().omega();
    let width = 0.2 * (a1.params().m() - omega);
    let t = a1.matrix();
    let ground = t
        .eigenvalues_in(omega - width, omega + width)
        .into_iter()
        .min_by(|x, y| (x - omega).abs().total_cmp(&(y - omega).abs()))
        .ok_or_else(|| Error::solver("no eigenvalue of A_1 near omega"))?;
    let start = proj.project_lower(&t.eigenvector(ground, &[])?);
    let steps = 10;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut v = start;
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut h = DMatrix::zeros(steps, steps);
    let mut used = 0;
    for j in 0..steps {
        basis.push(v.clone());
        let mut wv = proj.project_lower(&b_mat.matvec(&v));
        for (i, q) in basis.iter().enumerate() {
            let c = dot(q, &wv);
            if i + 1 >= j {
                h[(i, j)] = c;
                h[(j, i)] = c;
            }
            wv.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
        for q in &basis {
            let c = dot(q, &wv);
            wv.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
        used = j + 1;
        let beta = norm(&wv);
        if beta < 1e-13 || j + 1 == steps {
            break;
        }
        v = wv.iter().map(|x| x / beta).collect();
    }
    let small = h.view((0, 0), (used, used)).into_owned();
    let eig = SymmetricEigen::new(small);
    Ok(eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Both sides of `<psi_d, A_{1-eps} psi_d> = m |psi_d|^2 - eps delta int e^{-2 delta|x|} E`
/// by independent quadratures.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyDrop {
    pub lhs: f64,
    pub rhs: f64,
    pub norm_sq: f64,
    /// `int e^{-2 delta |x|} E / sup|psi|^2`.
    pub e_delta: f64,
}

impl EnergyDrop {
    pub fn relative_defect(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.rhs.abs()
    }
}

/// `2 int_0^X f` split at the end of the core region.
fn even_integral<F: Fn(f64) -> f64>(f: F, core: f64, cutoff: f64) -> Result<f64> {
    let inner = quadrature::integrate(&f, 0.0, core.min(cutoff), 1e-13)?;
    let outer = if cutoff > core { quadrature::integrate(&f, core, cutoff, 1e-13)? } else { 0.0 };
    Ok(2.0 * (inner + outer))
}

fn trial_cutoff(params: &ModelParams, delta: f64) -> f64 {
    let nu = params.nu();
    let amplitude = params.m() * delta * nu / ((1.0 - nu) * (1.0 - nu)) + 1.0;
    quadrature::tail_cutoff(amplitude, 2.0 * delta, 1e-15)
}

pub fn energy_drop_check(params: &ModelParams, eps: f64, delta: f64) -> Result<EnergyDrop> {
    params.require_unit_power("energy_drop_check")?;
    if !(delta > 0.0) || !(0.0..1.0).contains(&eps) {
        return Err(Error::invalid("need delta > 0 and 0 <= eps < 1"));
    }
    let m = params.m();
    let core = 40.0 / params.kappa();
    let cutoff = trial_cutoff(params, delta);
    let integrand = |x: f64| {
        let side = closed_forms::ThresholdSide::Plus;
        let psi = closed_forms::resonance_state(params, x, side).expect("p = 1");
        let dpsi = closed_forms::resonance_derivative(params, x, side).expect("p = 1");
        let eta = delta.sqrt() * (-delta * x).exp();
        let (f1, f2) = (eta * psi.c1, eta * psi.c2);
        let (d1, d2) = (eta * (dpsi.c1 - delta * psi.c1), eta * (dpsi.c2 - delta * psi.c2));
        let g = g_profile(params, x);
        let mass = m - 2.0 * g;
        let w = m - g;
        let a1 = (d2 + mass * f1, -d1 - mass * f2);
        let af = ((1.0 - eps) * a1.0 + eps * w * f1, (1.0 - eps) * a1.1 - eps * w * f2);
        f1 * af.0 + f2 * af.1
    };
    let lhs = even_integral(integrand, core, cutoff)?;
    let norm_sq =
        even_integral(|x| closed_forms::trial_state(params, delta, x).expect("p = 1").norm_sq(), core, cutoff)?;
    let weighted = weighted_energy(params, delta)?;
    let sup_sq = closed_forms::constants(params)?.psi_inf_sup.powi(2);
    Ok(EnergyDrop { lhs, rhs: m * norm_sq - eps * delta * weighted, norm_sq, e_delta: weighted / sup_sq })
}

fn weighted_energy(params: &ModelParams, delta: f64) -> Result<f64> {
    let core = 40.0 / params.kappa();
    let cutoff = quadrature::tail_cutoff(1e3, 2.0 * params.kappa(), 1e-16);
    even_integral(|x| (-2.0 * delta * x).exp() * energy_density_forms(params, x).1, core.min(cutoff), cutoff)
}

/// `int e^{-2 delta |x|} E / sup|psi|^2`, which tends to `E_star`.
pub fn e_delta(params: &ModelParams, delta: f64) -> Result<f64> {
    params.require_unit_power("e_delta")?;
    let sup_sq = closed_forms::constants(params)?.psi_inf_sup.powi(2);
    Ok(weighted_energy(params, delta)? / sup_sq)
}

/// Bisects on `eps` in `[lo, hi]` for a sign change of the drop. Returns
/// `None` when the drop has the same sign at both ends.
pub fn drop_threshold(
    params: &ModelParams,
    alpha: f64,
    lo: f64,
    hi: f64,
    h: f64,
    bisections: usize,
) -> Result<Option<f64>> {
    let drop_at = |eps: f64| -> Result<f64> {
        let grid = minmax_grid(params, eps, alpha, h)?;
        let a1 = assemble_a(&params.with_p(1.0)?, &grid);
        Ok(gamma_bound(&a1, eps, alpha)?.drop)
    };
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (drop_at(a)?, drop_at(b)?);
    if fa.signum() == fb.signum() {
        return Ok(None);
    }
    for _ in 0..bisections {
        let mid = 0.5 * (a + b);
        if drop_at(mid)?.signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(Some(0.5 * (a + b)))
}
