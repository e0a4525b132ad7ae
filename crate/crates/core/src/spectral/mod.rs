//! Gap eigenvalues, parity labels, the min-max machinery and eigenvalue
//! derivatives in the coupling.

mod elliptic;
mod minmax;
mod projector;

pub use minmax::{
    drop_threshold, e_delta, energy_drop_check, gamma_bound, gamma_bound_with, minmax_grid, trial_delta, EnergyDrop,
    MinMaxReport,
};
pub use projector::{minmax_projectors, ProjectorBases, RationalProjector, SpectralProjector};

use serde::Serialize;

use crate::discretization::{assemble_lmu, assemble_q, DiscreteOperator};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridSpinor};
use crate::params::ModelParams;

/// Parity label of a spinor eigenvector: `Even` means upper component even
/// and lower component odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Parity::Even => "+",
            Parity::Odd => "-",
            Parity::Mixed => "mixed",
        })
    }
}

pub const PARITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub parities: Vec<Parity>,
    pub parity_defects: Vec<f64>,
    pub suspect_flags: Vec<bool>,
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
    pub half_length: f64,
    pub n: usize,
}

impl SpectrumReport {
    /// Eigenvalues that are not flagged as threshold artifacts.
    pub fn trusted(&self) -> Vec<f64> {
        self.eigenvalues.iter().zip(&self.suspect_flags).filter(|(_, s)| !**s).map(|(e, _)| *e).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Largest `|lambda_i + lambda_{k-1-i}|` over trusted eigenvalues; the
    /// spectrum of `A_p` is symmetric about 0.
    pub fn pairing_defect(&self, center: f64) -> Option<f64> {
        let t = self.trusted();
        if t.is_empty() {
            return None;
        }
        let k = t.len();
        Some((0..k).map(|i| (t[i] + t[k - 1 - i] - 2.0 * center).abs()).fold(0.0, f64::max))
    }
}

/// All eigenpairs strictly inside the operator's gap window.
pub fn gap_eigs(op: &DiscreteOperator) -> Result<SpectrumReport> {
    let (lo, hi) = op.gap_window();
    let eta = op.suspect_margin();
    let t = op.matrix();
    let eigenvalues = t.eigenvalues_in(lo, hi);
    let scale = [lo, hi].iter().filter(|v| v.is_finite()).fold(1.0f64, |a, v| a.max(v.abs()));
    let mut eigenvectors: Vec<Vec<f64>> = Vec::with_capacity(eigenvalues.len());
    for (k, &ev) in eigenvalues.iter().enumerate() {
        let near: Vec<Vec<f64>> = eigenvalues[..k]
            .iter()
            .zip(&eigenvectors)
            .filter(|(e, _)| (ev - **e).abs() < 1e-8 * scale)
            .map(|(_, v)| v.clone())
            .collect();
        eigenvectors.push(t.eigenvector(ev, &near)?);
    }
    let residuals: Vec<f64> = eigenvalues.iter().zip(&eigenvectors).map(|(ev, v)| t.residual(*ev, v)).collect();
    if let Some(bad) = residuals.iter().find(|r| !r.is_finite()) {
        return Err(Error::solver(format!("non-finite residual {bad}")));
    }
    let h = op.grid().h();
    let spinor = op.kind().is_spinor();
    if spinor {
        purify_degenerate_pairs(&eigenvalues, &mut eigenvectors, h, scale);
    }
    let (parities, parity_defects) = eigenvectors
        .iter()
        .map(|v| if spinor { parity_with_defect(&GridSpinor::from_interleaved(h, v)) } else { scalar_parity(v) })
        .unzip();
    let suspect_flags = eigenvalues.iter().map(|ev| (ev - lo).abs() < eta || (hi - ev).abs() < eta).collect();
    Ok(SpectrumReport {
        eigenvalues,
        residuals,
        parities,
        parity_defects,
        suspect_flags,
        eigenvectors,
        half_length: op.grid().half_length(),
        n: op.grid().n(),
    })
}

/// Six-point midpoint interpolation weights.
const MID6: [f64; 6] = [3.0 / 256.0, -25.0 / 256.0, 150.0 / 256.0, 150.0 / 256.0, -25.0 / 256.0, 3.0 / 256.0];

/// Reflections `(c1(-y), c2(-y))` at interior sites; sites too close to the
/// edge for the interpolation stencil are returned as `None`.
fn reflected(s: &GridSpinor) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
    let n = s.len();
    let mut r1 = vec![None; n];
    let mut r2 = vec![None; n];
    for i in 0..n {
        let j = n - 1 - i;
        // c1 at -y lies midway between upper sites j and j+1.
        if j >= 2 && j + 3 < n {
            r1[i] = Some((0..6).map(|t| MID6[t] * s.c1[j - 2 + t]).sum());
        }
        // c2 at -y lies midway between lower sites j-1 and j.
        if j >= 3 && j + 2 < n {
            r2[i] = Some((0..6).map(|t| MID6[t] * s.c2[j - 3 + t]).sum());
        }
    }
    (r1, r2)
}

/// Relative distance of the spinor from the `+` and `-` parity subspaces.
pub fn parity_defects(s: &GridSpinor) -> (f64, f64) {
    let (r1, r2) = reflected(s);
    let (mut plus, mut minus, mut norm) = (0.0, 0.0, 0.0);
    for i in 0..s.len() {
        if let (Some(a), Some(b)) = (r1[i], r2[i]) {
            let (c1, c2) = (s.c1[i], s.c2[i]);
            plus += (c1 - a).powi(2) + (c2 + b).powi(2);
            minus += (c1 + a).powi(2) + (c2 - b).powi(2);
            norm += c1 * c1 + c2 * c2;
        }
    }
    if norm == 0.0 {
        return (f64::INFINITY, f64::INFINITY);
    }
    ((plus / norm).sqrt(), (minus / norm).sqrt())
}

fn parity_with_defect(s: &GridSpinor) -> (Parity, f64) {
    let (plus, minus) = parity_defects(s);
    if plus < PARITY_TOL {
        (Parity::Even, plus)
    } else if minus < PARITY_TOL {
        (Parity::Odd, minus)
    } else {
        (Parity::Mixed, plus.min(minus))
    }
}

/// `+` for upper-even/lower-odd, `-` for the opposite, `Mixed` otherwise.
pub fn classify_parity(eigvec: &GridSpinor) -> Parity {
    parity_with_defect(eigvec).0
}

fn scalar_parity(v: &[f64]) -> (Parity, f64) {
    let n = v.len();
    let norm: f64 = v.iter().map(|a| a * a).sum();
    let even: f64 = (0..n).map(|i| (v[i] - v[n - 1 - i]).powi(2)).sum();
    let odd: f64 = (0..n).map(|i| (v[i] + v[n - 1 - i]).powi(2)).sum();
    let (even, odd) = ((even / norm).sqrt(), (odd / norm).sqrt());
    if even < PARITY_TOL {
        (Parity::Even, even)
    } else if odd < PARITY_TOL {
        (Parity::Odd, odd)
    } else {
        (Parity::Mixed, even.min(odd))
    }
}

/// Rotates numerically degenerate pairs so that each vector is as close to a
/// parity eigenvector as possible.
fn purify_degenerate_pairs(evs: &[f64], vecs: &mut [Vec<f64>], h: f64, scale: f64) {
    for k in 1..evs.len() {
        if (evs[k] - evs[k - 1]).abs() >= 1e-8 * scale {
            continue;
        }
        let a = GridSpinor::from_interleaved(h, &vecs[k - 1]);
        let b = GridSpinor::from_interleaved(h, &vecs[k]);
        let pa = apply_parity(&a);
        let pb = apply_parity(&b);
        let m00 = a.dot(&pa);
        let m11 = b.dot(&pb);
        let m01 = 0.5 * (a.dot(&pb) + b.dot(&pa));
        let theta = 0.5 * (2.0 * m01).atan2(m00 - m11);
        let (c, s) = (theta.cos(), theta.sin());
        let (va, vb) = (vecs[k - 1].clone(), vecs[k].clone());
        vecs[k - 1] = va.iter().zip(&vb).map(|(x, y)| c * x + s * y).collect();
        vecs[k] = va.iter().zip(&vb).map(|(x, y)| -s * x + c * y).collect();
    }
}

/// Interpolated parity operator `(c1, c2)(y) -> (c1(-y), -c2(-y))`, zero
/// where the stencil does not fit.
fn apply_parity(s: &GridSpinor) -> GridSpinor {
    let (r1, r2) = reflected(s);
    GridSpinor {
        h: s.h,
        c1: r1.iter().map(|v| v.unwrap_or(0.0)).collect(),
        c2: r2.iter().map(|v| -v.unwrap_or(0.0)).collect(),
    }
}

/// Eigenvalue derivative in the coupling, by the expectation of `-Q` and by a
/// centered difference.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HellmannFeynman {
    pub eigenvalue: f64,
    pub slope: f64,
    pub finite_difference: f64,
    pub relative_gap: f64,
}

impl HellmannFeynman {
    pub fn agrees(&self, rtol: f64) -> bool {
        (self.slope - self.finite_difference).abs() <= rtol * self.slope.abs().max(1e-12)
    }
}

/// Slope of gap eigenvalue number `which` (ascending) of `L_mu` at `mu`.
pub fn hellmann_feynman(params: &ModelParams, grid: &Grid, mu: f64, which: usize) -> Result<HellmannFeynman> {
    const STEP: f64 = 1e-4;
    let at = |mu: f64| -> Result<DiscreteOperator> { Ok(assemble_lmu(&params.with_mu(mu)?, grid)) };
    let op = at(mu)?;
    let (lo, hi) = op.gap_window();
    let evs = op.matrix().eigenvalues_in(lo, hi);
    let ev = *evs
        .get(which)
        .ok_or_else(|| Error::invalid(format!("gap eigenvalue {which} requested but only {} exist", evs.len())))?;
    if op.matrix().eigenvalues_in(ev - 1e-6, ev + 1e-6).len() != 1 {
        return Err(Error::Degenerate(format!("eigenvalue {ev} has a neighbour within 1e-6")));
    }
    let v = op.matrix().eigenvector(ev, &[])?;
    let q = assemble_q(params, grid);
    let qv = q.matvec(&v);
    let slope = -v.iter().zip(&qv).map(|(a, b)| a * b).sum::<f64>();
    let nearest = |mu: f64| -> Result<f64> {
        let o = at(mu)?;
        o.matrix()
            .eigenvalues_in(lo, hi)
            .into_iter()
            .min_by(|a, b| (a - ev).abs().total_cmp(&(b - ev).abs()))
            .ok_or_else(|| Error::solver("eigenvalue lost under coupling perturbation"))
    };
    let fd = (nearest(mu + STEP)? - nearest(mu - STEP)?) / (2.0 * STEP);
    let spacing = evs.iter().filter(|e| **e != ev).map(|e| (e - ev).abs()).fold(f64::INFINITY, f64::min);
    Ok(HellmannFeynman { eigenvalue: ev, slope, finite_difference: fd, relative_gap: spacing })
}
