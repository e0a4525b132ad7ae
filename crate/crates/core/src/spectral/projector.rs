//! Spectral projectors onto the part of the spectrum of `A_1` below a cut
//! inside the gap: a dense route for small grids and a rational (Zolotarev)
//! approximation of the sign function for large ones.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::elliptic::{complete_k_from_complement, sncndn};
use crate::discretization::{DiscreteOperator, OperatorKind};
use crate::error::{Error, Result};
use crate::parallel;
use crate::tridiag::SymTridiagonal;

pub trait SpectralProjector: Sync {
    /// Dimension of the space projected in.
    fn dim(&self) -> usize;

    /// Number of eigenvalues below the cut.
    fn lower_rank(&self) -> usize;

    /// Image of `v` under the projector onto eigenvalues below the cut.
    fn project_lower(&self, v: &[f64]) -> Vec<f64>;
}

/// Cut used for the min-max splitting: midway between `omega` and `m`.
pub(crate) fn default_cut(op: &DiscreteOperator) -> f64 {
    0.5 * (op.params().omega() + op.params().m())
}

fn require_unit_power_a(op: &DiscreteOperator) -> Result<()> {
    if op.kind() != OperatorKind::Ap || op.params().p() != 1.0 {
        return Err(Error::invalid("min-max projectors need A_p assembled at p = 1"));
    }
    Ok(())
}

/// Orthonormal eigenbases below and above the cut, from a dense
/// eigendecomposition.
#[derive(Debug, Clone)]
pub struct ProjectorBases {
    pub cut: f64,
    pub lower: DMatrix<f64>,
    pub upper: DMatrix<f64>,
    pub lower_eigenvalues: Vec<f64>,
    pub upper_eigenvalues: Vec<f64>,
}

/// Dense split of the spectrum of `A_1` at the midpoint of `(omega, m)`.
/// Only sensible for a few thousand unknowns.
pub fn minmax_projectors(a1: &DiscreteOperator) -> Result<ProjectorBases> {
    require_unit_power_a(a1)?;
    let dim = a1.matrix().dim();
    if dim > 6000 {
        return Err(Error::invalid(format!(
            "dense projectors limited to 6000 unknowns, got {dim}; use RationalProjector"
        )));
    }
    let cut = default_cut(a1);
    let eig = SymmetricEigen::new(a1.matrix().to_dense());
    let mut lower_idx = Vec::new();
    let mut upper_idx = Vec::new();
    for (k, ev) in eig.eigenvalues.iter().enumerate() {
        if !ev.is_finite() {
            return Err(Error::RankDeficiency(format!("non-finite eigenvalue at index {k}")));
        }
        if *ev < cut {
            lower_idx.push(k);
        } else {
            upper_idx.push(k);
        }
    }
    let pick = |idx: &[usize]| {
        let mut m = DMatrix::zeros(dim, idx.len());
        for (c, &k) in idx.iter().enumerate() {
            m.set_column(c, &eig.eigenvectors.column(k));
        }
        m
    };
    let lower = pick(&lower_idx);
    let upper = pick(&upper_idx);
    if lower.ncols() + upper.ncols() != dim {
        return Err(Error::RankDeficiency("eigenbasis incomplete".into()));
    }
    let gram_defect = (lower.transpose() * &lower - DMatrix::identity(lower.ncols(), lower.ncols())).amax();
    if gram_defect > 1e-10 {
        return Err(Error::RankDeficiency(format!("lower basis not orthonormal ({gram_defect:.2e})")));
    }
    Ok(ProjectorBases {
        cut,
        lower,
        upper,
        lower_eigenvalues: lower_idx.iter().map(|&k| eig.eigenvalues[k]).collect(),
        upper_eigenvalues: upper_idx.iter().map(|&k| eig.eigenvalues[k]).collect(),
    })
}

impl SpectralProjector for ProjectorBases {
    fn dim(&self) -> usize {
        self.lower.nrows()
    }

    fn lower_rank(&self) -> usize {
        self.lower.ncols()
    }

    fn project_lower(&self, v: &[f64]) -> Vec<f64> {
        let x = nalgebra::DVector::from_column_slice(v);
        let c = self.lower.tr_mul(&x);
        (&self.lower * c).as_slice().to_vec()
    }
}

/// Zolotarev rational approximation of `sign(A - cut)` applied through
/// complex shifted tridiagonal solves.
#[derive(Debug, Clone)]
pub struct RationalProjector {
    matrix: SymTridiagonal,
    cut: f64,
    scale: f64,
    /// Relative spectral distance of the cut, `dist / scale`.
    ell: f64,
    shifts: Vec<f64>,
    weights: Vec<f64>,
    normalization: f64,
    max_error: f64,
    lower_rank: usize,
}

/// Zolotarev coefficients for `sign(x)` on `[-1, -ell] U [ell, 1]` with
/// `r` pole pairs: `(poles c_{2j-1}, partial-fraction weights, normalization,
/// max relative error on a log grid)`.
fn zolotarev(ell: f64, r: usize) -> (Vec<f64>, Vec<f64>, f64, f64) {
    let kp = complete_k_from_complement(ell);
    let mc = ell * ell;
    let c: Vec<f64> = (1..=2 * r)
        .map(|j| {
            let (sn, cn, _) = sncndn(j as f64 * kp / (2 * r + 1) as f64, mc);
            mc * sn * sn / (cn * cn)
        })
        .collect();
    let odd: Vec<f64> = (0..r).map(|j| c[2 * j]).collect();
    let even: Vec<f64> = (0..r).map(|j| c[2 * j + 1]).collect();
    let weights: Vec<f64> = (0..r)
        .map(|j| {
            let num: f64 = even.iter().map(|e| e - odd[j]).product();
            let den: f64 = (0..r).filter(|&k| k != j).map(|k| odd[k] - odd[j]).product();
            num / den
        })
        .collect();
    let raw = |x: f64| x * (1.0 + odd.iter().zip(&weights).map(|(c, a)| a / (x * x + c)).sum::<f64>());
    let samples = 4000;
    let values: Vec<f64> = (0..=samples).map(|k| raw((ell.ln() * (1.0 - k as f64 / samples as f64)).exp())).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let normalization = 2.0 / (lo + hi);
    let max_error = values.iter().map(|v| (1.0 - normalization * v).abs()).fold(0.0, f64::max);
    (odd, weights, normalization, max_error)
}

impl RationalProjector {
    /// Builds the approximation for the operator's own midpoint cut, with
    /// enough poles for a relative sign error below `tol`.
    pub fn new(a1: &DiscreteOperator, tol: f64) -> Result<Self> {
        require_unit_power_a(a1)?;
        Self::with_cut(a1.matrix(), default_cut(a1), tol)
    }

    pub fn with_cut(matrix: &SymTridiagonal, cut: f64, tol: f64) -> Result<Self> {
        let (glo, ghi) = matrix.gershgorin();
        let scale = (cut - glo).max(ghi - cut);
        let lower_rank = matrix.count_below(cut);
        let below = (lower_rank > 0).then(|| matrix.eigenvalue(lower_rank - 1));
        let above = (lower_rank < matrix.dim()).then(|| matrix.eigenvalue(lower_rank));
        let dist = below.map(|b| cut - b).into_iter().chain(above.map(|a| a - cut)).fold(f64::INFINITY, f64::min);
        if !(dist > 0.0) {
            return Err(Error::invalid("projector cut coincides with an eigenvalue"));
        }
        let ell = (dist / scale).min(0.999);
        let mut r = 4;
        loop {
            let (shifts, weights, normalization, max_error) = zolotarev(ell, r);
            if max_error < tol || r >= 64 {
                if max_error >= tol {
                    return Err(Error::solver(format!("rational sign approximation stalled at error {max_error:.2e}")));
                }
                return Ok(Self {
                    matrix: matrix.clone(),
                    cut,
                    scale,
                    ell,
                    shifts,
                    weights,
                    normalization,
                    max_error,
                    lower_rank,
                });
            }
            r += 2;
        }
    }

    pub fn poles(&self) -> usize {
        self.shifts.len()
    }

    pub fn max_error(&self) -> f64 {
        self.max_error
    }

    pub fn relative_gap(&self) -> f64 {
        self.ell
    }

    /// Approximate `sign(A - cut) v`.
    pub fn sign(&self, v: &[f64]) -> Vec<f64> {
        let av = self.matrix.matvec(v);
        let terms = parallel::map(&self.shifts, |&c| {
            let z = Complex64::new(self.cut, c.sqrt() * self.scale);
            self.matrix.solve_shifted_complex(z, v)
        });
        let mut out: Vec<f64> = av.iter().zip(v).map(|(a, x)| (a - self.cut * x) / self.scale).collect();
        for (w, t) in self.weights.iter().zip(&terms) {
            let f = w * self.scale;
            out.iter_mut().zip(t).for_each(|(o, y)| *o += f * y.re);
        }
        out.iter_mut().for_each(|o| *o *= self.normalization);
        out
    }
}

impl SpectralProjector for RationalProjector {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn lower_rank(&self) -> usize {
        self.lower_rank
    }

    fn project_lower(&self, v: &[f64]) -> Vec<f64> {
        self.sign(v).iter().zip(v).map(|(s, x)| 0.5 * (x - s)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zolotarev_error_drops_with_more_poles() {
        let (_, _, _, e8) = zolotarev(1e-3, 8);
        let (_, _, _, e16) = zolotarev(1e-3, 16);
        assert!(e16 < e8 * 1e-3, "{e8} {e16}");
        assert!(e16 < 1e-7, "{e16}");
    }

    #[test]
    fn rational_sign_matches_exact_on_a_diagonal_matrix() {
        let d: Vec<f64> = vec![-3.0, -1.0, 0.2, 0.9, 2.5, 4.0];
        let t = SymTridiagonal::new(d.clone(), vec![0.0; 5]);
        let p = RationalProjector::with_cut(&t, 0.5, 1e-13).unwrap();
        let v = vec![1.0; 6];
        let lower = p.project_lower(&v);
        for (k, x) in lower.iter().enumerate() {
            let want = if d[k] < 0.5 { 1.0 } else { 0.0 };
            assert!((x - want).abs() < 1e-12, "k={k} got {x}");
        }
        assert_eq!(p.lower_rank(), 3);
    }
}
