//! Staggered-grid assembly of the Dirac operators and their Schrödinger
//! conjugates as symmetric tridiagonal matrices.
//!
//! Spinor operators act on the interleaved chain `(c1_0, c2_0, c1_1, ...)`.
//! The derivative couples neighbouring chain entries only, so the matrix is
//! tridiagonal and there is no doubler branch. The chain is symmetric about
//! the origin, which makes the sigma_1 spectral pairing of `A_p` exact.

use std::io::Write;

use serde::Serialize;

use crate::closed_forms::{self, g_profile};
use crate::error::Result;
use crate::grid::Grid;
use crate::params::ModelParams;
use crate::tridiag::SymTridiagonal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OperatorKind {
    /// `A_p = i p sigma_2 d/dx + (m - (p+1) g) sigma_3`, scaled frame.
    Ap,
    /// `L_mu = D_m - omega - S^p sigma_3 - mu Q`, original frame.
    Lmu,
    /// `-d^2/dx^2 + M^2 - M'`.
    SchrodingerMinus,
    /// `-d^2/dx^2 + M^2 + M'`.
    SchrodingerPlus,
}

impl OperatorKind {
    pub fn is_spinor(&self) -> bool {
        matches!(self, OperatorKind::Ap | OperatorKind::Lmu)
    }
}

/// Sign choice for the Schrödinger conjugates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConjugateSign {
    Minus,
    Plus,
}

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    matrix: SymTridiagonal,
    kind: OperatorKind,
    gap_window: (f64, f64),
    params: ModelParams,
    grid: Grid,
    domain_warning: Option<String>,
}

impl DiscreteOperator {
    pub fn matrix(&self) -> &SymTridiagonal {
        &self.matrix
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn gap_window(&self) -> (f64, f64) {
        self.gap_window
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Set when the potential has not decayed at the domain edge.
    pub fn domain_warning(&self) -> Option<&str> {
        self.domain_warning.as_deref()
    }

    /// Width of the band next to a threshold where eigenvalues are reported
    /// as discretization-suspect.
    pub fn suspect_margin(&self) -> f64 {
        let m = self.params.m();
        let eta = 10.0 * self.grid.h() * self.grid.h() * m.powi(3);
        if self.kind.is_spinor() {
            eta
        } else {
            2.0 * m * eta
        }
    }

    /// Writes `row col value` lines for every stored entry.
    pub fn dump_triplets<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (r, c, v) in self.matrix.triplets() {
            writeln!(out, "{r} {c} {v:.17e}")?;
        }
        Ok(())
    }
}

fn domain_check(params: &ModelParams, edge: f64) -> Option<String> {
    let ratio = g_profile(params, edge) / (params.m() - params.omega());
    (ratio > 1e-10).then(|| format!("potential not decayed at the domain edge: g/(m-omega) = {ratio:.3e} > 1e-10"))
}

/// Mass-like coefficient of `A_p` in the scaled frame.
fn scaled_mass(params: &ModelParams, y: f64) -> f64 {
    params.m() - (params.p() + 1.0) * g_profile(params, y)
}

/// Derivative part shared by both spinor operators: `+c/h` on the links
/// inside a node, `-c/h` between nodes.
fn staggered_derivative(n: usize, coeff: f64, h: f64) -> Vec<f64> {
    (0..2 * n - 1).map(|k| if k % 2 == 0 { coeff / h } else { -coeff / h }).collect()
}

/// `A_p` on the grid, in the frame where the profile is `p`-independent.
pub fn assemble_a(params: &ModelParams, grid: &Grid) -> DiscreteOperator {
    let n = grid.n();
    let mut diag = Vec::with_capacity(2 * n);
    for i in 0..n {
        diag.push(scaled_mass(params, grid.upper_site(i)));
        diag.push(-scaled_mass(params, grid.lower_site(i)));
    }
    let off = staggered_derivative(n, params.p(), grid.h());
    DiscreteOperator {
        matrix: SymTridiagonal::new(diag, off),
        kind: OperatorKind::Ap,
        gap_window: (-params.m(), params.m()),
        params: *params,
        grid: grid.clone(),
        domain_warning: domain_check(params, grid.half_length()),
    }
}

/// Diagonal of `W sigma_3` on the interleaved chain.
pub fn w_sigma3_diagonal(params: &ModelParams, grid: &Grid) -> Vec<f64> {
    (0..grid.n())
        .flat_map(|i| {
            [
                closed_forms::potential_w(params, grid.upper_site(i)),
                -closed_forms::potential_w(params, grid.lower_site(i)),
            ]
        })
        .collect()
}

/// Discrete `Q` as a sum of rank-one link blocks `Q(midpoint) / 2`, so that
/// it is positive semidefinite exactly.
pub fn assemble_q(params: &ModelParams, grid: &Grid) -> SymTridiagonal {
    let dim = 2 * grid.n();
    let mut diag = vec![0.0; dim];
    let mut off = vec![0.0; dim - 1];
    for (k, o) in off.iter_mut().enumerate() {
        let mid = 0.5 * (grid.chain_position(k) + grid.chain_position(k + 1));
        let q = closed_forms::q_matrix(params, mid);
        // Even links are (upper_i, lower_i); odd links are (lower_i, upper_{i+1}).
        let (first, second) = if k % 2 == 0 { (q[0][0], q[1][1]) } else { (q[1][1], q[0][0]) };
        diag[k] += 0.5 * first;
        diag[k + 1] += 0.5 * second;
        *o = 0.5 * q[0][1];
    }
    SymTridiagonal::new(diag, off)
}

/// `L_mu` in the original frame.
pub fn assemble_lmu(params: &ModelParams, grid: &Grid) -> DiscreteOperator {
    let n = grid.n();
    let (m, omega, p) = (params.m(), params.omega(), params.p());
    let density = |x: f64| (p + 1.0) * g_profile(params, p * x);
    let mut diag = Vec::with_capacity(2 * n);
    for i in 0..n {
        diag.push(m - omega - density(grid.upper_site(i)));
        diag.push(-m - omega + density(grid.lower_site(i)));
    }
    let mut off = staggered_derivative(n, 1.0, grid.h());
    let mu = params.mu();
    if mu != 0.0 {
        let q = assemble_q(params, grid);
        diag.iter_mut().zip(q.diag()).for_each(|(d, qd)| *d -= mu * qd);
        off.iter_mut().zip(q.off()).for_each(|(o, qo)| *o -= mu * qo);
    }
    DiscreteOperator {
        matrix: SymTridiagonal::new(diag, off),
        kind: OperatorKind::Lmu,
        gap_window: (-m - omega, m - omega),
        params: *params,
        grid: grid.clone(),
        domain_warning: domain_check(params, p * grid.half_length()),
    }
}

/// Scalar conjugate `-d^2/dx^2 + M^2 -+ M'` by central differences.
pub fn assemble_schrodinger(params: &ModelParams, grid: &Grid, sign: ConjugateSign) -> DiscreteOperator {
    let h2 = grid.h() * grid.h();
    let s = match sign {
        ConjugateSign::Minus => -1.0,
        ConjugateSign::Plus => 1.0,
    };
    let diag = grid
        .nodes()
        .iter()
        .map(|&x| {
            let mass = closed_forms::potential_m_forms(params, x).0;
            2.0 / h2 + mass * mass + s * closed_forms::m_prime(params, x)
        })
        .collect();
    let off = vec![-1.0 / h2; grid.n() - 1];
    let m = params.m();
    DiscreteOperator {
        matrix: SymTridiagonal::new(diag, off),
        kind: match sign {
            ConjugateSign::Minus => OperatorKind::SchrodingerMinus,
            ConjugateSign::Plus => OperatorKind::SchrodingerPlus,
        },
        gap_window: (f64::NEG_INFINITY, m * m),
        params: *params,
        grid: grid.clone(),
        domain_warning: domain_check(params, params.p() * grid.half_length()),
    }
}

/// Largest entrywise deviation from `A_p = (p/q) A_q - ((p-q)/q) W sigma_3`.
pub fn identity_between_as_defect(base: &ModelParams, p: f64, q: f64, grid: &Grid) -> Result<f64> {
    let ap = assemble_a(&base.with_p(p)?, grid);
    let aq = assemble_a(&base.with_p(q)?, grid);
    let w = w_sigma3_diagonal(base, grid);
    let rhs = aq.matrix().affine(p / q, -(p - q) / q, &w);
    let d = ap
        .matrix()
        .diag()
        .iter()
        .zip(rhs.diag())
        .chain(ap.matrix().off().iter().zip(rhs.off()))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn spinor_matrices_have_expected_shape() {
        let params = ModelParams::reference();
        let grid = build_grid(20.0, 64).unwrap();
        let a = assemble_a(&params, &grid);
        assert_eq!(a.matrix().dim(), 128);
        assert_eq!(a.gap_window(), (-1.0, 1.0));
        let l = assemble_lmu(&params.with_mu(0.3).unwrap(), &grid);
        assert_eq!(l.gap_window(), (-1.5, 0.5));
    }

    #[test]
    fn small_domain_is_flagged() {
        let params = ModelParams::reference();
        assert!(assemble_a(&params, &build_grid(3.0, 64).unwrap()).domain_warning().is_some());
        assert!(assemble_a(&params, &build_grid(40.0, 64).unwrap()).domain_warning().is_none());
    }

    #[test]
    fn discrete_q_is_positive_semidefinite() {
        let params = ModelParams::new(1.0, 0.5, 1.3, 0.0).unwrap();
        let grid = build_grid(15.0, 128).unwrap();
        let q = assemble_q(&params, &grid);
        assert!(q.count_below(-1e-13) == 0);
    }

    #[test]
    fn triplet_dump_lists_every_entry() {
        let params = ModelParams::reference();
        let grid = build_grid(20.0, 16).unwrap();
        let a = assemble_a(&params, &grid);
        let mut buf = Vec::new();
        a.dump_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 32 + 2 * 31);
    }
}
