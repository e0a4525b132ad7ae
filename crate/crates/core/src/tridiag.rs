//! Symmetric tridiagonal matrices: Sturm counts, bisection, inverse
//! iteration and shifted solves, all in linear time.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(!diag.is_empty(), "empty matrix");
        assert_eq!(off.len() + 1, diag.len(), "off-diagonal length mismatch");
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// `a * self + b * D` for a diagonal `D`.
    pub fn affine(&self, a: f64, b: f64, d: &[f64]) -> Self {
        let diag = self.diag.iter().zip(d).map(|(x, y)| a * x + b * y).collect();
        let off = self.off.iter().map(|x| a * x).collect();
        Self::new(diag, off)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.off[i];
                m[(i + 1, i)] = self.off[i];
            }
        }
        m
    }

    /// `(row, col, value)` for every structurally nonzero entry.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(3 * self.dim());
        for i in 0..self.dim() {
            if i > 0 {
                out.push((i, i - 1, self.off[i - 1]));
            }
            out.push((i, i, self.diag[i]));
            if i + 1 < self.dim() {
                out.push((i, i + 1, self.off[i]));
            }
        }
        out
    }

    /// Interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE * self.off.iter().fold(1.0f64, |a, e| a.max(e * e));
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for k in 1..self.dim() {
            let e = self.off[k - 1];
            q = self.diag[k] - x - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Eigenvalue number `k` (zero-based, ascending) known to lie in
    /// `[lo, hi]`, bisected to machine resolution.
    fn bisect_index(&self, k: usize, mut lo: f64, mut hi: f64) -> f64 {
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        loop {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 4.0 * f64::EPSILON * scale || mid <= lo || mid >= hi {
                return mid;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    /// All eigenvalues in the open interval `(lo, hi)`, ascending.
    pub fn eigenvalues_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let (glo, ghi) = self.gershgorin();
        let lo = lo.max(glo - 1.0);
        let hi = hi.min(ghi + 1.0);
        if lo >= hi {
            return Vec::new();
        }
        let first = self.count_below(lo);
        let last = self.count_below(hi);
        let mut out = Vec::with_capacity(last.saturating_sub(first));
        let mut left = lo;
        for k in first..last {
            let ev = self.bisect_index(k, left, hi);
            if ev > lo && ev < hi {
                out.push(ev);
            }
            left = left.max(ev - 8.0 * f64::EPSILON * ev.abs().max(1.0)).min(ev);
        }
        out
    }

    /// Eigenvalue with zero-based ascending index `k`.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (lo, hi) = self.gershgorin();
        self.bisect_index(k, lo - 1.0, hi + 1.0)
    }

    /// Unit eigenvector for an eigenvalue `lambda` by inverse iteration,
    /// orthogonalized against `deflate` (vectors of nearby eigenvalues).
    pub fn eigenvector(&self, lambda: f64, deflate: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = self.dim();
        let scale = {
            let (a, b) = self.gershgorin();
            a.abs().max(b.abs()).max(1.0)
        };
        let shifted = lambda + 4.0 * f64::EPSILON * scale * lambda.signum();
        let lu = TridiagLu::factor(self, shifted, f64::EPSILON * scale);
        let mut x: Vec<f64> = (0..n).map(|k| 1.0 + 0.5 * ((k as f64) * 0.7548776662).sin()).collect();
        for _ in 0..4 {
            for d in deflate {
                let c: f64 = d.iter().zip(&x).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(d).for_each(|(xi, di)| *xi -= c * di);
            }
            normalize(&mut x);
            x = lu.solve(&x);
            if !x.iter().all(|v| v.is_finite()) {
                return Err(Error::solver(format!("inverse iteration diverged at {lambda}")));
            }
        }
        for d in deflate {
            let c: f64 = d.iter().zip(&x).map(|(a, b)| a * b).sum();
            x.iter_mut().zip(d).for_each(|(xi, di)| *xi -= c * di);
        }
        normalize(&mut x);
        Ok(x)
    }

    /// `||(T - lambda) x|| / ||x||` in the plain Euclidean norm.
    pub fn residual(&self, lambda: f64, x: &[f64]) -> f64 {
        let y = self.matvec(x);
        let r: f64 = y.iter().zip(x).map(|(a, b)| (a - lambda * b).powi(2)).sum();
        let nx: f64 = x.iter().map(|a| a * a).sum();
        (r / nx).sqrt()
    }

    /// Solves `(T - z) y = b` for a complex shift with nonzero imaginary part.
    /// Without pivoting the pivots keep imaginary parts at least `|Im z|`.
    pub fn solve_shifted_complex(&self, z: Complex64, b: &[f64]) -> Vec<Complex64> {
        let n = self.dim();
        let mut piv = vec![Complex64::new(0.0, 0.0); n];
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        piv[0] = Complex64::new(self.diag[0], 0.0) - z;
        y[0] = Complex64::new(b[0], 0.0);
        for k in 1..n {
            let l = self.off[k - 1] / piv[k - 1];
            piv[k] = Complex64::new(self.diag[k], 0.0) - z - l * self.off[k - 1];
            y[k] = Complex64::new(b[k], 0.0) - l * y[k - 1];
        }
        y[n - 1] /= piv[n - 1];
        for k in (0..n - 1).rev() {
            y[k] = (y[k] - y[k + 1] * self.off[k]) / piv[k];
        }
        y
    }
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|a| *a /= n);
    }
}

/// LU factorization with partial pivoting of `T - shift`, for repeated
/// real solves.
#[derive(Debug, Clone)]
pub struct TridiagLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    /// Zero pivots are replaced by `tiny`, which is what inverse iteration
    /// wants at an exact eigenvalue.
    pub fn factor(t: &SymTridiagonal, shift: f64, tiny: f64) -> Self {
        let n = t.dim();
        let mut d: Vec<f64> = t.diag.iter().map(|a| a - shift).collect();
        let mut dl = t.off.clone();
        let mut du = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        Self { dl, d, du, du2, swapped }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut x = b.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = x[i];
                x[i] = x[i + 1];
                x[i + 1] = temp - self.dl[i] * x[i];
            } else {
                x[i + 1] -= self.dl[i] * x[i];
            }
        }
        x[n - 1] /= self.d[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - self.du[n - 2] * x[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - self.du[i] * x[i + 1] - self.du2[i] * x[i + 2]) / self.d[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymTridiagonal {
        SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn bisection_matches_known_laplacian_spectrum() {
        let n = 50;
        let t = laplacian(n);
        let evs = t.eigenvalues_in(-1.0, 5.0);
        assert_eq!(evs.len(), n);
        for (k, ev) in evs.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((ev - exact).abs() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn inverse_iteration_gives_small_residual() {
        let t = SymTridiagonal::new(
            (0..40).map(|k| (k as f64 * 0.37).sin()).collect(),
            (0..39).map(|k| 1.0 + 0.1 * (k as f64).cos()).collect(),
        );
        for ev in t.eigenvalues_in(-10.0, 10.0) {
            let v = t.eigenvector(ev, &[]).unwrap();
            assert!(t.residual(ev, &v) < 1e-12);
        }
    }

    #[test]
    fn pivoted_lu_solves_indefinite_system() {
        let t = SymTridiagonal::new(vec![0.0, 1.0, -2.0, 0.5], vec![3.0, 1.0, 4.0]);
        let b = vec![1.0, -1.0, 2.0, 0.25];
        let x = TridiagLu::factor(&t, 0.7, 1e-300).solve(&b);
        let tx = t.matvec(&x);
        for i in 0..4 {
            assert!((tx[i] - 0.7 * x[i] - b[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn complex_solve_inverts_shifted_matrix() {
        let t = laplacian(30);
        let z = Complex64::new(1.3, 0.4);
        let b: Vec<f64> = (0..30).map(|k| (k as f64).cos()).collect();
        let y = t.solve_shifted_complex(z, &b);
        for i in 0..30 {
            let mut s = (Complex64::new(t.diag[i], 0.0) - z) * y[i];
            if i > 0 {
                s += y[i - 1] * t.off[i - 1];
            }
            if i + 1 < 30 {
                s += y[i + 1] * t.off[i];
            }
            assert!((s - b[i]).norm() < 1e-12);
        }
    }
}
