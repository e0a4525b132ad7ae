//! Matrix potentials `V(x)` for `D_m + V`: the Soler closed form, sampled
//! user data, and derived potentials.

use std::io::Read;

use num_complex::Complex64;
use serde::Serialize;

use crate::closed_forms::{g_profile, q_matrix};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::ModelParams;
use crate::tridiag::SymTridiagonal;

pub type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Natural cubic spline on uniform nodes.
#[derive(Debug, Clone)]
struct Spline {
    x0: f64,
    dx: f64,
    y: Vec<f64>,
    second: Vec<f64>,
}

impl Spline {
    fn new(x0: f64, dx: f64, y: Vec<f64>) -> Self {
        let n = y.len();
        let mut second = vec![0.0; n];
        if n > 2 {
            // Thomas solve of the natural-spline system for interior moments.
            let k = n - 2;
            let mut cp = vec![0.0; k];
            let mut dp = vec![0.0; k];
            for i in 0..k {
                let rhs = 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]) / (dx * dx);
                let denom = 4.0 - if i > 0 { cp[i - 1] } else { 0.0 };
                cp[i] = 1.0 / denom;
                dp[i] = (rhs - if i > 0 { dp[i - 1] } else { 0.0 }) / denom;
            }
            for i in (0..k).rev() {
                let next = if i + 1 < k { second[i + 2] } else { 0.0 };
                second[i + 1] = dp[i] - cp[i] * next;
            }
        }
        Self { x0, dx, y, second }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let t = (x - self.x0) / self.dx;
        let i = (t.floor().max(0.0) as usize).min(n - 2);
        let a = (i + 1) as f64 - t;
        let b = t - i as f64;
        let h2 = self.dx * self.dx / 6.0;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h2
    }

    /// Exact integral of the spline over `[x0, x]`.
    fn integral_from_start(&self, x: f64) -> f64 {
        let n = self.y.len();
        let t = ((x - self.x0) / self.dx).clamp(0.0, (n - 1) as f64);
        let full = (t.floor() as usize).min(n - 2);
        let mut s = 0.0;
        for i in 0..full {
            s += 0.5 * self.dx * (self.y[i] + self.y[i + 1])
                - self.dx.powi(3) * (self.second[i] + self.second[i + 1]) / 24.0;
        }
        // Remaining fraction by Gauss-Legendre, exact for the cubic piece.
        let lo = self.x0 + full as f64 * self.dx;
        let hi = self.x0 + t * self.dx;
        if hi > lo {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let r = 1.0 / 3f64.sqrt();
            s += half * (self.eval(mid - half * r) + self.eval(mid + half * r));
        }
        s
    }
}

/// Potential given by samples on a uniform grid, zero outside it.
#[derive(Debug, Clone)]
pub struct SampledPotential {
    xs: Vec<f64>,
    values: Vec<Mat2>,
    splines: Vec<Spline>,
}

impl SampledPotential {
    pub fn new(xs: Vec<f64>, values: Vec<Mat2>) -> Result<Self> {
        if xs.len() < 4 || xs.len() != values.len() {
            return Err(Error::invalid("need at least 4 samples with matching values"));
        }
        let dx = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        if !(dx > 0.0) {
            return Err(Error::invalid("sample positions must increase"));
        }
        if xs.windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > 1e-6 * dx) {
            return Err(Error::invalid("potential samples must be uniformly spaced"));
        }
        let mut splines = Vec::with_capacity(8);
        for r in 0..2 {
            for col in 0..2 {
                let re = values.iter().map(|v| v[r][col].re).collect();
                let im = values.iter().map(|v| v[r][col].im).collect();
                splines.push(Spline::new(xs[0], dx, re));
                splines.push(Spline::new(xs[0], dx, im));
            }
        }
        Ok(Self { xs, values, splines })
    }

    /// Reads columns `x, re11, im11, re12, im12, re21, im21, re22, im22`
    /// with a header row.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 9 {
                return Err(Error::invalid(format!("row {}: expected 9 columns, found {}", line + 2, record.len())));
            }
            let mut f = [0.0; 9];
            for (k, field) in record.iter().enumerate() {
                f[k] = field
                    .parse()
                    .map_err(|_| Error::invalid(format!("row {}: cannot parse '{field}' as a number", line + 2)))?;
            }
            xs.push(f[0]);
            values.push([
                [Complex64::new(f[1], f[2]), Complex64::new(f[3], f[4])],
                [Complex64::new(f[5], f[6]), Complex64::new(f[7], f[8])],
            ]);
        }
        Self::new(xs, values)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[Mat2] {
        &self.values
    }

    fn value(&self, x: f64) -> Mat2 {
        if x < self.xs[0] || x > self.xs[self.xs.len() - 1] {
            return [[ZERO; 2]; 2];
        }
        let e = |k: usize| Complex64::new(self.splines[2 * k].eval(x), self.splines[2 * k + 1].eval(x));
        [[e(0), e(1)], [e(2), e(3)]]
    }
}

#[derive(Debug, Clone)]
pub enum MatrixPotential {
    Free,
    /// `V = (M - m) sigma_3 - mu Q` for the given parameters, in the
    /// original frame.
    Soler(ModelParams),
    Sampled(SampledPotential),
    /// `-sigma_1 V sigma_1`, which maps the `-m` threshold of `V` to the `+m`
    /// threshold of the result.
    Sigma1Conjugate(Box<MatrixPotential>),
}

impl MatrixPotential {
    pub fn value(&self, x: f64) -> Mat2 {
        match self {
            MatrixPotential::Free => [[ZERO; 2]; 2],
            MatrixPotential::Soler(params) => {
                let p = params.p();
                let density = (p + 1.0) * g_profile(params, p * x);
                let mu = params.mu();
                let q = if mu != 0.0 { q_matrix(params, x) } else { [[0.0; 2]; 2] };
                [[c(-density - mu * q[0][0]), c(-mu * q[0][1])], [c(-mu * q[1][0]), c(density - mu * q[1][1])]]
            }
            MatrixPotential::Sampled(s) => s.value(x),
            MatrixPotential::Sigma1Conjugate(inner) => {
                let v = inner.value(x);
                [[-v[1][1], -v[1][0]], [-v[0][1], -v[0][0]]]
            }
        }
    }

    pub fn sigma1_conjugated(&self) -> MatrixPotential {
        MatrixPotential::Sigma1Conjugate(Box::new(self.clone()))
    }

    /// Half-width beyond which the potential is treated as zero.
    fn support_hint(&self) -> f64 {
        match self {
            MatrixPotential::Free => 1.0,
            MatrixPotential::Soler(params) => 60.0 / (params.p() * params.kappa()),
            MatrixPotential::Sampled(s) => s.xs[0].abs().max(s.xs[s.xs.len() - 1].abs()),
            MatrixPotential::Sigma1Conjugate(inner) => inner.support_hint(),
        }
    }

    /// Smallest `X` with `int_{|x| > X} |V| < tol` (Frobenius norm,
    /// trapezoid on a fine grid), at least 1.
    pub fn tail_cutoff(&self, tol: f64) -> f64 {
        let outer = self.support_hint();
        let steps = 20_000;
        let dx = outer / steps as f64;
        let norm_pair = |x: f64| frobenius(&self.value(x)) + frobenius(&self.value(-x));
        let mut tail = 0.0;
        let mut prev = norm_pair(outer);
        let mut cutoff = outer;
        for k in (0..steps).rev() {
            let x = k as f64 * dx;
            let cur = norm_pair(x);
            tail += 0.5 * dx * (prev + cur);
            prev = cur;
            if tail >= tol {
                break;
            }
            cutoff = x;
        }
        cutoff.max(1.0)
    }

    /// `int |V|` over the support, used to recognise the free case.
    pub fn l1_norm(&self) -> f64 {
        let outer = self.support_hint();
        let steps = 20_000;
        let dx = 2.0 * outer / steps as f64;
        (0..=steps)
            .map(|k| {
                let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
                w * frobenius(&self.value(-outer + k as f64 * dx))
            })
            .sum::<f64>()
            * dx
    }
}

fn frobenius(v: &Mat2) -> f64 {
    v.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Pauli coefficients `V = a0 + a1 s1 + a2 s2 + a3 s3` at each sample.
#[derive(Debug, Clone, Serialize)]
pub struct PauliSamples {
    pub xs: Vec<f64>,
    pub alpha: [Vec<Complex64>; 4],
    /// Largest `|Im alpha_2|`.
    pub alpha2_imag: f64,
    pub alpha2_real: bool,
}

pub fn pauli_at(v: &Mat2) -> [Complex64; 4] {
    let i = Complex64::new(0.0, 1.0);
    [0.5 * (v[0][0] + v[1][1]), 0.5 * (v[0][1] + v[1][0]), 0.5 * i * (v[0][1] - v[1][0]), 0.5 * (v[0][0] - v[1][1])]
}

/// Decomposes `V` at the given positions (the sample positions when `xs`
/// is `None` and the potential is sampled).
pub fn pauli_decompose(v: &MatrixPotential, xs: Option<&[f64]>) -> Result<PauliSamples> {
    let xs: Vec<f64> = match (xs, v) {
        (Some(xs), _) => xs.to_vec(),
        (None, MatrixPotential::Sampled(s)) => s.xs.clone(),
        (None, _) => return Err(Error::invalid("sample positions required for closed-form potentials")),
    };
    let mut alpha: [Vec<Complex64>; 4] = Default::default();
    let mut scale = 1.0f64;
    for &x in &xs {
        let m = v.value(x);
        scale = scale.max(frobenius(&m));
        for (k, a) in pauli_at(&m).into_iter().enumerate() {
            alpha[k].push(a);
        }
    }
    let alpha2_imag = alpha[2].iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    Ok(PauliSamples { xs, alpha, alpha2_imag, alpha2_real: alpha2_imag <= 1e-12 * scale })
}

/// `V_sym = V - alpha_2 sigma_2` together with the phase `theta(x) =
/// -int_0^x alpha_2` such that `e^{i theta} psi` solves the symmetrized
/// problem whenever `psi` solves the original one.
#[derive(Debug, Clone)]
pub struct GaugeTransform {
    pub potential: MatrixPotential,
    alpha2: Option<Spline>,
}

impl GaugeTransform {
    pub fn phase(&self, x: f64) -> f64 {
        match &self.alpha2 {
            None => 0.0,
            Some(s) => -(s.integral_from_start(x) - s.integral_from_start(0.0)),
        }
    }
}

pub fn gauge_symmetrize(v: &MatrixPotential) -> Result<GaugeTransform> {
    let sampled = match v {
        MatrixPotential::Sampled(s) => s,
        // Closed forms here are real symmetric, so alpha_2 vanishes.
        MatrixPotential::Free | MatrixPotential::Soler(_) => {
            return Ok(GaugeTransform { potential: v.clone(), alpha2: None });
        }
        MatrixPotential::Sigma1Conjugate(inner) => {
            if matches!(**inner, MatrixPotential::Sampled(_)) {
                return Err(Error::invalid("resample the conjugated potential before symmetrizing"));
            }
            return Ok(GaugeTransform { potential: v.clone(), alpha2: None });
        }
    };
    let decomposition = pauli_decompose(v, None)?;
    if !decomposition.alpha2_real {
        return Err(Error::AssumptionViolated(format!(
            "alpha_2 is not real (max |Im| = {:.3e})",
            decomposition.alpha2_imag
        )));
    }
    let i = Complex64::new(0.0, 1.0);
    let values: Vec<Mat2> = sampled
        .values
        .iter()
        .zip(&decomposition.alpha[2])
        .map(|(m, a2)| {
            let a2 = c(a2.re);
            [[m[0][0], m[0][1] + i * a2], [m[1][0] - i * a2, m[1][1]]]
        })
        .collect();
    let dx = sampled.xs[1] - sampled.xs[0];
    let alpha2 = Spline::new(sampled.xs[0], dx, decomposition.alpha[2].iter().map(|z| z.re).collect());
    Ok(GaugeTransform {
        potential: MatrixPotential::Sampled(SampledPotential::new(sampled.xs.clone(), values)?),
        alpha2: Some(alpha2),
    })
}

/// Spectrum-carrying part of the staggered discretization of `D_m + V` for
/// a Hermitian `V`. The `alpha_2` term enters through link phases
/// `exp(-i int alpha_2)`, which a diagonal unitary removes, so the
/// eigenvalues are those of the real matrix with the link moduli.
pub fn assemble_hermitian_dirac(m: f64, grid: &Grid, v: &MatrixPotential) -> Result<SymTridiagonal> {
    let n = grid.n();
    let h = grid.h();
    let pauli = |x: f64| -> Result<[f64; 4]> {
        let a = pauli_at(&v.value(x));
        if a.iter().any(|z| z.im.abs() > 1e-12 * (1.0 + z.re.abs())) {
            return Err(Error::invalid("potential is not Hermitian"));
        }
        Ok([a[0].re, a[1].re, a[2].re, a[3].re])
    };
    let mut diag = Vec::with_capacity(2 * n);
    for i in 0..n {
        let up = pauli(grid.upper_site(i))?;
        let lo = pauli(grid.lower_site(i))?;
        diag.push(m + up[0] + up[3]);
        diag.push(-m + lo[0] - lo[3]);
    }
    let mut off = Vec::with_capacity(2 * n - 1);
    for k in 0..2 * n - 1 {
        let (a, b) = (grid.chain_position(k), grid.chain_position(k + 1));
        let mid = pauli(0.5 * (a + b))?;
        let derivative = if k % 2 == 0 { 1.0 / h } else { -1.0 / h };
        // Midpoint-rule link angle; only its modulus-free part matters here.
        let angle = -(b - a) * mid[2];
        let link = Complex64::from_polar(derivative + 0.5 * mid[1], angle);
        off.push(link.norm());
    }
    Ok(SymTridiagonal::new(diag, off))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_cubic_interior_and_integrates_linear_exactly() {
        let xs: Vec<f64> = (0..41).map(|k| k as f64 * 0.1).collect();
        let s = Spline::new(0.0, 0.1, xs.iter().map(|x| 2.0 * x + 1.0).collect());
        assert!((s.eval(1.234) - 3.468).abs() < 1e-12);
        assert!((s.integral_from_start(2.05) - (2.05f64 * 2.05 + 2.05)).abs() < 1e-12);
    }

    #[test]
    fn sigma3_potential_decomposes_to_alpha3() {
        let xs: Vec<f64> = (0..32).map(|k| -3.0 + k as f64 * 0.2).collect();
        let vals = xs.iter().map(|x| [[c(x.cos()), ZERO], [ZERO, c(-x.cos())]]).collect();
        let v = MatrixPotential::Sampled(SampledPotential::new(xs.clone(), vals).unwrap());
        let d = pauli_decompose(&v, None).unwrap();
        for (k, x) in xs.iter().enumerate() {
            assert!(d.alpha[0][k].norm() < 1e-15);
            assert!(d.alpha[1][k].norm() < 1e-15);
            assert!(d.alpha[2][k].norm() < 1e-15);
            assert!((d.alpha[3][k] - c(x.cos())).norm() < 1e-15);
        }
        assert!(d.alpha2_real);
    }

    #[test]
    fn nonuniform_samples_are_rejected() {
        let xs = vec![0.0, 0.1, 0.25, 0.3];
        let vals = vec![[[ZERO; 2]; 2]; 4];
        assert!(SampledPotential::new(xs, vals).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut text = String::from("x,re11,im11,re12,im12,re21,im21,re22,im22\n");
        for k in 0..8 {
            let x = k as f64 * 0.5;
            text.push_str(&format!("{x},1,0,0,0,0,0,-1,0\n"));
        }
        let s = SampledPotential::from_csv(text.as_bytes()).unwrap();
        assert_eq!(s.xs().len(), 8);
        assert_eq!(s.value(1.2)[1][1], c(-1.0));
        assert!(SampledPotential::from_csv("x,a\n1,2\n".as_bytes()).is_err());
    }
}
