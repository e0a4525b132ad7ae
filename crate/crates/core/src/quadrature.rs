//! Composite Gauss-Legendre integration and one-dimensional minimization.

use crate::error::{Error, Result};

const GL_ORDER: usize = 16;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fixed composite rule: `panels` equal panels of 16-point Gauss-Legendre.
pub fn composite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(GL_ORDER);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * width;
        let mid = lo + 0.5 * width;
        let mut s = 0.0;
        for (x, w) in nodes.iter().zip(&weights) {
            s += w * f(mid + 0.5 * width * x);
        }
        total += 0.5 * width * s;
    }
    total
}

/// Doubles the panel count until two successive estimates agree to `rel_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let mut panels = 8;
    let mut prev = composite(&f, a, b, panels);
    for _ in 0..16 {
        panels *= 2;
        let next = composite(&f, a, b, panels);
        if !next.is_finite() {
            return Err(Error::solver("non-finite integrand"));
        }
        if (next - prev).abs() <= rel_tol * next.abs().max(1e-300) || (next - prev).abs() < 1e-300 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::solver(format!("quadrature on [{a}, {b}] did not reach relative tolerance {rel_tol}")))
}

/// Cutoff `X` with `c * exp(-rate * X) / rate <= tol`, the tail of an
/// integrand bounded by `c * exp(-rate * x)`.
pub fn tail_cutoff(c: f64, rate: f64, tol: f64) -> f64 {
    ((c / (rate * tol)).ln() / rate).max(1.0 / rate)
}

/// Golden-section minimization on `[a, b]`, assuming a single minimum.
pub fn golden_minimize<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Scans `samples` points on `[a, b]` and polishes the best one.
pub fn scan_minimize<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, samples: usize) -> (f64, f64) {
    let step = (b - a) / samples as f64;
    let mut best = (a, f(a));
    for k in 1..=samples {
        let x = a + k as f64 * step;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let lo = (best.0 - step).max(a);
    let hi = (best.0 + step).min(b);
    let polished = golden_minimize(&f, lo, hi, 1e-12 * (1.0 + best.0.abs()));
    if polished.1 <= best.1 {
        polished
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_integrate_polynomials() {
        let (x, w) = gauss_legendre(16);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((q - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_integral() {
        let v = integrate(|x: f64| (-x * x).exp(), -12.0, 12.0, 1e-14).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn golden_finds_parabola_vertex() {
        // Location accuracy of a comparison-based minimizer is about sqrt(eps).
        let (x, v) = golden_minimize(|x| (x - 0.3) * (x - 0.3) + 1.0, -2.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scan_handles_endpoint_minimum() {
        let (x, _) = scan_minimize(|x| x, 0.0, 1.0, 50);
        assert!(x.abs() < 1e-10);
    }
}
