//! Uniform symmetric grids and staggered spinor fields on them.
//!
//! Spinor node `i` carries its upper component at `x_i - h/4` and its lower
//! component at `x_i + h/4`. Interleaving `(c1_0, c2_0, c1_1, c2_1, ...)` gives a
//! chain with spacing `h/2` that is symmetric about the origin.

use serde::Serialize;

use crate::closed_forms::SpinorValue;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    half_length: f64,
    n: usize,
    h: f64,
    #[serde(skip)]
    nodes: Vec<f64>,
}

/// Grid of `n` nodes on `[-L, L]`; `n` even and at least 16.
pub fn build_grid(half_length: f64, n: usize) -> Result<Grid> {
    if !(half_length.is_finite() && half_length > 0.0) {
        return Err(Error::invalid(format!("half-length must be positive, got {half_length}")));
    }
    if n < 16 || !n.is_multiple_of(2) {
        return Err(Error::invalid(format!("node count must be even and >= 16, got {n}")));
    }
    let h = 2.0 * half_length / (n - 1) as f64;
    // (2i - n + 1) h / 2 is exactly antisymmetric under i -> n - 1 - i.
    let nodes = (0..n).map(|i| (2.0 * i as f64 - n as f64 + 1.0) * 0.5 * h).collect();
    Ok(Grid { half_length, n, h, nodes })
}

impl Grid {
    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Same node count on `[-factor L, factor L]`.
    pub fn scaled(&self, factor: f64) -> Result<Grid> {
        build_grid(self.half_length * factor, self.n)
    }

    pub fn upper_site(&self, i: usize) -> f64 {
        self.nodes[i] - 0.25 * self.h
    }

    pub fn lower_site(&self, i: usize) -> f64 {
        self.nodes[i] + 0.25 * self.h
    }

    /// Position of entry `k` of the interleaved chain.
    pub fn chain_position(&self, k: usize) -> f64 {
        (2.0 * k as f64 - 2.0 * self.n as f64 + 1.0) * 0.25 * self.h
    }
}

/// Real spinor field sampled on the staggered sites of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpinor {
    pub h: f64,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
}

impl GridSpinor {
    pub fn sample<F: Fn(f64) -> SpinorValue>(grid: &Grid, f: F) -> Self {
        let n = grid.n();
        let c1 = (0..n).map(|i| f(grid.upper_site(i)).c1).collect();
        let c2 = (0..n).map(|i| f(grid.lower_site(i)).c2).collect();
        Self { h: grid.h(), c1, c2 }
    }

    pub fn from_interleaved(h: f64, data: &[f64]) -> Self {
        let c1 = data.iter().step_by(2).copied().collect();
        let c2 = data.iter().skip(1).step_by(2).copied().collect();
        Self { h, c1, c2 }
    }

    pub fn to_interleaved(&self) -> Vec<f64> {
        self.c1.iter().zip(&self.c2).flat_map(|(a, b)| [*a, *b]).collect()
    }

    pub fn len(&self) -> usize {
        self.c1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c1.is_empty()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        let a: f64 = self.c1.iter().zip(&other.c1).map(|(x, y)| x * y).sum();
        let b: f64 = self.c2.iter().zip(&other.c2).map(|(x, y)| x * y).sum();
        self.h * (a + b)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}
