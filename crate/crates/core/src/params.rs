use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model parameters with the derived decay rate and ratio cached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    m: f64,
    omega: f64,
    p: f64,
    mu: f64,
    kappa: f64,
    nu: f64,
}

/// Returns `(kappa, nu)` for a mass `m` and frequency `omega`.
pub fn derived_params(m: f64, omega: f64) -> Result<(f64, f64)> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::invalid(format!("mass must be positive, got {m}")));
    }
    if !(omega.is_finite() && omega > 0.0 && omega < m) {
        return Err(Error::invalid(format!("frequency must lie in (0, m) = (0, {m}), got {omega}")));
    }
    let kappa = ((m - omega) * (m + omega)).sqrt();
    let nu = (m - omega) / (m + omega);
    Ok((kappa, nu))
}

impl ModelParams {
    pub fn new(m: f64, omega: f64, p: f64, mu: f64) -> Result<Self> {
        let (kappa, nu) = derived_params(m, omega)?;
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::invalid(format!("exponent must be positive, got {p}")));
        }
        if !mu.is_finite() {
            return Err(Error::invalid("coupling mu must be finite"));
        }
        Ok(Self { m, omega, p, mu, kappa, nu })
    }

    /// `m = 1`, `omega = 0.5`, `p = 1`, `mu = 0`.
    pub fn reference() -> Self {
        Self::new(1.0, 0.5, 1.0, 0.0).expect("reference parameters are valid")
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(self.m, self.omega, p, self.mu)
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::new(self.m, self.omega, self.p, mu)
    }

    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::new(self.m, omega, self.p, self.mu)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub(crate) fn require_unit_power(&self, what: &str) -> Result<()> {
        if self.p != 1.0 {
            return Err(Error::invalid(format!("{what} requires p = 1, got p = {}", self.p)));
        }
        Ok(())
    }
}
