//! Contact-interaction lower bound: at `R = 0` the average-field energy
//! dominates `2π|β|∫ρ² + ∫Vρ`, which in turn dominates the Thomas-Fermi
//! energy `inf {∫ 2π|β|ρ² + Vρ : ρ ≥ 0, ∫ρ = 1}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::density;
use crate::functional::Functional;
use crate::grid::WaveFunction;
use crate::kernels::TrapPotential;

/// Thomas-Fermi minimizer `ρ = (μ − c|x|^s)_+ / (4π|β|)` for a power trap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThomasFermi {
    pub beta: f64,
    pub trap: TrapPotential<f64>,
    /// Chemical potential.
    pub mu: f64,
    /// Support radius `(μ/c)^{1/s}`.
    pub support: f64,
    pub energy: f64,
}

impl ThomasFermi {
    pub fn new(beta: f64, trap: TrapPotential<f64>) -> Result<Self> {
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::Domain(format!("contact bound needs finite β ≠ 0, got {beta}")));
        }
        let (b, c, s) = (beta.abs(), trap.strength, trap.exponent);
        // unit mass fixes μ^{1+2/s}
        let mu = (4.0 * b * (s + 2.0) * c.powf(2.0 / s) / s).powf(s / (s + 2.0));
        // E = μ − 2π|β|∫ρ², with ∫(1 − t^s)² t dt = 1/2 − 2/(s+2) + 1/(2s+2)
        let k = 0.5 - 2.0 / (s + 2.0) + 1.0 / (2.0 * s + 2.0);
        let energy = mu * (1.0 - (s + 2.0) * k / s);
        Ok(Self { beta, trap, mu, support: (mu / c).powf(1.0 / s), energy })
    }

    pub fn density_at(&self, r: f64) -> f64 {
        let v = self.trap.strength * r.powf(self.trap.exponent);
        (self.mu - v).max(0.0) / (4.0 * PI * self.beta.abs())
    }
}

/// The Thomas-Fermi energy at coupling `β`.
pub fn contact_bound(beta: f64, trap: TrapPotential<f64>) -> Result<f64> {
    Ok(ThomasFermi::new(beta, trap)?.energy)
}

/// `2π|β|∫|u|⁴ + ∫V|u|²` on the functional's grid.
pub fn contact_functional(functional: &Functional<f64>, u: &WaveFunction<f64>) -> f64 {
    let rho = density(u);
    let beta = functional.params().beta.abs();
    2.0 * PI * beta * rho.dot(&rho) + rho.dot(functional.trap_field())
}
