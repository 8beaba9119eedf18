//! Energy per particle of product states `u^{⊗N}` for the extended-anyon
//! Hamiltonian, as an upper bound next to the average-field functional.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::density;
use crate::functional::{EnergyBreakdown, Functional, FunctionalParams};
use crate::grid::{GridSpec, WaveFunction};
use crate::kernels::{alpha_of, TrapPotential};
use crate::scalar::Real;
use crate::solver::{minimize, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManyBodyParams {
    pub n_particles: u64,
    pub beta: f64,
    pub radius: f64,
    pub trap: TrapPotential<f64>,
}

impl ManyBodyParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::Domain(format!(
                "need at least 2 particles, got {}",
                self.n_particles
            )));
        }
        if !(self.radius > 0.0) {
            return Err(Error::Domain(format!(
                "R = {} makes the two-body term ∫|∇w_R|² γ^(2) divergent: |∇w_0|² = 1/|x|² is not locally integrable; use R > 0",
                self.radius
            )));
        }
        Ok(())
    }

    /// `α = β/(N-1)`.
    pub fn alpha(&self) -> Result<f64> {
        alpha_of(self.beta, self.n_particles)
    }

    pub fn functional_params(&self) -> FunctionalParams<f64> {
        FunctionalParams::new(self.beta, self.radius, self.trap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManyBodyBreakdown {
    pub kinetic: f64,
    pub potential: f64,
    pub one_body: f64,
    pub mixed: f64,
    /// `β² (N-2)/(N-1) ∫ρ|A^R|²`.
    pub three_body: f64,
    /// `β²/(N-1) ∫(|∇w_R|² ∗ ρ)ρ`.
    pub singular: f64,
    pub per_particle_total: f64,
}

/// The `N`-independent integrals of one state; any `N` is then pure arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductStateIntegrals {
    pub beta: f64,
    /// Functional breakdown of the state, including `quartic = β²∫ρ|A|²`.
    pub functional: EnergyBreakdown<f64>,
    /// `∫ρ|A^R|²`.
    pub three_body_integral: f64,
    /// `∫(|∇w_R|² ∗ ρ)ρ`.
    pub singular_integral: f64,
}

impl ProductStateIntegrals {
    pub fn compute(functional: &Functional<f64>, u: &WaveFunction<f64>) -> Result<Self> {
        let kernels = functional.kernels();
        let sq = kernels.grad_w_sq.as_ref().ok_or_else(|| {
            Error::Domain("R = 0: |∇w_0|² is not locally integrable, the singular term diverges".into())
        })?;
        let e = functional.energy(u)?;
        let rho = density(u);
        let a = crate::fields::vector_potential(functional.grid(), &rho, kernels)?;
        let smeared = functional.grid().convolve(&rho, sq)?;
        Ok(Self {
            beta: functional.params().beta,
            functional: e,
            three_body_integral: rho.dot(&a.norm_sqr()),
            singular_integral: rho.dot(&smeared),
        })
    }

    pub fn breakdown(&self, n_particles: u64) -> Result<ManyBodyBreakdown> {
        if n_particles < 2 {
            return Err(Error::Domain(format!("need at least 2 particles, got {n_particles}")));
        }
        let b2 = self.beta * self.beta;
        let nm1 = (n_particles - 1) as f64;
        let nm2 = (n_particles - 2) as f64;
        let e = &self.functional;
        let one_body = e.kinetic + e.potential;
        let three_body = b2 * (nm2 / nm1) * self.three_body_integral;
        let singular = b2 / nm1 * self.singular_integral;
        Ok(ManyBodyBreakdown {
            kinetic: e.kinetic,
            potential: e.potential,
            one_body,
            mixed: e.mixed,
            three_body,
            singular,
            per_particle_total: one_body + e.mixed + three_body + singular,
        })
    }

    /// `per_particle_total - E^af_R[u]`, assembled from its closed form
    /// `β²(∫(|∇w_R|²∗ρ)ρ - ∫ρ|A|²)/(N-1)`.
    pub fn gap(&self, n_particles: u64) -> f64 {
        let nm1 = (n_particles - 1) as f64;
        self.beta * self.beta * (self.singular_integral - self.three_body_integral) / nm1
    }
}

/// Energy per particle of `u^{⊗N}`.
pub fn product_state_energy(
    u: &WaveFunction<f64>,
    params: &ManyBodyParams,
) -> Result<ManyBodyBreakdown> {
    params.validate()?;
    let functional = Functional::new(u.spec(), params.functional_params())?;
    ProductStateIntegrals::compute(&functional, u)?.breakdown(params.n_particles)
}

/// The mixed term `2β∫A^R·J` computed twice: (a) as the double integral
/// `iβ∬ρ(y) ∇^⊥w_R(x-y)·(u∇ū - ū∇u)(x)` by a direct sum over all grid pairs,
/// (b) through the FFT convolution and the current. Returns `(a, b)`.
pub fn mixed_term_crosscheck(functional: &Functional<f64>, u: &WaveFunction<f64>) -> Result<(f64, f64)> {
    let grid = functional.grid();
    let spec = functional.spec();
    let beta = functional.params().beta;
    let n = spec.n() as i64;
    let du = grid.spectral_gradient(u.field());
    let dubar = grid.spectral_gradient(&u.field().conj());
    let rho = density(u);
    let i = Complex::new(0.0, 1.0);
    let flux: Vec<[Complex<f64>; 2]> = (0..spec.len())
        .map(|idx| {
            let z = u.values()[idx];
            [
                i * (z * dubar[0].values[idx] - z.conj() * du[0].values[idx]),
                i * (z * dubar[1].values[idx] - z.conj() * du[1].values[idx]),
            ]
        })
        .collect();
    let kx = &functional.kernels().perp.x;
    let ky = &functional.kernels().perp.y;
    let w = spec.cell_area();
    let direct: Complex<f64> = (0..spec.len())
        .into_par_iter()
        .map(|xi| {
            let (ix, jx) = (xi as i64 % n, xi as i64 / n);
            let mut acc = Complex::new(0.0, 0.0);
            for yi in 0..spec.len() {
                let r = rho.values[yi];
                if r == 0.0 {
                    continue;
                }
                let (iy, jy) = (yi as i64 % n, yi as i64 / n);
                let (di, dj) = (ix - iy, jx - jy);
                acc += (flux[xi][0] * kx.at(di, dj) + flux[xi][1] * ky.at(di, dj)) * r;
            }
            acc
        })
        .sum();
    let a = (direct * w * w * beta).re;
    let b = functional.energy(u)?.mixed;
    Ok((a, b))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpperBoundRow {
    pub n_particles: u64,
    pub functional_energy: f64,
    pub per_particle: f64,
    pub gap: f64,
    pub breakdown: ManyBodyBreakdown,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpperBoundReport {
    pub beta: f64,
    pub radius: f64,
    pub functional_energy: f64,
    pub converged: bool,
    pub rows: Vec<UpperBoundRow>,
    /// Every gap is `≥ -1e-10`.
    pub gaps_nonnegative: bool,
    /// Gaps strictly decrease along increasing `N`.
    pub gaps_decreasing: bool,
}

/// Minimizes `E^af_R` and evaluates the product-state energy of the minimizer
/// for each particle number.
pub fn upper_bound_report(
    params: &ManyBodyParams,
    particle_numbers: &[u64],
    spec: GridSpec<f64>,
    cfg: &SolverConfig<f64>,
) -> Result<UpperBoundReport> {
    params.validate()?;
    let functional = Functional::new(spec, params.functional_params())?;
    let solved = minimize(&functional, cfg)?;
    upper_bound_rows(&functional, &solved.u, solved.converged, particle_numbers)
}

/// [`upper_bound_report`] for a given state.
pub fn upper_bound_rows(
    functional: &Functional<f64>,
    u: &WaveFunction<f64>,
    converged: bool,
    particle_numbers: &[u64],
) -> Result<UpperBoundReport> {
    let ints = ProductStateIntegrals::compute(functional, u)?;
    let mut numbers = particle_numbers.to_vec();
    numbers.sort_unstable();
    let rows = numbers
        .iter()
        .map(|&n| {
            let breakdown = ints.breakdown(n)?;
            Ok(UpperBoundRow {
                n_particles: n,
                functional_energy: ints.functional.total,
                per_particle: breakdown.per_particle_total,
                gap: breakdown.per_particle_total - ints.functional.total,
                breakdown,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let gaps_nonnegative = rows.iter().all(|r| r.gap >= -1e-10);
    let gaps_decreasing = rows.windows(2).all(|w| w[1].gap < w[0].gap);
    Ok(UpperBoundReport {
        beta: functional.params().beta,
        radius: functional.params().radius,
        functional_energy: ints.functional.total,
        converged,
        rows,
        gaps_nonnegative,
        gaps_decreasing,
    })
}

/// Generic-scalar version of the state-independent check that `∫(|∇w_R|²∗ρ)ρ ≥ ∫ρ|A|²`
/// (Cauchy–Schwarz for unit mass), returned as the difference.
pub fn singular_excess<T: Real>(functional: &Functional<T>, u: &WaveFunction<T>) -> Result<T> {
    let kernels = functional.kernels();
    let sq = kernels
        .grad_w_sq
        .as_ref()
        .ok_or_else(|| Error::Domain("R = 0 has no |∇w_R|² kernel".into()))?;
    let rho = density(u);
    let a = crate::fields::vector_potential(functional.grid(), &rho, kernels)?;
    let s = rho.dot(&functional.grid().convolve(&rho, sq)?);
    Ok(s - rho.dot(&a.norm_sqr()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states;

    fn params(n: u64, beta: f64, radius: f64) -> ManyBodyParams {
        ManyBodyParams {
            n_particles: n,
            beta,
            radius,
            trap: TrapPotential::harmonic(),
        }
    }

    fn spec() -> GridSpec<f64> {
        GridSpec::new(64, 6.0).unwrap()
    }

    #[test]
    fn zero_radius_is_rejected() {
        let u = states::gaussian(spec(), 1.0);
        let err = product_state_energy(&u, &params(10, 1.0, 0.0)).unwrap_err();
        assert!(err.to_string().contains("not locally integrable"));
        assert!(product_state_energy(&u, &params(1, 1.0, 0.1)).is_err());
    }

    #[test]
    fn two_particles_have_no_three_body_term() {
        let u = states::random_smooth(spec(), 3, 1);
        let b = product_state_energy(&u, &params(2, 1.0, 0.2)).unwrap();
        assert_eq!(b.three_body, 0.0);
        let sum = b.one_body + b.mixed + b.singular;
        assert!((b.per_particle_total - sum).abs() < 1e-14);
    }

    #[test]
    fn coefficients_are_exact() {
        let f = Functional::new(spec(), params(10, 0.7, 0.2).functional_params()).unwrap();
        let u = states::random_smooth(spec(), 3, 2);
        let ints = ProductStateIntegrals::compute(&f, &u).unwrap();
        for n in [2u64, 3, 10, 1000, 1_000_000] {
            let b = ints.breakdown(n).unwrap();
            let q = 0.49 * ints.three_body_integral;
            let s = 0.49 * ints.singular_integral;
            assert!((b.three_body / q - (n - 2) as f64 / (n - 1) as f64).abs() < 1e-15);
            assert!((b.singular / s - 1.0 / (n - 1) as f64).abs() < 1e-15);
        }
        // the functional's quartic term is the N → ∞ limit of the three-body term
        assert!((ints.functional.quartic - 0.49 * ints.three_body_integral).abs() < 1e-14);
    }

    #[test]
    fn large_n_approaches_the_functional() {
        let f = Functional::new(spec(), params(10, 1.0, 0.1).functional_params()).unwrap();
        let u = states::gaussian(spec(), 1.0);
        let ints = ProductStateIntegrals::compute(&f, &u).unwrap();
        let b = ints.breakdown(1_000_000).unwrap();
        let gap = b.per_particle_total - ints.functional.total;
        let expect = 1e-6 * (ints.singular_integral - ints.three_body_integral) * 1_000_000.0 / 999_999.0;
        assert!((gap - expect).abs() < 1e-12);
        assert!(gap > 0.0);
    }

    #[test]
    fn real_state_is_even_in_beta() {
        let u = states::gaussian(spec(), 1.2);
        let a = product_state_energy(&u, &params(50, 0.8, 0.2)).unwrap();
        let b = product_state_energy(&u, &params(50, -0.8, 0.2)).unwrap();
        assert!((a.per_particle_total - b.per_particle_total).abs() < 1e-14);
    }

    #[test]
    fn zero_coupling_has_zero_gap() {
        let f = Functional::new(spec(), params(10, 0.0, 0.1).functional_params()).unwrap();
        let u = states::random_smooth(spec(), 2, 3);
        let report = upper_bound_rows(&f, &u, true, &[2, 10, 1000]).unwrap();
        for row in &report.rows {
            assert_eq!(row.gap, 0.0);
        }
    }

    #[test]
    fn gap_shrinks_with_particle_number() {
        let f = Functional::new(spec(), params(10, 1.0, 0.1).functional_params()).unwrap();
        let u = states::random_smooth(spec(), 2, 3);
        let report = upper_bound_rows(&f, &u, true, &[1000, 2]).unwrap();
        assert!(report.gaps_nonnegative);
        assert!(report.gaps_decreasing);
        assert_eq!(report.rows[0].n_particles, 2);
        assert!(singular_excess(&f, &u).unwrap() > 0.0);
    }

    #[test]
    fn mixed_term_two_ways() {
        let spec = GridSpec::new(32, 4.0).unwrap();
        let f = Functional::new(spec, params(10, 1.3, 0.2).functional_params()).unwrap();
        let u = states::random_smooth(spec, 3, 8);
        let (a, b) = mixed_term_crosscheck(&f, &u).unwrap();
        assert!(b.abs() > 1e-3);
        assert!((a - b).abs() < 1e-8 * b.abs(), "{a} vs {b}");
        let (ac, bc) = mixed_term_crosscheck(&f, &u.conj()).unwrap();
        assert!((ac + a).abs() < 1e-12 && (bc + b).abs() < 1e-12);
        let real = states::gaussian(spec, 1.0);
        let (ar, br) = mixed_term_crosscheck(&f, &real).unwrap();
        assert!(ar.abs() < 1e-12 && br.abs() < 1e-12);
    }
}
