//! Monte Carlo check of the three-body integral `∫ρ|A[ρ]|²` at `R = 0`.
//!
//! Symmetrizing the triple integral over the three points turns the
//! integrand into half the inverse squared circumradius, so for a unit-mass
//! density `∫ρ|A[ρ]|² = E[𝓡⁻²]/6` with `x, y, z` drawn independently from `ρ`.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{Functional, FunctionalParams};
use crate::geometry::Triangle;
use crate::grid::{GridSpec, ScalarField, WaveFunction};
use crate::kernels::{KernelQuadrature, TrapPotential};

/// Unit-mass radial test densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialDensity {
    /// `e^{-r²}/π`.
    Gaussian,
    /// `r² e^{-r²}/π`.
    Ring,
    /// `3(1 - r²)²/π` on the unit disc.
    Bump,
}

impl RadialDensity {
    pub const ALL: [RadialDensity; 3] = [Self::Gaussian, Self::Ring, Self::Bump];

    pub fn eval(&self, r: f64) -> f64 {
        let r2 = r * r;
        match self {
            Self::Gaussian => (-r2).exp() / PI,
            Self::Ring => r2 * (-r2).exp() / PI,
            Self::Bump => {
                if r2 < 1.0 {
                    3.0 * (1.0 - r2).powi(2) / PI
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> [f64; 2] {
        let r2: f64 = match self {
            Self::Gaussian => {
                let gx: f64 = StandardNormal.sample(rng);
                let gy: f64 = StandardNormal.sample(rng);
                return [gx * 0.5f64.sqrt(), gy * 0.5f64.sqrt()];
            }
            Self::Ring => Gamma::new(2.0, 1.0).unwrap().sample(rng),
            Self::Bump => Beta::new(1.0, 3.0).unwrap().sample(rng),
        };
        let t = rng.gen_range(0.0..2.0 * PI);
        let r = r2.sqrt();
        [r * t.cos(), r * t.sin()]
    }
}

impl FromStr for RadialDensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "ring" => Ok(Self::Ring),
            "bump" => Ok(Self::Bump),
            other => Err(Error::Config(format!("unknown radial density {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: u64,
}

/// `E[𝓡⁻²]/6` by plain Monte Carlo over `ρ^{⊗3}`.
pub fn monte_carlo(density: RadialDensity, samples: u64, seed: u64) -> Result<McEstimate> {
    use rayon::prelude::*;
    if samples < 2 {
        return Err(Error::Config("Monte Carlo needs at least two samples".into()));
    }
    const CHUNK: u64 = 1 << 16;
    let chunks = samples.div_ceil(CHUNK);
    let (sum, sum_sq) = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let mut acc = (0.0, 0.0);
            for _ in k * CHUNK..((k + 1) * CHUNK).min(samples) {
                let p = [density.sample(&mut rng), density.sample(&mut rng), density.sample(&mut rng)];
                let v = Triangle::<f64>::from_f64(p).inv_circumradius_sqr().unwrap_or(0.0) / 6.0;
                acc.0 += v;
                acc.1 += v * v;
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(McEstimate { mean, std_err: (var / n).sqrt(), samples })
}

/// `∫ρ|A[ρ]|²` at `R = 0` on a grid, with `u = √ρ`.
pub fn grid_value(density: RadialDensity, spec: GridSpec<f64>) -> Result<f64> {
    let f = ScalarField::from_fn(spec, |x, y| Complex::new(density.eval(x.hypot(y)).sqrt(), 0.0));
    let u = WaveFunction::normalized(f)?;
    let params = FunctionalParams::new(1.0, 0.0, TrapPotential::harmonic());
    let functional = Functional::with_quadrature(spec, params, KernelQuadrature::Spectral)?;
    Ok(functional.energy(&u)?.quartic)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samplers_match_densities() {
        // radial CDF at r = 1 against the closed forms
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = 200_000;
        for (d, cdf1) in [
            (RadialDensity::Gaussian, 1.0 - (-1.0f64).exp()),
            (RadialDensity::Ring, 1.0 - 2.0 * (-1.0f64).exp()),
            (RadialDensity::Bump, 1.0),
        ] {
            let inside = (0..m).filter(|_| {
                let p = d.sample(&mut rng);
                p[0].hypot(p[1]) < 1.0
            });
            let frac = inside.count() as f64 / m as f64;
            assert!((frac - cdf1).abs() < 5e-3, "{d:?} {frac} {cdf1}");
        }
    }

    #[test]
    fn densities_have_unit_mass() {
        for d in RadialDensity::ALL {
            let k = 200_000;
            let dr = 6.0 / k as f64;
            let mass: f64 = (0..k).map(|i| (i as f64 + 0.5) * dr).map(|r| 2.0 * PI * r * d.eval(r) * dr).sum();
            assert!((mass - 1.0).abs() < 1e-8, "{d:?}");
        }
    }

    #[test]
    fn gaussian_grid_value_is_log_four_thirds() {
        // closed form for e^{-r²}/π: A is radial-free, |A| = (1 - e^{-r²})/r
        let k = 400_000;
        let dr = 8.0 / k as f64;
        let exact: f64 = (0..k)
            .map(|i| (i as f64 + 0.5) * dr)
            .map(|r| {
                let a = (1.0 - (-r * r).exp()) / r;
                2.0 * PI * r * dr * (-r * r).exp() / PI * a * a
            })
            .sum();
        assert!((exact - (4.0f64 / 3.0).ln()).abs() < 1e-9);
        let g = grid_value(RadialDensity::Gaussian, GridSpec::new(128, 6.0).unwrap()).unwrap();
        assert!((g - exact).abs() < 1e-6, "{g} {exact}");
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let a = monte_carlo(RadialDensity::Ring, 100_000, 9).unwrap();
        let b = monte_carlo(RadialDensity::Ring, 100_000, 9).unwrap();
        assert_eq!(a, b);
        assert!(monte_carlo(RadialDensity::Ring, 1, 9).is_err());
    }
}
