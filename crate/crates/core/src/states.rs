//! Standard initial and test wavefunctions.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::grid::{GridSpec, ScalarField, WaveFunction};
use crate::scalar::Real;

/// Normalized `exp(-|x|²/(2σ²))`.
pub fn gaussian<T: Real>(spec: GridSpec<T>, sigma: T) -> WaveFunction<T> {
    let two_s2 = T::of(2.0) * sigma * sigma;
    let f = ScalarField::from_fn(spec, |x, y| {
        Complex::new((-(x * x + y * y) / two_s2).exp(), T::zero())
    });
    WaveFunction::normalized(f).expect("gaussian has positive mass")
}

/// Normalized `(x + iy)^m exp(-|x|²/(2σ²))`, winding number `m`.
pub fn gaussian_vortex<T: Real>(spec: GridSpec<T>, sigma: T, winding: u32) -> WaveFunction<T> {
    let two_s2 = T::of(2.0) * sigma * sigma;
    let f = ScalarField::from_fn(spec, |x, y| {
        Complex::new(x, y).powu(winding) * (-(x * x + y * y) / two_s2).exp()
    });
    WaveFunction::normalized(f).expect("vortex has positive mass")
}

/// Random smooth normalized state: a complex polynomial of total degree
/// `degree` with Gaussian coefficients times a Gaussian envelope of width `L/6`
/// centered at a random offset. Decays to roughly `1e-8` at the box edge.
pub fn random_smooth<T: Real>(spec: GridSpec<T>, degree: u32, seed: u64) -> WaveFunction<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = spec.half_width().as_f64();
    let sigma = l / 6.0;
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let cx = 0.1 * sigma * normal();
    let cy = 0.1 * sigma * normal();
    let mut coeffs = Vec::new();
    for a in 0..=degree {
        for b in 0..=(degree - a) {
            // damp higher orders so no single term dominates the envelope
            let damp = 1.0 / (1u64 << (a + b)) as f64;
            coeffs.push((a as i32, b as i32, Complex::new(normal(), normal()) * damp));
        }
    }
    let f = ScalarField::from_fn(spec, |x, y| {
        let (x, y) = ((x.as_f64() - cx) / sigma, (y.as_f64() - cy) / sigma);
        let poly: Complex<f64> = coeffs
            .iter()
            .map(|(a, b, c)| c * x.powi(*a) * y.powi(*b))
            .sum();
        let z = poly * (-(x * x + y * y) / 2.0).exp();
        Complex::new(T::of(z.re), T::of(z.im))
    });
    WaveFunction::normalized(f).expect("random polynomial state has positive mass")
}

/// `base · (1 + ε p)` renormalized, with `p` a smooth random complex field of
/// unit scale built like [`random_smooth`] without the envelope.
pub fn perturbed<T: Real>(base: &WaveFunction<T>, amplitude: T, seed: u64) -> WaveFunction<T> {
    let spec = base.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = spec.half_width().as_f64();
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let modes: Vec<(f64, f64, Complex<f64>)> = (0..6)
        .map(|_| {
            let kx = normal() * 2.0 / l;
            let ky = normal() * 2.0 / l;
            (kx, ky, Complex::new(normal(), normal()) / 6f64.sqrt())
        })
        .collect();
    let field = ScalarField::from_fn(spec, |x, y| {
        let (x, y) = (x.as_f64(), y.as_f64());
        let p: Complex<f64> = modes
            .iter()
            .map(|(kx, ky, c)| c * Complex::from_polar(1.0, kx * x + ky * y))
            .sum();
        Complex::new(T::of(p.re), T::of(p.im))
    });
    let eps = Complex::new(amplitude, T::zero());
    let values = base
        .values()
        .iter()
        .zip(&field.values)
        .map(|(u, p)| u + u * p * eps)
        .collect();
    WaveFunction::normalized(ScalarField { spec, values }).expect("perturbation keeps mass")
}

/// Winding number of the phase of `u` along the square loop of grid nodes at
/// index distance `radius` from the center node. `None` if `u` is smaller than
/// `floor` somewhere on the loop.
pub fn winding_number<T: Real>(u: &WaveFunction<T>, radius: usize, floor: T) -> Option<i64> {
    let spec = u.spec();
    let n = spec.n() as i64;
    let c = (n / 2) as i64;
    let r = radius as i64;
    if r == 0 || c - r < 0 || c + r >= n {
        return None;
    }
    let mut loop_nodes = Vec::new();
    for i in -r..r {
        loop_nodes.push((c + i, c - r));
    }
    for j in -r..r {
        loop_nodes.push((c + r, c + j));
    }
    for i in (-r + 1..=r).rev() {
        loop_nodes.push((c + i, c + r));
    }
    for j in (-r + 1..=r).rev() {
        loop_nodes.push((c - r, c + j));
    }
    let at = |(i, j): (i64, i64)| u.values()[(j * n + i) as usize];
    let mut total = 0.0;
    for k in 0..loop_nodes.len() {
        let a = at(loop_nodes[k]);
        let b = at(loop_nodes[(k + 1) % loop_nodes.len()]);
        if a.norm() < floor || b.norm() < floor {
            return None;
        }
        total += (b * a.conj()).arg().as_f64();
    }
    Some((total / (2.0 * std::f64::consts::PI)).round() as i64)
}
