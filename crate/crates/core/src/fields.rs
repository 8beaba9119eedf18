//! Physical fields derived from a wavefunction: density, phase current,
//! self-consistent vector potential and its curl.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{Grid, RealField, ScalarField, VectorField2, WaveFunction};
use crate::kernels::KernelSet;
use crate::scalar::Real;
use crate::stencil;

/// `ρ = |u|²`.
pub fn density<T: Real>(u: &WaveFunction<T>) -> RealField<T> {
    RealField {
        spec: u.spec(),
        values: u.values().iter().map(|z| z.norm_sqr()).collect(),
    }
}

/// `J[u] = (i/2)(u ∇ū - ū ∇u)` with spectral gradients of both `u` and `ū`.
///
/// The result is real in exact arithmetic. An imaginary residue above `1e-8`
/// relative to `max|u|·max|∇u|` is reported as a consistency error.
pub fn current<T: Real>(grid: &Grid<T>, u: &WaveFunction<T>) -> Result<VectorField2<T>> {
    let du = grid.spectral_gradient(u.field());
    let dubar = grid.spectral_gradient(&u.field().conj());
    let half_i = Complex::new(T::zero(), T::of(0.5));
    let scale = (u.field().max_abs() * du[0].max_abs().max(du[1].max_abs())).max(T::min_positive_value());
    let mut out = VectorField2::zeros(u.spec());
    let mut worst = T::zero();
    for (c, target) in [&mut out.x, &mut out.y].into_iter().enumerate() {
        for (idx, slot) in target.iter_mut().enumerate() {
            let z = u.values()[idx];
            let j = half_i * (z * dubar[c].values[idx] - z.conj() * du[c].values[idx]);
            worst = worst.max(j.im.abs());
            *slot = j.re;
        }
    }
    if worst > T::tol(1e-8) * scale {
        return Err(Error::Consistency(format!(
            "current has imaginary residue {worst} (scale {scale})"
        )));
    }
    Ok(out)
}

/// Current from precomputed gradients `∂_c u`: `J_c = -Im(u ∂_c ū)`.
pub(crate) fn current_from_gradient<T: Real>(
    u: &ScalarField<T>,
    du: &[ScalarField<T>; 2],
) -> VectorField2<T> {
    let comp = |d: &ScalarField<T>| -> Vec<T> {
        u.values
            .iter()
            .zip(&d.values)
            .map(|(z, dz)| -(z * dz.conj()).im)
            .collect()
    };
    VectorField2 {
        spec: u.spec,
        x: comp(&du[0]),
        y: comp(&du[1]),
    }
}

/// `A^R[ρ] = ∇^⊥ w_R ∗ ρ`.
pub fn vector_potential<T: Real>(
    grid: &Grid<T>,
    rho: &RealField<T>,
    kernels: &KernelSet<T>,
) -> Result<VectorField2<T>> {
    grid.convolve_vector(rho, &kernels.perp)
}

/// Curl `∂_x A_y - ∂_y A_x` of a vector potential.
///
/// A potential generated by a decaying density falls off like `M x^⊥/|x|²` and
/// is not periodic on the box, which spoils Fourier differentiation near the
/// edges. High-order finite differences are used instead.
pub fn curl_a<T: Real>(a: &VectorField2<T>) -> RealField<T> {
    stencil::curl(a)
}

/// Divergence of a vector potential, differentiated like [`curl_a`].
pub fn divergence_a<T: Real>(a: &VectorField2<T>) -> RealField<T> {
    stencil::divergence(a)
}

/// Fields derived from one wavefunction.
#[derive(Debug, Clone)]
pub struct DerivedFields<T> {
    pub rho: RealField<T>,
    pub current: VectorField2<T>,
    pub potential: VectorField2<T>,
    /// Self-consistency scalar potential entering the energy gradient.
    pub scalar: RealField<T>,
}

impl<T: Real> DerivedFields<T> {
    pub fn compute(
        grid: &Grid<T>,
        u: &WaveFunction<T>,
        kernels: &KernelSet<T>,
        beta: T,
    ) -> Result<Self> {
        let rho = density(u);
        let du = grid.spectral_gradient(u.field());
        let current = current_from_gradient(u.field(), &du);
        let potential = vector_potential(grid, &rho, kernels)?;
        let scalar = self_consistency_potential(grid, &rho, &current, &potential, kernels, beta)?;
        Ok(Self {
            rho,
            current,
            potential,
            scalar,
        })
    }
}

/// `W = -2β (∇^⊥ w_R) ∗ · (J + β ρ A)`, the variation of the magnetic energy
/// with respect to `ρ` through `A^R[ρ]`.
pub(crate) fn self_consistency_potential<T: Real>(
    grid: &Grid<T>,
    rho: &RealField<T>,
    current: &VectorField2<T>,
    potential: &VectorField2<T>,
    kernels: &KernelSet<T>,
    beta: T,
) -> Result<RealField<T>> {
    if beta == T::zero() {
        return Ok(RealField::zeros(rho.spec));
    }
    let mut f = current.clone();
    for idx in 0..f.x.len() {
        f.x[idx] += beta * rho.values[idx] * potential.x[idx];
        f.y[idx] += beta * rho.values[idx] * potential.y[idx];
    }
    let mut w = grid.convolve_dot(&f, &kernels.perp)?;
    let s = -(beta + beta);
    w.values.iter_mut().for_each(|v| *v *= s);
    Ok(w)
}
