//! The smeared Coulomb kernel family `w_R = log|·| ∗ 1_{B(0,R)}/(πR²)`, its
//! gradient, trap potentials and the grid samples used by the field module.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::grid::{Grid, GridSpec, PaddedKernel, RealField, VectorKernel};
use crate::scalar::Real;

/// Coulomb potential of a unit charge spread uniformly over a disc of radius `R`.
/// `R = 0` is the point charge `log|x|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmearedCoulomb<T> {
    radius: T,
}

impl<T: Real> SmearedCoulomb<T> {
    pub fn new(radius: T) -> Result<Self> {
        if !(radius >= T::zero()) || !radius.is_finite() {
            return Err(Error::Domain(format!(
                "smearing radius must be finite and >= 0, got {radius}"
            )));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    /// `w_R(x)`: `log|x|` outside the disc, `log R + (|x|²/R² - 1)/2` inside.
    pub fn w(&self, x: T, y: T) -> Result<T> {
        let r2 = x * x + y * y;
        let r = self.radius;
        if r2 >= r * r {
            if r2 == T::zero() {
                return Err(Error::Domain("w_0 is singular at the origin".into()));
            }
            Ok(r2.ln() * T::of(0.5))
        } else {
            Ok(r.ln() + (r2 / (r * r) - T::one()) * T::of(0.5))
        }
    }

    /// `∇w_R(x)`: `x/|x|²` outside the disc, `x/R²` inside.
    pub fn grad(&self, x: T, y: T) -> Result<(T, T)> {
        let r2 = x * x + y * y;
        if r2 == T::zero() && self.radius == T::zero() {
            return Err(Error::Domain("∇w_0 is singular at the origin".into()));
        }
        let d = r2.max(self.radius * self.radius);
        Ok((x / d, y / d))
    }

    /// `∇^⊥ w_R = (-∂_y w_R, ∂_x w_R)`.
    pub fn grad_perp(&self, x: T, y: T) -> Result<(T, T)> {
        let (gx, gy) = self.grad(x, y)?;
        Ok((-gy, gx))
    }
}

/// Exact `‖∇w_R‖_{L^p(ℝ²)}` for `p > 2`, `R > 0`:
/// `(2π R^{2-p} (1/(p+2) + 1/(p-2)))^{1/p}`.
pub fn lp_norm_grad_w(radius: f64, p: f64) -> Result<f64> {
    if !(p > 2.0) || !p.is_finite() {
        return Err(Error::Domain(format!(
            "‖∇w_R‖_p is infinite for p <= 2 (got p = {p})"
        )));
    }
    if !(radius > 0.0) {
        return Err(Error::Domain(format!(
            "‖∇w_R‖_p needs R > 0 (got R = {radius})"
        )));
    }
    let inner = 1.0 / (p + 2.0);
    let outer = 1.0 / (p - 2.0);
    Ok((2.0 * std::f64::consts::PI * radius.powf(2.0 - p) * (inner + outer)).powf(1.0 / p))
}

/// Upper end `(1/4)(1 + 1/s)^{-1}` of the admissible range of the smearing exponent
/// `R ~ N^{-η}` for traps growing like `|x|^s`.
pub fn eta0(s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("trap exponent must be > 0, got {s}")));
    }
    Ok(0.25 / (1.0 + 1.0 / s))
}

/// Statistics parameter `α = β/(N-1)`.
pub fn alpha_of(beta: f64, n_particles: u64) -> Result<f64> {
    if n_particles < 2 {
        return Err(Error::Domain(format!(
            "need at least two particles, got N = {n_particles}"
        )));
    }
    Ok(beta / (n_particles - 1) as f64)
}

/// Power-law trap `V(x) = c |x|^s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapPotential<T> {
    pub strength: T,
    pub exponent: T,
}

impl<T: Real> TrapPotential<T> {
    pub fn power(strength: T, exponent: T) -> Result<Self> {
        if !(strength > T::zero()) || !(exponent > T::zero()) {
            return Err(Error::Domain(format!(
                "trap needs c > 0 and s > 0, got c = {strength}, s = {exponent}"
            )));
        }
        Ok(Self { strength, exponent })
    }

    /// `V(x) = |x|²`.
    pub fn harmonic() -> Self {
        Self {
            strength: T::one(),
            exponent: T::of(2.0),
        }
    }

    #[inline]
    pub fn eval(&self, x: T, y: T) -> T {
        let r2 = x * x + y * y;
        if self.exponent == T::of(2.0) {
            self.strength * r2
        } else if r2 == T::zero() {
            T::zero()
        } else {
            self.strength * r2.powf(self.exponent * T::of(0.5))
        }
    }

    pub fn sample(&self, spec: GridSpec<T>) -> RealField<T> {
        RealField::from_fn(spec, |x, y| self.eval(x, y))
    }
}

/// How the vector-potential kernel `∇^⊥ w_R` is discretized for convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum KernelQuadrature {
    /// Closed-form point samples with the origin sample set to zero.
    PointSample,
    /// Samples of the kernel whose discrete convolution reproduces the continuous
    /// convolution with the band-limited interpolant of the density. Built from the
    /// Fourier transform of the truncated kernel; resolves `R` below the grid spacing.
    #[default]
    Spectral,
}

/// Sampled kernels on the `2n × 2n` padded grid.
#[derive(Debug, Clone)]
pub struct KernelSet<T> {
    pub radius: T,
    /// Point samples of `w_R`; for `R = 0` the origin holds `log(h/2)` (diagnostic only).
    pub w: PaddedKernel<T>,
    /// Point samples of `∇w_R`, origin sample zero.
    pub grad_w: VectorKernel<T>,
    /// Point samples of `|∇w_R|²`; absent for `R = 0` where it is not locally integrable.
    pub grad_w_sq: Option<PaddedKernel<T>>,
    /// Kernel for `A^R[ρ] = ∇^⊥ w_R ∗ ρ`.
    pub perp: VectorKernel<T>,
    pub quadrature: KernelQuadrature,
}

/// Kernel samples with the default spectral quadrature for the vector potential.
pub fn sample_kernels<T: Real>(grid: &Grid<T>, radius: T) -> Result<KernelSet<T>> {
    sample_kernels_with(grid, radius, KernelQuadrature::default())
}

pub fn sample_kernels_with<T: Real>(
    grid: &Grid<T>,
    radius: T,
    quadrature: KernelQuadrature,
) -> Result<KernelSet<T>> {
    let coulomb = SmearedCoulomb::new(radius)?;
    let spec = *grid.spec();
    let n = spec.n();
    let m = 2 * n;
    let h = spec.h();
    let mut w = vec![T::zero(); m * m];
    let mut gx = vec![T::zero(); m * m];
    let mut gy = vec![T::zero(); m * m];
    let mut gsq = vec![T::zero(); m * m];
    for a in 0..m {
        let dy = T::from_i64(a as i64 - n as i64).unwrap() * h;
        for b in 0..m {
            let dx = T::from_i64(b as i64 - n as i64).unwrap() * h;
            let k = a * m + b;
            if a == n && b == n {
                w[k] = if radius > T::zero() {
                    coulomb.w(dx, dy)?
                } else {
                    (h * T::of(0.5)).ln()
                };
                continue;
            }
            w[k] = coulomb.w(dx, dy)?;
            let (px, py) = coulomb.grad(dx, dy)?;
            gx[k] = px;
            gy[k] = py;
            gsq[k] = px * px + py * py;
        }
    }
    let perp = match quadrature {
        KernelQuadrature::PointSample => {
            let px: Vec<T> = gy.iter().map(|&v| -v).collect();
            let py = gx.clone();
            grid.vector_kernel(grid.kernel(px)?, grid.kernel(py)?)
        }
        KernelQuadrature::Spectral => {
            let (px, py) = spectral_perp_samples(spec, radius.as_f64());
            let px = px.into_iter().map(T::of).collect();
            let py = py.into_iter().map(T::of).collect();
            grid.vector_kernel(grid.kernel(px)?, grid.kernel(py)?)
        }
    };
    let grad_w_sq = if radius > T::zero() {
        Some(grid.kernel(gsq)?)
    } else {
        None
    };
    Ok(KernelSet {
        radius,
        w: grid.kernel(w)?,
        grad_w: grid.vector_kernel(grid.kernel(gx)?, grid.kernel(gy)?),
        grad_w_sq,
        perp,
        quadrature,
    })
}

/// Fourier transform of `log|x| · 1_{|x| < D}`, as a function of `|k|`.
fn truncated_log_transform(k: f64, d: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    if k == 0.0 {
        return two_pi * (d * d * d.ln() / 2.0 - d * d / 4.0);
    }
    let kd = k * d;
    two_pi * (d * d.ln() * libm::j1(kd) / k - (1.0 - libm::j0(kd)) / (k * k))
}

/// Fourier transform of the normalized disc indicator, `2 J_1(kR)/(kR)`.
fn disc_average_transform(k: f64, radius: f64) -> f64 {
    let kr = k * radius;
    if kr < 1e-8 {
        1.0 - kr * kr / 8.0
    } else {
        2.0 * libm::j1(kr) / kr
    }
}

/// Samples of `∇^⊥ w_R` on the centered `2n × 2n` padded grid such that the
/// zero-padded discrete convolution is exact for band-limited densities.
///
/// The kernel is truncated at a radius `D` larger than any displacement inside the
/// box, transformed analytically, and brought back on a `4n` periodic grid whose
/// period exceeds `D` plus the box diameter; restricting to displacements inside the
/// box then leaves no trace of the truncation.
fn spectral_perp_samples<T: Real>(spec: GridSpec<T>, radius: f64) -> (Vec<f64>, Vec<f64>) {
    let n = spec.n();
    let h = spec.h().as_f64();
    let l = spec.half_width().as_f64();
    let big = 4 * n;
    let d = 2.0 * std::f64::consts::SQRT_2 * l * 1.02 + radius;
    let dk = 2.0 * std::f64::consts::PI / (big as f64 * h);
    let kfreq: Vec<f64> = (0..big)
        .map(|i| {
            let m = if i < big / 2 { i as i64 } else { i as i64 - big as i64 };
            m as f64 * dk
        })
        .collect();
    let mut buf = vec![Complex::<f64>::zero(); big * big];
    for (j, &ky) in kfreq.iter().enumerate() {
        for (i, &kx) in kfreq.iter().enumerate() {
            let k = (kx * kx + ky * ky).sqrt();
            let g = truncated_log_transform(k, d) * disc_average_transform(k, radius);
            // odd multipliers; the Nyquist row/column carries no real odd part
            let kx_odd = if i == big / 2 { 0.0 } else { kx };
            let ky_odd = if j == big / 2 { 0.0 } else { ky };
            // ∇^⊥ ↦ (-i k_y, i k_x); pack the x-component in the real part and
            // the y-component in the imaginary part of a single inverse transform
            let mx = Complex::new(0.0, -ky_odd * g);
            let my = Complex::new(0.0, kx_odd * g);
            buf[j * big + i] = mx + Complex::new(0.0, 1.0) * my;
        }
    }
    Fft2::<f64>::new(big).inverse(&mut buf);
    let scale = 1.0 / (h * h);
    let m = 2 * n;
    let mut px = vec![0.0; m * m];
    let mut py = vec![0.0; m * m];
    for a in 1..m {
        let dj = a as i64 - n as i64;
        let wj = dj.rem_euclid(big as i64) as usize;
        for b in 1..m {
            let di = b as i64 - n as i64;
            let wi = di.rem_euclid(big as i64) as usize;
            let z = buf[wj * big + wi];
            px[a * m + b] = z.re * scale;
            py[a * m + b] = z.im * scale;
        }
    }
    (px, py)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn branch_values() {
        let w1 = SmearedCoulomb::new(1.0f64).unwrap();
        assert!((w1.w(0.0, 0.0).unwrap() + 0.5).abs() < 1e-14);
        let wh = SmearedCoulomb::new(0.5f64).unwrap();
        assert!(wh.w(1.0, 0.0).unwrap().abs() < 1e-14);
        assert_eq!(wh.grad(1.0, 0.0).unwrap(), (1.0, 0.0));
        assert_eq!(w1.grad(0.5, 0.0).unwrap(), (0.5, 0.0));
        assert_eq!(w1.grad(0.0, 0.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn continuity_at_disc_edge() {
        for &r in &[0.01f64, 0.3, 1.0, 2.5] {
            let c = SmearedCoulomb::new(r).unwrap();
            let inside = r.ln() + ((r * r) / (r * r) - 1.0) / 2.0;
            let outside = r.ln();
            assert!((inside - outside).abs() < 1e-14);
            let theta: f64 = 0.7;
            let v = c.w(r * theta.cos(), r * theta.sin()).unwrap();
            assert!((v - r.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn point_kernel_is_singular_at_origin() {
        let c = SmearedCoulomb::new(0.0).unwrap();
        assert!(matches!(c.w(0.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(c.grad(0.0, 0.0), Err(Error::Domain(_))));
        assert!(SmearedCoulomb::new(-1.0).is_err());
    }

    #[test]
    fn gradient_sup_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &r in &[0.05f64, 0.3, 1.0] {
            let c = SmearedCoulomb::new(r).unwrap();
            let mut worst: f64 = 0.0;
            for _ in 0..1_000_000 {
                let x = rng.gen_range(-3.0 * r..3.0 * r);
                let y = rng.gen_range(-3.0 * r..3.0 * r);
                let (gx, gy) = c.grad(x, y).unwrap();
                worst = worst.max((gx * gx + gy * gy).sqrt());
            }
            assert!(worst <= 1.0 / r + 1e-12, "R={r}: {worst}");
        }
    }

    #[test]
    fn lp_norm_matches_radial_quadrature() {
        // composite Simpson on each branch of the radial integral
        fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
            let h = (b - a) / n as f64;
            let mut s = f(a) + f(b);
            for i in 1..n {
                let x = a + i as f64 * h;
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
            }
            s * h / 3.0
        }
        let (r, p) = (1.0_f64, 4.0_f64);
        let inner = simpson(|t| (t / (r * r)).powf(p) * t, 0.0, r, 2000);
        // substitute t = R/u on the outer branch: ∫_R^∞ t^{1-p} dt = R^{2-p} ∫_0^1 u^{p-3} du
        let outer = simpson(|u| r.powf(2.0 - p) * u.powf(p - 3.0), 0.0, 1.0, 2000);
        let quad = (2.0 * std::f64::consts::PI * (inner + outer)).powf(1.0 / p);
        let exact = lp_norm_grad_w(r, p).unwrap();
        assert!((quad - exact).abs() < 1e-8, "{quad} vs {exact}");
    }

    #[test]
    fn lp_norm_homogeneity() {
        let a = lp_norm_grad_w(0.1, 4.0).unwrap();
        let b = lp_norm_grad_w(0.2, 4.0).unwrap();
        assert!((a / b - 2f64.sqrt()).abs() < 1e-10);
        for p in [3.0, 4.0, 8.0] {
            let base = lp_norm_grad_w(1.0, p).unwrap();
            assert!(base.is_finite());
            for r in [0.01, 0.05, 0.3] {
                let v = lp_norm_grad_w(r, p).unwrap() * r.powf(1.0 - 2.0 / p);
                assert!((v / base - 1.0).abs() < 1e-8);
            }
        }
        assert!(lp_norm_grad_w(1.0, 2.0).is_err());
        assert!(lp_norm_grad_w(1.0, 1.5).is_err());
    }

    #[test]
    fn eta0_values() {
        assert!((eta0(1e9).unwrap() - 0.25).abs() < 1e-9);
        assert_eq!(eta0(1.0).unwrap(), 0.125);
        assert!((eta0(2.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(eta0(0.0).is_err());
    }

    #[test]
    fn alpha_values() {
        assert_eq!(alpha_of(1.0, 2).unwrap(), 1.0);
        assert!((alpha_of(2.0, 101).unwrap() - 0.02).abs() < 1e-16);
        assert_eq!(alpha_of(0.0, 57).unwrap(), 0.0);
        assert!(alpha_of(1.0, 1).is_err());
    }

    #[test]
    fn trap_values() {
        let v = TrapPotential::<f64>::harmonic();
        assert_eq!(v.eval(0.0, 0.0), 0.0);
        assert_eq!(v.eval(1.0, 2.0), 5.0);
        let q = TrapPotential::power(2.0f64, 3.0).unwrap();
        assert!((q.eval(3.0, 4.0) - 250.0).abs() < 1e-12);
        assert!(TrapPotential::power(-1.0, 2.0).is_err());
    }

    fn grid(n: usize, l: f64) -> Grid<f64> {
        Grid::new(GridSpec::new(n, l).unwrap())
    }

    #[test]
    fn sampled_gradient_is_odd() {
        let g = grid(32, 2.0);
        let ks = sample_kernels(&g, 0.0).unwrap();
        let n = 32i64;
        for dj in -(n - 1)..n {
            for di in -(n - 1)..n {
                if di == 0 && dj == 0 {
                    assert_eq!(ks.grad_w.x.at(0, 0), 0.0);
                    continue;
                }
                assert_eq!(ks.grad_w.x.at(di, dj) + ks.grad_w.x.at(-di, -dj), 0.0);
                assert_eq!(ks.grad_w.y.at(di, dj) + ks.grad_w.y.at(-di, -dj), 0.0);
                // the spectral kernel is odd up to round-off
                assert!((ks.perp.x.at(di, dj) + ks.perp.x.at(-di, -dj)).abs() < 1e-9);
            }
        }
        assert!(ks.grad_w_sq.is_none());
        assert!((ks.w.at(0, 0) - (g.spec().h() / 2.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn inside_disc_samples_are_linear() {
        let g = grid(32, 2.0);
        let h = g.spec().h();
        let r = 2.0 * h;
        let ks = sample_kernels(&g, r).unwrap();
        let gsq = ks.grad_w_sq.as_ref().unwrap();
        for dj in -3i64..=3 {
            for di in -3i64..=3 {
                let (x, y) = (di as f64 * h, dj as f64 * h);
                let gx = ks.grad_w.x.at(di, dj);
                let gy = ks.grad_w.y.at(di, dj);
                if x * x + y * y < r * r {
                    assert_eq!(gx, x / (r * r));
                    assert_eq!(gy, y / (r * r));
                }
                assert_eq!(gsq.at(di, dj), gx * gx + gy * gy);
                assert!((gx * gx + gy * gy).sqrt() <= 1.0 / r + 1e-12);
            }
        }
    }

    #[test]
    fn sup_of_w_on_unit_ball() {
        // sup_{B(0,1)} |w_R| - |log R| is attained at the origin and equals 1/2
        for &r in &[0.01f64, 0.05, 0.1, 0.2, 0.5] {
            let c = SmearedCoulomb::new(r).unwrap();
            let mut sup: f64 = 0.0;
            for i in 0..=400 {
                let t = i as f64 / 400.0;
                sup = sup.max(c.w(t, 0.0).unwrap().abs());
            }
            assert!((sup - r.ln().abs() - 0.5).abs() < 1e-12);
        }
    }
}
