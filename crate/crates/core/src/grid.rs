//! Discretization of the square box `[-L, L)²`: sample layout, quadrature,
//! spectral derivatives and zero-padded linear convolution.
//!
//! Samples are stored row-major with `x` varying fastest: index `j * n + i`
//! holds the value at `(x_i, y_j) = (-L + i h, -L + j h)`.

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::scalar::Real;

/// Zero-padding factor per axis used to turn circular into linear convolution.
pub const PAD_FACTOR: usize = 2;

/// Geometry of the computational box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    n: usize,
    half_width: T,
    h: T,
}

impl<T: Real> GridSpec<T> {
    /// `n` points per axis (a power of two, at least 16) on `[-half_width, half_width)²`.
    pub fn new(n: usize, half_width: T) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid size must be a power of two >= 16, got {n}"
            )));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::Config(format!(
                "box half-width must be positive and finite, got {half_width}"
            )));
        }
        let h = (half_width + half_width) / T::from_usize(n).unwrap();
        Ok(Self { n, half_width, h })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn half_width(&self) -> T {
        self.half_width
    }

    /// Grid spacing `2L/n`.
    #[inline]
    pub fn h(&self) -> T {
        self.h
    }

    /// Quadrature weight of one cell, `h²`.
    #[inline]
    pub fn cell_area(&self) -> T {
        self.h * self.h
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn padded_n(&self) -> usize {
        PAD_FACTOR * self.n
    }

    /// Coordinate of the `i`-th node along either axis.
    #[inline]
    pub fn coord(&self, i: usize) -> T {
        -self.half_width + T::from_usize(i).unwrap() * self.h
    }

    /// Physical position of flat index `idx`.
    #[inline]
    pub fn point(&self, idx: usize) -> (T, T) {
        (self.coord(idx % self.n), self.coord(idx / self.n))
    }

    /// Flat index of the node at the origin.
    #[inline]
    pub fn origin_index(&self) -> usize {
        (self.n / 2) * self.n + self.n / 2
    }

    /// Angular wavenumbers in FFT order, with the Nyquist mode at index `n/2`.
    pub fn wavenumbers(&self) -> Vec<T> {
        let n = self.n as i64;
        let dk = T::PI() / self.half_width;
        (0..n)
            .map(|i| {
                let m = if i < n / 2 { i } else { i - n };
                T::from_i64(m).unwrap() * dk
            })
            .collect()
    }

    pub(crate) fn check_same(&self, other: &GridSpec<T>, what: &str) -> Result<()> {
        if self.n != other.n || self.half_width != other.half_width {
            return Err(Error::Config(format!(
                "{what}: grid mismatch (n={}, L={}) vs (n={}, L={})",
                self.n, self.half_width, other.n, other.half_width
            )));
        }
        Ok(())
    }
}

/// Complex samples on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    pub spec: GridSpec<T>,
    pub values: Vec<Complex<T>>,
}

/// Real samples on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField<T> {
    pub spec: GridSpec<T>,
    pub values: Vec<T>,
}

/// Two aligned real components on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2<T> {
    pub spec: GridSpec<T>,
    pub x: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(spec: GridSpec<T>) -> Self {
        Self {
            spec,
            values: vec![Complex::zero(); spec.len()],
        }
    }

    pub fn from_values(spec: GridSpec<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::Config(format!(
                "expected {} samples, got {}",
                spec.len(),
                values.len()
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn from_fn(spec: GridSpec<T>, f: impl Fn(T, T) -> Complex<T> + Sync) -> Self {
        let values = (0..spec.len())
            .into_par_iter()
            .map(|idx| {
                let (x, y) = spec.point(idx);
                f(x, y)
            })
            .collect();
        Self { spec, values }
    }

    /// `h² Σ f`.
    pub fn integrate(&self) -> Complex<T> {
        integrate(self)
    }

    /// `h² Σ |f|²`.
    pub fn norm_sqr(&self) -> T {
        self.values.iter().map(|z| z.norm_sqr()).sum::<T>() * self.spec.cell_area()
    }

    /// Discrete `⟨self, other⟩ = h² Σ conj(self)·other`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .fold(Complex::zero(), |acc, z| acc + z)
            * self.spec.cell_area()
    }

    pub fn conj(&self) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|z| z * s).collect(),
        }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: Complex<T>, other: &Self) -> Self {
        Self {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b * s)
                .collect(),
        }
    }

    pub fn real_part(&self) -> RealField<T> {
        RealField {
            spec: self.spec,
            values: self.values.iter().map(|z| z.re).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }
}

impl<T: Real> RealField<T> {
    pub fn zeros(spec: GridSpec<T>) -> Self {
        Self {
            spec,
            values: vec![T::zero(); spec.len()],
        }
    }

    pub fn from_fn(spec: GridSpec<T>, f: impl Fn(T, T) -> T + Sync) -> Self {
        let values = (0..spec.len())
            .into_par_iter()
            .map(|idx| {
                let (x, y) = spec.point(idx);
                f(x, y)
            })
            .collect();
        Self { spec, values }
    }

    pub fn integrate(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.spec.cell_area()
    }

    /// `h² Σ self·other`.
    pub fn dot(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| *a * *b)
            .sum::<T>()
            * self.spec.cell_area()
    }

    pub fn to_complex(&self) -> ScalarField<T> {
        ScalarField {
            spec: self.spec,
            values: self
                .values
                .iter()
                .map(|&x| Complex::new(x, T::zero()))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .map(|x| x.abs())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Mass in the outer frame of `width` cells along the box boundary.
    pub fn boundary_mass(&self, width: usize) -> T {
        let n = self.spec.n();
        let w = width.clamp(1, n / 2);
        let mut acc = T::zero();
        for j in 0..n {
            for i in 0..n {
                if i < w || j < w || i >= n - w || j >= n - w {
                    acc += self.values[j * n + i];
                }
            }
        }
        acc * self.spec.cell_area()
    }
}

impl<T: Real> VectorField2<T> {
    pub fn zeros(spec: GridSpec<T>) -> Self {
        Self {
            spec,
            x: vec![T::zero(); spec.len()],
            y: vec![T::zero(); spec.len()],
        }
    }

    /// `h² Σ self·other`.
    pub fn dot(&self, other: &Self) -> T {
        let sx: T = self.x.iter().zip(&other.x).map(|(a, b)| *a * *b).sum();
        let sy: T = self.y.iter().zip(&other.y).map(|(a, b)| *a * *b).sum();
        (sx + sy) * self.spec.cell_area()
    }

    /// Pointwise `|v|²`.
    pub fn norm_sqr(&self) -> RealField<T> {
        RealField {
            spec: self.spec,
            values: self
                .x
                .iter()
                .zip(&self.y)
                .map(|(a, b)| *a * *a + *b * *b)
                .collect(),
        }
    }

    /// `h² Σ |v|²`.
    pub fn l2_sqr(&self) -> T {
        self.dot(self)
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            spec: self.spec,
            x: self.x.iter().map(|&v| v * s).collect(),
            y: self.y.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn max_norm(&self) -> T {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(a, b)| (*a * *a + *b * *b).sqrt())
            .fold(T::zero(), |a, b| a.max(b))
    }
}

/// `h² Σ f_ij`.
pub fn integrate<T: Real>(f: &ScalarField<T>) -> Complex<T> {
    f.values
        .iter()
        .fold(Complex::zero(), |acc: Complex<T>, z| acc + z)
        * f.spec.cell_area()
}

/// Normalized or unnormalized wavefunction with its cached squared L² norm.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction<T> {
    field: ScalarField<T>,
    l2_norm: T,
}

impl<T: Real> WaveFunction<T> {
    pub fn new(field: ScalarField<T>) -> Self {
        let l2_norm = field.norm_sqr();
        Self { field, l2_norm }
    }

    /// Rescales to unit mass. Fails on the zero field.
    pub fn normalized(field: ScalarField<T>) -> Result<Self> {
        let m = field.norm_sqr();
        if !(m > T::zero()) || !m.is_finite() {
            return Err(Error::Domain(format!(
                "cannot normalize a field of mass {m}"
            )));
        }
        let s = Complex::new(T::one() / m.sqrt(), T::zero());
        Ok(Self::new(field.scale(s)))
    }

    pub fn field(&self) -> &ScalarField<T> {
        &self.field
    }

    pub fn into_field(self) -> ScalarField<T> {
        self.field
    }

    pub fn spec(&self) -> GridSpec<T> {
        self.field.spec
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.field.values
    }

    /// Cached `h² Σ |u|²`.
    pub fn l2_norm(&self) -> T {
        self.l2_norm
    }

    pub fn is_normalized(&self) -> bool {
        (self.l2_norm - T::one()).abs() < T::tol(1e-10)
    }

    pub fn conj(&self) -> Self {
        Self {
            field: self.field.conj(),
            l2_norm: self.l2_norm,
        }
    }

    /// Multiplies by a constant phase `e^{iθ}`.
    pub fn with_phase(&self, theta: T) -> Self {
        Self {
            field: self.field.scale(Complex::from_polar(T::one(), theta)),
            l2_norm: self.l2_norm,
        }
    }
}

/// Grid plus FFT plans and wavenumbers; the numerical service layer.
#[derive(Debug, Clone)]
pub struct Grid<T: Real> {
    spec: GridSpec<T>,
    k: Vec<T>,
    fft: Fft2<T>,
    fft_padded: Fft2<T>,
}

/// A real convolution kernel sampled on the `2n × 2n` padded grid centered at the origin.
///
/// `samples[a * 2n + b]` is the value at displacement `((b - n) h, (a - n) h)`.
#[derive(Debug, Clone)]
pub struct PaddedKernel<T> {
    pub spec: GridSpec<T>,
    pub samples: Vec<T>,
    spectrum: Vec<Complex<T>>,
}

impl<T: Real> PaddedKernel<T> {
    /// Value at displacement `(di h, dj h)` for `|di|, |dj| < n`.
    #[inline]
    pub fn at(&self, di: i64, dj: i64) -> T {
        let n = self.spec.n() as i64;
        let m = 2 * n;
        self.samples[((dj + n) * m + (di + n)) as usize]
    }
}

/// Pair of padded kernels forming a vector-valued kernel `(K_x, K_y)`.
#[derive(Debug, Clone)]
pub struct VectorKernel<T> {
    pub x: PaddedKernel<T>,
    pub y: PaddedKernel<T>,
    // spectrum of K_x + i K_y; one inverse transform yields both real convolutions
    packed: Vec<Complex<T>>,
}

impl<T: Real> Grid<T> {
    pub fn new(spec: GridSpec<T>) -> Self {
        Self {
            k: spec.wavenumbers(),
            fft: Fft2::new(spec.n()),
            fft_padded: Fft2::new(spec.padded_n()),
            spec,
        }
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn wavenumbers(&self) -> &[T] {
        &self.k
    }

    /// First-derivative symbol along one axis; the Nyquist mode is dropped so that
    /// real fields have real derivatives.
    #[inline]
    fn ik(&self, m: usize) -> Complex<T> {
        if m == self.spec.n() / 2 {
            Complex::zero()
        } else {
            Complex::new(T::zero(), self.k[m])
        }
    }

    pub fn forward(&self, f: &ScalarField<T>) -> Vec<Complex<T>> {
        let mut buf = f.values.clone();
        self.fft.forward(&mut buf);
        buf
    }

    pub fn inverse(&self, mut spectrum: Vec<Complex<T>>) -> ScalarField<T> {
        self.fft.inverse(&mut spectrum);
        ScalarField {
            spec: self.spec,
            values: spectrum,
        }
    }

    /// `(∂_x f, ∂_y f)` by multiplication with `ik` in Fourier space.
    pub fn spectral_gradient(&self, f: &ScalarField<T>) -> [ScalarField<T>; 2] {
        let n = self.spec.n();
        let fh = self.forward(f);
        let mut gx = fh.clone();
        let mut gy = fh;
        gx.par_chunks_mut(n).for_each(|row| {
            for (i, z) in row.iter_mut().enumerate() {
                *z = *z * self.ik(i);
            }
        });
        gy.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            let s = self.ik(j);
            for z in row.iter_mut() {
                *z = *z * s;
            }
        });
        [self.inverse(gx), self.inverse(gy)]
    }

    /// Single partial derivative; `axis` 0 is `x`, 1 is `y`.
    pub fn spectral_derivative(&self, f: &ScalarField<T>, axis: usize) -> ScalarField<T> {
        let n = self.spec.n();
        let mut fh = self.forward(f);
        fh.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            for (i, z) in row.iter_mut().enumerate() {
                *z = *z * self.ik(if axis == 0 { i } else { j });
            }
        });
        self.inverse(fh)
    }

    /// `Δ f` consistent with [`Grid::spectral_gradient`], i.e. `∂_x∂_x + ∂_y∂_y`.
    pub fn laplacian(&self, f: &ScalarField<T>) -> ScalarField<T> {
        let n = self.spec.n();
        let mut fh = self.forward(f);
        fh.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            let ky = self.ik(j);
            for (i, z) in row.iter_mut().enumerate() {
                let kx = self.ik(i);
                *z = *z * (kx * kx + ky * ky);
            }
        });
        self.inverse(fh)
    }

    /// Real-valued derivative of a real field.
    pub fn derivative_real(&self, f: &RealField<T>, axis: usize) -> RealField<T> {
        self.spectral_derivative(&f.to_complex(), axis).real_part()
    }

    /// Spectral divergence `∂_x v_x + ∂_y v_y`.
    pub fn divergence(&self, v: &VectorField2<T>) -> RealField<T> {
        let dx = self.derivative_real(&RealField { spec: v.spec, values: v.x.clone() }, 0);
        let dy = self.derivative_real(&RealField { spec: v.spec, values: v.y.clone() }, 1);
        RealField {
            spec: v.spec,
            values: dx.values.iter().zip(&dy.values).map(|(a, b)| *a + *b).collect(),
        }
    }

    /// Spectral curl `∂_x v_y - ∂_y v_x`.
    pub fn curl(&self, v: &VectorField2<T>) -> RealField<T> {
        let dyx = self.derivative_real(&RealField { spec: v.spec, values: v.y.clone() }, 0);
        let dxy = self.derivative_real(&RealField { spec: v.spec, values: v.x.clone() }, 1);
        RealField {
            spec: v.spec,
            values: dyx.values.iter().zip(&dxy.values).map(|(a, b)| *a - *b).collect(),
        }
    }

    /// Wraps centered padded samples into a kernel with its precomputed spectrum.
    pub fn kernel(&self, samples: Vec<T>) -> Result<PaddedKernel<T>> {
        let m = self.spec.padded_n();
        if samples.len() != m * m {
            return Err(Error::Config(format!(
                "padded kernel needs {} samples, got {}",
                m * m,
                samples.len()
            )));
        }
        let spectrum = self.padded_spectrum(&samples);
        Ok(PaddedKernel {
            spec: self.spec,
            samples,
            spectrum,
        })
    }

    pub fn vector_kernel(&self, x: PaddedKernel<T>, y: PaddedKernel<T>) -> VectorKernel<T> {
        let i = Complex::new(T::zero(), T::one());
        let packed = x
            .spectrum
            .iter()
            .zip(&y.spectrum)
            .map(|(a, b)| *a + i * *b)
            .collect();
        VectorKernel { x, y, packed }
    }

    fn padded_spectrum(&self, centered: &[T]) -> Vec<Complex<T>> {
        let n = self.spec.n();
        let m = 2 * n;
        // centered index a corresponds to wrapped index (a + n) mod 2n
        let mut buf = vec![Complex::zero(); m * m];
        for a in 0..m {
            let wa = (a + n) % m;
            for b in 0..m {
                let wb = (b + n) % m;
                buf[wa * m + wb] = Complex::new(centered[a * m + b], T::zero());
            }
        }
        self.fft_padded.forward(&mut buf);
        buf
    }

    fn padded_forward(&self, f: &[T]) -> Vec<Complex<T>> {
        let n = self.spec.n();
        let m = 2 * n;
        let mut buf = vec![Complex::zero(); m * m];
        for j in 0..n {
            for i in 0..n {
                buf[j * m + i] = Complex::new(f[j * n + i], T::zero());
            }
        }
        self.fft_padded.forward(&mut buf);
        buf
    }

    fn padded_back(&self, mut buf: Vec<Complex<T>>) -> Vec<Complex<T>> {
        let n = self.spec.n();
        let m = 2 * n;
        self.fft_padded.inverse(&mut buf);
        let w = self.spec.cell_area();
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            out.extend(buf[j * m..j * m + n].iter().map(|z| *z * w));
        }
        out
    }

    /// Linear convolution `h² Σ_y K(x - y) f(y)` restricted to the primary box.
    pub fn convolve(&self, f: &RealField<T>, kernel: &PaddedKernel<T>) -> Result<RealField<T>> {
        self.spec.check_same(&f.spec, "convolve")?;
        self.spec.check_same(&kernel.spec, "convolve kernel")?;
        let mut buf = self.padded_forward(&f.values);
        buf.par_iter_mut()
            .zip(kernel.spectrum.par_iter())
            .for_each(|(a, b)| *a = *a * *b);
        let out = self.padded_back(buf);
        Ok(RealField {
            spec: self.spec,
            values: out.into_iter().map(|z| z.re).collect(),
        })
    }

    /// `(K_x ∗ f, K_y ∗ f)` with a single forward and inverse transform.
    pub fn convolve_vector(
        &self,
        f: &RealField<T>,
        kernel: &VectorKernel<T>,
    ) -> Result<VectorField2<T>> {
        self.spec.check_same(&f.spec, "convolve")?;
        self.spec.check_same(&kernel.x.spec, "convolve kernel")?;
        let mut buf = self.padded_forward(&f.values);
        buf.par_iter_mut()
            .zip(kernel.packed.par_iter())
            .for_each(|(a, b)| *a = *a * *b);
        let out = self.padded_back(buf);
        Ok(VectorField2 {
            spec: self.spec,
            x: out.iter().map(|z| z.re).collect(),
            y: out.iter().map(|z| z.im).collect(),
        })
    }

    /// `K_x ∗ F_x + K_y ∗ F_y`.
    pub fn convolve_dot(
        &self,
        field: &VectorField2<T>,
        kernel: &VectorKernel<T>,
    ) -> Result<RealField<T>> {
        self.spec.check_same(&field.spec, "convolve")?;
        self.spec.check_same(&kernel.x.spec, "convolve kernel")?;
        let mut bx = self.padded_forward(&field.x);
        let by = self.padded_forward(&field.y);
        bx.par_iter_mut()
            .zip(by.par_iter())
            .zip(kernel.x.spectrum.par_iter().zip(kernel.y.spectrum.par_iter()))
            .for_each(|((a, b), (kx, ky))| *a = *a * *kx + *b * *ky);
        let out = self.padded_back(bx);
        Ok(RealField {
            spec: self.spec,
            values: out.into_iter().map(|z| z.re).collect(),
        })
    }

    /// `(h²/n²) Σ |f̂|²`, the Fourier-side value of `h² Σ |f|²`.
    pub fn spectral_norm_sqr(&self, f: &ScalarField<T>) -> T {
        let fh = self.forward(f);
        let n2 = T::from_usize(self.spec.len()).unwrap();
        fh.iter().map(|z| z.norm_sqr()).sum::<T>() * self.spec.cell_area() / n2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize, l: f64) -> Grid<f64> {
        Grid::new(GridSpec::new(n, l).unwrap())
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(GridSpec::<f64>::new(100, 4.0).is_err());
        assert!(GridSpec::<f64>::new(8, 4.0).is_err());
        assert!(GridSpec::<f64>::new(32, 0.0).is_err());
        let s = GridSpec::<f64>::new(32, 4.0).unwrap();
        assert_eq!(s.h(), 0.25);
        assert_eq!(s.cell_area(), 0.0625);
    }

    #[test]
    fn integrate_constant_is_box_area() {
        let s = GridSpec::<f64>::new(32, 4.0).unwrap();
        let f = ScalarField::from_fn(s, |_, _| Complex::new(1.0, 0.0));
        assert_eq!(f.integrate(), Complex::new(64.0, 0.0));
        assert_eq!(ScalarField::zeros(s).integrate(), Complex::new(0.0, 0.0));
    }

    #[test]
    fn integrate_normalized_gaussian() {
        let s = GridSpec::<f64>::new(256, 8.0).unwrap();
        let f = ScalarField::from_fn(s, |x, y| Complex::new((-(x * x + y * y)).exp() / PI, 0.0));
        assert!((f.integrate().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gradient_of_plane_wave_is_exact() {
        let g = grid(32, 4.0);
        let l = 4.0;
        let f = ScalarField::from_fn(*g.spec(), |x, _| Complex::from_polar(1.0, PI * x / l));
        let [dx, dy] = g.spectral_gradient(&f);
        for (idx, z) in dx.values.iter().enumerate() {
            let expect = Complex::new(0.0, PI / l) * f.values[idx];
            assert!((z - expect).norm() < 1e-12);
        }
        assert!(dy.max_abs() < 1e-12);
    }

    #[test]
    fn gradient_of_gaussian() {
        let g = grid(256, 8.0);
        let f = ScalarField::from_fn(*g.spec(), |x, y| Complex::new((-(x * x + y * y)).exp(), 0.0));
        let [dx, dy] = g.spectral_gradient(&f);
        let s = *g.spec();
        for idx in 0..s.len() {
            let (x, y) = s.point(idx);
            let e = (-(x * x + y * y)).exp();
            assert!((dx.values[idx].re + 2.0 * x * e).abs() < 1e-10);
            assert!((dy.values[idx].re + 2.0 * y * e).abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = grid(32, 3.0);
        let f = ScalarField::from_fn(*g.spec(), |_, _| Complex::new(2.5, -1.0));
        let [dx, dy] = g.spectral_gradient(&f);
        assert!(dx.max_abs() < 1e-12 && dy.max_abs() < 1e-12);
    }

    #[test]
    fn leibniz_rule_on_resolved_modes() {
        let g = grid(64, 4.0);
        let s = *g.spec();
        let a = ScalarField::from_fn(s, |x, y| Complex::from_polar(1.0, PI * (2.0 * x + y) / 4.0));
        let b = ScalarField::from_fn(s, |x, y| Complex::from_polar(1.0, PI * (-x + 3.0 * y) / 4.0));
        let ab = ScalarField {
            spec: s,
            values: a.values.iter().zip(&b.values).map(|(p, q)| p * q).collect(),
        };
        let [dab, _] = g.spectral_gradient(&ab);
        let [da, _] = g.spectral_gradient(&a);
        let [db, _] = g.spectral_gradient(&b);
        for idx in 0..s.len() {
            let rhs = da.values[idx] * b.values[idx] + a.values[idx] * db.values[idx];
            assert!((dab.values[idx] - rhs).norm() < 1e-10);
        }
    }

    fn gaussian_kernel(g: &Grid<f64>, var: f64) -> PaddedKernel<f64> {
        let n = g.spec().n();
        let h = g.spec().h();
        let m = 2 * n;
        let mut samples = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                let dx = (b as f64 - n as f64) * h;
                let dy = (a as f64 - n as f64) * h;
                samples[a * m + b] = (-(dx * dx + dy * dy) / (2.0 * var)).exp() / (2.0 * PI * var);
            }
        }
        g.kernel(samples).unwrap()
    }

    #[test]
    fn convolution_of_gaussians() {
        let g = grid(128, 8.0);
        let var = 0.5;
        let k = gaussian_kernel(&g, var);
        let f = RealField::from_fn(*g.spec(), |x, y| {
            (-(x * x + y * y) / (2.0 * var)).exp() / (2.0 * PI * var)
        });
        let out = g.convolve(&f, &k).unwrap();
        let s = *g.spec();
        for idx in 0..s.len() {
            let (x, y) = s.point(idx);
            let exact = (-(x * x + y * y) / (4.0 * var)).exp() / (4.0 * PI * var);
            assert!((out.values[idx] - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn delta_picks_out_kernel_and_translates() {
        let g = grid(16, 2.0);
        let s = *g.spec();
        let n = s.n();
        let m = 2 * n;
        let samples: Vec<f64> = (0..m * m).map(|k| ((k * 7919) % 101) as f64 / 13.0).collect();
        let k = g.kernel(samples).unwrap();
        let w = 1.0 / s.cell_area();
        for shift in [(0i64, 0i64), (3, -2)] {
            let mut f = RealField::zeros(s);
            let ci = (n / 2) as i64 + shift.0;
            let cj = (n / 2) as i64 + shift.1;
            f.values[(cj as usize) * n + ci as usize] = w;
            let out = g.convolve(&f, &k).unwrap();
            for j in 0..n {
                for i in 0..n {
                    let expect = k.at(i as i64 - ci, j as i64 - cj);
                    assert!((out.values[j * n + i] - expect).abs() < 1e-10);
                }
            }
        }
        let zero = g.convolve(&RealField::zeros(s), &k).unwrap();
        assert!(zero.max_abs() < 1e-14);
    }

    #[test]
    fn kernel_grid_mismatch_is_config_error() {
        let g = grid(16, 2.0);
        let other = grid(32, 2.0);
        let k = gaussian_kernel(&other, 1.0);
        let f = RealField::zeros(*g.spec());
        assert!(matches!(g.convolve(&f, &k), Err(Error::Config(_))));
    }
}
