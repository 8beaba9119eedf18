//! Square 2D complex FFT built from rustfft 1D plans.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// Forward/inverse 2D transforms of an `n × n` row-major array.
///
/// The inverse is normalized by `1/n²`, so `inverse(forward(f)) == f`.
#[derive(Clone)]
pub struct Fft2<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for Fft2<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl<T: Real> Fft2<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, data: &mut [Complex<T>]) {
        self.apply(&self.forward, data);
    }

    pub fn inverse(&self, data: &mut [Complex<T>]) {
        self.apply(&self.inverse, data);
        let scale = T::one() / T::from_usize(self.n * self.n).unwrap();
        data.par_iter_mut().for_each(|z| *z = *z * scale);
    }

    fn apply(&self, plan: &Arc<dyn Fft<T>>, data: &mut [Complex<T>]) {
        let n = self.n;
        assert_eq!(data.len(), n * n, "FFT buffer has wrong length");
        rows(plan, data, n);
        transpose(data, n);
        rows(plan, data, n);
        transpose(data, n);
    }
}

fn rows<T: Real>(plan: &Arc<dyn Fft<T>>, data: &mut [Complex<T>], n: usize) {
    // Chunks of rows; each chunk gets its own scratch buffer.
    let rows_per_task = (n / rayon::current_num_threads().max(1)).clamp(1, 64);
    data.par_chunks_mut(n * rows_per_task).for_each(|chunk| {
        let mut scratch = vec![Complex::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(chunk, &mut scratch);
    });
}

fn transpose<T: Copy>(data: &mut [T], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let n = 16;
        let fft = Fft2::<f64>::new(n);
        let orig: Vec<Complex<f64>> = (0..n * n)
            .map(|k| Complex::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        fft.forward(&mut data);
        fft.inverse(&mut data);
        for (a, b) in orig.iter().zip(&data) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn single_mode_lands_in_one_bin() {
        let n = 8;
        let fft = Fft2::<f64>::new(n);
        let (kx, ky) = (3usize, 5usize);
        let mut data: Vec<Complex<f64>> = (0..n * n)
            .map(|idx| {
                let (j, i) = (idx / n, idx % n);
                let phase = 2.0 * std::f64::consts::PI * ((kx * i + ky * j) as f64) / n as f64;
                Complex::from_polar(1.0, phase)
            })
            .collect();
        fft.forward(&mut data);
        for (idx, z) in data.iter().enumerate() {
            let expect = if idx == ky * n + kx { (n * n) as f64 } else { 0.0 };
            assert!((z.re - expect).abs() < 1e-10 && z.im.abs() < 1e-10, "bin {idx}: {z}");
        }
    }
}
