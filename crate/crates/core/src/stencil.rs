//! High-order finite-difference first derivatives for fields that are smooth but
//! not periodic on the box.

use crate::grid::{GridSpec, RealField, VectorField2};
use crate::scalar::Real;

/// Stencil width used for derivatives of vector potentials.
pub const WIDTH: usize = 17;

/// Finite-difference weights for the `order`-th derivative at `z` on nodes `x`.
pub fn fornberg_weights(z: f64, x: &[f64], order: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// First derivative along `axis` (0 = x, 1 = y) with a centered stencil of
/// `width` nodes, shifted to stay inside the box near the edges.
pub fn derivative<T: Real>(f: &RealField<T>, axis: usize, width: usize) -> RealField<T> {
    let spec = f.spec;
    let n = spec.n();
    let width = width.min(n);
    let half = width / 2;
    let h = spec.h().as_f64();
    // one stencil per distinct start offset relative to the evaluation node
    let stencils: Vec<(usize, Vec<T>)> = (0..n)
        .map(|i| {
            let start = i.saturating_sub(half).min(n - width);
            let nodes: Vec<f64> = (start..start + width).map(|k| k as f64).collect();
            let w = fornberg_weights(i as f64, &nodes, 1)
                .into_iter()
                .map(|v| T::of(v / h))
                .collect();
            (start, w)
        })
        .collect();
    let mut out = vec![T::zero(); spec.len()];
    for j in 0..n {
        for i in 0..n {
            let (pos, stride, base) = if axis == 0 { (i, 1, j * n) } else { (j, n, i) };
            let (start, w) = &stencils[pos];
            let mut acc = T::zero();
            for (k, wk) in w.iter().enumerate() {
                acc += *wk * f.values[base + (start + k) * stride];
            }
            out[j * n + i] = acc;
        }
    }
    RealField { spec, values: out }
}

fn component<T: Real>(spec: GridSpec<T>, v: &[T]) -> RealField<T> {
    RealField {
        spec,
        values: v.to_vec(),
    }
}

/// `∂_x v_y - ∂_y v_x`.
pub fn curl<T: Real>(v: &VectorField2<T>) -> RealField<T> {
    let a = derivative(&component(v.spec, &v.y), 0, WIDTH);
    let b = derivative(&component(v.spec, &v.x), 1, WIDTH);
    RealField {
        spec: v.spec,
        values: a.values.iter().zip(&b.values).map(|(p, q)| *p - *q).collect(),
    }
}

/// `∂_x v_x + ∂_y v_y`.
pub fn divergence<T: Real>(v: &VectorField2<T>) -> RealField<T> {
    let a = derivative(&component(v.spec, &v.x), 0, WIDTH);
    let b = derivative(&component(v.spec, &v.y), 1, WIDTH);
    RealField {
        spec: v.spec,
        values: a.values.iter().zip(&b.values).map(|(p, q)| *p + *q).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_reproduce_polynomials() {
        let nodes: Vec<f64> = (0..5).map(|k| k as f64).collect();
        let w = fornberg_weights(2.0, &nodes, 1);
        let expect = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        // one-sided stencil is exact on a quartic
        let w = fornberg_weights(0.0, &nodes, 1);
        let d: f64 = w.iter().zip(&nodes).map(|(wk, x)| wk * x.powi(4)).sum();
        assert!(d.abs() < 1e-12);
        let d: f64 = w.iter().zip(&nodes).map(|(wk, x)| wk * x).sum();
        assert!((d - 1.0).abs() < 1e-13);
    }

    #[test]
    fn derivative_of_non_periodic_function() {
        let spec = GridSpec::new(64, 4.0).unwrap();
        let f = RealField::from_fn(spec, |x: f64, y: f64| 1.0 / (1.0 + 0.1 * (x + 5.0).powi(2)) + y);
        let dx = derivative(&f, 0, WIDTH);
        let dy = derivative(&f, 1, WIDTH);
        for idx in 0..spec.len() {
            let (x, _) = spec.point(idx);
            let s = 1.0 + 0.1 * (x + 5.0).powi(2);
            assert!((dx.values[idx] + 0.2 * (x + 5.0) / (s * s)).abs() < 1e-8);
            assert!((dy.values[idx] - 1.0).abs() < 1e-10);
        }
    }
}
