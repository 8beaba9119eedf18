//! The average-field energy `∫|(∇ + iβA^R[|u|²])u|² + V|u|²`, its term-by-term
//! breakdown, the alternative form and the first variation.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fields::{self, current_from_gradient, self_consistency_potential};
use crate::grid::{Grid, GridSpec, RealField, ScalarField, VectorField2, WaveFunction};
use crate::kernels::{sample_kernels_with, KernelQuadrature, KernelSet, TrapPotential};
use crate::scalar::Real;

/// Nodes with `|u|` below this are treated as zeros of the wavefunction.
pub const VANISHING_AMPLITUDE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalParams<T> {
    pub beta: T,
    pub radius: T,
    pub trap: TrapPotential<T>,
}

impl<T: Real> FunctionalParams<T> {
    pub fn new(beta: T, radius: T, trap: TrapPotential<T>) -> Self {
        Self { beta, radius, trap }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown<T> {
    pub kinetic: T,
    pub mixed: T,
    pub quartic: T,
    pub potential: T,
    pub total: T,
}

impl<T: Real> EnergyBreakdown<T> {
    fn assemble(kinetic: T, mixed: T, quartic: T, potential: T) -> Self {
        Self {
            kinetic,
            mixed,
            quartic,
            potential,
            total: kinetic + mixed + quartic + potential,
        }
    }

    /// `∫|(∇ + iβA)u|²`.
    pub fn magnetic_kinetic(&self) -> T {
        self.kinetic + self.mixed + self.quartic
    }
}

/// Value of the alternative form together with the nodes where `|u|` vanished.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AltEnergy<T> {
    pub total: T,
    pub vanishing_nodes: Vec<usize>,
}

impl<T> AltEnergy<T> {
    pub fn flagged(&self) -> bool {
        !self.vanishing_nodes.is_empty()
    }
}

/// Energy functional bound to a grid: owns the transforms, the kernel samples
/// and the sampled trap.
#[derive(Debug, Clone)]
pub struct Functional<T: Real> {
    grid: Grid<T>,
    params: FunctionalParams<T>,
    kernels: KernelSet<T>,
    trap: RealField<T>,
}

struct Evaluation<T> {
    du: [ScalarField<T>; 2],
    rho: RealField<T>,
    current: VectorField2<T>,
    potential: VectorField2<T>,
    breakdown: EnergyBreakdown<T>,
}

impl<T: Real> Functional<T> {
    pub fn new(spec: GridSpec<T>, params: FunctionalParams<T>) -> Result<Self> {
        Self::with_quadrature(spec, params, KernelQuadrature::default())
    }

    pub fn with_quadrature(
        spec: GridSpec<T>,
        params: FunctionalParams<T>,
        quadrature: KernelQuadrature,
    ) -> Result<Self> {
        let grid = Grid::new(spec);
        let kernels = sample_kernels_with(&grid, params.radius, quadrature)?;
        Ok(Self::from_parts(grid, params, kernels))
    }

    /// Reuses an existing grid and kernel set; `params.radius` must match the kernels.
    pub fn from_parts(grid: Grid<T>, params: FunctionalParams<T>, kernels: KernelSet<T>) -> Self {
        let trap = params.trap.sample(*grid.spec());
        Self {
            grid,
            params,
            kernels,
            trap,
        }
    }

    /// Same grid and kernels with a different coupling.
    pub fn with_beta(&self, beta: T) -> Self {
        let mut out = self.clone();
        out.params.beta = beta;
        out
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn spec(&self) -> GridSpec<T> {
        *self.grid.spec()
    }

    pub fn params(&self) -> &FunctionalParams<T> {
        &self.params
    }

    pub fn kernels(&self) -> &KernelSet<T> {
        &self.kernels
    }

    pub fn trap_field(&self) -> &RealField<T> {
        &self.trap
    }

    fn evaluate(&self, u: &WaveFunction<T>) -> Result<Evaluation<T>> {
        let spec = self.spec();
        spec.check_same(&u.spec(), "energy")?;
        let beta = self.params.beta;
        let du = self.grid.spectral_gradient(u.field());
        let rho = fields::density(u);
        let current = current_from_gradient(u.field(), &du);
        let potential = fields::vector_potential(&self.grid, &rho, &self.kernels)?;
        let w = spec.cell_area();
        let kinetic = w * (du[0].values.iter().chain(&du[1].values))
            .map(|z| z.norm_sqr())
            .sum::<T>();
        let mixed = (beta + beta) * potential.dot(&current);
        let quartic = beta * beta * rho.dot(&potential.norm_sqr());
        let pot = rho.dot(&self.trap);
        Ok(Evaluation {
            du,
            rho,
            current,
            potential,
            breakdown: EnergyBreakdown::assemble(kinetic, mixed, quartic, pot),
        })
    }

    pub fn energy(&self, u: &WaveFunction<T>) -> Result<EnergyBreakdown<T>> {
        Ok(self.evaluate(u)?.breakdown)
    }

    /// `∫|∇|u||² + ∫|Im(ū/|u| ∇u) + βA|u||² + ∫Vρ`.
    ///
    /// At nodes with `|u| < 1e-13` the second integrand is replaced by its limit
    /// `β²ρ|A|²` and the node is reported.
    pub fn energy_alt(&self, u: &WaveFunction<T>) -> Result<AltEnergy<T>> {
        let ev = self.evaluate(u)?;
        let beta = self.params.beta;
        let cut = T::of(VANISHING_AMPLITUDE);
        let mut vanishing = Vec::new();
        let mut modulus = T::zero();
        let mut phase = T::zero();
        for idx in 0..u.values().len() {
            let z = u.values()[idx];
            let amp = z.norm();
            let (ax, ay) = (ev.potential.x[idx], ev.potential.y[idx]);
            if amp < cut {
                vanishing.push(idx);
                phase += beta * beta * ev.rho.values[idx] * (ax * ax + ay * ay);
                continue;
            }
            for (c, a) in [(0, ax), (1, ay)] {
                let p = z.conj() * ev.du[c].values[idx] / amp;
                modulus += p.re * p.re;
                let q = p.im + beta * a * amp;
                phase += q * q;
            }
        }
        let w = self.spec().cell_area();
        Ok(AltEnergy {
            total: w * (modulus + phase) + ev.breakdown.potential,
            vanishing_nodes: vanishing,
        })
    }

    /// `∫|∇|u||²`, with `∇|u| = Re(ū∇u)/|u|` away from zeros of `u` and 0 at them.
    pub fn abs_gradient_energy(&self, u: &WaveFunction<T>) -> T {
        let du = self.grid.spectral_gradient(u.field());
        abs_gradient_energy_from(u, &du)
    }

    /// The derived fields `ρ, J, A, W` at `u`.
    pub fn derived(&self, u: &WaveFunction<T>) -> Result<fields::DerivedFields<T>> {
        fields::DerivedFields::compute(&self.grid, u, &self.kernels, self.params.beta)
    }

    pub fn gradient(&self, u: &WaveFunction<T>) -> Result<ScalarField<T>> {
        Ok(self.energy_and_gradient(u)?.1)
    }

    /// Energy and `G = -(∇ + iβA)²u + Vu + Wu`, normalized so that
    /// `d/dt E[u + tv] = 2 Re⟨v, G⟩`.
    pub fn energy_and_gradient(
        &self,
        u: &WaveFunction<T>,
    ) -> Result<(EnergyBreakdown<T>, ScalarField<T>)> {
        let ev = self.evaluate(u)?;
        let spec = self.spec();
        let n = spec.n();
        let beta = self.params.beta;
        let w = self_consistency_potential(
            &self.grid,
            &ev.rho,
            &ev.current,
            &ev.potential,
            &self.kernels,
            beta,
        )?;
        let ib = Complex::new(T::zero(), beta);
        // covariant derivatives P_c = ∂_c u + iβ A_c u
        let mut p = ev.du;
        for (c, a) in [&ev.potential.x, &ev.potential.y].into_iter().enumerate() {
            for (idx, slot) in p[c].values.iter_mut().enumerate() {
                *slot = *slot + ib * u.values()[idx].scale(a[idx]);
            }
        }
        let k = self.grid.wavenumbers();
        let nyq = n / 2;
        let symbol = |m: usize| {
            if m == nyq {
                Complex::new(T::zero(), T::zero())
            } else {
                Complex::new(T::zero(), k[m])
            }
        };
        let px = self.grid.forward(&p[0]);
        let py = self.grid.forward(&p[1]);
        let mut div = px;
        for j in 0..n {
            for i in 0..n {
                let idx = j * n + i;
                div[idx] = div[idx] * symbol(i) + py[idx] * symbol(j);
            }
        }
        let div = self.grid.inverse(div);
        let mut g = Vec::with_capacity(spec.len());
        for idx in 0..spec.len() {
            let cov = div.values[idx]
                + ib * (p[0].values[idx].scale(ev.potential.x[idx])
                    + p[1].values[idx].scale(ev.potential.y[idx]));
            g.push(-cov + u.values()[idx].scale(self.trap.values[idx] + w.values[idx]));
        }
        Ok((ev.breakdown, ScalarField { spec, values: g }))
    }
}

pub(crate) fn abs_gradient_energy_from<T: Real>(u: &WaveFunction<T>, du: &[ScalarField<T>; 2]) -> T {
    let cut = T::of(VANISHING_AMPLITUDE);
    let mut acc = T::zero();
    for (idx, z) in u.values().iter().enumerate() {
        let amp = z.norm();
        if amp < cut {
            continue;
        }
        for d in du {
            let r = (z.conj() * d.values[idx]).re / amp;
            acc += r * r;
        }
    }
    acc * u.spec().cell_area()
}

/// Tangent projection `g - Re⟨u, g⟩ u` onto the unit sphere at `u`.
pub fn sphere_project<T: Real>(g: &ScalarField<T>, u: &WaveFunction<T>) -> ScalarField<T> {
    let c = u.field().inner(g).re / u.l2_norm();
    g.axpy(Complex::new(-c, T::zero()), u.field())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states;
    use std::f64::consts::PI;

    fn oscillator(spec: GridSpec<f64>) -> WaveFunction<f64> {
        WaveFunction::new(ScalarField::from_fn(spec, |x, y| {
            Complex::new((-(x * x + y * y) / 2.0).exp() / PI.sqrt(), 0.0)
        }))
    }

    fn functional(n: usize, l: f64, beta: f64, radius: f64) -> Functional<f64> {
        let spec = GridSpec::new(n, l).unwrap();
        Functional::new(spec, FunctionalParams::new(beta, radius, TrapPotential::harmonic())).unwrap()
    }

    #[test]
    fn oscillator_ground_energy() {
        let f = functional(256, 8.0, 0.0, 0.0);
        let u = oscillator(f.spec());
        let e = f.energy(&u).unwrap();
        assert!((e.total - 2.0).abs() < 1e-6, "{e:?}");
        assert!((e.kinetic - 1.0).abs() < 1e-6);
        assert!((e.potential - 1.0).abs() < 1e-6);
    }

    #[test]
    fn oscillator_eigenrelation() {
        let f = functional(128, 8.0, 0.0, 0.0);
        let u = oscillator(f.spec());
        let g = f.gradient(&u).unwrap();
        for (a, b) in g.values.iter().zip(u.values()) {
            assert!((a - b * 2.0).norm() < 1e-6);
        }
    }

    #[test]
    fn zero_coupling_gradient_is_schroedinger() {
        let f = functional(64, 6.0, 0.0, 0.1);
        let u = states::random_smooth(f.spec(), 3, 11);
        let g = f.gradient(&u).unwrap();
        let lap = f.grid().laplacian(u.field());
        for idx in 0..g.values.len() {
            let expect = -lap.values[idx] + u.values()[idx] * f.trap_field().values[idx];
            assert!((g.values[idx] - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn real_state_has_no_mixed_term() {
        let f = functional(64, 6.0, 1.3, 0.0);
        let u = oscillator(f.spec());
        let e = f.energy(&u).unwrap();
        assert!(e.mixed.abs() < 1e-14);
        assert!(e.quartic > 0.0);
    }

    #[test]
    fn beta_parity_and_scaling() {
        let f = functional(64, 6.0, 0.7, 0.2);
        let u = states::random_smooth(f.spec(), 4, 5);
        let e = f.energy(&u).unwrap();
        let em = f.with_beta(-0.7).energy(&u).unwrap();
        let e2 = f.with_beta(1.4).energy(&u).unwrap();
        assert!(e.mixed.abs() > 1e-3);
        assert_eq!(e.kinetic, em.kinetic);
        assert_eq!(e.potential, em.potential);
        assert!((e.quartic - em.quartic).abs() < 1e-15);
        assert!((e.mixed + em.mixed).abs() < 1e-15);
        assert!((e2.mixed - 2.0 * e.mixed).abs() < 1e-14 * e.mixed.abs().max(1.0));
        assert!((e2.quartic - 4.0 * e.quartic).abs() < 1e-14 * e.quartic.max(1.0));
        let sum = e.kinetic + e.mixed + e.quartic + e.potential;
        assert!((e.total - sum).abs() <= 1e-12 * e.total.abs());
    }

    #[test]
    fn gauge_phase_leaves_breakdown_unchanged() {
        let f = functional(64, 6.0, -0.9, 0.0);
        let u = states::random_smooth(f.spec(), 4, 9);
        let a = f.energy(&u).unwrap();
        let b = f.energy(&u.with_phase(2.1)).unwrap();
        for (p, q) in [
            (a.kinetic, b.kinetic),
            (a.mixed, b.mixed),
            (a.quartic, b.quartic),
            (a.potential, b.potential),
        ] {
            assert!((p - q).abs() < 1e-12 * p.abs().max(1.0));
        }
    }

    #[test]
    fn alternative_form_agrees_for_nonvanishing_state() {
        let f = functional(64, 5.0, 0.8, 0.1);
        let s = f.spec();
        let u = WaveFunction::normalized(ScalarField::from_fn(s, |x, y| {
            let amp = (-(x * x + y * y) / 6.0).exp() * (1.0 + 0.2 * (0.5 * x).sin());
            Complex::from_polar(amp, 0.4 * (0.6 * x).sin() + 0.3 * (0.5 * y).cos() * x)
        }))
        .unwrap();
        let e = f.energy(&u).unwrap();
        let alt = f.energy_alt(&u).unwrap();
        assert!(!alt.flagged());
        assert!((e.total - alt.total).abs() < 1e-8, "{} vs {}", e.total, alt.total);
    }

    #[test]
    fn alternative_form_for_positive_state() {
        let f = functional(64, 6.0, 1.1, 0.0);
        let u = oscillator(f.spec());
        let e = f.energy(&u).unwrap();
        let alt = f.energy_alt(&u).unwrap();
        let expect = f.abs_gradient_energy(&u) + e.quartic + e.potential;
        assert!((alt.total - expect).abs() < 1e-12);
    }

    #[test]
    fn alternative_form_flags_zeros() {
        let f = functional(32, 4.0, 0.5, 0.0);
        let s = f.spec();
        let u = WaveFunction::normalized(ScalarField::from_fn(s, |x, y| {
            if x > 1.0 {
                Complex::new(0.0, 0.0)
            } else {
                Complex::new((-(x * x + y * y)).exp(), 0.0)
            }
        }))
        .unwrap();
        let alt = f.energy_alt(&u).unwrap();
        assert!(alt.flagged());
        let zeros = (0..s.len()).filter(|&idx| s.point(idx).0 > 1.0);
        assert!(zeros.clone().count() > 0);
        for idx in zeros {
            assert!(alt.vanishing_nodes.contains(&idx));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (seed, beta, radius) in [(1u64, 0.8, 0.0), (2, -1.5, 0.1), (3, 2.0, 0.3)] {
            let f = functional(32, 4.0, beta, radius);
            let u = states::random_smooth(f.spec(), 3, seed);
            let v = states::random_smooth(f.spec(), 3, seed + 100);
            let g = f.gradient(&u).unwrap();
            let predicted = 2.0 * v.field().inner(&g).re;
            let t = 1e-5;
            let at = |s: f64| {
                let w = u.field().axpy(Complex::new(s, 0.0), v.field());
                f.energy(&WaveFunction::new(w)).unwrap().total
            };
            let fd = (at(t) - at(-t)) / (2.0 * t);
            let rel = (fd - predicted).abs() / predicted.abs();
            assert!(rel < 1e-6, "seed {seed}: fd {fd} vs {predicted} ({rel})");
        }
    }

    #[test]
    fn sphere_projection() {
        let spec = GridSpec::new(32, 4.0).unwrap();
        let u: WaveFunction<f64> = states::random_smooth(spec, 3, 1);
        let g = states::random_smooth(spec, 3, 2).into_field();
        let p = sphere_project(u.field(), &u);
        assert!(p.max_abs() < 1e-12);
        let once = sphere_project(&g, &u);
        assert!(u.field().inner(&once).re.abs() < 1e-12);
        let twice = sphere_project(&once, &u);
        for (a, b) in once.values.iter().zip(&twice.values) {
            assert!((a - b).norm() < 1e-12);
        }
        let i_u = u.field().scale(Complex::new(0.0, 1.0));
        let same = sphere_project(&i_u, &u);
        for (a, b) in same.values.iter().zip(&i_u.values) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
