//! Minimization of the average-field energy on the unit sphere by projected
//! gradient descent with Armijo backtracking.

use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::fields::density;
use crate::functional::{sphere_project, EnergyBreakdown, Functional};
use crate::grid::{GridSpec, ScalarField, WaveFunction};
use crate::scalar::Real;
use crate::states;

/// Width in cells of the edge frame whose mass is reported.
pub const BOUNDARY_FRAME: usize = 2;
/// Relative size of energy differences treated as rounding noise. Below it the
/// line search accepts steps by the slope test of Hager and Zhang's approximate
/// Armijo condition, so recorded energies may rise by at most this much.
pub const ENERGY_NOISE: f64 = 1e-13;
/// Boundary mass above which a warning is attached to the result.
pub const BOUNDARY_WARNING: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum InitKind<T> {
    Gaussian,
    GaussianVortex { winding: u32 },
    /// Start from a given state (e.g. loaded from a file).
    State(WaveFunction<T>),
    /// Gaussian times a smooth random relative perturbation of size 0.3.
    SeededRandomPerturbation { seed: u64 },
}

/// Search direction used inside the Armijo loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    /// Plain tangent gradient.
    None,
    /// Tangent gradient of the metric `(c - Δ)^{1/2} (c + V)/c (c - Δ)^{1/2}`.
    #[default]
    KineticTrap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    pub max_iters: usize,
    pub tol_energy: T,
    pub tol_grad: T,
    pub step0: T,
    pub shrink: T,
    pub armijo: T,
    pub max_halvings: usize,
    pub init: InitKind<T>,
    pub preconditioner: Preconditioner,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            tol_energy: T::of(1e-10),
            tol_grad: T::of(1e-7),
            step0: T::of(0.1),
            shrink: T::of(0.5),
            armijo: T::of(1e-4),
            max_halvings: 60,
            init: InitKind::Gaussian,
            preconditioner: Preconditioner::default(),
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self) -> crate::Result<()> {
        let positive = |v: T| v > T::zero() && v.is_finite();
        if !positive(self.tol_energy) || !positive(self.tol_grad) || !positive(self.step0) {
            return Err(Error::Config(
                "tolerances and the initial step must be positive".into(),
            ));
        }
        if !(self.shrink > T::zero() && self.shrink < T::one()) {
            return Err(Error::Config(format!(
                "backtracking shrink must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        if !(self.armijo > T::zero() && self.armijo < T::one()) {
            return Err(Error::Config(format!(
                "Armijo constant must lie in (0, 1), got {}",
                self.armijo
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    pub u: WaveFunction<T>,
    pub breakdown: EnergyBreakdown<T>,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: T,
    pub boundary_mass: T,
    /// Total energy at the initial state and after every accepted step.
    pub energy_history: Vec<T>,
    pub warnings: Vec<String>,
}

/// Solver error together with the last state that had a finite energy.
#[derive(Debug, Clone)]
pub struct SolveFailure<T> {
    pub error: Error,
    pub last_state: WaveFunction<T>,
    pub iterations: usize,
}

impl<T> fmt::Display for SolveFailure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} iterations)", self.error, self.iterations)
    }
}

impl<T: fmt::Debug> std::error::Error for SolveFailure<T> {}

impl<T> From<SolveFailure<T>> for Error {
    fn from(f: SolveFailure<T>) -> Self {
        f.error
    }
}

/// Builds the initial state on `spec`; the Gaussian has the width of the
/// harmonic oscillator ground state.
pub fn initial_state<T: Real>(spec: GridSpec<T>, init: &InitKind<T>) -> crate::Result<WaveFunction<T>> {
    let sigma = T::one();
    match init {
        InitKind::Gaussian => Ok(states::gaussian(spec, sigma)),
        InitKind::GaussianVortex { winding } => Ok(states::gaussian_vortex(spec, sigma, *winding)),
        InitKind::State(u) => {
            if u.spec() != spec {
                return Err(Error::Config(format!(
                    "initial state lives on n={}, L={} but the grid is n={}, L={}",
                    u.spec().n(),
                    u.spec().half_width(),
                    spec.n(),
                    spec.half_width()
                )));
            }
            WaveFunction::normalized(u.field().clone())
        }
        InitKind::SeededRandomPerturbation { seed } => {
            Ok(states::perturbed(&states::gaussian(spec, sigma), T::of(0.3), *seed))
        }
    }
}

fn l2<T: Real>(f: &ScalarField<T>) -> T {
    f.norm_sqr().sqrt()
}

/// Applies the preconditioner metric inverse `P = (c - Δ)^{-1/2} c(c + V)^{-1} (c - Δ)^{-1/2}`.
fn apply_preconditioner<T: Real>(functional: &Functional<T>, c: T, f: &ScalarField<T>) -> ScalarField<T> {
    let grid = functional.grid();
    let n = grid.spec().n();
    let k = grid.wavenumbers();
    let half = |f: &ScalarField<T>| {
        let mut fh = grid.forward(f);
        for j in 0..n {
            for i in 0..n {
                let s = (c + k[i] * k[i] + k[j] * k[j]).sqrt().recip();
                fh[j * n + i] = fh[j * n + i].scale(s);
            }
        }
        grid.inverse(fh)
    };
    let mut mid = half(f);
    for (z, v) in mid.values.iter_mut().zip(&functional.trap_field().values) {
        *z = z.scale(c / (c + *v));
    }
    half(&mid)
}

/// Minimizes `E^af_R` over normalized states on the functional's grid.
pub fn minimize<T: Real>(
    functional: &Functional<T>,
    cfg: &SolverConfig<T>,
) -> Result<SolveResult<T>, SolveFailure<T>> {
    let spec = functional.spec();
    let fail_early = |error: Error| SolveFailure {
        error,
        last_state: states::gaussian(spec, T::one()),
        iterations: 0,
    };
    cfg.validate().map_err(fail_early)?;
    let mut u = initial_state(spec, &cfg.init).map_err(fail_early)?;
    let (mut e, mut g) = functional
        .energy_and_gradient(&u)
        .map_err(|err| SolveFailure { error: err, last_state: u.clone(), iterations: 0 })?;
    if !e.total.is_finite() {
        return Err(SolveFailure {
            error: Error::NumericalFailure {
                iteration: 0,
                message: "initial energy is not finite".into(),
            },
            last_state: u,
            iterations: 0,
        });
    }
    let mut history = vec![e.total];
    let mut tau = cfg.step0;
    let tau_max = cfg.step0 * T::of(1e3);
    let mut last_decrease: Option<T> = None;
    let mut iterations = 0;
    let mut converged = false;
    let mut grad_norm;
    loop {
        let tangent = sphere_project(&g, &u);
        grad_norm = l2(&tangent);
        let small_change = last_decrease.is_none_or(|d| d <= cfg.tol_energy * e.total.abs().max(T::one()));
        if grad_norm < cfg.tol_grad && small_change {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iters {
            break;
        }
        // P applied to the tangent part, not to G ≈ λu: same direction, no cancellation
        let direction = match cfg.preconditioner {
            Preconditioner::None => tangent.clone(),
            Preconditioner::KineticTrap => {
                let lambda = u.field().inner(&g).re;
                let c = lambda.max(T::one());
                let pg = apply_preconditioner(functional, c, &tangent);
                let pu = apply_preconditioner(functional, c, u.field());
                let coef = u.field().inner(&pg).re / u.field().inner(&pu).re;
                pg.axpy(Complex::new(-coef, T::zero()), &pu)
            }
        };
        // dE/dτ along u - τ d at τ = 0
        let slope = T::of(2.0) * direction.inner(&tangent).re;
        if !(slope > T::zero()) {
            // rounding has made the direction useless; nothing more to gain
            break;
        }
        let mut halvings = 0;
        let mut first_try = true;
        let noise = T::of(ENERGY_NOISE) * e.total.abs().max(T::one());
        let accepted = loop {
            let w = u.field().axpy(Complex::new(-tau, T::zero()), &direction);
            let trial = match WaveFunction::normalized(w.clone()) {
                Ok(t) => t,
                Err(err) => {
                    return Err(SolveFailure { error: err, last_state: u, iterations });
                }
            };
            let te = functional
                .energy(&trial)
                .map_err(|err| SolveFailure { error: err, last_state: u.clone(), iterations })?;
            if !te.total.is_finite() {
                return Err(SolveFailure {
                    error: Error::NumericalFailure {
                        iteration: iterations,
                        message: format!("non-finite energy at step size {tau}"),
                    },
                    last_state: u,
                    iterations,
                });
            }
            if te.total <= e.total - cfg.armijo * tau * slope {
                break Some((trial, None));
            }
            if te.total <= e.total + noise {
                // energy differences are at rounding level: test the slope along
                // the retraction instead
                let (ge, gg) = functional
                    .energy_and_gradient(&trial)
                    .map_err(|err| SolveFailure { error: err, last_state: u.clone(), iterations })?;
                let wn = w.norm_sqr();
                let along = Complex::new(w.inner(&direction).re / wn, T::zero());
                let q = w.scale(along).axpy(Complex::new(-T::one(), T::zero()), &direction);
                let dphi = T::of(2.0) * q.inner(&gg).re / wn.sqrt();
                if dphi <= (T::one() - T::of(2.0) * cfg.armijo) * slope {
                    break Some((trial, Some((ge, gg))));
                }
            }
            halvings += 1;
            first_try = false;
            if halvings > cfg.max_halvings {
                break None;
            }
            tau = tau * cfg.shrink;
        };
        let Some((next, evaluated)) = accepted else {
            // the predicted decrease is below what the energy can resolve
            if cfg.step0 * slope < noise {
                break;
            }
            return Err(SolveFailure {
                error: Error::Stalled {
                    iteration: iterations,
                    halvings: cfg.max_halvings,
                },
                last_state: u,
                iterations,
            });
        };
        let (ne, ng) = match evaluated {
            Some(pair) => pair,
            None => functional
                .energy_and_gradient(&next)
                .map_err(|err| SolveFailure { error: err, last_state: u.clone(), iterations })?,
        };
        last_decrease = Some(e.total - ne.total);
        u = next;
        e = ne;
        g = ng;
        history.push(e.total);
        iterations += 1;
        if first_try {
            tau = (tau * T::of(2.0)).min(tau_max);
        }
    }
    let boundary_mass = density(&u).boundary_mass(BOUNDARY_FRAME);
    let mut warnings = Vec::new();
    if boundary_mass > T::of(BOUNDARY_WARNING) {
        warnings.push(format!(
            "mass {boundary_mass} within {BOUNDARY_FRAME} cells of the box edge; enlarge the box"
        ));
    }
    Ok(SolveResult {
        u,
        breakdown: e,
        iterations,
        converged,
        grad_norm,
        boundary_mass,
        energy_history: history,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::FunctionalParams;
    use crate::kernels::TrapPotential;
    use std::f64::consts::PI;

    fn functional(n: usize, l: f64, beta: f64, radius: f64) -> Functional<f64> {
        let spec = GridSpec::new(n, l).unwrap();
        Functional::new(spec, FunctionalParams::new(beta, radius, TrapPotential::harmonic())).unwrap()
    }

    fn assert_monotone(h: &[f64]) {
        for w in h.windows(2) {
            assert!(w[1] <= w[0] + ENERGY_NOISE * w[0].abs().max(1.0), "energy increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let f = functional(16, 4.0, 0.0, 0.0);
        let cfg = SolverConfig { shrink: 1.5, ..SolverConfig::default() };
        assert!(matches!(minimize(&f, &cfg).unwrap_err().error, Error::Config(_)));
        let cfg = SolverConfig { tol_grad: 0.0, ..SolverConfig::default() };
        assert!(minimize(&f, &cfg).is_err());
    }

    #[test]
    fn oscillator_from_perturbed_start() {
        let f = functional(64, 6.0, 0.0, 0.0);
        for pre in [Preconditioner::KineticTrap, Preconditioner::None] {
            let cfg = SolverConfig {
                init: InitKind::SeededRandomPerturbation { seed: 4 },
                preconditioner: pre,
                ..SolverConfig::default()
            };
            let res = minimize(&f, &cfg).unwrap();
            assert!(res.converged, "{pre:?}: {} iterations, grad {}", res.iterations, res.grad_norm);
            assert!((res.breakdown.total - 2.0).abs() < 1e-8, "{pre:?}: {}", res.breakdown.total);
            assert_monotone(&res.energy_history);
            assert!(res.u.is_normalized());
            // unique positive minimizer up to phase: compare densities
            let s = f.spec();
            let l1: f64 = density(&res.u)
                .values
                .iter()
                .enumerate()
                .map(|(idx, r)| {
                    let (x, y) = s.point(idx);
                    (r - (-(x * x + y * y)).exp() / PI).abs()
                })
                .sum::<f64>()
                * s.cell_area();
            assert!(l1 < 1e-4, "{l1}");
        }
    }

    #[test]
    fn warm_restart_is_a_fixed_point() {
        let f = functional(64, 6.0, 1.0, 0.2);
        let first = minimize(&f, &SolverConfig::default()).unwrap();
        assert!(first.converged);
        let cfg = SolverConfig { init: InitKind::State(first.u.clone()), ..SolverConfig::default() };
        let second = minimize(&f, &cfg).unwrap();
        assert!(second.converged);
        assert!(second.iterations <= 2);
        assert!((second.breakdown.total - first.breakdown.total).abs() < 1e-10);
    }

    #[test]
    fn interacting_solve_descends_and_is_diamagnetic() {
        let f = functional(64, 6.0, 1.0, 0.0);
        let res = minimize(&f, &SolverConfig::default()).unwrap();
        assert!(res.converged);
        assert_monotone(&res.energy_history);
        assert!(res.breakdown.total >= 2.0 - 1e-6);
        assert!(res.boundary_mass < 1e-8);
        assert!(res.warnings.is_empty());
    }

    #[test]
    fn small_box_warns_about_boundary_mass() {
        let f = functional(16, 1.5, 0.0, 0.0);
        let res = minimize(&f, &SolverConfig { max_iters: 50, ..SolverConfig::default() }).unwrap();
        assert!(res.boundary_mass > 1e-8);
        assert_eq!(res.warnings.len(), 1);
    }

    #[test]
    fn mismatched_initial_state_is_rejected() {
        let f = functional(32, 4.0, 0.0, 0.0);
        let other = states::gaussian(GridSpec::new(16, 4.0).unwrap(), 1.0);
        let cfg = SolverConfig { init: InitKind::State(other), ..SolverConfig::default() };
        assert!(matches!(minimize(&f, &cfg).unwrap_err().error, Error::Config(_)));
    }
}
