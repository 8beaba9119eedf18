//! Parameter sweeps of the minimization, warm-started along the axis.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{Functional, FunctionalParams};
use crate::grid::{GridSpec, WaveFunction};
use crate::kernels::{KernelQuadrature, TrapPotential};
use crate::manybody::ProductStateIntegrals;
use crate::solver::{minimize, InitKind, SolveResult, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Beta,
    Radius,
    /// Particle number of the product state built from one minimizer.
    Particles,
    /// Trap exponent `s` in `V = c|x|^s`.
    Exponent,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta" => Ok(Self::Beta),
            "R" | "r" | "radius" => Ok(Self::Radius),
            "N" | "n" | "particles" => Ok(Self::Particles),
            "s" | "exponent" => Ok(Self::Exponent),
            other => Err(Error::Config(format!(
                "unknown sweep axis {other:?}; expected beta, R, N or s"
            ))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Beta => "beta",
            Self::Radius => "R",
            Self::Particles => "N",
            Self::Exponent => "s",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepBase {
    pub spec: GridSpec<f64>,
    pub params: FunctionalParams<f64>,
    pub solver: SolverConfig<f64>,
    pub quadrature: KernelQuadrature,
}

/// One sweep row. For the `N` axis, `total` is the product-state energy per
/// particle and `quartic` holds the three-body plus singular two-body terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub total: f64,
    pub kinetic: f64,
    pub mixed: f64,
    pub quartic: f64,
    pub potential: f64,
    pub converged: bool,
    pub grad_norm: f64,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepRow {
    fn from_result(axis_value: f64, r: &SolveResult<f64>) -> Self {
        let b = r.breakdown;
        Self {
            axis_value,
            total: b.total,
            kinetic: b.kinetic,
            mixed: b.mixed,
            quartic: b.quartic,
            potential: b.potential,
            converged: r.converged,
            grad_norm: r.grad_norm,
            iterations: r.iterations,
            error: None,
        }
    }

    fn failed(axis_value: f64, err: impl fmt::Display) -> Self {
        Self {
            axis_value,
            total: f64::NAN,
            kinetic: f64::NAN,
            mixed: f64::NAN,
            quartic: f64::NAN,
            potential: f64::NAN,
            converged: false,
            grad_norm: f64::NAN,
            iterations: 0,
            error: Some(err.to_string()),
        }
    }
}

fn params_at(base: &FunctionalParams<f64>, axis: SweepAxis, value: f64) -> Result<FunctionalParams<f64>> {
    let mut p = *base;
    match axis {
        SweepAxis::Beta => p.beta = value,
        SweepAxis::Radius => p.radius = value,
        SweepAxis::Exponent => p.trap = TrapPotential::power(base.trap.strength, value)?,
        SweepAxis::Particles => {}
    }
    Ok(p)
}

fn solve_at(
    base: &SweepBase,
    params: FunctionalParams<f64>,
    init: InitKind<f64>,
) -> Result<SolveResult<f64>> {
    let functional = Functional::with_quadrature(base.spec, params, base.quadrature)?;
    let cfg = SolverConfig { init, ..base.solver.clone() };
    Ok(minimize(&functional, &cfg)?)
}

/// Runs the sweep in the given order. Per-point failures become flagged rows.
/// Returns the rows and the final state of every successful point.
pub fn sweep_with_states(
    base: &SweepBase,
    axis: SweepAxis,
    values: &[f64],
) -> Result<(Vec<SweepRow>, Vec<Option<WaveFunction<f64>>>)> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    if axis == SweepAxis::Particles {
        return particle_sweep(base, values);
    }
    let mut rows = Vec::with_capacity(values.len());
    let mut finals = Vec::with_capacity(values.len());
    let mut previous: Option<(f64, WaveFunction<f64>)> = None;
    for &value in values {
        let params = match params_at(&base.params, axis, value) {
            Ok(p) => p,
            Err(e) => {
                rows.push(SweepRow::failed(value, e));
                finals.push(None);
                continue;
            }
        };
        let init = match &previous {
            Some((_, u)) => InitKind::State(u.clone()),
            None => base.solver.init.clone(),
        };
        let mut outcome = solve_at(base, params, init);
        // an energy increase along the sweep may mean the warm start sat in a
        // worse basin; keep the better of warm and cold
        if let (Ok(res), Some((prev_e, _))) = (&outcome, &previous) {
            if res.breakdown.total > *prev_e {
                if let Ok(cold) = solve_at(base, params, base.solver.init.clone()) {
                    if cold.breakdown.total < res.breakdown.total {
                        outcome = Ok(cold);
                    }
                }
            }
        }
        match outcome {
            Ok(res) => {
                rows.push(SweepRow::from_result(value, &res));
                previous = Some((res.breakdown.total, res.u.clone()));
                finals.push(Some(res.u));
            }
            Err(e) => {
                rows.push(SweepRow::failed(value, e));
                finals.push(None);
            }
        }
    }
    Ok((rows, finals))
}

pub fn sweep(base: &SweepBase, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    Ok(sweep_with_states(base, axis, values)?.0)
}

fn particle_sweep(
    base: &SweepBase,
    values: &[f64],
) -> Result<(Vec<SweepRow>, Vec<Option<WaveFunction<f64>>>)> {
    let functional = Functional::with_quadrature(base.spec, base.params, base.quadrature)?;
    let res = minimize(&functional, &base.solver)?;
    let ints = ProductStateIntegrals::compute(&functional, &res.u)?;
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        if value.fract() != 0.0 || value < 2.0 {
            rows.push(SweepRow::failed(value, format!("particle number must be an integer ≥ 2, got {value}")));
            continue;
        }
        let b = ints.breakdown(value as u64)?;
        rows.push(SweepRow {
            axis_value: value,
            total: b.per_particle_total,
            kinetic: b.kinetic,
            mixed: b.mixed,
            quartic: b.three_body + b.singular,
            potential: b.potential,
            converged: res.converged,
            grad_norm: res.grad_norm,
            iterations: res.iterations,
            error: None,
        });
    }
    let finals = vec![Some(res.u); values.len()];
    Ok((rows, finals))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(beta: f64, radius: f64) -> SweepBase {
        SweepBase {
            spec: GridSpec::new(64, 6.0).unwrap(),
            params: FunctionalParams::new(beta, radius, TrapPotential::harmonic()),
            solver: SolverConfig::default(),
            quadrature: KernelQuadrature::default(),
        }
    }

    #[test]
    fn empty_sweep_is_a_usage_error() {
        assert!(matches!(sweep(&base(1.0, 0.0), SweepAxis::Beta, &[]), Err(Error::Config(_))));
    }

    #[test]
    fn axis_names() {
        for (s, a) in [("beta", SweepAxis::Beta), ("R", SweepAxis::Radius), ("N", SweepAxis::Particles), ("s", SweepAxis::Exponent)] {
            assert_eq!(s.parse::<SweepAxis>().unwrap(), a);
            assert_eq!(a.to_string(), s);
        }
        assert!("q".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn single_value_sweep_matches_minimize() {
        let b = base(0.7, 0.1);
        let rows = sweep(&b, SweepAxis::Beta, &[0.7]).unwrap();
        let f = Functional::new(b.spec, b.params).unwrap();
        let direct = minimize(&f, &b.solver).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].total, direct.breakdown.total);
        assert_eq!(rows[0].iterations, direct.iterations);
    }

    #[test]
    fn beta_sweep_descends_to_oscillator() {
        let rows = sweep(&base(0.0, 0.0), SweepAxis::Beta, &[0.5, 0.25, 0.1]).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].total < w[0].total);
        }
        assert!(rows.iter().all(|r| r.converged && r.total > 2.0));
    }

    #[test]
    fn particle_sweep_and_bad_rows() {
        let rows = sweep(&base(1.0, 0.2), SweepAxis::Particles, &[2.0, 10.0, 2.5]).unwrap();
        assert!(rows[0].total > rows[1].total);
        assert!(rows[2].error.is_some());
        let rows = sweep(&base(1.0, 0.2), SweepAxis::Exponent, &[2.0, -1.0]).unwrap();
        assert!(rows[0].error.is_none());
        assert!(rows[1].error.is_some() && rows[1].total.is_nan());
    }
}
