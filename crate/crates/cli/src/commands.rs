use std::path::{Path, PathBuf};

use afield_core::fields::density;
use afield_core::functional::{EnergyBreakdown, Functional, FunctionalParams};
use afield_core::kernels::KernelQuadrature;
use afield_core::manybody::{ManyBodyBreakdown, ManyBodyParams, ProductStateIntegrals};
use afield_core::solver::{minimize, InitKind, Preconditioner, SolverConfig, BOUNDARY_FRAME};
use afield_core::sweep::{sweep_with_states, SweepAxis, SweepBase, SweepRow};
use afield_core::verify::{self, Replay, ReplayOutcome, Suite, SuiteReport};
use afield_core::{states, GridSpec, TrapPotential, WaveFunction};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::{csv_table, emit_json, fmt_f64, write_atomic, VERSION};
use crate::state_file;
use crate::{
    EnergyArgs, GridArgs, InitArg, ModelArgs, PrecondArg, QuadratureArg, SolveArgs, SolverArgs,
    SweepArgs, TrapKind, VerifyArgs,
};

pub const SWEEP_COLUMNS: [&str; 9] = [
    "axis_value",
    "total",
    "kinetic",
    "mixed",
    "quartic",
    "potential",
    "converged",
    "grad_norm",
    "iterations",
];

#[derive(Debug, Clone, Serialize)]
struct GridConfig {
    n: usize,
    half_width: f64,
}

#[derive(Debug, Clone, Serialize)]
struct ModelConfig {
    beta: f64,
    radius: f64,
    trap: TrapPotential<f64>,
    quadrature: KernelQuadrature,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum InitConfig {
    Gaussian,
    GaussianVortex { winding: u32 },
    FromFile { path: PathBuf },
    SeededRandomPerturbation { seed: u64 },
}

#[derive(Debug, Clone, Serialize)]
struct SolverSettings {
    init: InitConfig,
    max_iters: usize,
    tol_energy: f64,
    tol_grad: f64,
    step0: f64,
    shrink: f64,
    armijo: f64,
    max_halvings: usize,
    preconditioner: Preconditioner,
}

fn trap(kind: TrapKind, strength: f64, exponent: f64) -> CliResult<TrapPotential<f64>> {
    Ok(match kind {
        TrapKind::Harmonic => TrapPotential::harmonic(),
        TrapKind::Power => TrapPotential::power(strength, exponent)?,
    })
}

fn quadrature(q: QuadratureArg) -> KernelQuadrature {
    match q {
        QuadratureArg::Spectral => KernelQuadrature::Spectral,
        QuadratureArg::PointSample => KernelQuadrature::PointSample,
    }
}

fn model_config(m: &ModelArgs) -> CliResult<ModelConfig> {
    if !m.beta.is_finite() {
        return Err(CliError::config(format!("beta must be finite, got {}", m.beta)));
    }
    if !(m.radius >= 0.0 && m.radius.is_finite()) {
        return Err(CliError::config(format!("R must be finite and ≥ 0, got {}", m.radius)));
    }
    Ok(ModelConfig {
        beta: m.beta,
        radius: m.radius,
        trap: trap(m.trap, m.trap_strength, m.trap_exponent)?,
        quadrature: quadrature(m.quadrature),
    })
}

impl ModelConfig {
    fn params(&self) -> FunctionalParams<f64> {
        FunctionalParams::new(self.beta, self.radius, self.trap)
    }
}

/// Grid from the flags; with `--init from_file` missing flags come from the
/// file header and given ones must match it.
fn resolve_start(g: &GridArgs, s: &SolverArgs) -> CliResult<(GridSpec<f64>, InitKind<f64>, InitConfig)> {
    let explicit = |n: Option<usize>, l: Option<f64>| -> CliResult<GridSpec<f64>> {
        match (n, l) {
            (Some(n), Some(l)) => Ok(GridSpec::new(n, l)?),
            _ => Err(CliError::config("both --grid and --box are required")),
        }
    };
    Ok(match s.init {
        InitArg::FromFile => {
            let path = s
                .init_file
                .clone()
                .ok_or_else(|| CliError::config("--init from_file needs --init-file"))?;
            let (header, _) = state_file::load(&path)?;
            let spec = explicit(g.grid.or(Some(header.n)), g.half_width.or(Some(header.half_width)))?;
            let (_, u) = state_file::load_on(&path, spec)?;
            (spec, InitKind::State(u), InitConfig::FromFile { path })
        }
        InitArg::Gaussian => (explicit(g.grid, g.half_width)?, InitKind::Gaussian, InitConfig::Gaussian),
        InitArg::GaussianVortex => (
            explicit(g.grid, g.half_width)?,
            InitKind::GaussianVortex { winding: s.winding },
            InitConfig::GaussianVortex { winding: s.winding },
        ),
        InitArg::SeededRandomPerturbation => (
            explicit(g.grid, g.half_width)?,
            InitKind::SeededRandomPerturbation { seed: s.seed },
            InitConfig::SeededRandomPerturbation { seed: s.seed },
        ),
    })
}

fn solver_config(s: &SolverArgs, init: InitKind<f64>, init_cfg: InitConfig) -> CliResult<(SolverConfig<f64>, SolverSettings)> {
    let cfg = SolverConfig {
        max_iters: s.max_iters,
        tol_energy: s.tol_energy,
        tol_grad: s.tol_grad,
        step0: s.step0,
        init,
        preconditioner: match s.preconditioner {
            PrecondArg::None => Preconditioner::None,
            PrecondArg::KineticTrap => Preconditioner::KineticTrap,
        },
        ..SolverConfig::default()
    };
    cfg.validate()?;
    let settings = SolverSettings {
        init: init_cfg,
        max_iters: cfg.max_iters,
        tol_energy: cfg.tol_energy,
        tol_grad: cfg.tol_grad,
        step0: cfg.step0,
        shrink: cfg.shrink,
        armijo: cfg.armijo,
        max_halvings: cfg.max_halvings,
        preconditioner: cfg.preconditioner,
    };
    Ok((cfg, settings))
}

#[derive(Debug, Serialize)]
struct SolveConfig {
    grid: GridConfig,
    model: ModelConfig,
    solver: SolverSettings,
    state: PathBuf,
    history: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct SolveSummary<'a> {
    version: &'static str,
    command: &'static str,
    config: &'a SolveConfig,
    /// `converged`, `not_converged` or `failed`.
    status: &'static str,
    converged: bool,
    iterations: usize,
    grad_norm: Option<f64>,
    boundary_mass: f64,
    breakdown: Option<EnergyBreakdown<f64>>,
    magnetic_kinetic: Option<f64>,
    /// Phase winding around the center on a loop of radius L/4; `null` where
    /// the state is too small on the loop.
    winding_number: Option<i64>,
    warnings: Vec<String>,
    /// Saved state; ends in `.partial` after a failure.
    state_file: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn partial_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

fn winding(u: &WaveFunction<f64>) -> Option<i64> {
    states::winding_number(u, u.spec().n() / 8, 1e-6)
}

fn history_csv(history: &[f64]) -> String {
    csv_table(
        &["iteration", "energy"],
        history.iter().enumerate().map(|(k, e)| vec![k.to_string(), fmt_f64(*e)]),
    )
}

pub fn solve(a: &SolveArgs) -> CliResult<()> {
    let model = model_config(&a.model)?;
    let (spec, init, init_cfg) = resolve_start(&a.grid, &a.solver)?;
    let (cfg, settings) = solver_config(&a.solver, init, init_cfg)?;
    let config = SolveConfig {
        grid: GridConfig { n: spec.n(), half_width: spec.half_width() },
        model: model.clone(),
        solver: settings,
        state: a.state.clone(),
        history: a.history.clone(),
    };
    let functional = Functional::with_quadrature(spec, model.params(), model.quadrature)?;
    match minimize(&functional, &cfg) {
        Ok(res) => {
            state_file::save(&a.state, &res.u, model.beta, model.radius)?;
            if let Some(h) = &a.history {
                write_atomic(h, history_csv(&res.energy_history).as_bytes())?;
            }
            for w in &res.warnings {
                eprintln!("warning: {w}");
            }
            let summary = SolveSummary {
                version: VERSION,
                command: "solve",
                config: &config,
                status: if res.converged { "converged" } else { "not_converged" },
                converged: res.converged,
                iterations: res.iterations,
                grad_norm: Some(res.grad_norm),
                boundary_mass: res.boundary_mass,
                breakdown: Some(res.breakdown),
                magnetic_kinetic: Some(res.breakdown.magnetic_kinetic()),
                winding_number: winding(&res.u),
                warnings: res.warnings.clone(),
                state_file: a.state.clone(),
                error: None,
            };
            emit_json(&summary, a.summary.as_deref())
        }
        Err(fail) => {
            let err = CliError::from(fail.error.clone());
            if !matches!(err, CliError::Numerical(_)) {
                return Err(err);
            }
            let partial = partial_path(&a.state);
            state_file::save(&partial, &fail.last_state, model.beta, model.radius)?;
            let breakdown = functional.energy(&fail.last_state).ok();
            let summary = SolveSummary {
                version: VERSION,
                command: "solve",
                config: &config,
                status: "failed",
                converged: false,
                iterations: fail.iterations,
                grad_norm: None,
                boundary_mass: density(&fail.last_state).boundary_mass(BOUNDARY_FRAME),
                breakdown,
                magnetic_kinetic: breakdown.map(|b| b.magnetic_kinetic()),
                winding_number: winding(&fail.last_state),
                warnings: Vec::new(),
                state_file: partial,
                error: Some(fail.to_string()),
            };
            emit_json(&summary, a.summary.as_deref())?;
            Err(err)
        }
    }
}

#[derive(Debug, Serialize)]
struct SweepSummary<'a> {
    version: &'static str,
    command: &'static str,
    axis: SweepAxis,
    values: &'a [f64],
    grid: GridConfig,
    model: &'a ModelConfig,
    solver: &'a SolverSettings,
    rows: &'a [SweepRow],
}

fn sweep_row(r: &SweepRow) -> Vec<String> {
    vec![
        fmt_f64(r.axis_value),
        fmt_f64(r.total),
        fmt_f64(r.kinetic),
        fmt_f64(r.mixed),
        fmt_f64(r.quartic),
        fmt_f64(r.potential),
        r.converged.to_string(),
        fmt_f64(r.grad_norm),
        r.iterations.to_string(),
    ]
}

pub fn sweep(a: &SweepArgs) -> CliResult<()> {
    let axis: SweepAxis = a.axis.parse()?;
    if a.values.is_empty() {
        return Err(CliError::config("--values needs at least one value"));
    }
    let model = model_config(&a.model)?;
    let (spec, init, init_cfg) = resolve_start(&a.grid, &a.solver)?;
    let (cfg, settings) = solver_config(&a.solver, init, init_cfg)?;
    let base = SweepBase { spec, params: model.params(), solver: cfg, quadrature: model.quadrature };
    let (rows, _) = sweep_with_states(&base, axis, &a.values)?;
    for r in &rows {
        if let Some(e) = &r.error {
            eprintln!("warning: {axis} = {}: {e}", r.axis_value);
        }
    }
    let table = csv_table(&SWEEP_COLUMNS, rows.iter().map(sweep_row));
    match &a.out {
        Some(p) => write_atomic(p, table.as_bytes())?,
        None => print!("{table}"),
    }
    if let Some(p) = &a.summary {
        let summary = SweepSummary {
            version: VERSION,
            command: "sweep",
            axis,
            values: &a.values,
            grid: GridConfig { n: spec.n(), half_width: spec.half_width() },
            model: &model,
            solver: &settings,
            rows: &rows,
        };
        emit_json(&summary, Some(p))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct VerifyOutput<'a> {
    version: &'static str,
    command: &'static str,
    report: &'a SuiteReport,
}

#[derive(Debug, Serialize)]
struct ReplayOutput<'a> {
    version: &'static str,
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    check: Option<&'a str>,
    case: &'a Replay,
    outcome: ReplayOutcome,
}

/// A file written by `verify --out` or a bare case.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ReplaySource {
    Wrapped { report: SuiteReport },
    Report(SuiteReport),
    Case(Replay),
}

fn replay_case(path: &Path, check: Option<&str>) -> CliResult<Replay> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let report = match serde_json::from_str::<ReplaySource>(&text)? {
        ReplaySource::Case(c) => return Ok(c),
        ReplaySource::Wrapped { report } | ReplaySource::Report(report) => report,
    };
    let name = check.ok_or_else(|| CliError::config("replaying from a report needs --check NAME"))?;
    let c = report
        .check(name)
        .ok_or_else(|| CliError::config(format!("report has no check named {name:?}")))?;
    c.worst
        .clone()
        .ok_or_else(|| CliError::config(format!("check {name:?} recorded no case")))
}

pub fn verify(a: &VerifyArgs) -> CliResult<()> {
    if let Some(path) = &a.replay {
        let case = replay_case(path, a.check.as_deref())?;
        let outcome = verify::replay(&case)?;
        let out = ReplayOutput { version: VERSION, command: "verify", check: a.check.as_deref(), case: &case, outcome };
        return emit_json(&out, a.out.as_deref());
    }
    let suite: Suite = a.suite.as_deref().unwrap_or_default().parse()?;
    if a.samples == Some(0) {
        return Err(CliError::config("--samples must be positive"));
    }
    let report = verify::run(suite, a.seed, a.samples)?;
    emit_json(&VerifyOutput { version: VERSION, command: "verify", report: &report }, a.out.as_deref())?;
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| c.hard && !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(format!("{suite}: {}", failed.join(", "))))
    }
}

#[derive(Debug, Serialize)]
struct EnergyOutput<'a> {
    version: &'static str,
    command: &'static str,
    state_file: &'a Path,
    grid: GridConfig,
    params: ManyBodyParams,
    quadrature: KernelQuadrature,
    alpha: f64,
    breakdown: ManyBodyBreakdown,
    functional: EnergyBreakdown<f64>,
    /// `per_particle_total - functional.total`.
    gap: f64,
}

/// Tolerated deviation of the stored state from unit mass.
const MASS_TOL: f64 = 1e-8;

pub fn energy(a: &EnergyArgs) -> CliResult<()> {
    let (header, u) = state_file::load(&a.state)?;
    let spec = header.spec()?;
    let params = ManyBodyParams {
        n_particles: a.particles,
        beta: a.beta.unwrap_or(header.beta),
        radius: a.radius.unwrap_or(header.radius),
        trap: trap(a.trap, a.trap_strength, a.trap_exponent)?,
    };
    params.validate()?;
    if (u.l2_norm() - 1.0).abs() > MASS_TOL {
        return Err(CliError::config(format!(
            "state in {} has mass {}, expected 1",
            a.state.display(),
            u.l2_norm()
        )));
    }
    let q = quadrature(a.quadrature);
    let functional = Functional::with_quadrature(spec, params.functional_params(), q)?;
    let ints = ProductStateIntegrals::compute(&functional, &u)?;
    let breakdown = ints.breakdown(params.n_particles)?;
    let out = EnergyOutput {
        version: VERSION,
        command: "energy",
        state_file: &a.state,
        grid: GridConfig { n: spec.n(), half_width: spec.half_width() },
        params,
        quadrature: q,
        alpha: params.alpha()?,
        breakdown,
        functional: ints.functional,
        gap: ints.gap(params.n_particles),
    };
    emit_json(&out, a.out.as_deref())
}
