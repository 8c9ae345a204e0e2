//! Experiment dispatch. Configuration problems surface as `Error::Config`
//! (exit 2); anything that fails after the inputs were accepted is a run
//! error (exit 1) and leaves a failure marker next to the partial outputs.

use std::path::{Path, PathBuf};

use serde::Serialize;

use nsp_core::domain::{geometry_report, observed_orders, DomainSpec, GeometryReport, Grid};
use nsp_core::elliptic::{
    neumann_estimate_ratio, solve_lame_dirichlet, solve_neumann_poisson, verify_elliptic_estimate, verify_stokes_estimate,
    EstimateRatio, LameProblem, NeumannProblem,
};
use nsp_core::energy::{
    decay_fit_window, energy_functionals, imp1_ratio, localized_norms, CutoffSystem, DecayFit, EnergyReport, LocalizedReport,
};
use nsp_core::evolve::{linear_spectrum, run_trajectory, PerturbationState, Trajectory, TrajectoryOptions};
use nsp_core::field::{ScalarField, VectorField};
use nsp_core::steady::{solve_steady, SteadyResidual, SteadyState};
use nsp_core::{Error, Result};

use crate::config::{prepare, Experiment, Prepared, RunConfig, SCHEMA_VERSION};
use crate::report::{
    encode_fields, encode_series, write_atomic, write_json, FailureMarker, FieldDump, SeriesRow, FAILURE_MARKER,
};

const GEOMETRY_LEVELS: [usize; 3] = [8, 16, 32];
const FRENET_STEPS: [f64; 3] = [4e-2, 2e-2, 1e-2];
/// Dense eigen-decomposition is skipped above this many unknowns.
const ORACLE_MAX_NODES: usize = 1024;

pub const DEFAULT_OUT: &str = "nsp-out";

#[derive(Serialize)]
struct Summary<T: Serialize> {
    schema: u32,
    experiment: &'static str,
    config: RunConfig,
    result: T,
}

#[derive(Serialize)]
struct SteadySummary {
    residual: SteadyResidual,
    newton_iterations: usize,
    c: f64,
    rho_min: f64,
    rho_max: f64,
}

impl SteadySummary {
    fn new(ss: &SteadyState) -> Self {
        Self {
            residual: ss.residual,
            newton_iterations: ss.newton_iterations,
            c: ss.c,
            rho_min: ss.rho.min(),
            rho_max: ss.rho.0.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Serialize)]
struct Constants {
    imp1_max: Option<f64>,
    identity_residual_max: Option<f64>,
    e_over_d_max: Option<f64>,
    cfl_ratio_max: f64,
    elliptic_estimate: [Option<EstimateRatio>; 2],
    stokes_estimate: [Option<EstimateRatio>; 2],
    localized: [Option<LocalizedReport>; 2],
}

#[derive(Serialize)]
struct Oracle {
    full_abscissa: f64,
    excited_abscissa: Option<f64>,
    /// `2 |excited abscissa|`; E is quadratic in the state.
    predicted_sigma: Option<f64>,
    invariants: usize,
}

#[derive(Serialize)]
struct TrajectorySummary {
    steady: SteadySummary,
    steps: usize,
    t_final: f64,
    rows: usize,
    fit_window: [f64; 2],
    fit: Option<DecayFit>,
    fit_error: Option<String>,
    energy_initial: EnergyReport,
    energy_final: EnergyReport,
    constants: Constants,
    oracle: Option<Oracle>,
    oracle_error: Option<String>,
}

#[derive(Serialize)]
struct EllipticSummary {
    steady: SteadySummary,
    elliptic_estimate: Option<EstimateRatio>,
    stokes_estimate: Option<EstimateRatio>,
    neumann_estimate: Option<f64>,
    neumann_iterations: Option<usize>,
    lame_recovery_error: f64,
    imp1_ratio: Option<f64>,
}

#[derive(Serialize)]
struct ChartOrders {
    frenet: Option<Vec<f64>>,
    chain_rule: Option<Vec<f64>>,
    cross_product: Option<Vec<f64>>,
    gradient_reconstruction: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct GeometrySummary {
    report: GeometryReport,
    orders: Vec<ChartOrders>,
}

/// Error with the trajectory step it happened at, for the failure marker.
struct RunFailure {
    error: Error,
    step: Option<usize>,
    rows: usize,
}

impl From<Error> for RunFailure {
    fn from(error: Error) -> Self {
        Self { error, step: None, rows: 0 }
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        Error::Precondition(m) | Error::InvalidParameters(m) => Error::Config(m),
        other => other,
    }
}

fn echo(cfg: &RunConfig, experiment: Experiment) -> RunConfig {
    let mut c = cfg.clone();
    c.experiment = Some(experiment);
    // the output location does not affect results
    c.out = None;
    c
}

/// Output directory: command line, then config, then the default.
pub fn output_dir(cfg: &RunConfig, cli: Option<&Path>) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

pub fn execute(cfg: &RunConfig, experiment: Experiment, out: &Path) -> Result<()> {
    cfg.validate()?;
    let experiment = cfg.resolve_experiment(experiment)?;
    let prep = prepare(cfg)?;
    std::fs::create_dir_all(out)?;
    match std::fs::remove_file(out.join(FAILURE_MARKER)) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(e.into()),
        _ => {}
    }
    let result = match experiment {
        Experiment::Steady => run_steady(cfg, &prep, out),
        Experiment::Evolve | Experiment::Decay => run_evolution(cfg, experiment, &prep, out),
        Experiment::VerifyElliptic => run_elliptic(cfg, &prep, out),
        Experiment::GeometryCheck => run_geometry(cfg, out),
    };
    match result {
        Ok(()) => Ok(()),
        Err(f) if matches!(f.error, Error::Config(_)) => Err(f.error),
        Err(f) => {
            let marker = FailureMarker {
                experiment: experiment.name().to_string(),
                error: f.error.to_string(),
                step: f.step,
                completed_rows: f.rows,
            };
            write_json(out, FAILURE_MARKER, &marker)?;
            Err(f.error)
        }
    }
}

fn write_summary<T: Serialize>(cfg: &RunConfig, experiment: Experiment, out: &Path, result: T) -> Result<()> {
    let summary = Summary {
        schema: SCHEMA_VERSION,
        experiment: experiment.name(),
        config: echo(cfg, experiment),
        result,
    };
    write_json(out, "summary.json", &summary)
}

fn steady(cfg: &RunConfig, prep: &Prepared) -> Result<SteadyState> {
    solve_steady(&prep.background, cfg.physics.gamma, &prep.grid, None)
}

fn run_steady(cfg: &RunConfig, prep: &Prepared, out: &Path) -> std::result::Result<(), RunFailure> {
    let ss = steady(cfg, prep)?;
    if cfg.dump_fields {
        let values = ss.rho.0.iter().zip(&ss.phi.0).flat_map(|(r, p)| [*r, *p]).collect();
        let dump = FieldDump { nodes: prep.grid.len() as u32, fields: 2, values };
        write_atomic(out, "fields_0000.bin", &encode_fields(&dump)?)?;
    }
    write_summary(cfg, Experiment::Steady, out, SteadySummary::new(&ss))?;
    Ok(())
}

fn state_dump(s: &PerturbationState) -> FieldDump {
    let values = (0..s.q.len())
        .flat_map(|i| [s.q.0[i], s.u.0[i][0], s.u.0[i][1], s.u.0[i][2], s.phi.0[i]])
        .collect();
    FieldDump { nodes: s.q.len() as u32, fields: 5, values }
}

fn optional<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::DegenerateState | Error::ZeroDenominator | Error::UnsupportedGeometry(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn fold_max(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
}

fn constants(grid: &Grid, ss: &SteadyState, cfg: &RunConfig, traj: &Trajectory) -> Result<Constants> {
    let params = cfg.scheme_params();
    let first = &traj.snapshots[0];
    let last = traj.last_state().unwrap_or(first);
    let cutoffs = optional(CutoffSystem::new(grid))?;
    let localized = |s: &PerturbationState| -> Result<Option<LocalizedReport>> {
        match &cutoffs {
            Some(c) => optional(localized_norms(grid, s, ss, c)),
            None => Ok(None),
        }
    };
    Ok(Constants {
        imp1_max: fold_max(traj.records.iter().filter_map(|r| r.imp1_ratio)),
        identity_residual_max: fold_max(traj.records.iter().filter_map(|r| r.identity_residual)),
        e_over_d_max: fold_max(traj.records.iter().filter(|r| r.dissipation > 0.0).map(|r| r.energy / r.dissipation)),
        cfl_ratio_max: traj.records.iter().map(|r| r.cfl_ratio).fold(0.0, f64::max),
        elliptic_estimate: [
            optional(verify_elliptic_estimate(grid, first, ss, &params))?,
            optional(verify_elliptic_estimate(grid, last, ss, &params))?,
        ],
        stokes_estimate: [
            optional(verify_stokes_estimate(grid, first, ss, &params))?,
            optional(verify_stokes_estimate(grid, last, ss, &params))?,
        ],
        localized: [localized(first)?, localized(last)?],
    })
}

fn run_evolution(
    cfg: &RunConfig,
    experiment: Experiment,
    prep: &Prepared,
    out: &Path,
) -> std::result::Result<(), RunFailure> {
    let grid = &prep.grid;
    let params = cfg.scheme_params();
    let ss = steady(cfg, prep)?;
    let s0 = PerturbationState::from_fields(grid, &ss, &params, prep.q0.clone(), prep.u0.clone()).map_err(as_config)?;
    let options = TrajectoryOptions {
        small_data_bound: cfg.small_data_bound,
        light: experiment == Experiment::Decay,
    };
    let traj = run_trajectory(grid, &s0, &ss, &params, options).map_err(as_config)?;
    let rows: Vec<SeriesRow> = traj.stride_records(params.stride).into_iter().map(SeriesRow::from).collect();
    write_atomic(out, "series.csv", &encode_series(&rows)?)?;
    if cfg.dump_fields {
        for (k, s) in traj.snapshots.iter().enumerate() {
            write_atomic(out, &format!("fields_{k:04}.bin"), &encode_fields(&state_dump(s))?)?;
        }
    }
    if let Some(f) = &traj.failure {
        return Err(RunFailure { error: f.error.clone(), step: Some(f.step), rows: rows.len() });
    }
    let fail = |error: Error| RunFailure { error, step: None, rows: rows.len() };

    let t: Vec<f64> = traj.records.iter().map(|r| r.t).collect();
    let e: Vec<f64> = traj.records.iter().map(|r| r.energy).collect();
    let t_final = t.last().copied().unwrap_or(0.0);
    let window = cfg.fit_window.unwrap_or([0.2 * t_final, t_final]);
    let (fit, fit_error) = match decay_fit_window(&t, &e, (window[0], window[1])) {
        Ok(f) => (Some(f), None),
        Err(err) if experiment == Experiment::Decay => return Err(fail(err)),
        Err(err) => (None, Some(err.to_string())),
    };
    let (oracle, oracle_error) = if experiment == Experiment::Decay && grid.is_radial() && grid.len() <= ORACLE_MAX_NODES {
        match linear_spectrum(grid, &ss, params.mu, params.lambda, Some((&prep.q0, &prep.u0))) {
            Ok(s) => (
                Some(Oracle {
                    full_abscissa: s.full_abscissa,
                    excited_abscissa: s.excited_abscissa,
                    predicted_sigma: s.excited_abscissa.map(|a| -2.0 * a),
                    invariants: s.invariants,
                }),
                None,
            ),
            Err(err) => (None, Some(err.to_string())),
        }
    } else {
        (None, None)
    };
    let first = &traj.snapshots[0];
    let last = traj.last_state().unwrap_or(first);
    let summary = TrajectorySummary {
        steady: SteadySummary::new(&ss),
        steps: traj.records.len() - 1,
        t_final,
        rows: rows.len(),
        fit_window: window,
        fit,
        fit_error,
        energy_initial: energy_functionals(grid, first, &ss).map_err(fail)?,
        energy_final: energy_functionals(grid, last, &ss).map_err(fail)?,
        constants: constants(grid, &ss, cfg, &traj).map_err(fail)?,
        oracle,
        oracle_error,
    };
    write_summary(cfg, experiment, out, summary).map_err(fail)?;
    Ok(())
}

fn run_elliptic(cfg: &RunConfig, prep: &Prepared, out: &Path) -> std::result::Result<(), RunFailure> {
    let grid = &prep.grid;
    let params = cfg.scheme_params();
    let ss = steady(cfg, prep)?;
    let s0 = PerturbationState::from_fields(grid, &ss, &params, prep.q0.clone(), prep.u0.clone()).map_err(as_config)?;
    let (neumann_estimate, neumann_iterations) = if s0.q.max_abs() > 0.0 {
        let p = NeumannProblem::homogeneous(grid, s0.q.clone())?;
        let sol = solve_neumann_poisson(&p)?;
        (optional(neumann_estimate_ratio(&p, &sol.v))?, Some(sol.iterations))
    } else {
        (None, None)
    };
    // operator-application oracle on the initial velocity, or a wall bubble
    let exact = if s0.u.max_abs() > 0.0 {
        s0.u.clone()
    } else {
        let bubble = bubble(grid);
        VectorField::from_fn(grid.len(), |i| [bubble.0[i], 0.0, 0.0])
    };
    let mut lame = LameProblem::new(grid, ss.rho.clone(), params.mu, params.lambda, VectorField::zeros(grid.len()), params.dt)?;
    lame.rhs = lame.apply(&exact)?;
    let recovered = solve_lame_dirichlet(&lame)?;
    let summary = EllipticSummary {
        steady: SteadySummary::new(&ss),
        elliptic_estimate: optional(verify_elliptic_estimate(grid, &s0, &ss, &params))?,
        stokes_estimate: optional(verify_stokes_estimate(grid, &s0, &ss, &params))?,
        neumann_estimate,
        neumann_iterations,
        lame_recovery_error: recovered.sub(&exact).max_abs(),
        imp1_ratio: optional(imp1_ratio(grid, &s0))?,
    };
    write_summary(cfg, Experiment::VerifyElliptic, out, summary)?;
    Ok(())
}

/// Smooth field vanishing on every wall.
fn bubble(grid: &Grid) -> ScalarField {
    use std::f64::consts::PI;
    match &grid.spec {
        DomainSpec::Annulus { r0, r1, .. } => {
            let radius = grid.radius();
            ScalarField::from_fn(grid.len(), |i| (PI * (radius[i] - r0) / (r1 - r0)).sin())
        }
        DomainSpec::Box { lengths, walls, .. } => grid.sample(|x| {
            (0..3)
                .filter(|&a| walls[a])
                .map(|a| (PI * x[a] / lengths[a]).sin())
                .product()
        }),
    }
}

fn run_geometry(cfg: &RunConfig, out: &Path) -> std::result::Result<(), RunFailure> {
    let report = geometry_report(&cfg.domain, &GEOMETRY_LEVELS, &FRENET_STEPS, cfg.seed)?;
    let orders = report
        .charts
        .iter()
        .map(|c| ChartOrders {
            frenet: observed_orders(&c.frenet_fd),
            chain_rule: observed_orders(&c.chain_rule),
            cross_product: observed_orders(&c.cross_product),
            gradient_reconstruction: observed_orders(&c.gradient_reconstruction),
        })
        .collect();
    write_summary(cfg, Experiment::GeometryCheck, out, GeometrySummary { report, orders })?;
    Ok(())
}
