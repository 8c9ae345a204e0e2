//! Perturbation dynamics about a steady state.
//!
//! The density perturbation is advanced explicitly in conservative form, the
//! potential follows from a Neumann solve, and the velocity takes an implicit
//! viscous step with every other force explicit and the density lagged.

mod initial;
mod oracle;
mod terms;

use serde::{Deserialize, Serialize};

pub use initial::{build_initial, InitialCondition};
pub use oracle::{linear_spectrum, linearized_operator, modal_expansion, LinearSpectrum, ModalExpansion};
pub use terms::{enthalpy_remainder, nonlinear_terms, pressure_remainder, time_derivatives, NonlinearTerms};

use crate::domain::Grid;
use crate::elliptic::{solve_lame_dirichlet, solve_neumann_poisson, LameProblem, NeumannProblem};
use crate::energy;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::steady::SteadyState;

const CFL: f64 = 0.4;
/// Coefficient `c` of the density smoothing `c h^2 Lap q` in the continuity
/// update. Collocated centered differences leave odd-even density patterns
/// undamped (one of them exactly invariant); this damps them at rate `~4c`
/// and is consistent at second order.
pub const DENSITY_SMOOTHING: f64 = 1.0;
/// Tolerance on `|int q0|` relative to `1 + int |q0|`.
const MASS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeParams {
    pub dt: f64,
    pub mu: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub t_end: f64,
    pub stride: usize,
}

impl SchemeParams {
    pub fn validate(&self) -> Result<()> {
        crate::elliptic::check_viscosity(self.mu, self.lambda)?;
        crate::steady::check_gamma(self.gamma)?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameters(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameters(format!("end time must be nonnegative, got {}", self.t_end)));
        }
        if self.stride == 0 {
            return Err(Error::InvalidParameters("stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationState {
    pub t: f64,
    pub q: ScalarField,
    pub u: VectorField,
    pub phi: ScalarField,
    pub q_t: ScalarField,
    pub u_t: VectorField,
}

impl PerturbationState {
    pub fn zero(n: usize) -> Self {
        Self {
            t: 0.0,
            q: ScalarField::zeros(n),
            u: VectorField::zeros(n),
            phi: ScalarField::zeros(n),
            q_t: ScalarField::zeros(n),
            u_t: VectorField::zeros(n),
        }
    }

    /// Completes `(q, u)` with the potential and the equation time derivatives.
    /// `u` is set to zero on walls; `q` must already have zero mean.
    pub fn from_fields(
        grid: &Grid,
        steady: &SteadyState,
        params: &SchemeParams,
        q: ScalarField,
        mut u: VectorField,
    ) -> Result<Self> {
        if q.len() != grid.len() || u.len() != grid.len() {
            return Err(Error::Precondition("field length does not match grid".into()));
        }
        let mass = grid.integrate(&q);
        let scale = 1.0 + grid.integrate(&q.map(f64::abs));
        if mass.abs() > MASS_TOL * scale {
            return Err(Error::Precondition(format!("initial density perturbation has mass {mass:e}")));
        }
        let mut q = q;
        grid.project_mean_zero(&mut q);
        terms::zero_walls(grid, &mut u);
        let phi = poisson(grid, &q)?;
        let mut state = Self {
            t: 0.0,
            q,
            u,
            phi,
            q_t: ScalarField::zeros(grid.len()),
            u_t: VectorField::zeros(grid.len()),
        };
        let (q_t, u_t) = time_derivatives(grid, &state, steady, params)?;
        state.q_t = q_t;
        state.u_t = u_t;
        Ok(state)
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.u.is_finite() && self.phi.is_finite() && self.q_t.is_finite() && self.u_t.is_finite()
    }
}

fn poisson(grid: &Grid, q: &ScalarField) -> Result<ScalarField> {
    if q.max_abs() == 0.0 {
        return Ok(ScalarField::zeros(grid.len()));
    }
    Ok(solve_neumann_poisson(&NeumannProblem::homogeneous(grid, q.clone())?)?.v)
}

/// `0.4 h / max(|u| + sqrt(gamma rho~^(gamma-1)))`, capped by the explicit
/// smoothing bound.
pub fn cfl_limit(grid: &Grid, state: &PerturbationState, steady: &SteadyState) -> f64 {
    let gamma = steady.gamma;
    let speed = (0..grid.len())
        .map(|i| {
            let u = crate::field::norm3(state.u.0[i]);
            u + (gamma * steady.rho.0[i].powf(gamma - 1.0)).sqrt()
        })
        .fold(0.0, f64::max);
    let dims = if grid.is_radial() { 1.0 } else { 3.0 };
    (CFL * grid.h_min() / speed).min(0.25 / (dims * DENSITY_SMOOTHING))
}

fn check_consistency(steady: &SteadyState, params: &SchemeParams) -> Result<()> {
    if steady.gamma != params.gamma {
        return Err(Error::Precondition(format!(
            "steady state has gamma {} but scheme uses {}",
            steady.gamma, params.gamma
        )));
    }
    Ok(())
}

pub fn imex_step(grid: &Grid, state: &PerturbationState, steady: &SteadyState, params: &SchemeParams) -> Result<PerturbationState> {
    imex_step_dt(grid, state, steady, params, params.dt)
}

fn imex_step_dt(
    grid: &Grid,
    state: &PerturbationState,
    steady: &SteadyState,
    params: &SchemeParams,
    dt: f64,
) -> Result<PerturbationState> {
    check_consistency(steady, params)?;
    let limit = cfl_limit(grid, state, steady);
    if dt > limit {
        return Err(Error::CflViolation { dt, limit });
    }
    let rho_old = terms::density(state, steady)?;

    // (i)-(ii) conservative explicit density update, round-off mass removed
    let q_rate = grid
        .conservative_divergence(&state.u.scaled_by(&rho_old))?
        .sub(&terms::smoothing(grid, &state.q)?);
    let mut q = state.q.sub(&q_rate.scaled(dt));
    grid.project_mean_zero(&mut q);
    let rho_min = q.add(&steady.rho).min();
    if !(rho_min > 0.0) {
        return Err(Error::NonpositiveDensity { min: rho_min });
    }

    // (iii) potential from the updated density
    let phi = poisson(grid, &q)?;

    // (iv) implicit viscous step with lagged density
    let h = pressure_remainder(&q, &steady.rho, steady.gamma);
    let f = grid
        .advect(&state.u, &state.u)?
        .scaled_by(&rho_old)
        .scaled(-1.0)
        .add(&grid.gradient(&phi)?.scaled_by(&q))
        .sub(&grid.gradient(&h)?);
    let explicit = terms::linear_force(grid, &q, &phi, steady)?.add(&f);
    let rhs = state.u.scaled_by(&rho_old).add(&explicit.scaled(dt));
    let mut u = if rhs.max_abs() == 0.0 {
        VectorField::zeros(grid.len())
    } else {
        let problem = LameProblem::new(grid, rho_old, params.mu, params.lambda, rhs, dt)?;
        solve_lame_dirichlet(&problem)?
    };
    // (v)
    terms::zero_walls(grid, &mut u);

    // (vi)
    let mut next = PerturbationState {
        t: state.t + dt,
        q,
        u,
        phi,
        q_t: ScalarField::zeros(grid.len()),
        u_t: VectorField::zeros(grid.len()),
    };
    let (q_t, u_t) = time_derivatives(grid, &next, steady, params)?;
    next.q_t = q_t;
    next.u_t = u_t;
    if !next.is_finite() {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: f64::NAN,
        });
    }
    Ok(next)
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    pub dissipation: f64,
    /// `int q dx`.
    pub mass_defect: f64,
    /// `dt / cfl_limit` before the step that produced this state.
    pub cfl_ratio: f64,
    /// `|grad phi_t| / |grad u|`; absent when `grad u` vanishes.
    pub imp1_ratio: Option<f64>,
    /// Basic energy identity residual of the step that produced this state.
    pub identity_residual: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrajectoryFailure {
    pub step: usize,
    pub error: Error,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    /// States at steps `0, stride, 2 stride, ...` and the final state.
    pub snapshots: Vec<PerturbationState>,
    pub failure: Option<TrajectoryFailure>,
}

impl Trajectory {
    pub fn last_state(&self) -> Option<&PerturbationState> {
        self.snapshots.last()
    }

    /// Records at snapshot steps.
    pub fn stride_records(&self, stride: usize) -> Vec<&StepRecord> {
        let last = self.records.len().saturating_sub(1);
        self.records
            .iter()
            .filter(|r| r.step % stride == 0 || r.step == last)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TrajectoryOptions {
    /// Bound on `|(q0, u0)|_3`; checked when present.
    pub small_data_bound: Option<f64>,
    /// Skip the per-step `imp1` and identity diagnostics.
    pub light: bool,
}

fn record(
    grid: &Grid,
    steady: &SteadyState,
    params: &SchemeParams,
    step: usize,
    state: &PerturbationState,
    prev: Option<&PerturbationState>,
    cfl_ratio: f64,
    light: bool,
) -> Result<StepRecord> {
    let report = energy::energy_functionals(grid, state, steady)?;
    let (imp1_ratio, identity_residual) = if light {
        (None, None)
    } else {
        let imp1 = match energy::imp1_ratio(grid, state) {
            Ok(r) => Some(r),
            Err(Error::ZeroDenominator) => None,
            Err(e) => return Err(e),
        };
        let ident = match prev {
            Some(p) => Some(energy::energy_identity_residual(grid, steady, params, p, state)?),
            None => None,
        };
        (imp1, ident)
    };
    Ok(StepRecord {
        step,
        t: state.t,
        energy: report.e,
        dissipation: report.d,
        mass_defect: grid.integrate(&state.q),
        cfl_ratio,
        imp1_ratio,
        identity_residual,
    })
}

pub fn run_trajectory(
    grid: &Grid,
    initial: &PerturbationState,
    steady: &SteadyState,
    params: &SchemeParams,
    options: TrajectoryOptions,
) -> Result<Trajectory> {
    params.validate()?;
    check_consistency(steady, params)?;
    let mass = grid.integrate(&initial.q);
    if mass.abs() > MASS_TOL * (1.0 + grid.integrate(&initial.q.map(f64::abs))) {
        return Err(Error::Precondition(format!("initial density perturbation has mass {mass:e}")));
    }
    if let Some(delta) = options.small_data_bound {
        let size = (energy::sobolev_norm(grid, &initial.q, 3)?.powi(2) + energy::sobolev_norm_vector(grid, &initial.u, 3)?.powi(2)).sqrt();
        if size > delta {
            return Err(Error::Precondition(format!("initial data norm {size:e} exceeds small-data bound {delta:e}")));
        }
    }
    let steps = params.steps();
    let mut records = vec![record(grid, steady, params, 0, initial, None, 0.0, options.light)?];
    let mut snapshots = vec![initial.clone()];
    let mut state = initial.clone();
    let mut failure = None;
    for step in 1..=steps {
        // the last step lands exactly on t_end
        let dt = params.dt.min(params.t_end - state.t).max(0.0);
        if dt <= 0.0 {
            break;
        }
        let cfl_ratio = dt / cfl_limit(grid, &state, steady);
        let next = match imex_step_dt(grid, &state, steady, params, dt) {
            Ok(s) => s,
            Err(error) => {
                failure = Some(TrajectoryFailure { step, error });
                break;
            }
        };
        match record(grid, steady, params, step, &next, Some(&state), cfl_ratio, options.light) {
            Ok(r) => records.push(r),
            Err(error) => {
                failure = Some(TrajectoryFailure { step, error });
                break;
            }
        }
        state = next;
        if step % params.stride == 0 {
            snapshots.push(state.clone());
        }
    }
    let last_step = records.len() - 1;
    if last_step % params.stride != 0 {
        snapshots.push(state);
    }
    Ok(Trajectory {
        records,
        snapshots,
        failure,
    })
}
