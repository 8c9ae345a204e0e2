//! Discrete Sobolev norms, the energy and dissipation functionals, localized
//! norms, the basic energy identity, and exponential decay fits.

mod cutoff;
mod fit;

use serde::{Deserialize, Serialize};

pub use cutoff::{localized_norms, ChartLocalized, CutoffSystem, LocalizedReport};
pub use fit::{decay_fit, decay_fit_window, DecayFit};

use crate::domain::Grid;
use crate::elliptic::{solve_neumann_poisson, NeumannProblem};
use crate::error::{Error, Result};
use crate::evolve::{nonlinear_terms, PerturbationState, SchemeParams};
use crate::field::{ScalarField, VectorField};
use crate::steady::SteadyState;

const MAX_ORDER: usize = 4;

fn check_order(m: usize) -> Result<()> {
    if m > MAX_ORDER {
        return Err(Error::InvalidParameters(format!("norm order {m} exceeds {MAX_ORDER}")));
    }
    Ok(())
}

/// `int |D^l f|^2` for `l = 0..=m`.
pub fn scalar_order_integrals(grid: &Grid, f: &ScalarField, m: usize) -> Result<Vec<f64>> {
    check_order(m)?;
    Ok(grid.scalar_derivative_norms(f, m)?.iter().map(|d| grid.integrate(d)).collect())
}

/// `int |D^l u|^2` for `l = 0..=m`.
pub fn vector_order_integrals(grid: &Grid, u: &VectorField, m: usize) -> Result<Vec<f64>> {
    check_order(m)?;
    Ok(grid.vector_derivative_norms(u, m)?.iter().map(|d| grid.integrate(d)).collect())
}

/// `(sum_{l <= m} |D^l f|^2)^(1/2)`.
pub fn sobolev_norm(grid: &Grid, f: &ScalarField, m: usize) -> Result<f64> {
    Ok(scalar_order_integrals(grid, f, m)?.iter().sum::<f64>().sqrt())
}

pub fn sobolev_norm_vector(grid: &Grid, u: &VectorField, m: usize) -> Result<f64> {
    Ok(vector_order_integrals(grid, u, m)?.iter().sum::<f64>().sqrt())
}

/// `|grad f|_m^2 = sum_{l = 1..=m+1} int |D^l f|^2`.
pub fn gradient_norm_sq(grid: &Grid, f: &ScalarField, m: usize) -> Result<f64> {
    Ok(scalar_order_integrals(grid, f, m + 1)?.iter().skip(1).sum())
}

/// Squared norms entering the energy and dissipation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyTerms {
    pub q3: f64,
    pub u3: f64,
    pub grad_phi3: f64,
    pub q_t2: f64,
    pub u_t1: f64,
    pub u4: f64,
    pub u_t2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyReport {
    pub e: f64,
    pub d: f64,
    pub terms: EnergyTerms,
}

/// `E = |(q, u, grad phi)|_3^2 + |q_t|_2^2 + |u_t|_1^2` and
/// `D = |(q, grad phi)|_3^2 + |u|_4^2 + |q_t|_2^2 + |u_t|_2^2`.
pub fn energy_functionals(grid: &Grid, state: &PerturbationState, _steady: &SteadyState) -> Result<EnergyReport> {
    let q = scalar_order_integrals(grid, &state.q, 3)?;
    let u = vector_order_integrals(grid, &state.u, 4)?;
    let phi = scalar_order_integrals(grid, &state.phi, 4)?;
    let qt = scalar_order_integrals(grid, &state.q_t, 2)?;
    let ut = vector_order_integrals(grid, &state.u_t, 2)?;
    let terms = EnergyTerms {
        q3: q.iter().sum(),
        u3: u[..4].iter().sum(),
        grad_phi3: phi[1..].iter().sum(),
        q_t2: qt.iter().sum(),
        u_t1: ut[..2].iter().sum(),
        u4: u.iter().sum(),
        u_t2: ut.iter().sum(),
    };
    Ok(EnergyReport {
        e: terms.q3 + terms.u3 + terms.grad_phi3 + terms.q_t2 + terms.u_t1,
        d: terms.q3 + terms.grad_phi3 + terms.u4 + terms.q_t2 + terms.u_t2,
        terms,
    })
}

/// `1/2 int (rho |u|^2 + gamma rho~^(gamma-2) q^2 + |grad phi|^2)`.
pub fn basic_energy(grid: &Grid, state: &PerturbationState, steady: &SteadyState) -> Result<f64> {
    let gamma = steady.gamma;
    let rho = state.q.add(&steady.rho);
    let kin = state.u.dot(&state.u).mul(&rho);
    let pot = state.q.zip_map(&steady.rho, |q, r| gamma * r.powf(gamma - 2.0) * q * q);
    let g = grid.gradient(&state.phi)?;
    Ok(0.5 * grid.integrate(&kin.add(&pot).add(&g.dot(&g))))
}

fn dissipation_and_source(grid: &Grid, state: &PerturbationState, steady: &SteadyState, params: &SchemeParams) -> Result<(f64, f64)> {
    let gamma = steady.gamma;
    let du = grid.vector_derivative_norms(&state.u, 1)?;
    let div = grid.divergence(&state.u)?;
    let diss = params.mu * grid.integrate(&du[1]) + (params.mu + params.lambda) * grid.integrate(&div.mul(&div));
    let nl = nonlinear_terms(grid, state, steady, params)?;
    // A0 = (q grad phi - grad h) . u + (gamma rho~^(gamma-2) q - phi) f0
    let force = grid.gradient(&state.phi)?.scaled_by(&state.q).sub(&grid.gradient(&nl.h)?);
    let weight = state
        .q
        .zip_map(&steady.rho, |q, r| gamma * r.powf(gamma - 2.0) * q)
        .sub(&state.phi);
    let a0 = force.dot(&state.u).add(&weight.mul(&nl.f0));
    Ok((diss, grid.integrate(&a0)))
}

/// Residual of the basic energy identity across one step: the difference
/// quotient of the basic energy plus the trapezoidal dissipation minus the
/// trapezoidal source.
pub fn energy_identity_residual(
    grid: &Grid,
    steady: &SteadyState,
    params: &SchemeParams,
    before: &PerturbationState,
    after: &PerturbationState,
) -> Result<f64> {
    let dt = after.t - before.t;
    if !(dt > 0.0) {
        return Err(Error::Precondition("states must be consecutive in time".into()));
    }
    let e0 = basic_energy(grid, before, steady)?;
    let e1 = basic_energy(grid, after, steady)?;
    let (d0, a0) = dissipation_and_source(grid, before, steady, params)?;
    let (d1, a1) = dissipation_and_source(grid, after, steady, params)?;
    Ok(((e1 - e0) / dt + 0.5 * (d0 + d1) - 0.5 * (a0 + a1)).abs())
}

/// `|grad phi_t| / |grad u|` with `Lap phi_t = q_t`, zero Neumann datum.
pub fn imp1_ratio(grid: &Grid, state: &PerturbationState) -> Result<f64> {
    let du = grid.vector_derivative_norms(&state.u, 1)?;
    let grad_u = grid.integrate(&du[1]).sqrt();
    if grad_u < 1e-14 {
        return Err(Error::ZeroDenominator);
    }
    let mut qt = state.q_t.clone();
    grid.project_mean_zero(&mut qt);
    let phi_t = if qt.max_abs() == 0.0 {
        ScalarField::zeros(grid.len())
    } else {
        solve_neumann_poisson(&NeumannProblem::homogeneous(grid, qt)?)?.v
    };
    let dphi = grid.scalar_derivative_norms(&phi_t, 1)?;
    Ok(grid.integrate(&dphi[1]).sqrt() / grad_u)
}
