use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::steady::{enthalpy, SteadyState};

use super::{PerturbationState, SchemeParams};

/// Quadratic remainders of the perturbation system.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearTerms {
    /// `-div(q u)`.
    pub f0: ScalarField,
    /// `-rho (u . grad) u + q grad phi - grad h(q)`.
    pub f: VectorField,
    /// `(q + rho~)^gamma - rho~^gamma - gamma rho~^(gamma-1) q`.
    pub h: ScalarField,
    /// `-q div u`.
    pub g0: ScalarField,
    /// `-(u . grad) u + mu (1/rho - 1/rho~) Lap u + (mu + lambda)(1/rho - 1/rho~) grad div u + k(q)`.
    pub g: VectorField,
    /// `-grad(H(rho) - H(rho~) - H'(rho~) q)`.
    pub k: VectorField,
}

pub(crate) fn density(state: &PerturbationState, steady: &SteadyState) -> Result<ScalarField> {
    let rho = state.q.add(&steady.rho);
    let min = rho.min();
    if !(min > 0.0) {
        return Err(Error::NonpositiveDensity { min });
    }
    Ok(rho)
}

/// `h(q)`, evaluated exactly; `q^2` at `gamma = 2`.
pub fn pressure_remainder(q: &ScalarField, rho_t: &ScalarField, gamma: f64) -> ScalarField {
    if gamma == 2.0 {
        return q.mul(q);
    }
    q.zip_map(rho_t, |q, r| (q + r).powf(gamma) - r.powf(gamma) - gamma * r.powf(gamma - 1.0) * q)
}

/// `H(rho) - H(rho~) - H'(rho~) q`; identically zero at `gamma = 2`.
pub fn enthalpy_remainder(q: &ScalarField, rho_t: &ScalarField, gamma: f64) -> ScalarField {
    if gamma == 2.0 {
        return ScalarField::zeros(q.len());
    }
    q.zip_map(rho_t, |q, r| {
        let slope = if gamma == 1.0 { 1.0 / r } else { gamma * r.powf(gamma - 2.0) };
        enthalpy(q + r, gamma) - enthalpy(r, gamma) - slope * q
    })
}

pub fn nonlinear_terms(
    grid: &Grid,
    state: &PerturbationState,
    steady: &SteadyState,
    params: &SchemeParams,
) -> Result<NonlinearTerms> {
    let rho = density(state, steady)?;
    let gamma = steady.gamma;
    let (q, u) = (&state.q, &state.u);
    let f0 = grid.conservative_divergence(&u.scaled_by(q))?.scaled(-1.0);
    let h = pressure_remainder(q, &steady.rho, gamma);
    let adv = grid.advect(u, u)?;
    let f = adv
        .scaled_by(&rho)
        .scaled(-1.0)
        .add(&grid.gradient(&state.phi)?.scaled_by(q))
        .sub(&grid.gradient(&h)?);
    let g0 = q.mul(&grid.divergence(u)?).scaled(-1.0);
    let k = grid.gradient(&enthalpy_remainder(q, &steady.rho, gamma))?.scaled(-1.0);
    let inv_diff = rho.zip_map(&steady.rho, |r, rt| 1.0 / r - 1.0 / rt);
    let g = adv
        .scaled(-1.0)
        .add(&grid.vector_laplacian(u)?.scaled(params.mu).scaled_by(&inv_diff))
        .add(&grid.grad_div(u)?.scaled(params.mu + params.lambda).scaled_by(&inv_diff))
        .add(&k);
    Ok(NonlinearTerms { f0, f, h, g0, g, k })
}

/// Linear part of the momentum force: `-grad(gamma rho~^(gamma-1) q) + rho~ grad phi + q grad Phi~`.
pub(crate) fn linear_force(grid: &Grid, q: &ScalarField, phi: &ScalarField, steady: &SteadyState) -> Result<VectorField> {
    let gamma = steady.gamma;
    let pq = q.zip_map(&steady.rho, |q, r| gamma * r.powf(gamma - 1.0) * q);
    Ok(grid
        .gradient(&pq)?
        .scaled(-1.0)
        .add(&grid.gradient(phi)?.scaled_by(&steady.rho))
        .add(&grid.gradient(&steady.phi)?.scaled_by(q)))
}

/// `c h^2 Lap q` with zero flux through walls; integrates to zero.
pub(crate) fn smoothing(grid: &Grid, q: &ScalarField) -> Result<ScalarField> {
    let h = grid.h_min();
    Ok(grid.laplacian(q, None)?.scaled(super::DENSITY_SMOOTHING * h * h))
}

pub(crate) fn zero_walls(grid: &Grid, u: &mut VectorField) {
    for (v, b) in u.0.iter_mut().zip(&grid.boundary) {
        if *b {
            *v = [0.0; 3];
        }
    }
}

/// `(q_t, u_t)` from the equations; `u_t` vanishes on walls.
pub fn time_derivatives(
    grid: &Grid,
    state: &PerturbationState,
    steady: &SteadyState,
    params: &SchemeParams,
) -> Result<(ScalarField, VectorField)> {
    let nl = nonlinear_terms(grid, state, steady, params)?;
    time_derivatives_with(grid, state, steady, params, &nl)
}

pub(crate) fn time_derivatives_with(
    grid: &Grid,
    state: &PerturbationState,
    steady: &SteadyState,
    params: &SchemeParams,
    nl: &NonlinearTerms,
) -> Result<(ScalarField, VectorField)> {
    let rho = density(state, steady)?;
    // f0 - div(rho~ u), both in conservative form, plus the smoothing
    let q_t = nl
        .f0
        .sub(&grid.conservative_divergence(&state.u.scaled_by(&steady.rho))?)
        .add(&smoothing(grid, &state.q)?);
    let force = grid
        .lame(&state.u, params.mu, params.lambda)?
        .add(&linear_force(grid, &state.q, &state.phi, steady)?)
        .add(&nl.f);
    let mut u_t = force.scaled_by(&rho.map(|r| 1.0 / r));
    zero_walls(grid, &mut u_t);
    Ok((q_t, u_t))
}
