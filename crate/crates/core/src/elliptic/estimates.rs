use serde::{Deserialize, Serialize};

use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::evolve::{nonlinear_terms, PerturbationState, SchemeParams};
use crate::field::{ScalarField, VectorField};
use crate::steady::SteadyState;

const DEGENERATE: f64 = 1e-14;

/// Measured left and right sides of an a priori estimate; `ratio` is the
/// smallest constant the state demands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRatio {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Right-hand terms in the order they are summed.
    pub rhs_terms: Vec<(String, f64)>,
}

fn scalar_sq(grid: &Grid, f: &ScalarField, m: usize) -> Result<Vec<f64>> {
    Ok(grid.scalar_derivative_norms(f, m)?.iter().map(|d| grid.integrate(d)).collect())
}

fn vector_sq(grid: &Grid, u: &VectorField, m: usize) -> Result<Vec<f64>> {
    Ok(grid.vector_derivative_norms(u, m)?.iter().map(|d| grid.integrate(d)).collect())
}

fn finish(lhs: f64, rhs_terms: Vec<(&str, f64)>) -> Result<EstimateRatio> {
    let rhs: f64 = rhs_terms.iter().map(|(_, v)| v).sum();
    if !(rhs >= DEGENERATE) {
        return Err(Error::DegenerateState);
    }
    Ok(EstimateRatio {
        lhs,
        rhs,
        ratio: lhs / rhs,
        rhs_terms: rhs_terms.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
    })
}

/// `|D^2 u|^2 / (|u_t|^2 + |q u_t|^2 + |grad q|^2 + |q|^2 + |grad phi|^2 + |f|^2)`.
pub fn verify_elliptic_estimate(
    grid: &Grid,
    state: &PerturbationState,
    steady: &SteadyState,
    params: &SchemeParams,
) -> Result<EstimateRatio> {
    let lhs = vector_sq(grid, &state.u, 2)?[2];
    let nl = nonlinear_terms(grid, state, steady, params)?;
    let q = scalar_sq(grid, &state.q, 1)?;
    let phi = scalar_sq(grid, &state.phi, 1)?;
    let rhs = vec![
        ("u_t", vector_sq(grid, &state.u_t, 0)?[0]),
        ("q_u_t", vector_sq(grid, &state.u_t.scaled_by(&state.q), 0)?[0]),
        ("grad_q", q[1]),
        ("q", q[0]),
        ("grad_phi", phi[1]),
        ("f", vector_sq(grid, &nl.f, 0)?[0]),
    ];
    finish(lhs, rhs)
}

/// `(|D^2 u|^2 + |D(gamma rho~^(gamma-2) q - phi)|^2)
///  / (|q_t|_1^2 + |u|_1^2 + |g0|_1^2 + |u_t|^2 + |g|^2)`.
pub fn verify_stokes_estimate(
    grid: &Grid,
    state: &PerturbationState,
    steady: &SteadyState,
    params: &SchemeParams,
) -> Result<EstimateRatio> {
    let gamma = steady.gamma;
    let pot = state
        .q
        .zip_map(&steady.rho, |q, r| gamma * r.powf(gamma - 2.0) * q)
        .sub(&state.phi);
    let lhs = vector_sq(grid, &state.u, 2)?[2] + scalar_sq(grid, &pot, 1)?[1];
    let nl = nonlinear_terms(grid, state, steady, params)?;
    let sum = |v: Vec<f64>| v.iter().sum::<f64>();
    let rhs = vec![
        ("q_t", sum(scalar_sq(grid, &state.q_t, 1)?)),
        ("u", sum(vector_sq(grid, &state.u, 1)?)),
        ("g0", sum(scalar_sq(grid, &nl.g0, 1)?)),
        ("u_t", vector_sq(grid, &state.u_t, 0)?[0]),
        ("g", vector_sq(grid, &nl.g, 0)?[0]),
    ];
    finish(lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, DomainSpec};
    use crate::evolve::{build_initial, InitialCondition};
    use crate::steady::{mode_shape, solve_steady, BackgroundProfile};

    fn setup(n: usize) -> (Grid, SteadyState, SchemeParams) {
        let g = build_grid(&DomainSpec::radial_annulus(1.0, 2.0, n)).unwrap();
        let bg = BackgroundProfile::single_mode(&g, 0.2, 1).unwrap();
        let ss = solve_steady(&bg, 5.0 / 3.0, &g, None).unwrap();
        let p = SchemeParams { dt: 1e-3, mu: 1.0, lambda: 0.0, gamma: 5.0 / 3.0, t_end: 0.0, stride: 1 };
        (g, ss, p)
    }

    #[test]
    fn zero_state_is_degenerate() {
        let (g, ss, p) = setup(32);
        let z = PerturbationState::zero(32);
        assert_eq!(verify_elliptic_estimate(&g, &z, &ss, &p), Err(Error::DegenerateState));
        assert_eq!(verify_stokes_estimate(&g, &z, &ss, &p), Err(Error::DegenerateState));
    }

    #[test]
    fn density_only_state_sees_the_potential_combination() {
        let (g, ss, p) = setup(48);
        let q = mode_shape(&g, 2).scaled(1e-3);
        let s = PerturbationState::from_fields(&g, &ss, &p, q, VectorField::zeros(48)).unwrap();
        let r = verify_stokes_estimate(&g, &s, &ss, &p).unwrap();
        let pot = s.q.zip_map(&ss.rho, |q, r| ss.gamma * r.powf(ss.gamma - 2.0) * q).sub(&s.phi);
        let expect = scalar_sq(&g, &pot, 1).unwrap()[1];
        assert_eq!(r.lhs, expect);
        assert!(r.ratio.is_finite() && r.ratio > 0.0);
        let e = verify_elliptic_estimate(&g, &s, &ss, &p).unwrap();
        assert_eq!(e.lhs, 0.0);
    }

    fn max_ratios(n: usize) -> (f64, f64) {
        let (g, ss, p) = setup(n);
        let ic = InitialCondition::RandomSmooth { amplitude: 1e-3, modes: 3, velocity: true };
        let mut out = (0.0f64, 0.0f64);
        for seed in 0..20 {
            let (q, u) = build_initial(&g, &ic, seed).unwrap();
            let s = PerturbationState::from_fields(&g, &ss, &p, q, u).unwrap();
            out.0 = out.0.max(verify_elliptic_estimate(&g, &s, &ss, &p).unwrap().ratio);
            out.1 = out.1.max(verify_stokes_estimate(&g, &s, &ss, &p).unwrap().ratio);
        }
        out
    }

    #[test]
    fn random_state_ratios_are_stable_under_refinement() {
        let (e1, s1) = max_ratios(64);
        let (e2, s2) = max_ratios(128);
        assert!((e1 - e2).abs() < 0.25 * e2, "{e1} {e2}");
        assert!((s1 - s2).abs() < 0.25 * s2, "{s1} {s2}");
    }
}
