//! Neumann Poisson and implicit Lame solves, plus the a priori estimate
//! ratios for the velocity and the pressure-potential combination.

pub(crate) mod cg;
mod estimates;
mod lame;
mod neumann;

pub use estimates::{verify_elliptic_estimate, verify_stokes_estimate, EstimateRatio};
pub use lame::{solve_lame_dirichlet, LameProblem, LAME_TOL};
pub use neumann::{neumann_estimate_ratio, solve_neumann_poisson, NeumannProblem, NeumannSolution, NEUMANN_TOL};

pub(crate) use lame::check_viscosity;
