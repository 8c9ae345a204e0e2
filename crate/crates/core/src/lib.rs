//! Steady states, perturbation dynamics and energy diagnostics for the
//! compressible Navier-Stokes-Poisson system on bounded domains.
//!
//! The crate computes steady states `(rho~, 0, Phi~)` for a given positive
//! background profile, evolves perturbations `(q, u, phi)` under no-slip and
//! zero-flux boundary conditions with an IMEX scheme, and measures the energy
//! `E(t)`, dissipation `D(t)`, localized norms and decay rates along the way.

pub mod domain;
pub mod energy;
pub mod evolve;
pub mod elliptic;
pub mod error;
pub mod fd;
pub mod field;
mod jet;
pub mod ops;
pub mod steady;

pub use error::{Error, Result};
