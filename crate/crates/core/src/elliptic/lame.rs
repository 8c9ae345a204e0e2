use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};

use super::cg::pcg;

/// Relative residual target of the viscous solve. Tighter than the Poisson
/// target because the operator is stiffer by a factor `w / h^2`.
pub const LAME_TOL: f64 = 1e-13;

/// `(alpha - w (mu Lap + (mu + lambda) grad div)) u = rhs`, `u = 0` on walls.
#[derive(Debug, Clone)]
pub struct LameProblem<'a> {
    pub grid: &'a Grid,
    pub alpha: ScalarField,
    pub mu: f64,
    pub lambda: f64,
    pub rhs: VectorField,
    pub weight: f64,
}

impl<'a> LameProblem<'a> {
    pub fn new(
        grid: &'a Grid,
        alpha: ScalarField,
        mu: f64,
        lambda: f64,
        rhs: VectorField,
        weight: f64,
    ) -> Result<Self> {
        check_viscosity(mu, lambda)?;
        if alpha.len() != grid.len() || rhs.len() != grid.len() {
            return Err(Error::Precondition("field length does not match grid".into()));
        }
        if !(alpha.min() > 0.0) {
            return Err(Error::InvalidParameters(format!("mass coefficient must be positive, min {}", alpha.min())));
        }
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::InvalidParameters(format!("time-step weight must be nonnegative, got {weight}")));
        }
        Ok(Self {
            grid,
            alpha,
            mu,
            lambda,
            rhs,
            weight,
        })
    }

    /// Applies the operator, zeroing wall nodes.
    pub fn apply(&self, u: &VectorField) -> Result<VectorField> {
        let l = self.grid.lame(u, self.mu, self.lambda)?;
        Ok(VectorField::from_fn(u.len(), |i| {
            if self.grid.boundary[i] {
                [0.0; 3]
            } else {
                std::array::from_fn(|c| self.alpha.0[i] * u.0[i][c] - self.weight * l.0[i][c])
            }
        }))
    }
}

pub(crate) fn check_viscosity(mu: f64, lambda: f64) -> Result<()> {
    if !(mu > 0.0) || !(lambda + 2.0 * mu / 3.0 >= 0.0) || !lambda.is_finite() || !mu.is_finite() {
        return Err(Error::InvalidParameters(format!(
            "viscosities need mu > 0 and lambda + 2 mu / 3 >= 0, got mu = {mu}, lambda = {lambda}"
        )));
    }
    Ok(())
}

pub fn solve_lame_dirichlet(p: &LameProblem) -> Result<VectorField> {
    let grid = p.grid;
    let n = grid.len();
    let nc = grid.vector_components();
    let active = |i: usize, c: usize| !grid.boundary[i] && c < nc;
    if p.weight == 0.0 {
        return Ok(VectorField::from_fn(n, |i| {
            std::array::from_fn(|c| if active(i, c) { p.rhs.0[i][c] / p.alpha.0[i] } else { 0.0 })
        }));
    }
    let wts = grid.lame_weights()?;
    let ldiag = grid.lame_diag(p.mu, p.lambda)?;
    let idx = |i: usize, c: usize| 3 * i + c;
    let mut b = vec![0.0; 3 * n];
    let mut diag = vec![1.0; 3 * n];
    for i in 0..n {
        for c in 0..3 {
            if active(i, c) {
                b[idx(i, c)] = wts[i] * p.rhs.0[i][c];
                diag[idx(i, c)] = wts[i] * (p.alpha.0[i] - p.weight * ldiag[i][c]);
            }
        }
    }
    let unflatten = |x: &[f64]| VectorField::from_fn(n, |i| std::array::from_fn(|c| if active(i, c) { x[idx(i, c)] } else { 0.0 }));
    let out = pcg(
        |x, y| {
            let u = unflatten(x);
            let l = grid.lame(&u, p.mu, p.lambda).expect("layout checked above");
            for i in 0..n {
                for c in 0..3 {
                    let k = idx(i, c);
                    y[k] = if active(i, c) {
                        wts[i] * (p.alpha.0[i] * x[k] - p.weight * l.0[i][c])
                    } else {
                        x[k]
                    };
                }
            }
        },
        &b,
        &diag,
        LAME_TOL,
        10 * 3 * n,
        |_| {},
    )?;
    Ok(unflatten(&out.x))
}
