use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::field::ScalarField;

use super::cg::pcg;

pub const NEUMANN_TOL: f64 = 1e-10;
const COMPAT_TOL: f64 = 1e-10;

/// `Lap v = f` in the domain, `dv/dnu = g` on the boundary.
///
/// `g` is a node field read only at boundary nodes.
#[derive(Debug, Clone)]
pub struct NeumannProblem<'a> {
    pub grid: &'a Grid,
    pub f: ScalarField,
    pub g: ScalarField,
}

#[derive(Debug, Clone)]
pub struct NeumannSolution {
    pub v: ScalarField,
    pub iterations: usize,
    pub residual: f64,
    /// `int f - int g` before projection.
    pub defect: f64,
}

impl<'a> NeumannProblem<'a> {
    pub fn new(grid: &'a Grid, f: ScalarField, g: ScalarField) -> Result<Self> {
        if f.len() != grid.len() || g.len() != grid.len() {
            return Err(Error::Precondition("field length does not match grid".into()));
        }
        Ok(Self { grid, f, g })
    }

    /// Homogeneous Neumann datum.
    pub fn homogeneous(grid: &'a Grid, f: ScalarField) -> Result<Self> {
        let g = ScalarField::zeros(grid.len());
        Self::new(grid, f, g)
    }

    pub fn defect(&self) -> f64 {
        self.grid.integrate(&self.f) - self.grid.boundary_integrate(&self.g)
    }

    pub fn compatibility_threshold(&self) -> f64 {
        COMPAT_TOL * (self.grid.l2(&self.f) + self.grid.boundary_l2(&self.g) + 1.0)
    }
}

pub fn solve_neumann_poisson(p: &NeumannProblem) -> Result<NeumannSolution> {
    let grid = p.grid;
    let defect = p.defect();
    if !defect.is_finite() || defect.abs() > p.compatibility_threshold() {
        return Err(Error::Incompatible { defect });
    }
    let vol = grid.volume();
    let n = grid.len();
    // system -W L0 v = A g - V f with f shifted to remove the residual defect
    let b: Vec<f64> = (0..n)
        .map(|i| {
            let fi = p.f.0[i] - defect / vol;
            p.g.0[i] * grid.area_weights[i] - grid.volume_weights[i] * fi
        })
        .collect();
    let diag: Vec<f64> = grid.weighted_laplacian_diag()?.into_iter().map(|d| -d).collect();
    let project = |r: &mut [f64]| {
        let s: f64 = r.iter().sum::<f64>() / n as f64;
        r.iter_mut().for_each(|x| *x -= s);
    };
    let out = pcg(
        |x, y| {
            grid.weighted_laplacian(x, y).expect("layout checked above");
            y.iter_mut().for_each(|v| *v = -*v);
        },
        &b,
        &diag,
        NEUMANN_TOL,
        10 * n,
        project,
    )?;
    let mut v = ScalarField(out.x);
    grid.project_mean_zero(&mut v);
    Ok(NeumannSolution {
        v,
        iterations: out.iterations,
        residual: out.residual,
        defect,
    })
}

/// `|grad v|_1 / (|f|_0 + |g|)` for a computed solution.
pub fn neumann_estimate_ratio(p: &NeumannProblem, v: &ScalarField) -> Result<f64> {
    let norms = p.grid.scalar_derivative_norms(v, 2)?;
    let grad_h1 = (p.grid.integrate(&norms[1]) + p.grid.integrate(&norms[2])).sqrt();
    let denom = p.grid.l2(&p.f) + p.grid.boundary_l2(&p.g);
    if denom < 1e-14 {
        return Err(Error::DegenerateState);
    }
    Ok(grad_h1 / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, DomainSpec};
    use std::f64::consts::PI;

    fn manufactured_error(n: usize) -> f64 {
        let grid = build_grid(&DomainSpec::radial_annulus(1.0, 2.0, n)).unwrap();
        let exact = grid.sample(|x| (PI * (x[0] - 1.0)).cos());
        let mut f = grid.sample(|x| {
            let r = x[0];
            -PI * PI * (PI * (r - 1.0)).cos() - 2.0 / r * PI * (PI * (r - 1.0)).sin()
        });
        // the sampled right-hand side is compatible only to O(h^2)
        grid.project_mean_zero(&mut f);
        let p = NeumannProblem::homogeneous(&grid, f).unwrap();
        let sol = solve_neumann_poisson(&p).unwrap();
        let mut e = exact.clone();
        grid.project_mean_zero(&mut e);
        sol.v.sub(&e).max_abs()
    }

    #[test]
    fn zero_data_gives_zero() {
        let grid = build_grid(&DomainSpec::radial_annulus(1.0, 2.0, 32)).unwrap();
        let p = NeumannProblem::homogeneous(&grid, ScalarField::zeros(32)).unwrap();
        assert_eq!(solve_neumann_poisson(&p).unwrap().v.max_abs(), 0.0);
    }

    #[test]
    fn constant_source_is_incompatible() {
        let grid = build_grid(&DomainSpec::radial_annulus(1.0, 2.0, 32)).unwrap();
        let p = NeumannProblem::homogeneous(&grid, ScalarField::constant(32, 1.0)).unwrap();
        assert!(matches!(solve_neumann_poisson(&p), Err(Error::Incompatible { .. })));
    }

    #[test]
    fn manufactured_radial_solution_converges_at_second_order() {
        let errs: Vec<f64> = [64, 128, 256].iter().map(|&n| manufactured_error(n)).collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() <= 0.2, "{errs:?}");
        }
    }

    #[test]
    fn inhomogeneous_datum_reproduces_radial_quadratic() {
        // v = r^2: Lap v = 6, dv/dnu = -2 on r = 1 and 4 on r = 2
        let grid = build_grid(&DomainSpec::radial_annulus(1.0, 2.0, 40)).unwrap();
        let f = ScalarField::constant(40, 6.0);
        let g = grid.sample(|x| if x[0] < 1.5 { -2.0 } else { 4.0 });
        let p = NeumannProblem::new(&grid, f, g).unwrap();
        assert!(p.defect().abs() < 1e-12);
        let sol = solve_neumann_poisson(&p).unwrap();
        let mut e = grid.sample(|x| x[0] * x[0]);
        grid.project_mean_zero(&mut e);
        assert!(sol.v.sub(&e).max_abs() < 1e-8);
    }

    #[test]
    fn solution_is_mean_zero_and_satisfies_discrete_equation() {
        let grid = build_grid(&DomainSpec::unit_box(9)).unwrap();
        let mut f = grid.sample(|x| (3.0 * x[0]).sin() * (x[1] + x[2]));
        grid.project_mean_zero(&mut f);
        let p = NeumannProblem::homogeneous(&grid, f.clone()).unwrap();
        let sol = solve_neumann_poisson(&p).unwrap();
        assert!(grid.mean(&sol.v).abs() < 1e-12);
        let lap = grid.laplacian(&sol.v, None).unwrap();
        assert!(lap.sub(&f).max_abs() < 1e-7 * f.max_abs());
        assert!(neumann_estimate_ratio(&p, &sol.v).unwrap().is_finite());
    }
}
