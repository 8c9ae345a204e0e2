//! Steady states `(rho~, 0, Phi~)` for a positive background profile.
//!
//! With `s = Phi~ + c` the steady momentum balance integrates to
//! `rho~ = R(s)`, `R` the inverse enthalpy map, and the Poisson equation
//! becomes the semilinear Neumann problem `Lap s = R(s) - rho_bar`. Because
//! the discrete Laplacian has zero column sums, any solution already carries
//! the mass of `rho_bar`; the constant `c` is recovered as the mean of `s`.

use serde::{Deserialize, Serialize};

use crate::domain::Grid;
use crate::elliptic::cg::pcg;
use crate::error::{Error, Result};
use crate::field::ScalarField;

const NEWTON_MAX_ITER: usize = 60;
const MIN_STEP: f64 = 1e-4;
const INNER_TOL: f64 = 1e-13;

/// Enthalpy `H(rho)`: `gamma rho^(gamma-1) / (gamma-1)`, or `ln rho` when `gamma = 1`.
pub fn enthalpy(rho: f64, gamma: f64) -> f64 {
    if gamma == 1.0 {
        rho.ln()
    } else {
        gamma / (gamma - 1.0) * rho.powf(gamma - 1.0)
    }
}

/// Inverse of [`enthalpy`]; `None` outside its range.
pub fn inverse_enthalpy(s: f64, gamma: f64) -> Option<f64> {
    if gamma == 1.0 {
        let r = s.exp();
        (r > 0.0 && r.is_finite()).then_some(r)
    } else if s > 0.0 {
        let r = ((gamma - 1.0) * s / gamma).powf(1.0 / (gamma - 1.0));
        (r > 0.0 && r.is_finite()).then_some(r)
    } else {
        None
    }
}

fn inverse_enthalpy_slope(rho: f64, gamma: f64) -> f64 {
    rho.powf(2.0 - gamma) / gamma
}

pub fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 1.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameters(format!("adiabatic exponent must be >= 1, got {gamma}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundProfile {
    pub rho_bar: ScalarField,
    pub tag: String,
}

/// Mean-zero profile `cos(k pi s)` of the normalized wall-normal coordinate
/// (radius on an annulus, `x` on a box).
pub fn mode_shape(grid: &Grid, wavenumber: u32) -> ScalarField {
    let (lo, len) = match &grid.spec {
        crate::domain::DomainSpec::Annulus { r0, r1, .. } => (*r0, r1 - r0),
        crate::domain::DomainSpec::Box { lengths, .. } => (0.0, lengths[0]),
    };
    let coord: Vec<f64> = match grid.spec {
        crate::domain::DomainSpec::Annulus { .. } => grid.radius(),
        crate::domain::DomainSpec::Box { .. } => grid.nodes.iter().map(|x| x[0]).collect(),
    };
    let mut f = ScalarField(
        coord
            .iter()
            .map(|c| (wavenumber as f64 * std::f64::consts::PI * (c - lo) / len).cos())
            .collect(),
    );
    grid.project_mean_zero(&mut f);
    f
}

impl BackgroundProfile {
    pub fn new(rho_bar: ScalarField, tag: impl Into<String>) -> Result<Self> {
        let min = rho_bar.min();
        if !(min > 0.0) || !rho_bar.is_finite() {
            return Err(Error::NonpositiveDensity { min });
        }
        Ok(Self {
            rho_bar,
            tag: tag.into(),
        })
    }

    pub fn constant(grid: &Grid, value: f64) -> Result<Self> {
        Self::new(ScalarField::constant(grid.len(), value), format!("constant({value})"))
    }

    /// `1 + amplitude * b` with `b` the mean-zero mode of the given wavenumber.
    pub fn single_mode(grid: &Grid, amplitude: f64, wavenumber: u32) -> Result<Self> {
        let b = mode_shape(grid, wavenumber);
        Self::new(b.map(|v| 1.0 + amplitude * v), format!("single_mode({amplitude}, {wavenumber})"))
    }

    /// `1 + amplitude * exp(-|x - center|^2 / width^2)`; on a radial grid the
    /// distance is radial and `center[0]` is the centre radius.
    pub fn bump(grid: &Grid, amplitude: f64, center: [f64; 3], width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidParameters(format!("bump width must be positive, got {width}")));
        }
        let rho = ScalarField::from_fn(grid.len(), |i| {
            let x = grid.nodes[i];
            let d2 = if grid.is_radial() {
                (x[0] - center[0]).powi(2)
            } else {
                (0..3).map(|a| (x[a] - center[a]).powi(2)).sum()
            };
            1.0 + amplitude * (-d2 / (width * width)).exp()
        });
        Self::new(rho, format!("bump({amplitude})"))
    }

    pub fn raw(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameters(format!(
                "raw background has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Self::new(ScalarField(values), "raw")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SteadyResidual {
    /// `|rho~ grad(H(rho~) - Phi~)|_inf`.
    pub momentum: f64,
    /// `|grad p(rho~) - rho~ grad Phi~|_inf` by direct differencing; `O(h^2)`.
    pub momentum_direct: f64,
    /// `|Lap Phi~ - rho~ + rho_bar|_inf`.
    pub poisson: f64,
    /// `|int (rho~ - rho_bar)|`.
    pub mass: f64,
    /// `|dPhi~/dnu|_inf` over boundary nodes by one-sided differences.
    pub neumann: f64,
    /// `|H(rho~) - Phi~ - c|_inf`.
    pub enthalpy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub rho: ScalarField,
    pub phi: ScalarField,
    pub gamma: f64,
    pub c: f64,
    pub residual: SteadyResidual,
    pub newton_iterations: usize,
}

impl SteadyState {
    /// Rebuilds a state from `Phi~` and `c` through the enthalpy relation.
    pub fn from_potential(phi: ScalarField, c: f64, gamma: f64) -> Result<Self> {
        let mut rho = Vec::with_capacity(phi.len());
        for &p in &phi.0 {
            match inverse_enthalpy(p + c, gamma) {
                Some(r) => rho.push(r),
                None => return Err(Error::NonpositiveDensity { min: 0.0 }),
            }
        }
        Ok(Self {
            rho: ScalarField(rho),
            phi,
            gamma,
            c,
            residual: SteadyResidual::default(),
            newton_iterations: 0,
        })
    }
}

fn newton_residual(grid: &Grid, s: &[f64], rho: &[f64], bg: &[f64], out: &mut [f64]) {
    grid.weighted_laplacian(s, out).expect("layout checked by caller");
    for i in 0..s.len() {
        out[i] -= grid.volume_weights[i] * (rho[i] - bg[i]);
    }
}

fn nodal_norm(grid: &Grid, f: &[f64]) -> f64 {
    f.iter().zip(&grid.volume_weights).map(|(v, w)| (v / w).abs()).fold(0.0, f64::max)
}

fn density(s: &[f64], gamma: f64) -> Option<Vec<f64>> {
    s.iter().map(|&v| inverse_enthalpy(v, gamma)).collect()
}

pub fn solve_steady(bg: &BackgroundProfile, gamma: f64, grid: &Grid, initial: Option<&SteadyState>) -> Result<SteadyState> {
    check_gamma(gamma)?;
    if bg.rho_bar.len() != grid.len() {
        return Err(Error::Precondition("background length does not match grid".into()));
    }
    let min = bg.rho_bar.min();
    if !(min > 0.0) {
        return Err(Error::NonpositiveDensity { min });
    }
    crate::ops::geo(grid)?;
    let n = grid.len();
    let scale = 1.0 + bg.rho_bar.max_abs();
    let target = 1e-13 * scale;
    let accept = 1e-9 * scale;

    let mut s: Vec<f64> = match initial {
        Some(ss) => ss.phi.0.iter().map(|p| p + ss.c).collect(),
        None => vec![enthalpy(grid.mean(&bg.rho_bar), gamma); n],
    };
    let mut rho = density(&s, gamma).ok_or(Error::NonpositiveDensity { min: 0.0 })?;
    let mut f = vec![0.0; n];
    newton_residual(grid, &s, &rho, &bg.rho_bar.0, &mut f);
    let mut res = nodal_norm(grid, &f);
    let lap_diag = grid.weighted_laplacian_diag()?;
    let mut iterations = 0;
    while res > target && iterations < NEWTON_MAX_ITER {
        iterations += 1;
        let slope: Vec<f64> = rho.iter().zip(&grid.volume_weights).map(|(r, v)| v * inverse_enthalpy_slope(*r, gamma)).collect();
        let diag: Vec<f64> = lap_diag.iter().zip(&slope).map(|(d, s)| s - d).collect();
        let step = pcg(
            |x, y| {
                grid.weighted_laplacian(x, y).expect("layout checked above");
                for i in 0..x.len() {
                    y[i] = slope[i] * x[i] - y[i];
                }
            },
            &f,
            &diag,
            INNER_TOL,
            10 * n,
            |_| {},
        )?;
        let mut t = 1.0;
        let mut positivity_failed = false;
        let accepted = loop {
            let trial: Vec<f64> = s.iter().zip(&step.x).map(|(a, d)| a + t * d).collect();
            match density(&trial, gamma) {
                Some(trial_rho) => {
                    let mut tf = vec![0.0; n];
                    newton_residual(grid, &trial, &trial_rho, &bg.rho_bar.0, &mut tf);
                    let tres = nodal_norm(grid, &tf);
                    if tres < res {
                        break Some((trial, trial_rho, tf, tres));
                    }
                }
                None => positivity_failed = true,
            }
            t *= 0.5;
            if t < MIN_STEP {
                break None;
            }
        };
        match accepted {
            Some((ns, nr, nf, nres)) => {
                s = ns;
                rho = nr;
                f = nf;
                res = nres;
            }
            None if res <= accept => break,
            None if positivity_failed => return Err(Error::NonpositiveDensity { min: 0.0 }),
            None => {
                return Err(Error::NewtonDiverged(format!(
                    "line search exhausted at iteration {iterations}, residual {res:e}"
                )))
            }
        }
    }
    if !(res <= accept) {
        return Err(Error::NewtonDiverged(format!(
            "residual {res:e} after {iterations} iterations"
        )));
    }
    let sf = ScalarField(s);
    let c = grid.mean(&sf);
    let phi = sf.map(|v| v - c);
    let mut ss = SteadyState {
        rho: ScalarField(rho),
        phi,
        gamma,
        c,
        residual: SteadyResidual::default(),
        newton_iterations: iterations,
    };
    ss.residual = steady_residual(grid, &ss, bg)?;
    Ok(ss)
}

pub fn steady_residual(grid: &Grid, ss: &SteadyState, bg: &BackgroundProfile) -> Result<SteadyResidual> {
    let gamma = ss.gamma;
    let h_rho = ss.rho.map(|r| enthalpy(r, gamma));
    let g = grid.gradient(&h_rho.sub(&ss.phi))?;
    let momentum = g.scaled_by(&ss.rho).max_abs();
    let p = ss.rho.map(|r| r.powf(gamma));
    let gp = grid.gradient(&p)?;
    let gphi = grid.gradient(&ss.phi)?;
    let momentum_direct = gp.sub(&gphi.scaled_by(&ss.rho)).max_abs();
    let lap = grid.laplacian(&ss.phi, None)?;
    let poisson = lap.sub(&ss.rho).add(&bg.rho_bar).max_abs();
    let mass = grid.integrate(&ss.rho.sub(&bg.rho_bar)).abs();
    let neumann = (0..grid.len())
        .filter(|&i| grid.boundary[i])
        .map(|i| crate::field::dot3(gphi.0[i], grid.normals[i]).abs())
        .fold(0.0, f64::max);
    let enthalpy_res = h_rho.sub(&ss.phi).map(|v| v - ss.c).max_abs();
    Ok(SteadyResidual {
        momentum,
        momentum_direct,
        poisson,
        mass,
        neumann,
        enthalpy: enthalpy_res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, DomainSpec};

    fn radial(n: usize) -> Grid {
        build_grid(&DomainSpec::radial_annulus(1.0, 2.0, n)).unwrap()
    }

    #[test]
    fn enthalpy_round_trip() {
        for gamma in [1.0, 1.4, 5.0 / 3.0, 2.0] {
            for rho in [0.1, 1.0, 3.7] {
                let s = enthalpy(rho, gamma);
                assert!((inverse_enthalpy(s, gamma).unwrap() - rho).abs() < 1e-13);
            }
        }
        assert!(inverse_enthalpy(-0.1, 2.0).is_none());
    }

    #[test]
    fn constant_background_is_exact() {
        let g = radial(128);
        let bg = BackgroundProfile::constant(&g, 1.0).unwrap();
        let ss = solve_steady(&bg, 5.0 / 3.0, &g, None).unwrap();
        assert!((ss.c - 2.5).abs() < 1e-14);
        assert!(ss.phi.max_abs() < 1e-14);
        assert!(ss.rho.map(|r| r - 1.0).max_abs() < 1e-14);
        let r = ss.residual;
        for v in [r.momentum, r.poisson, r.mass, r.neumann, r.enthalpy] {
            assert!(v <= 1e-12);
        }
    }

    #[test]
    fn large_variation_bump_converges() {
        let g = radial(96);
        let bg = BackgroundProfile::bump(&g, 0.5, [1.5, 0.0, 0.0], 0.15).unwrap();
        for gamma in [1.0, 5.0 / 3.0, 2.0] {
            let ss = solve_steady(&bg, gamma, &g, None).unwrap();
            assert!(ss.rho.min() > 0.0);
            assert!(ss.residual.momentum <= 1e-8 && ss.residual.poisson <= 1e-8, "{:?}", ss.residual);
            assert!(ss.residual.mass <= 1e-10);
            assert!(ss.residual.enthalpy <= 1e-12);
            assert!(g.mean(&ss.phi).abs() < 1e-13);
            // idempotent from its own output
            let again = solve_steady(&bg, gamma, &g, Some(&ss)).unwrap();
            assert!(again.newton_iterations <= 2);
        }
    }

    #[test]
    fn nonpositive_background_rejected() {
        let g = radial(16);
        let mut v = vec![1.0; 16];
        v[3] = 0.0;
        assert!(matches!(BackgroundProfile::raw(&g, v), Err(Error::NonpositiveDensity { .. })));
        assert!(matches!(solve_steady(
            &BackgroundProfile { rho_bar: ScalarField::constant(16, -1.0), tag: "bad".into() },
            1.4,
            &g,
            None
        ), Err(Error::NonpositiveDensity { .. })));
    }

    #[test]
    fn perturbed_potential_shows_in_poisson_residual() {
        let g = radial(64);
        let bg = BackgroundProfile::constant(&g, 1.0).unwrap();
        let mut ss = solve_steady(&bg, 5.0 / 3.0, &g, None).unwrap();
        let mode = mode_shape(&g, 2);
        ss.phi = ss.phi.add(&mode.scaled(1e-3));
        let expected = g.laplacian(&mode, None).unwrap().max_abs() * 1e-3;
        let r = steady_residual(&g, &ss, &bg).unwrap();
        assert!((r.poisson - expected).abs() < 1e-12 * expected.max(1.0));
    }

    #[test]
    fn shifted_constant_changes_mass() {
        let g = radial(64);
        let bg = BackgroundProfile::single_mode(&g, 0.1, 1).unwrap();
        let ss = solve_steady(&bg, 1.4, &g, None).unwrap();
        let shifted = SteadyState::from_potential(ss.phi.clone(), ss.c + 0.1, 1.4).unwrap();
        let r = steady_residual(&g, &shifted, &bg).unwrap();
        assert!(r.mass > 1e-3);
        assert!(r.enthalpy < 1e-12);
    }

    #[test]
    fn gamma_below_one_rejected() {
        let g = radial(16);
        let bg = BackgroundProfile::constant(&g, 1.0).unwrap();
        assert!(matches!(solve_steady(&bg, 0.9, &g, None), Err(Error::InvalidParameters(_))));
    }
}
