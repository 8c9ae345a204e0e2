use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{DomainSpec, Grid};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::steady::mode_shape;

/// Initial perturbation families. Density perturbations are projected to
/// zero mean, velocities vanish on walls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Zero,
    /// `amplitude * cos(k pi s)` in the density, `s` the normalized wall-normal coordinate.
    SingleMode { amplitude: f64, wavenumber: u32 },
    /// Gaussian density bump, mean removed.
    Bump { amplitude: f64, center: [f64; 3], width: f64 },
    /// Random combination of the lowest modes with `1/k^2` decay, drawn from the run seed.
    RandomSmooth {
        amplitude: f64,
        #[serde(default = "default_modes")]
        modes: u32,
        #[serde(default)]
        velocity: bool,
    },
    Raw {
        q: Vec<f64>,
        #[serde(default)]
        u: Option<Vec<[f64; 3]>>,
    },
}

fn default_modes() -> u32 {
    4
}

/// Normalized coordinate in `[0, 1]` along each layout axis, and whether the
/// axis is bounded by walls.
fn unit_coords(grid: &Grid) -> Vec<([f64; 3], [bool; 3])> {
    match &grid.spec {
        DomainSpec::Annulus { r0, r1, .. } => grid
            .radius()
            .into_iter()
            .map(|r| ([(r - r0) / (r1 - r0), 0.0, 0.0], [true, false, false]))
            .collect(),
        DomainSpec::Box { lengths, walls, .. } => grid
            .nodes
            .iter()
            .map(|x| (std::array::from_fn(|a| x[a] / lengths[a]), *walls))
            .collect(),
    }
}

fn active_axes(grid: &Grid) -> usize {
    if grid.is_radial() {
        1
    } else {
        3
    }
}

/// Smooth random fields: `q` from cosines, velocity components from sines on
/// walled axes so they vanish there.
fn random_smooth(grid: &Grid, modes: u32, rng: &mut ChaCha8Rng, velocity: bool) -> (ScalarField, VectorField) {
    let coords = unit_coords(grid);
    let axes = active_axes(grid);
    let k_max = modes.max(1) as usize;
    let index_sets: Vec<[usize; 3]> = (0..=k_max)
        .flat_map(|a| (0..=k_max).flat_map(move |b| (0..=k_max).map(move |c| [a, b, c])))
        .filter(|k| (axes..3).all(|ax| k[ax] == 0))
        .filter(|k| {
            let s: usize = k.iter().sum();
            s > 0 && s <= k_max
        })
        .collect();
    let basis = |k: [usize; 3], s: [f64; 3], walls: [bool; 3], sine: Option<usize>| -> f64 {
        (0..axes)
            .map(|a| {
                let arg = if walls[a] { k[a] as f64 * PI * s[a] } else { 2.0 * k[a] as f64 * PI * s[a] };
                if sine == Some(a) && walls[a] {
                    // vanishes on both walls of this axis
                    ((k[a] + 1) as f64 * PI * s[a]).sin()
                } else {
                    arg.cos()
                }
            })
            .product()
    };
    let mut q = vec![0.0; grid.len()];
    for k in &index_sets {
        let weight = 1.0 / (k.iter().sum::<usize>() as f64).powi(2);
        let a: f64 = rng.gen_range(-1.0..1.0) * weight;
        for (i, (s, w)) in coords.iter().enumerate() {
            q[i] += a * basis(*k, *s, *w, None);
        }
    }
    let mut u = vec![[0.0; 3]; grid.len()];
    if velocity {
        for comp in 0..axes {
            for k in &index_sets {
                let weight = 1.0 / (k.iter().sum::<usize>() as f64).powi(2);
                let a: f64 = rng.gen_range(-1.0..1.0) * weight;
                for (i, (s, w)) in coords.iter().enumerate() {
                    // every walled axis gets a sine factor so all walls see zero
                    let mut v = a * basis(*k, *s, *w, Some(comp));
                    for ax in 0..axes {
                        if ax != comp && w[ax] {
                            v *= (PI * s[ax]).sin();
                        }
                    }
                    u[i][comp] += v;
                }
            }
        }
    }
    (ScalarField(q), VectorField(u))
}

fn normalize(f: &mut ScalarField, amplitude: f64) {
    let m = f.max_abs();
    if m > 0.0 {
        *f = f.scaled(amplitude / m);
    }
}

/// Builds `(q0, u0)` for the given family. `seed` drives the random family.
pub fn build_initial(grid: &Grid, ic: &InitialCondition, seed: u64) -> Result<(ScalarField, VectorField)> {
    let n = grid.len();
    let (q, u) = match ic {
        InitialCondition::Zero => (ScalarField::zeros(n), VectorField::zeros(n)),
        InitialCondition::SingleMode { amplitude, wavenumber } => {
            if *wavenumber == 0 {
                return Err(Error::InvalidParameters("single mode wavenumber must be at least 1".into()));
            }
            (mode_shape(grid, *wavenumber).scaled(*amplitude), VectorField::zeros(n))
        }
        InitialCondition::Bump { amplitude, center, width } => {
            if !(*width > 0.0) {
                return Err(Error::InvalidParameters(format!("bump width must be positive, got {width}")));
            }
            let mut q = ScalarField::from_fn(n, |i| {
                let x = grid.nodes[i];
                let d2: f64 = if grid.is_radial() {
                    (x[0] - center[0]).powi(2)
                } else {
                    (0..3).map(|a| (x[a] - center[a]).powi(2)).sum()
                };
                (-d2 / (width * width)).exp()
            });
            grid.project_mean_zero(&mut q);
            normalize(&mut q, *amplitude);
            (q, VectorField::zeros(n))
        }
        InitialCondition::RandomSmooth { amplitude, modes, velocity } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (mut q, u) = random_smooth(grid, *modes, &mut rng, *velocity);
            grid.project_mean_zero(&mut q);
            normalize(&mut q, *amplitude);
            let um = u.max_abs();
            let u = if um > 0.0 { u.scaled(amplitude / um) } else { u };
            (q, u)
        }
        InitialCondition::Raw { q, u } => {
            if q.len() != n {
                return Err(Error::InvalidParameters(format!("raw q has {} values for {n} nodes", q.len())));
            }
            let u = match u {
                Some(u) if u.len() != n => {
                    return Err(Error::InvalidParameters(format!("raw u has {} values for {n} nodes", u.len())))
                }
                Some(u) => VectorField(u.clone()),
                None => VectorField::zeros(n),
            };
            (ScalarField(q.clone()), u)
        }
    };
    if !q.is_finite() || !u.is_finite() {
        return Err(Error::InvalidParameters("initial data is not finite".into()));
    }
    Ok((q, u))
}
