use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;

pub const MIN_RESOLUTION: usize = 8;

/// Bounded domain and its resolution.
///
/// `Annulus` is the shell `r0 < |x| < r1`; with `radial = true` only
/// radially symmetric fields are represented and `resolution` holds a single
/// radial node count, otherwise it holds `[nr, ntheta, nzeta]`.
/// `Box` is `[0, L1] x [0, L2] x [0, L3]`; an axis with `walls[a] = false`
/// is periodic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Annulus {
        r0: f64,
        r1: f64,
        #[serde(default = "default_true")]
        radial: bool,
        resolution: Vec<usize>,
    },
    Box {
        lengths: [f64; 3],
        #[serde(default = "default_walls")]
        walls: [bool; 3],
        resolution: [usize; 3],
    },
}

fn default_true() -> bool {
    true
}

fn default_walls() -> [bool; 3] {
    [true; 3]
}

impl DomainSpec {
    pub fn radial_annulus(r0: f64, r1: f64, nodes: usize) -> Self {
        DomainSpec::Annulus {
            r0,
            r1,
            radial: true,
            resolution: vec![nodes],
        }
    }

    pub fn unit_box(n: usize) -> Self {
        DomainSpec::Box {
            lengths: [1.0; 3],
            walls: [true; 3],
            resolution: [n; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::Annulus {
                r0,
                r1,
                radial,
                resolution,
            } => {
                if !(r0.is_finite() && r1.is_finite()) || *r0 <= 0.0 {
                    return Err(Error::InvalidSpec(format!("annulus needs R0 > 0, got {r0}")));
                }
                if r0 >= r1 {
                    return Err(Error::InvalidSpec(format!("annulus needs R0 < R1, got {r0} >= {r1}")));
                }
                let want = if *radial { 1 } else { 3 };
                if resolution.len() != want {
                    return Err(Error::InvalidSpec(format!(
                        "annulus (radial = {radial}) needs {want} resolution entries, got {}",
                        resolution.len()
                    )));
                }
                check_resolution(resolution)
            }
            DomainSpec::Box {
                lengths,
                resolution,
                ..
            } => {
                if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                    return Err(Error::InvalidSpec(format!("box lengths must be positive, got {lengths:?}")));
                }
                check_resolution(resolution)
            }
        }
    }

    /// Exact measure of the domain.
    pub fn volume(&self) -> f64 {
        match self {
            DomainSpec::Annulus { r0, r1, .. } => 4.0 * PI / 3.0 * (r1.powi(3) - r0.powi(3)),
            DomainSpec::Box { lengths, .. } => lengths.iter().product(),
        }
    }

    /// Smallest distance between opposite walls, used for default collar depths.
    pub fn thickness(&self) -> f64 {
        match self {
            DomainSpec::Annulus { r0, r1, .. } => r1 - r0,
            DomainSpec::Box { lengths, walls, .. } => lengths
                .iter()
                .zip(walls)
                .filter(|(_, w)| **w)
                .map(|(l, _)| *l)
                .fold(f64::INFINITY, f64::min),
        }
    }
}

fn check_resolution(res: &[usize]) -> Result<()> {
    if let Some(n) = res.iter().find(|&&n| n < MIN_RESOLUTION) {
        return Err(Error::InvalidSpec(format!(
            "resolution {n} below the minimum of {MIN_RESOLUTION} nodes per axis"
        )));
    }
    Ok(())
}

/// Node layout behind a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    /// Radial nodes `r_i = r0 + i h`, placed on the positive x-axis.
    Radial { r: Vec<f64>, h: f64 },
    /// Tensor grid in `(r, theta, zeta)`; theta is cell-centred so no node sits on a pole.
    Spherical {
        r: Vec<f64>,
        theta: Vec<f64>,
        zeta: Vec<f64>,
    },
    /// Row-major `(i, j, k)` Cartesian nodes.
    Box {
        shape: [usize; 3],
        spacing: [f64; 3],
        walls: [bool; 3],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub spec: DomainSpec,
    pub layout: Layout,
    pub nodes: Vec<[f64; 3]>,
    /// Per-axis spacing of the layout.
    pub spacing: Vec<f64>,
    pub interior: Vec<bool>,
    pub boundary: Vec<bool>,
    /// Outward unit normal at boundary nodes, zero elsewhere.
    pub normals: Vec<[f64; 3]>,
    /// Dual-cell volumes; they sum to the exact domain measure.
    pub volume_weights: Vec<f64>,
    /// Boundary surface weights; zero at interior nodes.
    pub area_weights: Vec<f64>,
    pub(crate) jets: crate::jet::JetCache,
}

/// Vertex-centred dual-cell lengths of a bounded uniform line.
fn dual_lengths(n: usize, h: f64, periodic: bool) -> Vec<f64> {
    (0..n)
        .map(|i| if !periodic && (i == 0 || i == n - 1) { 0.5 * h } else { h })
        .collect()
}

pub fn build_grid(spec: &DomainSpec) -> Result<Grid> {
    spec.validate()?;
    match spec {
        DomainSpec::Annulus {
            r0,
            r1,
            radial: true,
            resolution,
        } => Ok(radial_grid(spec, *r0, *r1, resolution[0])),
        DomainSpec::Annulus {
            r0, r1, resolution, ..
        } => Ok(spherical_grid(spec, *r0, *r1, resolution)),
        DomainSpec::Box {
            lengths,
            walls,
            resolution,
        } => Ok(box_grid(spec, *lengths, *walls, *resolution)),
    }
}

fn radial_grid(spec: &DomainSpec, r0: f64, r1: f64, n: usize) -> Grid {
    let h = (r1 - r0) / (n - 1) as f64;
    let r: Vec<f64> = (0..n).map(|i| if i == n - 1 { r1 } else { r0 + i as f64 * h }).collect();
    let shell = |a: f64, b: f64| 4.0 * PI / 3.0 * (b.powi(3) - a.powi(3));
    let volume_weights = (0..n)
        .map(|i| {
            let lo = if i == 0 { r0 } else { 0.5 * (r[i - 1] + r[i]) };
            let hi = if i == n - 1 { r1 } else { 0.5 * (r[i] + r[i + 1]) };
            shell(lo, hi)
        })
        .collect();
    let boundary: Vec<bool> = (0..n).map(|i| i == 0 || i == n - 1).collect();
    let mut normals = vec![[0.0; 3]; n];
    normals[0] = [-1.0, 0.0, 0.0];
    normals[n - 1] = [1.0, 0.0, 0.0];
    let mut area_weights = vec![0.0; n];
    area_weights[0] = 4.0 * PI * r0 * r0;
    area_weights[n - 1] = 4.0 * PI * r1 * r1;
    Grid {
        spec: spec.clone(),
        nodes: r.iter().map(|&ri| [ri, 0.0, 0.0]).collect(),
        layout: Layout::Radial { r, h },
        spacing: vec![h],
        interior: boundary.iter().map(|b| !b).collect(),
        boundary,
        normals,
        volume_weights,
        area_weights,
        jets: Default::default(),
    }
}

fn spherical_grid(spec: &DomainSpec, r0: f64, r1: f64, res: &[usize]) -> Grid {
    let (nr, nt, nz) = (res[0], res[1], res[2]);
    let hr = (r1 - r0) / (nr - 1) as f64;
    let ht = PI / nt as f64;
    let hz = 2.0 * PI / nz as f64;
    let r: Vec<f64> = (0..nr).map(|i| r0 + i as f64 * hr).collect();
    let theta: Vec<f64> = (0..nt).map(|j| (j as f64 + 0.5) * ht).collect();
    let zeta: Vec<f64> = (0..nz).map(|k| k as f64 * hz).collect();
    let n = nr * nt * nz;
    let mut nodes = Vec::with_capacity(n);
    let mut normals = vec![[0.0; 3]; n];
    let mut volume_weights = Vec::with_capacity(n);
    let mut area_weights = vec![0.0; n];
    let mut boundary = Vec::with_capacity(n);
    for i in 0..nr {
        let lo = if i == 0 { r0 } else { r[i] - 0.5 * hr };
        let hi = if i == nr - 1 { r1 } else { r[i] + 0.5 * hr };
        let radial_w = (hi.powi(3) - lo.powi(3)) / 3.0;
        for (j, &t) in theta.iter().enumerate() {
            let ang = (j as f64 * ht).cos() - ((j + 1) as f64 * ht).cos();
            for &z in &zeta {
                let rhat = [t.sin() * z.cos(), t.sin() * z.sin(), t.cos()];
                nodes.push([r[i] * rhat[0], r[i] * rhat[1], r[i] * rhat[2]]);
                volume_weights.push(radial_w * ang * hz);
                let on_b = i == 0 || i == nr - 1;
                boundary.push(on_b);
                let idx = nodes.len() - 1;
                if on_b {
                    let s = if i == 0 { -1.0 } else { 1.0 };
                    normals[idx] = [s * rhat[0], s * rhat[1], s * rhat[2]];
                    area_weights[idx] = r[i] * r[i] * ang * hz;
                }
            }
        }
    }
    Grid {
        spec: spec.clone(),
        layout: Layout::Spherical { r, theta, zeta },
        nodes,
        spacing: vec![hr, ht, hz],
        interior: boundary.iter().map(|b| !b).collect(),
        boundary,
        normals,
        volume_weights,
        area_weights,
        jets: Default::default(),
    }
}

fn box_grid(spec: &DomainSpec, lengths: [f64; 3], walls: [bool; 3], shape: [usize; 3]) -> Grid {
    let spacing: [f64; 3] = std::array::from_fn(|a| {
        if walls[a] {
            lengths[a] / (shape[a] - 1) as f64
        } else {
            lengths[a] / shape[a] as f64
        }
    });
    let duals: Vec<Vec<f64>> = (0..3).map(|a| dual_lengths(shape[a], spacing[a], !walls[a])).collect();
    let n = shape.iter().product();
    let mut nodes = Vec::with_capacity(n);
    let mut normals = vec![[0.0; 3]; n];
    let mut volume_weights = Vec::with_capacity(n);
    let mut area_weights = vec![0.0; n];
    let mut boundary = Vec::with_capacity(n);
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            for k in 0..shape[2] {
                let ijk = [i, j, k];
                nodes.push(std::array::from_fn(|a| ijk[a] as f64 * spacing[a]));
                volume_weights.push((0..3).map(|a| duals[a][ijk[a]]).product());
                let idx = nodes.len() - 1;
                let mut nrm = [0.0; 3];
                let mut area = 0.0;
                for a in 0..3 {
                    if !walls[a] {
                        continue;
                    }
                    let side = if ijk[a] == 0 {
                        -1.0
                    } else if ijk[a] == shape[a] - 1 {
                        1.0
                    } else {
                        continue;
                    };
                    nrm[a] = side;
                    area += (0..3).filter(|&b| b != a).map(|b| duals[b][ijk[b]]).product::<f64>();
                }
                let len = crate::field::norm3(nrm);
                let on_b = len > 0.0;
                boundary.push(on_b);
                if on_b {
                    normals[idx] = [nrm[0] / len, nrm[1] / len, nrm[2] / len];
                    area_weights[idx] = area;
                }
            }
        }
    }
    Grid {
        spec: spec.clone(),
        layout: Layout::Box {
            shape,
            spacing,
            walls,
        },
        nodes,
        spacing: spacing.to_vec(),
        interior: boundary.iter().map(|b| !b).collect(),
        boundary,
        normals,
        volume_weights,
        area_weights,
        jets: Default::default(),
    }
}

impl Grid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Smallest spacing, the `h` of the CFL bound.
    pub fn h_min(&self) -> f64 {
        match &self.layout {
            Layout::Radial { h, .. } => *h,
            Layout::Box { spacing, .. } => spacing.iter().copied().fold(f64::INFINITY, f64::min),
            Layout::Spherical { r, .. } => {
                let (hr, ht, hz) = (self.spacing[0], self.spacing[1], self.spacing[2]);
                let r0 = r[0];
                hr.min(r0 * ht).min(r0 * hz * (0.5 * ht).sin())
            }
        }
    }

    pub fn volume(&self) -> f64 {
        self.volume_weights.iter().sum()
    }

    pub fn integrate(&self, f: &ScalarField) -> f64 {
        f.0.iter().zip(&self.volume_weights).map(|(v, w)| v * w).sum()
    }

    pub fn boundary_integrate(&self, g: &ScalarField) -> f64 {
        g.0.iter().zip(&self.area_weights).map(|(v, w)| v * w).sum()
    }

    pub fn mean(&self, f: &ScalarField) -> f64 {
        self.integrate(f) / self.volume()
    }

    /// Discrete L2 norm.
    pub fn l2(&self, f: &ScalarField) -> f64 {
        f.0.iter()
            .zip(&self.volume_weights)
            .map(|(v, w)| v * v * w)
            .sum::<f64>()
            .sqrt()
    }

    pub fn boundary_l2(&self, g: &ScalarField) -> f64 {
        g.0.iter()
            .zip(&self.area_weights)
            .map(|(v, w)| v * v * w)
            .sum::<f64>()
            .sqrt()
    }

    /// Subtract the volume-weighted mean.
    pub fn project_mean_zero(&self, f: &mut ScalarField) {
        let m = self.mean(f);
        f.0.iter_mut().for_each(|v| *v -= m);
    }

    /// Radius of each node (distance from the origin).
    pub fn radius(&self) -> Vec<f64> {
        self.nodes.iter().map(|x| crate::field::norm3(*x)).collect()
    }

    pub fn sample<F: Fn([f64; 3]) -> f64>(&self, f: F) -> ScalarField {
        ScalarField(self.nodes.iter().map(|&x| f(x)).collect())
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.layout, Layout::Radial { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_annulus_grid_geometry() {
        let g = build_grid(&DomainSpec::radial_annulus(1.0, 2.0, 64)).unwrap();
        assert_eq!(g.len(), 64);
        assert!(g.boundary[0] && g.boundary[63]);
        assert_eq!(g.boundary.iter().filter(|b| **b).count(), 2);
        assert_eq!(g.normals[0], [-1.0, 0.0, 0.0]);
        assert_eq!(g.normals[63], [1.0, 0.0, 0.0]);
        let rel = (g.volume() - g.spec.volume()).abs() / g.spec.volume();
        assert!(rel < 1e-14);
    }

    #[test]
    fn unit_cube_weights_and_normals() {
        let g = build_grid(&DomainSpec::unit_box(16)).unwrap();
        assert_eq!(g.len(), 16 * 16 * 16);
        assert!((g.volume() - 1.0).abs() < 1e-3);
        for i in 0..g.len() {
            assert_ne!(g.interior[i], g.boundary[i]);
            if g.boundary[i] {
                assert!((crate::field::norm3(g.normals[i]) - 1.0).abs() < 1e-12);
            }
        }
        // total area of the unit cube surface
        assert!((g.area_weights.iter().sum::<f64>() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_axis_has_no_boundary() {
        let spec = DomainSpec::Box {
            lengths: [1.0, 2.0, 1.0],
            walls: [true, false, true],
            resolution: [8, 8, 8],
        };
        let g = build_grid(&spec).unwrap();
        assert!((g.volume() - 2.0).abs() < 1e-12);
        for (i, x) in g.nodes.iter().enumerate() {
            if g.boundary[i] {
                assert_eq!(g.normals[i][1], 0.0, "node {x:?}");
            }
        }
    }

    #[test]
    fn spherical_grid_weights_sum_to_shell_volume() {
        let spec = DomainSpec::Annulus {
            r0: 1.0,
            r1: 2.0,
            radial: false,
            resolution: vec![9, 12, 16],
        };
        let g = build_grid(&spec).unwrap();
        assert!((g.volume() - spec.volume()).abs() < 1e-12 * spec.volume());
        let area: f64 = g.area_weights.iter().sum();
        assert!((area - 4.0 * PI * 5.0).abs() < 1e-10);
    }

    #[test]
    fn invalid_specs_rejected() {
        for spec in [
            DomainSpec::radial_annulus(2.0, 1.0, 64),
            DomainSpec::radial_annulus(0.0, 1.0, 64),
            DomainSpec::radial_annulus(1.0, 2.0, 4),
            DomainSpec::unit_box(7),
        ] {
            assert!(matches!(build_grid(&spec), Err(Error::InvalidSpec(_))), "{spec:?}");
        }
    }
}
