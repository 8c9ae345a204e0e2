//! Analytic boundary charts `z(xi, zeta)` with their moving frames.
//!
//! A chart is normalized so that `|z_xi| = 1`, `z_xi . z_zeta = 0` and
//! `|z_zeta| >= tau > 0`. The frame is `e1 = z_xi`, `e2 = z_zeta / |z_zeta|`
//! and the external unit normal `n`, right-handed (`e1 x e2 = n`). Its
//! derivatives along the chart are
//!
//! ```text
//! d/dxi   (e1, e2, n) = [[0, -m3, -m1], [m3, 0, -m2], [m1, m2, 0]] (e1, e2, n)
//! d/dzeta (e1, e2, n) = same with m1', m2', m3'
//! ```

use std::f64::consts::PI;

use serde::Serialize;

use super::grid::DomainSpec;
use crate::error::{Error, Result};
use crate::field::{cross3, dot3, norm3};

/// Polar angle at which the sphere band charts stop.
pub const SPHERE_CHART_POLAR_MARGIN: f64 = 20.0 * PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundaryPatch {
    /// One of the two band charts (`cap` 0: polar axis z, `cap` 1: polar axis x)
    /// on the inner sphere of an annulus.
    InnerSphere { cap: u8 },
    OuterSphere { cap: u8 },
    /// Box face normal to `axis`, at the far end when `high`.
    Face { axis: usize, high: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChartGeometry {
    Sphere {
        radius: f64,
        /// +1 when the external normal is +r_hat (outer sphere), -1 otherwise.
        sign: f64,
        /// Columns are the images of the local x, y, z axes.
        rotation: [[f64; 3]; 3],
    },
    Plane {
        origin: [f64; 3],
        e1: [f64; 3],
        e2: [f64; 3],
        normal: [f64; 3],
    },
}

/// Moving frame `(e1, e2, n)` at a chart point.
pub type Frame = [[f64; 3]; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryChart {
    pub patch: BoundaryPatch,
    pub geometry: ChartGeometry,
    pub xi_range: (f64, f64),
    pub zeta_range: (f64, f64),
    pub xi_periodic: bool,
    pub zeta_periodic: bool,
    /// Lower bound on `|z_zeta|` over the chart.
    pub tau: f64,
}

fn rotate(rot: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| rot[i][0] * v[0] + rot[i][1] * v[1] + rot[i][2] * v[2])
}

const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
// local (a, b, c) -> global (c, a, b): polar axis along global x
const POLAR_X: [[f64; 3]; 3] = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];

fn unit(a: usize) -> [f64; 3] {
    let mut e = [0.0; 3];
    e[a] = 1.0;
    e
}

pub fn boundary_chart(spec: &DomainSpec, which: BoundaryPatch) -> Result<BoundaryChart> {
    spec.validate()?;
    match (spec, which) {
        (DomainSpec::Annulus { r0, r1, .. }, BoundaryPatch::InnerSphere { cap } | BoundaryPatch::OuterSphere { cap }) => {
            if cap > 1 {
                return Err(Error::UnsupportedBoundary(format!("sphere cap {cap} (only 0 and 1 exist)")));
            }
            let outer = matches!(which, BoundaryPatch::OuterSphere { .. });
            let radius = if outer { *r1 } else { *r0 };
            let t0 = SPHERE_CHART_POLAR_MARGIN;
            Ok(BoundaryChart {
                patch: which,
                geometry: ChartGeometry::Sphere {
                    radius,
                    sign: if outer { 1.0 } else { -1.0 },
                    rotation: if cap == 0 { IDENTITY } else { POLAR_X },
                },
                xi_range: (radius * t0, radius * (PI - t0)),
                zeta_range: (0.0, 2.0 * PI),
                xi_periodic: false,
                zeta_periodic: true,
                tau: radius * t0.sin(),
            })
        }
        (DomainSpec::Box { lengths, walls, .. }, BoundaryPatch::Face { axis, high }) => {
            if axis > 2 {
                return Err(Error::UnsupportedBoundary(format!("face axis {axis}")));
            }
            if !walls[axis] {
                return Err(Error::UnsupportedBoundary(format!("axis {axis} is periodic and has no face")));
            }
            let b = (axis + 1) % 3;
            let c = (axis + 2) % 3;
            let (a1, a2) = if high { (b, c) } else { (c, b) };
            let mut origin = [0.0; 3];
            let mut normal = unit(axis);
            if high {
                origin[axis] = lengths[axis];
            } else {
                normal[axis] = -1.0;
            }
            Ok(BoundaryChart {
                patch: which,
                geometry: ChartGeometry::Plane {
                    origin,
                    e1: unit(a1),
                    e2: unit(a2),
                    normal,
                },
                xi_range: (0.0, lengths[a1]),
                zeta_range: (0.0, lengths[a2]),
                xi_periodic: !walls[a1],
                zeta_periodic: !walls[a2],
                tau: 1.0,
            })
        }
        (spec, which) => Err(Error::UnsupportedBoundary(format!("{which:?} on {spec:?}"))),
    }
}

/// Every chart needed to cover the boundary of `spec`.
pub fn charts_for(spec: &DomainSpec) -> Result<Vec<BoundaryChart>> {
    let patches: Vec<BoundaryPatch> = match spec {
        DomainSpec::Annulus { .. } => vec![
            BoundaryPatch::InnerSphere { cap: 0 },
            BoundaryPatch::InnerSphere { cap: 1 },
            BoundaryPatch::OuterSphere { cap: 0 },
            BoundaryPatch::OuterSphere { cap: 1 },
        ],
        DomainSpec::Box { walls, .. } => (0..3)
            .filter(|&a| walls[a])
            .flat_map(|axis| [false, true].map(|high| BoundaryPatch::Face { axis, high }))
            .collect(),
    };
    patches.into_iter().map(|p| boundary_chart(spec, p)).collect()
}

impl BoundaryChart {
    fn sphere_local(&self, xi: f64, zeta: f64) -> (f64, f64, f64) {
        match self.geometry {
            ChartGeometry::Sphere { radius, sign, .. } => (xi / radius, sign * zeta, sign),
            _ => unreachable!(),
        }
    }

    pub fn z(&self, xi: f64, zeta: f64) -> [f64; 3] {
        match &self.geometry {
            ChartGeometry::Sphere { radius, rotation, .. } => {
                let (t, p, _) = self.sphere_local(xi, zeta);
                let er = [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()];
                rotate(rotation, er.map(|c| c * radius))
            }
            ChartGeometry::Plane { origin, e1, e2, .. } => {
                std::array::from_fn(|i| origin[i] + xi * e1[i] + zeta * e2[i])
            }
        }
    }

    pub fn z_xi(&self, xi: f64, zeta: f64) -> [f64; 3] {
        self.frame(xi, zeta)[0]
    }

    pub fn z_zeta(&self, xi: f64, zeta: f64) -> [f64; 3] {
        let f = self.frame(xi, zeta);
        let s = self.z_zeta_norm(xi, zeta);
        f[1].map(|c| c * s)
    }

    pub fn z_zeta_norm(&self, xi: f64, _zeta: f64) -> f64 {
        match self.geometry {
            ChartGeometry::Sphere { radius, .. } => radius * (xi / radius).sin(),
            ChartGeometry::Plane { .. } => 1.0,
        }
    }

    /// `(e1, e2, n)` at `(xi, zeta)`.
    pub fn frame(&self, xi: f64, zeta: f64) -> Frame {
        match &self.geometry {
            ChartGeometry::Sphere { rotation, .. } => {
                let (t, p, s) = self.sphere_local(xi, zeta);
                let er = [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()];
                let et = [t.cos() * p.cos(), t.cos() * p.sin(), -t.sin()];
                let ep = [-p.sin(), p.cos(), 0.0];
                [
                    rotate(rotation, et),
                    rotate(rotation, ep.map(|c| s * c)),
                    rotate(rotation, er.map(|c| s * c)),
                ]
            }
            ChartGeometry::Plane { e1, e2, normal, .. } => [*e1, *e2, *normal],
        }
    }

    /// Frenet coefficients `([m1, m2, m3], [m1', m2', m3'])`.
    pub fn frenet(&self, xi: f64, _zeta: f64) -> ([f64; 3], [f64; 3]) {
        match self.geometry {
            ChartGeometry::Sphere { radius, sign, .. } => {
                let t = xi / radius;
                ([sign / radius, 0.0, 0.0], [0.0, sign * t.sin(), -t.cos()])
            }
            ChartGeometry::Plane { .. } => ([0.0; 3], [0.0; 3]),
        }
    }

    pub fn xi_nodes(&self, n: usize) -> Vec<f64> {
        lattice(self.xi_range, n, self.xi_periodic)
    }

    pub fn zeta_nodes(&self, n: usize) -> Vec<f64> {
        lattice(self.zeta_range, n, self.zeta_periodic)
    }

    /// Max deviation from `|z_xi| = 1`, `z_xi . z_zeta = 0` over an `n x n`
    /// lattice, and the minimum of `|z_zeta|`.
    pub fn normalization_residual(&self, n: usize) -> (f64, f64) {
        let mut res: f64 = 0.0;
        let mut min_zz = f64::INFINITY;
        for &xi in &self.xi_nodes(n) {
            for &zeta in &self.zeta_nodes(n) {
                let zx = self.z_xi(xi, zeta);
                let zz = self.z_zeta(xi, zeta);
                res = res.max((norm3(zx) - 1.0).abs()).max(dot3(zx, zz).abs());
                min_zz = min_zz.min(norm3(zz));
            }
        }
        (res, min_zz)
    }

    /// Max entry of `F F^T - I` plus the handedness defect `|e1 x e2 - n|`.
    pub fn orthonormality_residual(&self, n: usize) -> f64 {
        let mut res: f64 = 0.0;
        for &xi in &self.xi_nodes(n) {
            for &zeta in &self.zeta_nodes(n) {
                let f = self.frame(xi, zeta);
                for a in 0..3 {
                    for b in 0..3 {
                        let d = dot3(f[a], f[b]) - if a == b { 1.0 } else { 0.0 };
                        res = res.max(d.abs());
                    }
                }
                let c = cross3(f[0], f[1]);
                res = res.max(norm3(std::array::from_fn(|i| c[i] - f[2][i])));
            }
        }
        res
    }

    /// Largest mismatch between central-difference derivatives of the frame
    /// (step `step`) and the Frenet matrices, over an `n x n` interior lattice.
    pub fn frenet_fd_error(&self, n: usize, step: f64) -> f64 {
        let mut err: f64 = 0.0;
        let (x0, x1) = self.xi_range;
        let (z0, z1) = self.zeta_range;
        for i in 0..n {
            let xi = x0 + (x1 - x0) * (i as f64 + 0.5) / n as f64;
            for j in 0..n {
                let zeta = z0 + (z1 - z0) * (j as f64 + 0.5) / n as f64;
                let (m, mp) = self.frenet(xi, zeta);
                let f = self.frame(xi, zeta);
                for (dir, coef) in [(0usize, m), (1, mp)] {
                    let (fp, fm) = if dir == 0 {
                        (self.frame(xi + step, zeta), self.frame(xi - step, zeta))
                    } else {
                        (self.frame(xi, zeta + step), self.frame(xi, zeta - step))
                    };
                    let mat = frenet_matrix(coef);
                    for row in 0..3 {
                        for c in 0..3 {
                            let fd = (fp[row][c] - fm[row][c]) / (2.0 * step);
                            let exact: f64 = (0..3).map(|k| mat[row][k] * f[k][c]).sum();
                            err = err.max((fd - exact).abs());
                        }
                    }
                }
            }
        }
        err
    }
}

/// Antisymmetric matrix acting on `(e1, e2, n)`.
pub fn frenet_matrix(m: [f64; 3]) -> [[f64; 3]; 3] {
    [[0.0, -m[2], -m[0]], [m[2], 0.0, -m[1]], [m[0], m[1], 0.0]]
}

fn lattice((a, b): (f64, f64), n: usize, periodic: bool) -> Vec<f64> {
    if periodic {
        (0..n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
    } else {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }
}
