//! Interior and boundary cutoffs and the localized derivative norms.
//!
//! Raw profiles are quintic smoothsteps of the distance to each boundary
//! piece; they are normalized so that `chi0^2 + sum chi_l^2 = 1`. On the
//! sphere the two band charts share each radial profile through an angular
//! partition, which on a radial grid enters through its spherical mean.

use serde::Serialize;

use crate::domain::{charts_for, default_collar_depth, BoundaryChart, BoundaryPatch, DomainSpec, Grid, Layout};
use crate::error::{Error, Result};
use crate::evolve::PerturbationState;
use crate::field::ScalarField;
use crate::ops::factorial;
use crate::steady::SteadyState;

/// `cos 35 deg`: the angular cutoff of a band chart is 1 below this `|cos|`.
const ANGLE_INNER: f64 = 0.819_152_044_288_991_8;
/// `cos 20 deg`: ... and vanishes above this one, the edge of the chart.
const ANGLE_OUTER: f64 = 0.939_692_620_785_908_4;

pub(crate) fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

fn boundary_profile(dist: f64, depth: f64) -> f64 {
    1.0 - smoothstep((dist - 0.5 * depth) / (0.25 * depth))
}

fn interior_profile(dist: f64, depth: f64) -> f64 {
    smoothstep((dist - 0.25 * depth) / (0.25 * depth))
}

fn band_weight(omega: [f64; 3], cap: u8) -> f64 {
    let c = if cap == 0 { omega[2].abs() } else { omega[0].abs() };
    1.0 - smoothstep((c - ANGLE_INNER) / (ANGLE_OUTER - ANGLE_INNER))
}

/// Normalized angular partition `(psi_0, psi_1)` at a unit direction.
fn angular_partition(omega: [f64; 3]) -> [f64; 2] {
    let p = [band_weight(omega, 0), band_weight(omega, 1)];
    let s = (p[0] * p[0] + p[1] * p[1]).sqrt();
    [p[0] / s, p[1] / s]
}

fn sphere_directions(n_theta: usize, n_phi: usize) -> Vec<([f64; 3], f64)> {
    let mut out = Vec::with_capacity(n_theta * n_phi);
    let (ht, hp) = (std::f64::consts::PI / n_theta as f64, 2.0 * std::f64::consts::PI / n_phi as f64);
    for i in 0..n_theta {
        let t = (i as f64 + 0.5) * ht;
        let w = (i as f64 * ht).cos() - ((i + 1) as f64 * ht).cos();
        for j in 0..n_phi {
            let p = (j as f64 + 0.5) * hp;
            out.push(([t.sin() * p.cos(), t.sin() * p.sin(), t.cos()], w * hp / (4.0 * std::f64::consts::PI)));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct CutoffSystem {
    pub charts: Vec<BoundaryChart>,
    pub depth: f64,
    pub chi0: ScalarField,
    /// Per chart, the node values of `chi_l`. On a radial grid this is the
    /// radial factor; the angular factor enters through `angular_mean`.
    pub chi: Vec<ScalarField>,
    /// Spherical mean of the squared angular factor (1 for flat faces).
    pub angular_mean: Vec<f64>,
    /// `min (chi0^2 + sum chi_l^2)` over the domain.
    pub floor: f64,
}

fn face_distance(grid: &Grid, i: usize, patch: BoundaryPatch) -> f64 {
    let x = grid.nodes[i];
    match (&grid.spec, patch) {
        (DomainSpec::Annulus { r0, .. }, BoundaryPatch::InnerSphere { .. }) => crate::field::norm3(x) - r0,
        (DomainSpec::Annulus { r1, .. }, BoundaryPatch::OuterSphere { .. }) => r1 - crate::field::norm3(x),
        (DomainSpec::Box { lengths, .. }, BoundaryPatch::Face { axis, high }) => {
            if high {
                lengths[axis] - x[axis]
            } else {
                x[axis]
            }
        }
        _ => f64::INFINITY,
    }
}

impl CutoffSystem {
    pub fn new(grid: &Grid) -> Result<Self> {
        if matches!(grid.layout, Layout::Spherical { .. }) {
            return Err(Error::UnsupportedGeometry("cutoffs on a full spherical grid".into()));
        }
        let charts = charts_for(&grid.spec)?;
        let depth = charts
            .iter()
            .map(|c| default_collar_depth(&grid.spec, c))
            .fold(f64::INFINITY, f64::min);
        let n = grid.len();
        let is_sphere = grid.is_radial();
        // one raw profile per boundary piece; band charts on a sphere share it
        let raw_b: Vec<Vec<f64>> = charts
            .iter()
            .map(|c| (0..n).map(|i| boundary_profile(face_distance(grid, i, c.patch), depth)).collect())
            .collect();
        let dmin: Vec<f64> = (0..n)
            .map(|i| charts.iter().map(|c| face_distance(grid, i, c.patch)).fold(f64::INFINITY, f64::min))
            .collect();
        let raw0: Vec<f64> = dmin.iter().map(|&d| interior_profile(d, depth)).collect();
        let pieces: Vec<usize> = if is_sphere {
            // caps 0 of inner and outer carry the distinct radial profiles
            charts
                .iter()
                .enumerate()
                .filter(|(_, c)| matches!(c.patch, BoundaryPatch::InnerSphere { cap: 0 } | BoundaryPatch::OuterSphere { cap: 0 }))
                .map(|(l, _)| l)
                .collect()
        } else {
            (0..charts.len()).collect()
        };
        let norm: Vec<f64> = (0..n)
            .map(|i| (raw0[i].powi(2) + pieces.iter().map(|&l| raw_b[l][i].powi(2)).sum::<f64>()).sqrt())
            .collect();
        let chi0 = ScalarField((0..n).map(|i| raw0[i] / norm[i]).collect());
        let chi: Vec<ScalarField> = raw_b
            .iter()
            .map(|b| ScalarField((0..n).map(|i| b[i] / norm[i]).collect()))
            .collect();
        let dirs = sphere_directions(90, 180);
        let angular_mean: Vec<f64> = charts
            .iter()
            .map(|c| match c.patch {
                BoundaryPatch::InnerSphere { cap } | BoundaryPatch::OuterSphere { cap } => dirs
                    .iter()
                    .map(|(w, wt)| wt * angular_partition(*w)[cap as usize].powi(2))
                    .sum(),
                BoundaryPatch::Face { .. } => 1.0,
            })
            .collect();
        let floor = if is_sphere {
            let mut worst = f64::INFINITY;
            for i in 0..n {
                for (omega, _) in dirs.iter().step_by(7) {
                    let psi = angular_partition(*omega);
                    let mut s = chi0.0[i].powi(2);
                    for (l, c) in charts.iter().enumerate() {
                        if let BoundaryPatch::InnerSphere { cap } | BoundaryPatch::OuterSphere { cap } = c.patch {
                            s += chi[l].0[i].powi(2) * psi[cap as usize].powi(2);
                        }
                    }
                    worst = worst.min(s);
                }
            }
            worst
        } else {
            (0..n)
                .map(|i| chi0.0[i].powi(2) + chi.iter().map(|c| c.0[i].powi(2)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        };
        let sys = Self {
            charts,
            depth,
            chi0,
            chi,
            angular_mean,
            floor,
        };
        sys.check_coverage(grid)?;
        Ok(sys)
    }

    /// Every cutoff must live inside its chart's collar; on the sphere the
    /// angular factor must also vanish outside the band.
    pub fn check_coverage(&self, grid: &Grid) -> Result<()> {
        for (l, chart) in self.charts.iter().enumerate() {
            for i in 0..grid.len() {
                if self.chi[l].0[i] > 0.0 && face_distance(grid, i, chart.patch) >= self.depth {
                    return Err(Error::ChartCoverage(format!(
                        "cutoff of {:?} is nonzero at distance {} beyond collar depth {}",
                        chart.patch,
                        face_distance(grid, i, chart.patch),
                        self.depth
                    )));
                }
            }
            if let BoundaryPatch::InnerSphere { cap } | BoundaryPatch::OuterSphere { cap } = chart.patch {
                for (omega, _) in sphere_directions(45, 90) {
                    let c = if cap == 0 { omega[2].abs() } else { omega[0].abs() };
                    if angular_partition(omega)[cap as usize] > 0.0 && c >= ANGLE_OUTER {
                        return Err(Error::ChartCoverage(format!("angular cutoff of {:?} leaves its band", chart.patch)));
                    }
                }
            }
        }
        for i in 0..grid.len() {
            if self.chi0.0[i] > 0.0 && grid.boundary[i] {
                return Err(Error::ChartCoverage("interior cutoff reaches the boundary".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MixedNorm {
    pub k: usize,
    pub m: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChartLocalized {
    pub patch: BoundaryPatch,
    /// `int chi_l^2 rho~^(gamma-2) |tangential^k q|^2`, `k = 1, 2, 3`.
    pub tangential: [f64; 3],
    /// `int chi_l^2 rho~^(gamma-4) |tangential^k d_r^m q_r|^2`, `k + m <= 2`.
    pub mixed: Vec<MixedNorm>,
    /// `int chi_l^2 (rho~^(gamma-2) |tangential q|^2 + rho~^(gamma-4) |q_r|^2)`.
    pub first_order: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalizedReport {
    /// `int chi0^2 rho~^(gamma-4) |D^k q|^2`, `k = 1, 2, 3`.
    pub interior: [f64; 3],
    pub charts: Vec<ChartLocalized>,
    /// Interior plus all boundary first-order pieces.
    pub first_order_total: f64,
    /// `int |Dq|^2`.
    pub global_first_order: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub floor: f64,
}

impl LocalizedReport {
    pub fn brackets(&self) -> bool {
        let slack = 1e-12 * self.upper_bound.abs();
        self.first_order_total >= self.lower_bound - slack && self.first_order_total <= self.upper_bound + slack
    }
}

/// `sum_{i+j=k} k!/(i! j!) (d_a^i d_b^j d_n^p f)^2` on a box.
fn box_tangential(grid: &Grid, f: &ScalarField, tangential: [usize; 2], normal: usize, k: usize, p: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; grid.len()];
    for i in 0..=k {
        let mut alpha = [0usize; 3];
        alpha[tangential[0]] += i;
        alpha[tangential[1]] += k - i;
        alpha[normal] += p;
        let d = grid.mixed_partial(&f.0, alpha)?;
        let w = factorial(k) / (factorial(i) * factorial(k - i));
        out.iter_mut().zip(&d).for_each(|(o, v)| *o += w * v * v);
    }
    Ok(out)
}

pub fn localized_norms(
    grid: &Grid,
    state: &PerturbationState,
    steady: &SteadyState,
    cutoffs: &CutoffSystem,
) -> Result<LocalizedReport> {
    cutoffs.check_coverage(grid)?;
    let gamma = steady.gamma;
    let q = &state.q;
    let w2 = steady.rho.map(|r| r.powf(gamma - 2.0));
    let w4 = steady.rho.map(|r| r.powf(gamma - 4.0));
    let dq = grid.scalar_derivative_norms(q, 3)?;
    let chi0_sq = cutoffs.chi0.mul(&cutoffs.chi0);
    let interior: [f64; 3] = std::array::from_fn(|k| grid.integrate(&chi0_sq.mul(&w4).mul(&dq[k + 1])));

    let mut charts = Vec::with_capacity(cutoffs.charts.len());
    for (l, chart) in cutoffs.charts.iter().enumerate() {
        let chi_sq = cutoffs.chi[l].mul(&cutoffs.chi[l]).scaled(cutoffs.angular_mean[l]);
        let (tangential, mixed, first_order) = match chart.patch {
            BoundaryPatch::Face { axis, .. } => {
                let tang = [(axis + 1) % 3, (axis + 2) % 3];
                let mut t = [0.0; 3];
                for (k, tk) in t.iter_mut().enumerate() {
                    let v = box_tangential(grid, q, tang, axis, k + 1, 0)?;
                    *tk = grid.integrate(&chi_sq.mul(&w2).mul(&ScalarField(v)));
                }
                let mut mixed = Vec::new();
                for k in 0..=2 {
                    for m in 0..=2 - k {
                        let v = box_tangential(grid, q, tang, axis, k, m + 1)?;
                        mixed.push(MixedNorm {
                            k,
                            m,
                            value: grid.integrate(&chi_sq.mul(&w4).mul(&ScalarField(v))),
                        });
                    }
                }
                let qr = box_tangential(grid, q, tang, axis, 0, 1)?;
                let first = t[0] + grid.integrate(&chi_sq.mul(&w4).mul(&ScalarField(qr)));
                (t, mixed, first)
            }
            BoundaryPatch::InnerSphere { .. } | BoundaryPatch::OuterSphere { .. } => {
                // a radial field has no dependence on the surface coordinates
                let mut mixed = Vec::new();
                for k in 0..=2 {
                    for m in 0..=2 - k {
                        let value = if k == 0 {
                            let d = grid.radial_derivative(&q.0, m + 1)?;
                            let d2 = ScalarField(d.iter().map(|v| v * v).collect());
                            grid.integrate(&chi_sq.mul(&w4).mul(&d2))
                        } else {
                            0.0
                        };
                        mixed.push(MixedNorm { k, m, value });
                    }
                }
                let first = mixed[0].value;
                ([0.0; 3], mixed, first)
            }
        };
        charts.push(ChartLocalized {
            patch: chart.patch,
            tangential,
            mixed,
            first_order,
        });
    }
    let first_order_total = interior[0] + charts.iter().map(|c| c.first_order).sum::<f64>();
    let global_first_order = grid.integrate(&dq[1]);
    let (wmin, wmax) = w2
        .0
        .iter()
        .chain(&w4.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(LocalizedReport {
        interior,
        charts,
        first_order_total,
        global_first_order,
        lower_bound: cutoffs.floor.min(1.0) * wmin * global_first_order,
        upper_bound: wmax * global_first_order,
        floor: cutoffs.floor,
    })
}
