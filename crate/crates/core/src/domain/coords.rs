//! Boundary-fitted coordinates `x = z(xi, zeta) + r n(xi, zeta)` on a collar.
//!
//! The metric coefficients are
//! `A = |z_zeta| + m2' r`, `B = -m1' r`, `C = -m2 r`, `D = 1 + m1 r`,
//! `J = AD - BC`, and the inverse coefficients
//! `grad xi = (A e1 + B e2) / J`, `grad zeta = (C e1 + D e2) / J`, `grad r = n`.

use super::chart::{BoundaryChart, ChartGeometry};
use super::grid::DomainSpec;
use crate::error::{Error, Result};
use crate::fd::DiffOp;
use crate::field::{dot3, ScalarField, VectorField};

/// Node counts of a collar lattice along `(xi, zeta, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollarResolution {
    pub xi: usize,
    pub zeta: usize,
    pub r: usize,
}

impl CollarResolution {
    pub fn uniform(n: usize) -> Self {
        Self { xi: n, zeta: n, r: n }
    }

    fn shape(&self) -> [usize; 3] {
        [self.xi, self.zeta, self.r]
    }
}

#[derive(Debug, Clone)]
pub struct CoordinateMap {
    pub chart: BoundaryChart,
    /// Final collar depth; the collar is `-depth <= r <= 0` (inside the domain).
    pub depth: f64,
    pub shape: [usize; 3],
    pub xi: Vec<f64>,
    pub zeta: Vec<f64>,
    pub r: Vec<f64>,
    pub spacing: [f64; 3],
    pub positions: Vec<[f64; 3]>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub jacobian: Vec<f64>,
    pub grad_xi: Vec<[f64; 3]>,
    pub grad_zeta: Vec<[f64; 3]>,
    pub grad_r: Vec<[f64; 3]>,
}

/// Metric coefficients `(A, B, C, D)` at a chart point and depth `r`.
pub fn metric(chart: &BoundaryChart, xi: f64, zeta: f64, r: f64) -> [f64; 4] {
    let (m, mp) = chart.frenet(xi, zeta);
    [chart.z_zeta_norm(xi, zeta) + mp[1] * r, -mp[0] * r, -m[1] * r, 1.0 + m[0] * r]
}

fn min_jacobian_ratio(chart: &BoundaryChart, depth: f64) -> f64 {
    let mut worst = f64::INFINITY;
    for &xi in &chart.xi_nodes(17) {
        for &zeta in &chart.zeta_nodes(17) {
            let j0 = chart.z_zeta_norm(xi, zeta);
            for k in 0..=16 {
                let r = -depth * k as f64 / 16.0;
                let [a, b, c, d] = metric(chart, xi, zeta, r);
                worst = worst.min((a * d - b * c) / j0);
            }
        }
    }
    worst
}

/// `min(0.25 * thickness, largest depth with J > 0.1 J|_{r=0})`.
pub fn default_collar_depth(spec: &DomainSpec, chart: &BoundaryChart) -> f64 {
    let cap = 0.25 * spec.thickness();
    if min_jacobian_ratio(chart, cap) > 0.1 {
        return cap;
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if min_jacobian_ratio(chart, mid) > 0.1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn coordinate_map(chart: &BoundaryChart, collar_depth: f64, res: CollarResolution) -> Result<CoordinateMap> {
    if !(collar_depth.is_finite() && collar_depth > 0.0) {
        return Err(Error::InvalidParameters(format!("collar depth must be positive, got {collar_depth}")));
    }
    if res.xi < 4 || res.zeta < 4 || res.r < 4 {
        return Err(Error::InvalidParameters(format!("collar resolution {res:?} below 4 nodes per axis")));
    }
    let mut depth = collar_depth;
    let mut shrinks = 0;
    while min_jacobian_ratio(chart, depth) <= 0.0 {
        depth *= 0.5;
        shrinks += 1;
        if shrinks > 40 {
            return Err(Error::DegenerateMap(format!(
                "J <= 0 persists at depth {depth:e} on {:?}",
                chart.patch
            )));
        }
    }
    let xi = chart.xi_nodes(res.xi);
    let zeta = chart.zeta_nodes(res.zeta);
    let r: Vec<f64> = (0..res.r).map(|k| -depth + depth * k as f64 / (res.r - 1) as f64).collect();
    let step = |v: &[f64], periodic: bool, range: (f64, f64)| {
        if periodic {
            (range.1 - range.0) / v.len() as f64
        } else {
            v[1] - v[0]
        }
    };
    let spacing = [
        step(&xi, chart.xi_periodic, chart.xi_range),
        step(&zeta, chart.zeta_periodic, chart.zeta_range),
        r[1] - r[0],
    ];
    let n = res.xi * res.zeta * res.r;
    let mut map = CoordinateMap {
        chart: chart.clone(),
        depth,
        shape: res.shape(),
        xi,
        zeta,
        r,
        spacing,
        positions: Vec::with_capacity(n),
        a: Vec::with_capacity(n),
        b: Vec::with_capacity(n),
        c: Vec::with_capacity(n),
        d: Vec::with_capacity(n),
        jacobian: Vec::with_capacity(n),
        grad_xi: Vec::with_capacity(n),
        grad_zeta: Vec::with_capacity(n),
        grad_r: Vec::with_capacity(n),
    };
    for i in 0..res.xi {
        for j in 0..res.zeta {
            let (x, z) = (map.xi[i], map.zeta[j]);
            let frame = chart.frame(x, z);
            let base = chart.z(x, z);
            for k in 0..res.r {
                let rr = map.r[k];
                let [a, b, c, d] = metric(chart, x, z, rr);
                let jac = a * d - b * c;
                if jac <= 0.0 {
                    return Err(Error::DegenerateMap(format!("J = {jac:e} at ({x}, {z}, {rr})")));
                }
                map.positions.push(std::array::from_fn(|q| base[q] + rr * frame[2][q]));
                map.grad_xi
                    .push(std::array::from_fn(|q| (a * frame[0][q] + b * frame[1][q]) / jac));
                map.grad_zeta
                    .push(std::array::from_fn(|q| (c * frame[0][q] + d * frame[1][q]) / jac));
                map.grad_r.push(frame[2]);
                map.a.push(a);
                map.b.push(b);
                map.c.push(c);
                map.d.push(d);
                map.jacobian.push(jac);
            }
        }
    }
    Ok(map)
}

impl CoordinateMap {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.shape[1] + j) * self.shape[2] + k
    }

    pub fn sample<F: Fn([f64; 3]) -> f64>(&self, f: F) -> ScalarField {
        ScalarField(self.positions.iter().map(|&x| f(x)).collect())
    }

    fn diff_op(&self, axis: usize, order: usize) -> Result<DiffOp> {
        let periodic = match axis {
            0 => self.chart.xi_periodic,
            1 => self.chart.zeta_periodic,
            _ => false,
        };
        DiffOp::new(self.shape[axis], self.spacing[axis], order, periodic)
    }

    /// Derivative of a collar field along chart axis `axis` (0 = xi, 1 = zeta, 2 = r).
    pub fn chart_derivative(&self, f: &ScalarField, axis: usize, order: usize) -> Result<ScalarField> {
        self.check(f)?;
        Ok(ScalarField(self.diff_op(axis, order)?.apply_axis(&f.0, self.shape, axis)))
    }

    fn check(&self, f: &ScalarField) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::OutOfCollar {
                expected: self.len(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// Cartesian gradient reassembled from chart derivatives.
    pub fn reconstruct_gradient(&self, d_xi: &ScalarField, d_zeta: &ScalarField, d_r: &ScalarField) -> VectorField {
        VectorField::from_fn(self.len(), |p| {
            std::array::from_fn(|q| {
                self.grad_xi[p][q] * d_xi.0[p] + self.grad_zeta[p][q] * d_zeta.0[p] + self.grad_r[p][q] * d_r.0[p]
            })
        })
    }

    /// Trapezoid-in-chart-coordinates quadrature weights times `J`.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let axis_w = |axis: usize, periodic: bool| -> Vec<f64> {
            let n = self.shape[axis];
            (0..n)
                .map(|i| {
                    if !periodic && (i == 0 || i == n - 1) {
                        0.5 * self.spacing[axis]
                    } else {
                        self.spacing[axis]
                    }
                })
                .collect()
        };
        let wx = axis_w(0, self.chart.xi_periodic);
        let wz = axis_w(1, self.chart.zeta_periodic);
        let wr = axis_w(2, false);
        let mut w = Vec::with_capacity(self.len());
        for i in 0..self.shape[0] {
            for j in 0..self.shape[1] {
                for k in 0..self.shape[2] {
                    w.push(wx[i] * wz[j] * wr[k] * self.jacobian[self.index(i, j, k)]);
                }
            }
        }
        w
    }

    /// Max over nodes of `|J - (AD - BC)|`.
    pub fn jacobian_identity_residual(&self) -> f64 {
        (0..self.len())
            .map(|p| (self.jacobian[p] - (self.a[p] * self.d[p] - self.b[p] * self.c[p])).abs())
            .fold(0.0, f64::max)
    }

    /// Max entry of `G X - I`, with `G` the inverse coefficients and `X` the
    /// finite-difference tangent matrix `(x_xi, x_zeta, x_r)`.
    pub fn chain_rule_residual(&self) -> Result<f64> {
        let cols = [self.position_tangent(0)?, self.position_tangent(1)?, self.position_tangent(2)?];
        let mut res: f64 = 0.0;
        for p in 0..self.len() {
            let rows = [self.grad_xi[p], self.grad_zeta[p], self.grad_r[p]];
            for (a, row) in rows.iter().enumerate() {
                for (b, col) in cols.iter().enumerate() {
                    let e = dot3(*row, col[p]) - if a == b { 1.0 } else { 0.0 };
                    res = res.max(e.abs());
                }
            }
        }
        Ok(res)
    }

    /// Max over nodes of `|J - |x_xi x x_zeta||` with finite-difference tangents.
    pub fn jacobian_cross_product_error(&self) -> Result<f64> {
        let tx = self.position_tangent(0)?;
        let tz = self.position_tangent(1)?;
        Ok((0..self.len())
            .map(|p| (self.jacobian[p] - crate::field::norm3(crate::field::cross3(tx[p], tz[p]))).abs())
            .fold(0.0, f64::max))
    }

    /// Finite-difference `dx/d(axis)`. On a periodic axis the positions of a
    /// flat chart advance by a fixed offset per period, which is removed
    /// before differencing and added back as a constant.
    fn position_tangent(&self, axis: usize) -> Result<Vec<[f64; 3]>> {
        let (periodic, range) = match axis {
            0 => (self.chart.xi_periodic, self.chart.xi_range),
            1 => (self.chart.zeta_periodic, self.chart.zeta_range),
            _ => (false, (0.0, 0.0)),
        };
        let drift = if periodic {
            let period = range.1 - range.0;
            let (x0, z0) = (self.xi[0], self.zeta[0]);
            let (a, b) = if axis == 0 {
                (self.chart.z(x0, z0), self.chart.z(x0 + period, z0))
            } else {
                (self.chart.z(x0, z0), self.chart.z(x0, z0 + period))
            };
            std::array::from_fn(|q| (b[q] - a[q]) / period)
        } else {
            [0.0; 3]
        };
        let coord = |p: usize| {
            let (i, rest) = (p / (self.shape[1] * self.shape[2]), p % (self.shape[1] * self.shape[2]));
            if axis == 0 {
                self.xi[i] - range.0
            } else {
                self.zeta[rest / self.shape[2]] - range.0
            }
        };
        let comps: Vec<Vec<f64>> = (0..3)
            .map(|q| {
                let f = ScalarField(
                    self.positions
                        .iter()
                        .enumerate()
                        .map(|(p, x)| if periodic { x[q] - drift[q] * coord(p) } else { x[q] })
                        .collect(),
                );
                self.chart_derivative(&f, axis, 1).map(|d| d.0)
            })
            .collect::<Result<_>>()?;
        Ok((0..self.len())
            .map(|p| std::array::from_fn(|q| comps[q][p] + drift[q]))
            .collect())
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.chart.geometry, ChartGeometry::Plane { .. })
    }
}

/// Gradient norms below this are indistinguishable from the round-off of a
/// difference quotient of a field of size `f_norm`.
pub(crate) fn roundoff_floor(f_norm: f64, h: f64) -> f64 {
    1e-14f64.max(64.0 * f64::EPSILON * f_norm / h)
}

/// Tangential derivatives `(d_xi f, d_zeta f)` and the normal derivative `d_r f`.
pub fn frame_derivatives(field: &ScalarField, map: &CoordinateMap) -> Result<([ScalarField; 2], ScalarField)> {
    let dx = map.chart_derivative(field, 0, 1)?;
    let dz = map.chart_derivative(field, 1, 1)?;
    let dr = map.chart_derivative(field, 2, 1)?;
    Ok(([dx, dz], dr))
}

/// `||[d_{x_i}, dbar] f|| / ||grad f||`, summed over `i` and both tangential
/// directions, with `d_{x_i}` assembled from the chart decomposition.
pub fn commutator_residual(field: &ScalarField, map: &CoordinateMap) -> Result<f64> {
    let w = map.quadrature_weights();
    let ([fx, fz], fr) = frame_derivatives(field, map)?;
    let grad = map.reconstruct_gradient(&fx, &fz, &fr);
    let denom: f64 = grad.0.iter().zip(&w).map(|(g, wp)| dot3(*g, *g) * wp).sum::<f64>().sqrt();
    let f_norm: f64 = field.0.iter().zip(&w).map(|(v, wp)| v * v * wp).sum::<f64>().sqrt();
    let h = map.spacing.iter().copied().fold(f64::INFINITY, f64::min);
    if denom < roundoff_floor(f_norm, h) {
        return Err(Error::ZeroDenominator);
    }
    let grad_comps: Vec<ScalarField> = (0..3).map(|q| ScalarField(grad.component(q))).collect();
    let mut num = 0.0;
    for (t, ft) in [(0usize, &fx), (1, &fz)] {
        // d_x of the tangential derivative
        let ([a, b], c) = frame_derivatives(ft, map)?;
        let outer = map.reconstruct_gradient(&a, &b, &c);
        for (q, gq) in grad_comps.iter().enumerate() {
            // tangential derivative of the Cartesian derivative
            let inner = map.chart_derivative(gq, t, 1)?;
            num += (0..map.len())
                .map(|p| (outer.0[p][q] - inner.0[p]).powi(2) * w[p])
                .sum::<f64>();
        }
    }
    Ok(num.sqrt() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::chart::{boundary_chart, BoundaryPatch};

    fn sphere_map(n: usize) -> CoordinateMap {
        let spec = DomainSpec::radial_annulus(1.0, 2.0, 32);
        let chart = boundary_chart(&spec, BoundaryPatch::OuterSphere { cap: 0 }).unwrap();
        coordinate_map(&chart, 0.25, CollarResolution::uniform(n)).unwrap()
    }

    #[test]
    fn jacobian_at_surface_equals_z_zeta_norm() {
        let map = sphere_map(12);
        for i in 0..12 {
            for j in 0..12 {
                let p = map.index(i, j, 11);
                assert_eq!(map.r[11], 0.0);
                let zz = map.chart.z_zeta_norm(map.xi[i], map.zeta[j]);
                assert!((map.jacobian[p] - zz).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn expanded_jacobian_matches_ad_minus_bc() {
        let map = sphere_map(10);
        for i in 0..10 {
            for j in 0..10 {
                for k in 0..10 {
                    let (xi, zeta, r) = (map.xi[i], map.zeta[j], map.r[k]);
                    let (m, mp) = map.chart.frenet(xi, zeta);
                    let zz = map.chart.z_zeta_norm(xi, zeta);
                    let expanded = zz + (m[0] * zz + mp[1]) * r + (m[0] * mp[1] - m[1] * mp[0]) * r * r;
                    assert!((expanded - map.jacobian[map.index(i, j, k)]).abs() < 1e-14);
                }
            }
        }
        assert!(map.jacobian_identity_residual() < 1e-14);
    }

    #[test]
    fn plane_face_jacobian_is_constant() {
        let spec = DomainSpec::unit_box(8);
        let chart = boundary_chart(&spec, BoundaryPatch::Face { axis: 2, high: true }).unwrap();
        let map = coordinate_map(&chart, 0.25, CollarResolution::uniform(8)).unwrap();
        assert!(map.jacobian.iter().all(|j| (*j - 1.0).abs() < 1e-15));
        // collar lies inside the box
        assert!(map.positions.iter().all(|x| x[2] >= 0.75 - 1e-12 && x[2] <= 1.0 + 1e-12));
    }

    #[test]
    fn default_depth_respects_jacobian_floor() {
        // outer sphere: J/J0 = (1 - d/R1)^2, so the floor only binds past
        // d = R1 (1 - sqrt 0.1), beyond a quarter of the shell thickness
        let spec = DomainSpec::radial_annulus(1.0, 20.0, 32);
        for patch in [BoundaryPatch::OuterSphere { cap: 0 }, BoundaryPatch::InnerSphere { cap: 1 }] {
            let chart = boundary_chart(&spec, patch).unwrap();
            let depth = default_collar_depth(&spec, &chart);
            assert!((depth - 0.25 * 19.0).abs() < 1e-12);
            assert!(min_jacobian_ratio(&chart, depth) > 0.1);
        }
        let chart = boundary_chart(&spec, BoundaryPatch::OuterSphere { cap: 0 }).unwrap();
        let limit = 20.0 * (1.0 - 0.1f64.sqrt());
        assert!(min_jacobian_ratio(&chart, 0.999 * limit) > 0.1);
        assert!(min_jacobian_ratio(&chart, 1.001 * limit) < 0.1);
    }

    #[test]
    fn constant_field_has_zero_frame_derivatives() {
        let map = sphere_map(10);
        let f = map.sample(|_| 3.5);
        let ([a, b], c) = frame_derivatives(&f, &map).unwrap();
        for v in a.0.iter().chain(&b.0).chain(&c.0) {
            assert!(v.abs() < 1e-13);
        }
        assert_eq!(commutator_residual(&f, &map), Err(Error::ZeroDenominator));
    }

    #[test]
    fn wrong_sized_field_is_out_of_collar() {
        let map = sphere_map(6);
        let f = ScalarField::zeros(5);
        assert!(matches!(frame_derivatives(&f, &map), Err(Error::OutOfCollar { .. })));
    }

    #[test]
    fn signed_distance_has_unit_normal_derivative() {
        let map = sphere_map(12);
        let f = map.sample(|x| crate::field::norm3(x) - 2.0);
        let ([a, b], c) = frame_derivatives(&f, &map).unwrap();
        for p in 0..map.len() {
            assert!((c.0[p] - 1.0).abs() < 1e-12);
            assert!(a.0[p].abs() < 1e-12 && b.0[p].abs() < 1e-12);
        }
    }
}
