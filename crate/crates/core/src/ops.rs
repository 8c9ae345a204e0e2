//! Discrete differential operators on a [`Grid`].
//!
//! Supported layouts are the radial reduction of an annulus and the box.
//! The scalar Laplacian is the vertex-centred finite-volume operator, so it is
//! symmetric with respect to the dual-cell volumes and carries the Neumann
//! datum as a boundary flux. The Lame operator is assembled in a symmetric
//! form (radial flux form, or node-to-cell divergence on the box) so that the
//! implicit viscous solve is a symmetric positive-definite system.

use std::f64::consts::PI;

use crate::domain::{Grid, Layout};
use crate::error::{Error, Result};
use crate::fd::DiffOp;
use crate::field::{ScalarField, VectorField};
use crate::jet::JET_DEGREE;

fn unsupported(grid: &Grid) -> Error {
    Error::UnsupportedGeometry(format!(
        "discrete operators need a radial annulus or a box, got {:?}",
        grid.spec
    ))
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BoxDims {
    pub shape: [usize; 3],
    pub spacing: [f64; 3],
    pub walls: [bool; 3],
}

impl BoxDims {
    pub fn strides(&self) -> [usize; 3] {
        [self.shape[1] * self.shape[2], self.shape[2], 1]
    }

    pub fn ijk(&self, lin: usize) -> [usize; 3] {
        let s = self.strides();
        [lin / s[0], (lin / s[1]) % self.shape[1], lin % self.shape[2]]
    }

    /// Neighbour along `axis` at offset `+-1`, wrapping periodic axes.
    pub fn neighbour(&self, ijk: [usize; 3], axis: usize, up: bool) -> Option<usize> {
        let n = self.shape[axis];
        let mut c = ijk;
        if up {
            if c[axis] + 1 < n {
                c[axis] += 1;
            } else if !self.walls[axis] {
                c[axis] = 0;
            } else {
                return None;
            }
        } else if c[axis] > 0 {
            c[axis] -= 1;
        } else if !self.walls[axis] {
            c[axis] = n - 1;
        } else {
            return None;
        }
        let s = self.strides();
        Some(c[0] * s[0] + c[1] * s[1] + c[2])
    }

    pub fn dual(&self, axis: usize, i: usize) -> f64 {
        if self.walls[axis] && (i == 0 || i == self.shape[axis] - 1) {
            0.5 * self.spacing[axis]
        } else {
            self.spacing[axis]
        }
    }

    /// Number of cells along an axis.
    pub fn cells(&self, axis: usize) -> usize {
        if self.walls[axis] {
            self.shape[axis] - 1
        } else {
            self.shape[axis]
        }
    }
}

pub(crate) enum Geo<'a> {
    Radial { r: &'a [f64], h: f64 },
    Box(BoxDims),
}

pub(crate) fn geo(grid: &Grid) -> Result<Geo<'_>> {
    match &grid.layout {
        Layout::Radial { r, h } => Ok(Geo::Radial { r, h: *h }),
        Layout::Box {
            shape,
            spacing,
            walls,
        } => Ok(Geo::Box(BoxDims {
            shape: *shape,
            spacing: *spacing,
            walls: *walls,
        })),
        Layout::Spherical { .. } => Err(unsupported(grid)),
    }
}

/// Radial derivatives at node `i`, zero above the computed order. Norms of
/// order `l` only see derivatives up to `l`.
fn padded(derivs: &[Vec<f64>], i: usize) -> [f64; JET_DEGREE + 1] {
    let mut d = [0.0; JET_DEGREE + 1];
    for (dj, out) in derivs.iter().zip(d.iter_mut()) {
        *out = dj[i];
    }
    d
}

impl Grid {
    /// One-dimensional derivative of the given order along a layout axis.
    pub(crate) fn diff_op(&self, axis: usize, order: usize) -> Result<DiffOp> {
        match geo(self)? {
            Geo::Radial { r, h } => DiffOp::new(r.len(), h, order, false),
            Geo::Box(b) => DiffOp::new(b.shape[axis], b.spacing[axis], order, !b.walls[axis]),
        }
    }

    fn partial(&self, f: &[f64], axis: usize, order: usize) -> Result<Vec<f64>> {
        let op = self.diff_op(axis, order)?;
        match geo(self)? {
            Geo::Radial { .. } => Ok(op.apply(f)),
            Geo::Box(b) => Ok(op.apply_axis(f, b.shape, axis)),
        }
    }

    pub fn gradient(&self, f: &ScalarField) -> Result<VectorField> {
        match geo(self)? {
            Geo::Radial { .. } => {
                let d = self.partial(&f.0, 0, 1)?;
                Ok(VectorField(d.into_iter().map(|v| [v, 0.0, 0.0]).collect()))
            }
            Geo::Box(_) => {
                let d: Vec<Vec<f64>> = (0..3).map(|a| self.partial(&f.0, a, 1)).collect::<Result<_>>()?;
                Ok(VectorField::from_components([&d[0], &d[1], &d[2]]))
            }
        }
    }

    /// Pointwise divergence by second-order differences.
    pub fn divergence(&self, u: &VectorField) -> Result<ScalarField> {
        match geo(self)? {
            Geo::Radial { r, .. } => {
                let w = u.component(0);
                let dw = self.partial(&w, 0, 1)?;
                Ok(ScalarField((0..r.len()).map(|i| dw[i] + 2.0 * w[i] / r[i]).collect()))
            }
            Geo::Box(_) => {
                let mut out = vec![0.0; u.len()];
                for a in 0..3 {
                    let d = self.partial(&u.component(a), a, 1)?;
                    out.iter_mut().zip(d).for_each(|(o, v)| *o += v);
                }
                Ok(ScalarField(out))
            }
        }
    }

    /// Finite-volume divergence of a flux field: face fluxes are averages of
    /// the two adjacent nodes and the boundary flux is `F . nu` at the boundary
    /// node, so `sum_i V_i div_i` equals the discrete boundary flux exactly.
    pub fn conservative_divergence(&self, flux: &VectorField) -> Result<ScalarField> {
        match geo(self)? {
            Geo::Radial { r, .. } => {
                let n = r.len();
                let w = flux.component(0);
                let face = |i: usize| {
                    let rm = 0.5 * (r[i] + r[i + 1]);
                    4.0 * PI * rm * rm * 0.5 * (w[i] + w[i + 1])
                };
                Ok(ScalarField(
                    (0..n)
                        .map(|i| {
                            let right = if i + 1 < n { face(i) } else { 4.0 * PI * r[i] * r[i] * w[i] };
                            let left = if i > 0 { face(i - 1) } else { 4.0 * PI * r[0] * r[0] * w[0] };
                            (right - left) / self.volume_weights[i]
                        })
                        .collect(),
                ))
            }
            Geo::Box(b) => {
                let mut out = vec![0.0; flux.len()];
                for (lin, o) in out.iter_mut().enumerate() {
                    let ijk = b.ijk(lin);
                    let mut acc = 0.0;
                    for a in 0..3 {
                        let area: f64 = (0..3).filter(|&c| c != a).map(|c| b.dual(c, ijk[c])).product();
                        let fa = flux.0[lin][a];
                        let up = match b.neighbour(ijk, a, true) {
                            Some(nb) => 0.5 * (fa + flux.0[nb][a]),
                            None => fa,
                        };
                        let down = match b.neighbour(ijk, a, false) {
                            Some(nb) => 0.5 * (fa + flux.0[nb][a]),
                            None => fa,
                        };
                        acc += area * (up - down);
                    }
                    *o = acc / self.volume_weights[lin];
                }
                Ok(ScalarField(out))
            }
        }
    }

    /// `sum_i V_i (L0 v)_i` contributions: the weighted finite-volume Laplacian
    /// without boundary flux. Symmetric negative semidefinite.
    pub(crate) fn weighted_laplacian(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        match geo(self)? {
            Geo::Radial { r, h } => {
                let n = r.len();
                out.iter_mut().for_each(|o| *o = 0.0);
                for i in 0..n - 1 {
                    let rm = 0.5 * (r[i] + r[i + 1]);
                    let f = 4.0 * PI * rm * rm * (v[i + 1] - v[i]) / h;
                    out[i] += f;
                    out[i + 1] -= f;
                }
            }
            Geo::Box(b) => {
                for (lin, o) in out.iter_mut().enumerate() {
                    let ijk = b.ijk(lin);
                    let mut acc = 0.0;
                    for a in 0..3 {
                        let area: f64 = (0..3).filter(|&c| c != a).map(|c| b.dual(c, ijk[c])).product();
                        for up in [true, false] {
                            if let Some(nb) = b.neighbour(ijk, a, up) {
                                acc += area * (v[nb] - v[lin]) / b.spacing[a];
                            }
                        }
                    }
                    *o = acc;
                }
            }
        }
        Ok(())
    }

    /// Diagonal of [`Grid::weighted_laplacian`].
    pub(crate) fn weighted_laplacian_diag(&self) -> Result<Vec<f64>> {
        let n = self.len();
        match geo(self)? {
            Geo::Radial { r, h } => {
                let mut diag = vec![0.0; n];
                for i in 0..n - 1 {
                    let rm = 0.5 * (r[i] + r[i + 1]);
                    let c = 4.0 * PI * rm * rm / h;
                    diag[i] -= c;
                    diag[i + 1] -= c;
                }
                Ok(diag)
            }
            Geo::Box(b) => Ok((0..n)
                .map(|lin| {
                    let ijk = b.ijk(lin);
                    let mut acc = 0.0;
                    for a in 0..3 {
                        let area: f64 = (0..3).filter(|&c| c != a).map(|c| b.dual(c, ijk[c])).product();
                        for up in [true, false] {
                            if b.neighbour(ijk, a, up).is_some() {
                                acc -= area / b.spacing[a];
                            }
                        }
                    }
                    acc
                })
                .collect()),
        }
    }

    /// Finite-volume Laplacian with outward normal-derivative datum `g` on the
    /// boundary (zero when `None`).
    pub fn laplacian(&self, v: &ScalarField, g: Option<&ScalarField>) -> Result<ScalarField> {
        let mut out = vec![0.0; v.len()];
        self.weighted_laplacian(&v.0, &mut out)?;
        Ok(ScalarField(
            out.iter()
                .enumerate()
                .map(|(i, o)| {
                    let flux = g.map_or(0.0, |g| g.0[i] * self.area_weights[i]);
                    (o + flux) / self.volume_weights[i]
                })
                .collect(),
        ))
    }

    /// `(u . grad) v`.
    pub fn advect(&self, u: &VectorField, v: &VectorField) -> Result<VectorField> {
        match geo(self)? {
            Geo::Radial { .. } => {
                let dv = self.partial(&v.component(0), 0, 1)?;
                Ok(VectorField::from_fn(u.len(), |i| [u.0[i][0] * dv[i], 0.0, 0.0]))
            }
            Geo::Box(_) => {
                let mut out = VectorField::zeros(u.len());
                for c in 0..3 {
                    let vc = v.component(c);
                    for a in 0..3 {
                        let d = self.partial(&vc, a, 1)?;
                        for (i, o) in out.0.iter_mut().enumerate() {
                            o[c] += u.0[i][a] * d[i];
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// `u . grad f`.
    pub fn directional(&self, u: &VectorField, f: &ScalarField) -> Result<ScalarField> {
        Ok(u.dot(&self.gradient(f)?))
    }

    /// Weight making the Lame operator symmetric on interior nodes.
    pub(crate) fn lame_weights(&self) -> Result<Vec<f64>> {
        match geo(self)? {
            Geo::Radial { r, .. } => Ok(r.iter().map(|ri| ri * ri).collect()),
            Geo::Box(_) => Ok(vec![1.0; self.len()]),
        }
    }

    /// `grad div u` for `u` vanishing on walls (values at boundary nodes are
    /// ignored; the output there is zero).
    pub fn grad_div(&self, u: &VectorField) -> Result<VectorField> {
        match geo(self)? {
            Geo::Radial { r, h } => {
                let n = r.len();
                let w = u.component(0);
                let flux = |i: usize| {
                    let rm = 0.5 * (r[i] + r[i + 1]);
                    let (wl, wr) = (if i == 0 { 0.0 } else { w[i] }, if i + 1 == n - 1 { 0.0 } else { w[i + 1] });
                    (r[i + 1] * r[i + 1] * wr - r[i] * r[i] * wl) / (h * rm * rm)
                };
                let mut out = VectorField::zeros(n);
                for i in 1..n - 1 {
                    out.0[i][0] = (flux(i) - flux(i - 1)) / h;
                }
                Ok(out)
            }
            Geo::Box(b) => Ok(box_grad_div(self, &b, u)),
        }
    }

    /// Componentwise Laplacian of `u` vanishing on walls.
    pub fn vector_laplacian(&self, u: &VectorField) -> Result<VectorField> {
        match geo(self)? {
            // radial fields are curl-free, so the vector Laplacian is grad div
            Geo::Radial { .. } => self.grad_div(u),
            Geo::Box(b) => {
                let mut out = VectorField::zeros(u.len());
                for (lin, o) in out.0.iter_mut().enumerate() {
                    if self.boundary[lin] {
                        continue;
                    }
                    let ijk = b.ijk(lin);
                    for a in 0..3 {
                        let h2 = b.spacing[a] * b.spacing[a];
                        let up = b.neighbour(ijk, a, true).filter(|&nb| !self.boundary[nb]);
                        let dn = b.neighbour(ijk, a, false).filter(|&nb| !self.boundary[nb]);
                        for c in 0..3 {
                            let vu = up.map_or(0.0, |nb| u.0[nb][c]);
                            let vd = dn.map_or(0.0, |nb| u.0[nb][c]);
                            o[c] += (vu - 2.0 * u.0[lin][c] + vd) / h2;
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// `mu Lap u + (mu + lambda) grad div u` for `u` vanishing on walls.
    pub fn lame(&self, u: &VectorField, mu: f64, lambda: f64) -> Result<VectorField> {
        let gd = self.grad_div(u)?;
        let lap = self.vector_laplacian(u)?;
        Ok(lap.scaled(mu).add(&gd.scaled(mu + lambda)))
    }

    /// Diagonal of [`Grid::lame`] on interior nodes, per component.
    pub(crate) fn lame_diag(&self, mu: f64, lambda: f64) -> Result<Vec<[f64; 3]>> {
        match geo(self)? {
            Geo::Radial { r, h } => Ok((0..r.len())
                .map(|i| {
                    if self.boundary[i] {
                        return [0.0; 3];
                    }
                    let rp = 0.5 * (r[i] + r[i + 1]);
                    let rm = 0.5 * (r[i - 1] + r[i]);
                    let d = -(r[i] * r[i]) / (h * h) * (1.0 / (rp * rp) + 1.0 / (rm * rm));
                    [(2.0 * mu + lambda) * d, 0.0, 0.0]
                })
                .collect()),
            Geo::Box(b) => {
                let lap: f64 = b.spacing.iter().map(|h| -2.0 / (h * h)).sum();
                let d: [f64; 3] = std::array::from_fn(|a| mu * lap - (mu + lambda) * 0.5 / (b.spacing[a] * b.spacing[a]));
                Ok((0..self.len()).map(|i| if self.boundary[i] { [0.0; 3] } else { d }).collect())
            }
        }
    }

    /// Number of velocity components carried by the layout.
    pub(crate) fn vector_components(&self) -> usize {
        match self.layout {
            Layout::Radial { .. } => 1,
            _ => 3,
        }
    }

    /// Pointwise `|D^l f|^2` for `l = 0..=max_order`.
    pub fn scalar_derivative_norms(&self, f: &ScalarField, max_order: usize) -> Result<Vec<ScalarField>> {
        self.check_resolution(max_order)?;
        match geo(self)? {
            Geo::Radial { r, .. } => {
                let derivs: Vec<Vec<f64>> =
                    (0..=max_order).map(|j| self.partial(&f.0, 0, j)).collect::<Result<_>>()?;
                let mut out = vec![ScalarField::zeros(r.len()); max_order + 1];
                if max_order > JET_DEGREE {
                    return Err(Error::InvalidParameters(format!("radial norms support order <= {JET_DEGREE}")));
                }
                let jets = self.jets.get(r);
                for (i, jet) in jets.iter().enumerate() {
                    let d = padded(&derivs, i);
                    for (l, v) in jet.scalar_norms(&d).into_iter().take(max_order + 1).enumerate() {
                        out[l].0[i] = v;
                    }
                }
                Ok(out)
            }
            Geo::Box(_) => (0..=max_order).map(|l| self.box_tensor_norm(&[f.0.as_slice()], l)).collect(),
        }
    }

    /// Pointwise `|D^l u|^2` for `l = 0..=max_order`.
    pub fn vector_derivative_norms(&self, u: &VectorField, max_order: usize) -> Result<Vec<ScalarField>> {
        self.check_resolution(max_order)?;
        match geo(self)? {
            Geo::Radial { r, .. } => {
                // u = w r_hat = psi x with psi = w / r
                let psi: Vec<f64> = u.0.iter().zip(r.iter()).map(|(v, ri)| v[0] / ri).collect();
                let derivs: Vec<Vec<f64>> =
                    (0..=max_order).map(|j| self.partial(&psi, 0, j)).collect::<Result<_>>()?;
                let mut out = vec![ScalarField::zeros(r.len()); max_order + 1];
                if max_order > JET_DEGREE {
                    return Err(Error::InvalidParameters(format!("radial norms support order <= {JET_DEGREE}")));
                }
                let jets = self.jets.get(r);
                for (i, jet) in jets.iter().enumerate() {
                    let d = padded(&derivs, i);
                    for (l, v) in jet.radial_vector_norms(&d).into_iter().take(max_order + 1).enumerate() {
                        out[l].0[i] = v;
                    }
                }
                Ok(out)
            }
            Geo::Box(_) => {
                let comps: Vec<Vec<f64>> = (0..3).map(|c| u.component(c)).collect();
                let refs: Vec<&[f64]> = comps.iter().map(|c| c.as_slice()).collect();
                (0..=max_order).map(|l| self.box_tensor_norm(&refs, l)).collect()
            }
        }
    }

    /// `d^alpha f` on a box by composed one-dimensional differences.
    pub(crate) fn mixed_partial(&self, f: &[f64], alpha: [usize; 3]) -> Result<Vec<f64>> {
        let mut d = f.to_vec();
        for (axis, &k) in alpha.iter().enumerate() {
            if k > 0 {
                d = self.partial(&d, axis, k)?;
            }
        }
        Ok(d)
    }

    /// `d^j f / dr^j` on a radial grid.
    pub(crate) fn radial_derivative(&self, f: &[f64], order: usize) -> Result<Vec<f64>> {
        if order == 0 {
            return Ok(f.to_vec());
        }
        self.partial(f, 0, order)
    }

    fn box_tensor_norm(&self, comps: &[&[f64]], l: usize) -> Result<ScalarField> {
        let mut out = vec![0.0; self.len()];
        for a0 in 0..=l {
            for a1 in 0..=l - a0 {
                let alpha = [a0, a1, l - a0 - a1];
                let weight = factorial(l) / alpha.iter().map(|&k| factorial(k)).product::<f64>();
                for c in comps {
                    let d = self.mixed_partial(c, alpha)?;
                    out.iter_mut().zip(&d).for_each(|(o, v)| *o += weight * v * v);
                }
            }
        }
        Ok(ScalarField(out))
    }

    fn check_resolution(&self, order: usize) -> Result<()> {
        let need = (4 * order).max(1);
        let got = match geo(self)? {
            Geo::Radial { r, .. } => r.len(),
            Geo::Box(b) => *b.shape.iter().min().unwrap(),
        };
        if got < need {
            return Err(Error::ResolutionTooLow { order, need, got });
        }
        Ok(())
    }

    /// Radial-grid value of `f` at radius `rho` by four-point Lagrange interpolation.
    pub fn interpolate_radial(&self, f: &ScalarField, rho: f64) -> Result<f64> {
        let Geo::Radial { r, h } = geo(self)? else {
            return Err(Error::UnsupportedGeometry("radial interpolation on a box".into()));
        };
        let n = r.len();
        let s = ((rho - r[0]) / h).clamp(0.0, (n - 1) as f64);
        let i0 = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let mut acc = 0.0;
        for j in i0..i0 + 4 {
            let mut l = 1.0;
            for k in i0..i0 + 4 {
                if k != j {
                    l *= (s - k as f64) / (j as f64 - k as f64);
                }
            }
            acc += l * f.0[j];
        }
        Ok(acc)
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `-D^T D u` with `D` the node-to-cell divergence (edge-averaged differences).
fn box_grad_div(grid: &Grid, b: &BoxDims, u: &VectorField) -> VectorField {
    let cells = [b.cells(0), b.cells(1), b.cells(2)];
    let s = b.strides();
    let node = |c: [usize; 3], off: [usize; 3]| -> usize {
        let idx: [usize; 3] = std::array::from_fn(|a| (c[a] + off[a]) % b.shape[a]);
        idx[0] * s[0] + idx[1] * s[1] + idx[2]
    };
    let val = |lin: usize, comp: usize| if grid.boundary[lin] { 0.0 } else { u.0[lin][comp] };
    let mut out = VectorField::zeros(u.len());
    for ci in 0..cells[0] {
        for cj in 0..cells[1] {
            for ck in 0..cells[2] {
                let c = [ci, cj, ck];
                let mut div = 0.0;
                for a in 0..3 {
                    let mut acc = 0.0;
                    for corner in 0..8 {
                        let off = [corner >> 2 & 1, corner >> 1 & 1, corner & 1];
                        let sign = if off[a] == 1 { 1.0 } else { -1.0 };
                        acc += sign * val(node(c, off), a);
                    }
                    div += acc / (4.0 * b.spacing[a]);
                }
                for corner in 0..8 {
                    let off = [corner >> 2 & 1, corner >> 1 & 1, corner & 1];
                    let lin = node(c, off);
                    if grid.boundary[lin] {
                        continue;
                    }
                    for a in 0..3 {
                        let sign = if off[a] == 1 { 1.0 } else { -1.0 };
                        // D^T with unit cell weights divided by the interior node volume
                        out.0[lin][a] -= sign * div / (4.0 * b.spacing[a]);
                    }
                }
            }
        }
    }
    out
}
