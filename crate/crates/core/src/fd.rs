//! Finite-difference weights and one-dimensional derivative operators.
//!
//! Every operator is second-order accurate: centered stencils in the
//! interior, shifted one-sided stencils of `order + 2` points near the ends
//! of a bounded line.

use crate::error::{Error, Result};

/// Fornberg's recursion. Returns `w[m][j]`, the weight of `nodes[j]` in the
/// approximation of the m-th derivative at `x0`, for `m <= max_order`.
pub fn fornberg_weights(x0: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

#[derive(Debug, Clone)]
struct Row {
    start: isize,
    weights: Vec<f64>,
}

/// Derivative of a fixed order along a uniformly spaced line of nodes.
#[derive(Debug, Clone)]
pub struct DiffOp {
    n: usize,
    order: usize,
    periodic: bool,
    rows: Vec<Row>,
}

impl DiffOp {
    pub fn new(n: usize, h: f64, order: usize, periodic: bool) -> Result<Self> {
        if order == 0 {
            let rows = (0..n)
                .map(|i| Row {
                    start: i as isize,
                    weights: vec![1.0],
                })
                .collect();
            return Ok(Self {
                n,
                order,
                periodic,
                rows,
            });
        }
        let half = (order + 1) / 2;
        let width_c = 2 * half + 1;
        let width_b = order + 2;
        let need = if periodic { width_c } else { width_b.max(width_c) };
        if n < need {
            return Err(Error::ResolutionTooLow {
                order,
                need,
                got: n,
            });
        }
        let centered = {
            let pts: Vec<f64> = (0..width_c).map(|j| (j as f64 - half as f64) * h).collect();
            fornberg_weights(0.0, &pts, order)[order].clone()
        };
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            if periodic || (i >= half && i + half < n) {
                rows.push(Row {
                    start: i as isize - half as isize,
                    weights: centered.clone(),
                });
            } else {
                let start = (i as isize - (width_b as isize - 1) / 2).clamp(0, (n - width_b) as isize);
                let pts: Vec<f64> = (0..width_b)
                    .map(|j| (start + j as isize - i as isize) as f64 * h)
                    .collect();
                rows.push(Row {
                    start,
                    weights: fornberg_weights(0.0, &pts, order)[order].clone(),
                });
            }
        }
        Ok(Self {
            n,
            order,
            periodic,
            rows,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    fn idx(&self, k: isize) -> usize {
        if self.periodic {
            k.rem_euclid(self.n as isize) as usize
        } else {
            k as usize
        }
    }

    /// Derivative at node `i` of the line `get(0..n)`.
    #[inline]
    pub fn at<F: Fn(usize) -> f64>(&self, i: usize, get: F) -> f64 {
        let row = &self.rows[i];
        row.weights
            .iter()
            .enumerate()
            .map(|(j, w)| w * get(self.idx(row.start + j as isize)))
            .sum()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.at(i, |k| f[k])).collect()
    }

    /// Apply along one axis of a row-major 3-D array with the given shape.
    pub fn apply_axis(&self, f: &[f64], shape: [usize; 3], axis: usize) -> Vec<f64> {
        let strides = [shape[1] * shape[2], shape[2], 1];
        let stride = strides[axis];
        let mut out = vec![0.0; f.len()];
        for (lin, o) in out.iter_mut().enumerate() {
            let pos = (lin / stride) % shape[axis];
            let base = lin - pos * stride;
            *o = self.at(pos, |k| f[base + k * stride]);
        }
        out
    }
}
