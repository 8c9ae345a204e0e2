//! Oracles shared by the integration targets.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

/// Radial finite-volume Laplacian assembled by hand: dual shells between
/// midpoints, fluxes `4 pi r_m^2 (v_{i+1} - v_i) / h`, no flux at the walls.
pub fn radial_laplacian(r0: f64, r1: f64, n: usize) -> DMatrix<f64> {
    let h = (r1 - r0) / (n - 1) as f64;
    let r: Vec<f64> = (0..n).map(|i| r0 + i as f64 * h).collect();
    let shell = |a: f64, b: f64| 4.0 * PI / 3.0 * (b.powi(3) - a.powi(3));
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        let rm = 0.5 * (r[i] + r[i + 1]);
        let c = 4.0 * PI * rm * rm / h;
        l[(i, i)] -= c;
        l[(i, i + 1)] += c;
        l[(i + 1, i + 1)] -= c;
        l[(i + 1, i)] += c;
    }
    for i in 0..n {
        let lo = if i == 0 { r0 } else { r[i] - 0.5 * h };
        let hi = if i == n - 1 { r1 } else { r[i] + 0.5 * h };
        let v = shell(lo, hi);
        for j in 0..n {
            l[(i, j)] /= v;
        }
    }
    l
}

/// First-order density response to `rho_bar = 1 + eps b` around the uniform
/// state: `(gamma L - I) q = -eps b`.
pub fn linear_response(l: &DMatrix<f64>, gamma: f64, eps: f64, b: &[f64]) -> DVector<f64> {
    let n = l.nrows();
    let a = l * gamma - DMatrix::identity(n, n);
    let rhs = DVector::from_iterator(n, b.iter().map(|v| -eps * v));
    a.lu().solve(&rhs).expect("gamma L - I is invertible")
}

/// `log2` of successive error ratios.
#[allow(dead_code)]
pub fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
