//! Jacobi-preconditioned conjugate gradients.

use crate::error::{Error, Result};

pub(crate) struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive (semi)definite `A` given as an
/// operator. Stops when `|r| <= tol * |b|`. `project` is applied to every
/// residual, which keeps iterates out of a known null space.
pub(crate) fn pcg(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    diag: &[f64],
    tol: f64,
    max_iter: usize,
    project: impl Fn(&mut [f64]),
) -> Result<CgOutcome> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv: Vec<f64> = diag.iter().map(|d| if *d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = b.to_vec();
    project(&mut r);
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
    project(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = dot(&r, &r).sqrt() / bnorm;
    for it in 0..max_iter {
        if rel <= tol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                residual: rel,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        project(&mut r);
        rel = dot(&r, &r).sqrt() / bnorm;
        for i in 0..n {
            z[i] = r[i] * inv[i];
        }
        project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // recompute the true residual before giving up
    apply(&x, &mut ap);
    let mut tr: Vec<f64> = b.iter().zip(&ap).map(|(b, a)| b - a).collect();
    project(&mut tr);
    let true_rel = dot(&tr, &tr).sqrt() / bnorm;
    if true_rel <= tol {
        return Ok(CgOutcome {
            x,
            iterations: max_iter,
            residual: true_rel,
        });
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: true_rel,
    })
}
