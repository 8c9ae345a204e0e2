//! Linearized semi-discrete operator on a radial annulus, assembled as a
//! dense matrix directly from the stencil formulas, and its spectrum.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};

use crate::domain::{DomainSpec, Grid};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::steady::SteadyState;

use super::PerturbationState;

type C64 = Complex<f64>;

#[derive(Debug, Clone)]
pub struct LinearSpectrum {
    /// Eigenvalues outside the kernel, by decreasing real part.
    pub eigenvalues: Vec<C64>,
    /// Dimension of the kernel; the conserved mass alone once odd-even
    /// density patterns are damped.
    pub invariants: usize,
    /// Largest real part outside the kernel.
    pub full_abscissa: f64,
    /// Largest real part among eigenvalues carrying at least `weight_tol`
    /// of the largest modal contribution of the supplied initial data.
    pub excited_abscissa: Option<f64>,
    pub weight_tol: f64,
}

struct RadialStencils {
    n: usize,
    h: f64,
    r: Vec<f64>,
    vol: Vec<f64>,
}

impl RadialStencils {
    fn new(r0: f64, r1: f64, n: usize) -> Self {
        let h = (r1 - r0) / (n - 1) as f64;
        let r: Vec<f64> = (0..n).map(|i| r0 + i as f64 * h).collect();
        let vol = (0..n)
            .map(|i| {
                let lo = if i == 0 { r0 } else { r[i] - 0.5 * h };
                let hi = if i == n - 1 { r1 } else { r[i] + 0.5 * h };
                4.0 * PI / 3.0 * (hi.powi(3) - lo.powi(3))
            })
            .collect();
        Self { n, h, r, vol }
    }

    fn face(&self, i: usize) -> f64 {
        self.r[i] + 0.5 * self.h
    }

    fn divergence(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            if i + 1 < n {
                let a = 4.0 * PI * self.face(i).powi(2) * 0.5;
                m[(i, i)] += a;
                m[(i, i + 1)] += a;
            } else {
                m[(i, i)] += 4.0 * PI * self.r[i].powi(2);
            }
            if i > 0 {
                let a = 4.0 * PI * self.face(i - 1).powi(2) * 0.5;
                m[(i, i)] -= a;
                m[(i, i - 1)] -= a;
            } else {
                m[(i, i)] -= 4.0 * PI * self.r[i].powi(2);
            }
            for j in 0..n {
                m[(i, j)] /= self.vol[i];
            }
        }
        m
    }

    fn gradient(&self) -> DMatrix<f64> {
        let (n, h) = (self.n, self.h);
        let mut m = DMatrix::zeros(n, n);
        m[(0, 0)] = -1.5 / h;
        m[(0, 1)] = 2.0 / h;
        m[(0, 2)] = -0.5 / h;
        for i in 1..n - 1 {
            m[(i, i - 1)] = -0.5 / h;
            m[(i, i + 1)] = 0.5 / h;
        }
        m[(n - 1, n - 1)] = 1.5 / h;
        m[(n - 1, n - 2)] = -2.0 / h;
        m[(n - 1, n - 3)] = 0.5 / h;
        m
    }

    fn neumann_laplacian(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            let c = 4.0 * PI * self.face(i).powi(2) / self.h;
            m[(i, i)] -= c / self.vol[i];
            m[(i, i + 1)] += c / self.vol[i];
            m[(i + 1, i + 1)] -= c / self.vol[i + 1];
            m[(i + 1, i)] += c / self.vol[i + 1];
        }
        m
    }

    /// Radial grad-div on interior nodes, walls held at zero. Indexed by
    /// interior position `i - 1`.
    fn grad_div(&self) -> DMatrix<f64> {
        let (n, h) = (self.n, self.h);
        let m_int = n - 2;
        let mut m = DMatrix::zeros(m_int, m_int);
        // D_{i+1/2} = (r_{i+1}^2 w_{i+1} - r_i^2 w_i) / (h r_{i+1/2}^2)
        for i in 1..n - 1 {
            let row = i - 1;
            let fp = 1.0 / (h * h * self.face(i).powi(2));
            let fm = 1.0 / (h * h * self.face(i - 1).powi(2));
            m[(row, row)] -= self.r[i].powi(2) * (fp + fm);
            if i + 1 < n - 1 {
                m[(row, row + 1)] += self.r[i + 1].powi(2) * fp;
            }
            if i > 1 {
                m[(row, row - 1)] += self.r[i - 1].powi(2) * fm;
            }
        }
        m
    }
}

/// Matrix of the linearized system acting on `[q (all nodes); w (interior nodes)]`.
pub fn linearized_operator(grid: &Grid, steady: &SteadyState, mu: f64, lambda: f64) -> Result<DMatrix<f64>> {
    Ok(assemble(grid, steady, mu, lambda)?.0)
}

/// The operator and the potential map `q -> phi`.
fn assemble(grid: &Grid, steady: &SteadyState, mu: f64, lambda: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (r0, r1, n) = match &grid.spec {
        DomainSpec::Annulus { r0, r1, radial: true, resolution } => (*r0, *r1, resolution[0]),
        _ => {
            return Err(Error::UnsupportedGeometry(
                "the linearized operator is assembled for radial annuli only".into(),
            ))
        }
    };
    let st = RadialStencils::new(r0, r1, n);
    let gamma = steady.gamma;
    let rho = &steady.rho.0;
    let div = st.divergence();
    let grad = st.gradient();
    let lap = st.neumann_laplacian();
    let total: f64 = st.vol.iter().sum();
    let mut m = lap.clone();
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] += st.vol[j] / total;
        }
    }
    let m_inv = m
        .try_inverse()
        .ok_or_else(|| Error::Precondition("potential operator is singular".into()))?;
    let grad_phi_bg = &grad * DVector::from_vec(steady.phi.0.clone());
    let kk = st.grad_div() * (2.0 * mu + lambda);

    let mi = n - 2;
    let mut a = DMatrix::zeros(n + mi, n + mi);
    let smooth = super::DENSITY_SMOOTHING * st.h * st.h;
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = smooth * lap[(i, j)];
        }
    }
    // q_t = -D diag(rho~) E w + c h^2 L q
    for i in 0..n {
        for j in 1..n - 1 {
            a[(i, n + j - 1)] = -div[(i, j)] * rho[j];
        }
    }
    // w_t = rho~^-1 [K w - G diag(gamma rho~^(gamma-1)) q + rho~ G M^-1 q + (G Phi~) q]
    let pdiag = DVector::from_iterator(n, rho.iter().map(|r| gamma * r.powf(gamma - 1.0)));
    let gp = &grad * DMatrix::from_diagonal(&pdiag);
    let gm = &grad * &m_inv;
    for i in 1..n - 1 {
        let row = n + i - 1;
        for j in 0..n {
            let mut v = -gp[(i, j)] + rho[i] * gm[(i, j)];
            if i == j {
                v += grad_phi_bg[i];
            }
            a[(row, j)] = v / rho[i];
        }
        for j in 0..mi {
            a[(row, n + j)] = kk[(i - 1, j)] / rho[i];
        }
    }
    Ok((a, m_inv))
}

/// Eigenvectors of an upper-triangular matrix, columns normalized to unit
/// diagonal entry.
fn triangular_eigenvectors(t: &DMatrix<C64>) -> DMatrix<C64> {
    let n = t.nrows();
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let floor = 1e-14 * scale;
    let mut y = DMatrix::zeros(n, n);
    for j in 0..n {
        y[(j, j)] = C64::new(1.0, 0.0);
        for i in (0..j).rev() {
            let mut s = C64::new(0.0, 0.0);
            for k in i + 1..=j {
                s += t[(i, k)] * y[(k, j)];
            }
            let mut d = t[(i, i)] - t[(j, j)];
            if d.norm() < floor {
                d = C64::new(floor, 0.0);
            }
            y[(i, j)] = -s / d;
        }
    }
    y
}

fn sorted_spectrum(lambdas: &[C64]) -> Result<(Vec<usize>, usize)> {
    let scale = lambdas.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let in_kernel = |z: &C64| z.norm() <= 1e-10 * scale;
    let invariants = lambdas.iter().filter(|z| in_kernel(z)).count();
    let mut order: Vec<usize> = (0..lambdas.len()).filter(|&i| !in_kernel(&lambdas[i])).collect();
    if order.is_empty() {
        return Err(Error::Precondition("linearized operator vanishes".into()));
    }
    order.sort_by(|&i, &j| lambdas[j].re.total_cmp(&lambdas[i].re));
    Ok((order, invariants))
}

fn pack(n: usize, q0: &ScalarField, u0: &VectorField) -> DVector<C64> {
    let mut x0 = DVector::<C64>::zeros(2 * n - 2);
    for i in 0..n {
        x0[i] = C64::new(q0.0[i], 0.0);
    }
    for i in 1..n - 1 {
        x0[n + i - 1] = C64::new(u0.0[i][0], 0.0);
    }
    x0
}

/// Eigen-expansion of given initial data under the linearized operator.
#[derive(Debug, Clone)]
pub struct ModalExpansion {
    n: usize,
    a: DMatrix<f64>,
    m_inv: DMatrix<f64>,
    pub eigenvalues: Vec<C64>,
    /// Eigenvectors as columns, unit diagonal in the Schur basis.
    vectors: DMatrix<C64>,
    coefficients: DVector<C64>,
}

pub fn modal_expansion(
    grid: &Grid,
    steady: &SteadyState,
    mu: f64,
    lambda: f64,
    q0: &ScalarField,
    u0: &VectorField,
) -> Result<ModalExpansion> {
    let (a, m_inv) = assemble(grid, steady, mu, lambda)?;
    let n = grid.len();
    if q0.len() != n || u0.len() != n {
        return Err(Error::Precondition("initial data does not match the grid".into()));
    }
    let ac: DMatrix<C64> = a.map(|v| C64::new(v, 0.0));
    let (q, t) = ac.schur().unpack();
    let y = triangular_eigenvectors(&t);
    let z = q.adjoint() * pack(n, q0, u0);
    let coefficients = y
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::Precondition("eigenvector basis is singular".into()))?;
    Ok(ModalExpansion {
        n,
        eigenvalues: (0..t.nrows()).map(|i| t[(i, i)]).collect(),
        vectors: q * y,
        coefficients,
        a,
        m_inv,
    })
}

impl ModalExpansion {
    /// `|c_j| |y_j|` for every eigenvalue.
    pub fn contributions(&self) -> Vec<f64> {
        (0..self.eigenvalues.len())
            .map(|j| self.coefficients[j].norm() * self.vectors.column(j).norm())
            .collect()
    }

    /// The linear solution at time `t` with its potential and time derivatives.
    pub fn state_at(&self, t: f64) -> PerturbationState {
        let n = self.n;
        let growth = DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().zip(self.coefficients.iter()).map(|(l, c)| (l * t).exp() * c),
        );
        let x: DVector<f64> = (&self.vectors * growth).map(|z| z.re);
        let xt = &self.a * &x;
        let q = DVector::from_iterator(n, x.iter().take(n).copied());
        let phi = &self.m_inv * &q;
        let mut u = VectorField::zeros(n);
        let mut u_t = VectorField::zeros(n);
        for i in 1..n - 1 {
            u.0[i][0] = x[n + i - 1];
            u_t.0[i][0] = xt[n + i - 1];
        }
        PerturbationState {
            t,
            q: ScalarField(q.iter().copied().collect()),
            u,
            phi: ScalarField(phi.iter().copied().collect()),
            q_t: ScalarField(xt.iter().take(n).copied().collect()),
            u_t,
        }
    }

    /// `E` of the linear solution at each time.
    pub fn energy_series(&self, grid: &Grid, steady: &SteadyState, times: &[f64]) -> Result<Vec<f64>> {
        times
            .iter()
            .map(|&t| Ok(crate::energy::energy_functionals(grid, &self.state_at(t), steady)?.e))
            .collect()
    }
}

pub fn linear_spectrum(
    grid: &Grid,
    steady: &SteadyState,
    mu: f64,
    lambda: f64,
    initial: Option<(&ScalarField, &VectorField)>,
) -> Result<LinearSpectrum> {
    let weight_tol = 0.1;
    let (lambdas, excited_abscissa, order, invariants) = match initial {
        None => {
            let a = linearized_operator(grid, steady, mu, lambda)?;
            let (_, t) = a.map(|v| C64::new(v, 0.0)).schur().unpack();
            let lambdas: Vec<C64> = (0..t.nrows()).map(|i| t[(i, i)]).collect();
            let (order, invariants) = sorted_spectrum(&lambdas)?;
            (lambdas, None, order, invariants)
        }
        Some((q0, u0)) => {
            let m = modal_expansion(grid, steady, mu, lambda, q0, u0)?;
            let (order, invariants) = sorted_spectrum(&m.eigenvalues)?;
            let contrib = m.contributions();
            let max = order.iter().map(|&j| contrib[j]).fold(0.0, f64::max);
            let excited = if max == 0.0 {
                None
            } else {
                order.iter().find(|&&j| contrib[j] >= weight_tol * max).map(|&j| m.eigenvalues[j].re)
            };
            (m.eigenvalues, excited, order, invariants)
        }
    };
    Ok(LinearSpectrum {
        eigenvalues: order.iter().map(|&i| lambdas[i]).collect(),
        invariants,
        full_abscissa: lambdas[order[0]].re,
        excited_abscissa,
        weight_tol,
    })
}
