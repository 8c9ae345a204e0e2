//! Cartesian derivative tensors of radially symmetric fields.
//!
//! At the point `(r, 0, 0)` a radial function satisfies
//! `f(x + (a, b, c)) = f(r + s)` with `s = sqrt((r + a)^2 + b^2 + c^2) - r`.
//! Composing the one-dimensional Taylor series of `f` with the series of `s`
//! gives every mixed partial `d^alpha f`, from which
//! `|D^l f|^2 = sum_{|alpha| = l} l!/alpha! (d^alpha f)^2` follows.

/// Truncated polynomial in three variables.
#[derive(Debug, Clone)]
pub(crate) struct Poly3 {
    deg: usize,
    coef: Vec<f64>,
}

fn monomials(deg: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for total in 0..=deg {
        for i in (0..=total).rev() {
            for j in (0..=total - i).rev() {
                out.push([i, j, total - i - j]);
            }
        }
    }
    out
}

fn index_of(e: [usize; 3]) -> usize {
    // monomials are grouped by total degree, then by descending i, descending j
    let t = e[0] + e[1] + e[2];
    let before_total = t * (t + 1) * (t + 2) / 6;
    let rest = t - e[0];
    // within the group: i from t down; for each i there are (t - i + 1) entries
    let before_i: usize = (e[0] + 1..=t).map(|i| t - i + 1).sum();
    before_total + before_i + (rest - e[1])
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Poly3 {
    fn zero(deg: usize) -> Self {
        Self {
            deg,
            coef: vec![0.0; (deg + 1) * (deg + 2) * (deg + 3) / 6],
        }
    }

    fn set(&mut self, e: [usize; 3], v: f64) {
        let i = index_of(e);
        self.coef[i] = v;
    }

    fn get(&self, e: [usize; 3]) -> f64 {
        self.coef[index_of(e)]
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.deg);
        let mons = monomials(self.deg);
        for (ia, ea) in mons.iter().enumerate() {
            let ca = self.coef[ia];
            if ca == 0.0 {
                continue;
            }
            let ta = ea[0] + ea[1] + ea[2];
            for (ib, eb) in mons.iter().enumerate() {
                let tb = eb[0] + eb[1] + eb[2];
                if ta + tb > self.deg {
                    break;
                }
                let cb = other.coef[ib];
                if cb != 0.0 {
                    let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                    out.coef[index_of(e)] += ca * cb;
                }
            }
        }
        out
    }

    fn axpy(&mut self, a: f64, x: &Self) {
        self.coef.iter_mut().zip(&x.coef).for_each(|(y, v)| *y += a * v);
    }
}

/// Derivative-tensor norms at radius `r` as quadratic forms in the radial
/// derivatives: `|D^l f|^2 = sum_rows (row . d)^2`.
#[derive(Debug, Clone)]
pub(crate) struct RadialJet {
    deg: usize,
    scalar_rows: Vec<Vec<Vec<f64>>>,
    vector_rows: Vec<Vec<Vec<f64>>>,
}

/// Rows `sqrt(l! alpha!) [p_0[alpha], .., p_deg[alpha]]` over `|alpha| = l`.
fn rows(polys: &[Poly3], l: usize) -> Vec<Vec<f64>> {
    let lf = factorial(l);
    monomials(l)
        .into_iter()
        .filter(|e| e[0] + e[1] + e[2] == l)
        .map(|e| {
            let w = (lf * factorial(e[0]) * factorial(e[1]) * factorial(e[2])).sqrt();
            polys.iter().map(|p| w * p.get(e)).collect()
        })
        .collect()
}

impl RadialJet {
    pub(crate) fn new(r: f64, deg: usize) -> Self {
        // eps = (2 r a + a^2 + b^2 + c^2) / r^2
        let mut eps = Poly3::zero(deg);
        if deg >= 1 {
            eps.set([1, 0, 0], 2.0 / r);
        }
        if deg >= 2 {
            for e in [[2, 0, 0], [0, 2, 0], [0, 0, 2]] {
                eps.set(e, 1.0 / (r * r));
            }
        }
        // sqrt(1 + eps) - 1 = sum_{n >= 1} binom(1/2, n) eps^n
        let mut s = Poly3::zero(deg);
        let mut eps_n = eps.clone();
        let mut binom = 0.5;
        for n in 1..=deg {
            s.axpy(r * binom, &eps_n);
            eps_n = eps_n.mul(&eps);
            binom *= (0.5 - n as f64) / (n as f64 + 1.0);
        }
        // f(r + s) = sum_j f^(j)(r) s^j / j!
        let mut s_pow = Vec::with_capacity(deg + 1);
        let mut one = Poly3::zero(deg);
        one.set([0, 0, 0], 1.0);
        s_pow.push(one);
        for j in 1..=deg {
            let next = s_pow[j - 1].mul(&s);
            s_pow.push(next);
        }
        for (j, p) in s_pow.iter_mut().enumerate() {
            p.coef.iter_mut().for_each(|c| *c /= factorial(j));
        }
        // u = psi(|x|) x, components (r + a, b, c) psi
        let mut lin = [Poly3::zero(deg), Poly3::zero(deg), Poly3::zero(deg)];
        lin[0].set([0, 0, 0], r);
        if deg >= 1 {
            lin[0].set([1, 0, 0], 1.0);
            lin[1].set([0, 1, 0], 1.0);
            lin[2].set([0, 0, 1], 1.0);
        }
        let comps: Vec<Vec<Poly3>> = lin.iter().map(|x| s_pow.iter().map(|p| x.mul(p)).collect()).collect();
        let scalar_rows = (0..=deg).map(|l| rows(&s_pow, l)).collect();
        let vector_rows = (0..=deg)
            .map(|l| comps.iter().flat_map(|c| rows(c, l)).collect())
            .collect();
        Self {
            deg,
            scalar_rows,
            vector_rows,
        }
    }

    fn eval(table: &[Vec<Vec<f64>>], d: &[f64]) -> Vec<f64> {
        table
            .iter()
            .map(|rows| {
                rows.iter()
                    .map(|row| {
                        let v: f64 = row.iter().zip(d).map(|(a, b)| a * b).sum();
                        v * v
                    })
                    .sum()
            })
            .collect()
    }

    /// `|D^l f|^2` for `l = 0..=deg`, given `f^(j)(r)` for `j = 0..=deg`.
    pub(crate) fn scalar_norms(&self, derivs: &[f64]) -> Vec<f64> {
        debug_assert!(derivs.len() > self.deg);
        Self::eval(&self.scalar_rows, derivs)
    }

    /// `|D^l u|^2` for the vector field `u = psi(|x|) x`, given `psi^(j)(r)`.
    pub(crate) fn radial_vector_norms(&self, psi_derivs: &[f64]) -> Vec<f64> {
        debug_assert!(psi_derivs.len() > self.deg);
        Self::eval(&self.vector_rows, psi_derivs)
    }
}

/// Degree-4 jets at every radial node, built on first use.
#[derive(Debug, Clone, Default)]
pub(crate) struct JetCache(std::sync::OnceLock<Vec<RadialJet>>);

impl JetCache {
    pub(crate) fn get(&self, r: &[f64]) -> &[RadialJet] {
        self.0.get_or_init(|| r.iter().map(|&ri| RadialJet::new(ri, JET_DEGREE)).collect())
    }
}

impl PartialEq for JetCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

pub(crate) const JET_DEGREE: usize = 4;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_indexing_is_consistent() {
        for (i, e) in monomials(5).into_iter().enumerate() {
            assert_eq!(index_of(e), i, "{e:?}");
        }
    }

    #[test]
    fn quadratic_radius_has_hessian_two_identity() {
        // f = |x|^2: |Df|^2 = 4 r^2, |D^2 f|^2 = 12, higher vanish
        let r = 1.7;
        let jet = RadialJet::new(r, 4);
        let n = jet.scalar_norms(&[r * r, 2.0 * r, 2.0, 0.0, 0.0]);
        assert!((n[0] - r.powi(4)).abs() < 1e-12);
        assert!((n[1] - 4.0 * r * r).abs() < 1e-12);
        assert!((n[2] - 12.0).abs() < 1e-12);
        assert!(n[3].abs() < 1e-20 && n[4].abs() < 1e-20);
    }

    #[test]
    fn inverse_radius_matches_closed_form() {
        // f = 1/|x|: D^2 f = (3 x x^T - r^2 I) / r^5, so |D^2 f|^2 = 6 / r^6
        let r = 1.3;
        let jet = RadialJet::new(r, 3);
        let d = [1.0 / r, -1.0 / r.powi(2), 2.0 / r.powi(3), -6.0 / r.powi(4)];
        let n = jet.scalar_norms(&d);
        assert!((n[1] - 1.0 / r.powi(4)).abs() < 1e-12);
        assert!((n[2] - 6.0 / r.powi(6)).abs() < 1e-12);
        // third derivatives of 1/r: T = -15 xxx/r^7 + 3 sym(delta x)/r^5; |T|^2 = 90/r^8
        assert!((n[3] - 90.0 / r.powi(8)).abs() < 1e-10, "{}", n[3]);
    }

    #[test]
    fn constant_radial_vector_scaling_is_identity_map() {
        // u = x (psi = 1): |u|^2 = r^2, |Du|^2 = 3, higher vanish
        let r = 2.0;
        let jet = RadialJet::new(r, 4);
        let n = jet.radial_vector_norms(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((n[0] - 4.0).abs() < 1e-14);
        assert!((n[1] - 3.0).abs() < 1e-14);
        assert!(n[2..].iter().all(|v| v.abs() < 1e-20));
    }
}
