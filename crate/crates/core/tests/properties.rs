use proptest::prelude::*;

use nsp_core::domain::{build_grid, DomainSpec, Grid};
use nsp_core::elliptic::{solve_neumann_poisson, LameProblem, NeumannProblem};
use nsp_core::energy::{decay_fit, sobolev_norm};
use nsp_core::field::{ScalarField, VectorField};

fn radial(n: usize) -> Grid {
    build_grid(&DomainSpec::radial_annulus(1.0, 2.0, n)).unwrap()
}

fn small_box() -> Grid {
    build_grid(&DomainSpec::Box { lengths: [1.0, 1.5, 1.0], walls: [true, true, false], resolution: [8, 8, 8] }).unwrap()
}

/// Smooth field from a few cosine/sine coefficients per axis.
fn smooth(grid: &Grid, coef: &[f64]) -> ScalarField {
    grid.sample(|x| {
        coef.iter()
            .enumerate()
            .map(|(k, c)| {
                let w = (k + 1) as f64;
                c * ((w * x[0]).cos() + (0.5 * w * x[1] + 0.3).sin() * (w * x[2]).cos())
            })
            .sum()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn norms_are_absolutely_homogeneous(
        coef in prop::collection::vec(-1.0f64..1.0, 1..5),
        alpha in -10.0f64..10.0,
        m in 0usize..=3,
    ) {
        let g = radial(32);
        let f = smooth(&g, &coef);
        let base = sobolev_norm(&g, &f, m).unwrap();
        let scaled = sobolev_norm(&g, &f.scaled(alpha), m).unwrap();
        prop_assert!((scaled - alpha.abs() * base).abs() <= 1e-12 * (1.0 + alpha.abs() * base));
    }

    #[test]
    fn decay_fit_ignores_time_shifts(
        c in 0.1f64..10.0,
        sigma in -1.0f64..3.0,
        shift in -50.0f64..50.0,
        noise in prop::collection::vec(-0.01f64..0.01, 40),
    ) {
        let t: Vec<f64> = (0..40).map(|i| 0.25 * i as f64).collect();
        let e: Vec<f64> = t.iter().zip(&noise).map(|(t, n)| c * (-sigma * t).exp() * (1.0 + n)).collect();
        let shifted: Vec<f64> = t.iter().map(|t| t + shift).collect();
        let a = decay_fit(&t, &e).unwrap();
        let b = decay_fit(&shifted, &e).unwrap();
        prop_assert!((a.sigma - b.sigma).abs() <= 1e-12, "{} vs {}", a.sigma, b.sigma);
        prop_assert!((a.goodness - b.goodness).abs() <= 1e-12);
    }

    #[test]
    fn neumann_solution_is_mean_zero(coef in prop::collection::vec(-1.0f64..1.0, 1..4), boxed in any::<bool>()) {
        let g = if boxed { small_box() } else { radial(40) };
        let mut f = smooth(&g, &coef);
        g.project_mean_zero(&mut f);
        prop_assume!(f.max_abs() > 1e-8);
        let sol = solve_neumann_poisson(&NeumannProblem::homogeneous(&g, f).unwrap()).unwrap();
        prop_assert!(g.mean(&sol.v).abs() <= 1e-12 * (1.0 + sol.v.max_abs()));
    }

    #[test]
    fn subharmonic_solutions_peak_on_the_boundary(
        values in prop::collection::vec(0.0f64..1.0, 40),
        boxed in any::<bool>(),
    ) {
        // Lap v = f >= 0 at interior nodes; the boundary datum carries the
        // compensating outflow so the problem is compatible
        let g = if boxed { small_box() } else { radial(40) };
        let f = ScalarField::from_fn(g.len(), |i| if g.boundary[i] { 0.0 } else { values[i % values.len()] });
        prop_assume!(g.integrate(&f) > 1e-6);
        let outflow = g.integrate(&f) / g.boundary_integrate(&ScalarField::constant(g.len(), 1.0));
        let datum = ScalarField::constant(g.len(), outflow);
        let sol = solve_neumann_poisson(&NeumannProblem::new(&g, f, datum).unwrap()).unwrap();
        let max_all = sol.v.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let max_wall = (0..g.len()).filter(|&i| g.boundary[i]).map(|i| sol.v.0[i]).fold(f64::NEG_INFINITY, f64::max);
        let spread = max_all - sol.v.0.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(max_wall >= max_all - 1e-8 * spread, "{max_wall} < {max_all}");
    }

    #[test]
    fn lame_operator_is_coercive(
        coef in prop::collection::vec(-1.0f64..1.0, 1..4),
        mu in 0.1f64..5.0,
        lambda_frac in 0.0f64..1.0,
        weight in 0.0f64..2.0,
        boxed in any::<bool>(),
    ) {
        // lambda ranges over [-2 mu / 3, 2 mu]
        let lambda = -2.0 * mu / 3.0 + lambda_frac * (8.0 * mu / 3.0);
        let g = if boxed { small_box() } else { radial(32) };
        let s = smooth(&g, &coef);
        let u = VectorField::from_fn(g.len(), |i| {
            if g.boundary[i] {
                [0.0; 3]
            } else if boxed {
                [s.0[i], -0.5 * s.0[i], 0.3 * s.0[i] * g.nodes[i][2]]
            } else {
                [s.0[i], 0.0, 0.0]
            }
        });
        prop_assume!(u.max_abs() > 1e-8);
        let alpha = g.sample(|x| 1.0 + 0.1 * x[0]);
        let p = LameProblem::new(&g, alpha, mu, lambda, VectorField::zeros(g.len()), weight).unwrap();
        let au = p.apply(&u).unwrap();
        let form = g.integrate(&au.dot(&u));
        let mass = g.integrate(&u.dot(&u));
        // the mass term alone bounds the form from below
        prop_assert!(form >= (1.0 - 1e-10) * mass, "{form} < {mass}");
        let visc = -g.integrate(&g.lame(&u, mu, lambda).unwrap().dot(&u));
        prop_assert!(visc >= -1e-12 * mass.max(1.0));
    }
}
