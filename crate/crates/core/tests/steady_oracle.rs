mod common;

use common::{linear_response, radial_laplacian};
use nsp_core::domain::{build_grid, DomainSpec};
use nsp_core::steady::{mode_shape, solve_steady, BackgroundProfile};

const GAMMA: f64 = 5.0 / 3.0;

#[test]
fn small_background_matches_linear_response_to_second_order() {
    let n = 64;
    let grid = build_grid(&DomainSpec::radial_annulus(1.0, 2.0, n)).unwrap();
    let l = radial_laplacian(1.0, 2.0, n);
    let b = mode_shape(&grid, 1);
    let err = |eps: f64| {
        let bg = BackgroundProfile::single_mode(&grid, eps, 1).unwrap();
        let ss = solve_steady(&bg, GAMMA, &grid, None).unwrap();
        let q = linear_response(&l, GAMMA, eps, &b.0);
        (0..n).map(|i| (ss.rho.0[i] - 1.0 - q[i]).abs()).fold(0.0, f64::max)
    };
    let e: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&eps| err(eps)).collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 4.0).abs() < 0.4, "{e:?}");
    }
    // the linear part itself is not small
    let q = linear_response(&l, GAMMA, 0.1, &b.0);
    assert!(q.amax() > 10.0 * e[0]);
}

#[test]
fn linear_response_conserves_mass() {
    let n = 48;
    let grid = build_grid(&DomainSpec::radial_annulus(1.0, 2.0, n)).unwrap();
    let l = radial_laplacian(1.0, 2.0, n);
    let b = mode_shape(&grid, 2);
    let q = linear_response(&l, GAMMA, 0.1, &b.0);
    let mass: f64 = q.iter().zip(&grid.volume_weights).map(|(a, v)| a * v).sum();
    assert!(mass.abs() < 1e-12);
}

#[test]
fn bump_background_converges_to_tight_residuals() {
    for spec in [
        DomainSpec::radial_annulus(1.0, 2.0, 128),
        DomainSpec::Box { lengths: [1.0; 3], walls: [true, true, false], resolution: [16, 16, 16] },
    ] {
        let grid = build_grid(&spec).unwrap();
        let center = if grid.is_radial() { [1.5, 0.0, 0.0] } else { [0.5; 3] };
        let bg = BackgroundProfile::bump(&grid, 0.5, center, 0.2).unwrap();
        let ss = solve_steady(&bg, GAMMA, &grid, None).unwrap();
        let r = &ss.residual;
        assert!(r.momentum <= 1e-8 && r.poisson <= 1e-8 && r.enthalpy <= 1e-8, "{r:?}");
        assert!(r.mass <= 1e-10, "{r:?}");
        assert!(ss.rho.min() > 0.0);
    }
}
