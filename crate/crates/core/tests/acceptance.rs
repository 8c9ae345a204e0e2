//! One line per acceptance criterion; exits non-zero when any fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nsp_core::domain::{build_grid, geometry_report, observed_orders, DomainSpec, Grid};
use nsp_core::elliptic::{solve_lame_dirichlet, solve_neumann_poisson, LameProblem, NeumannProblem};
use nsp_core::energy::{decay_fit_window, localized_norms, CutoffSystem, DecayFit};
use nsp_core::evolve::{
    build_initial, imex_step, linear_spectrum, run_trajectory, InitialCondition, PerturbationState, SchemeParams,
    Trajectory, TrajectoryOptions,
};
use nsp_core::field::{ScalarField, VectorField};
use nsp_core::steady::{mode_shape, solve_steady, BackgroundProfile, SteadyState};
use nsp_core::Result;

use common::{linear_response, orders, radial_laplacian};

const GAMMA: f64 = 5.0 / 3.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn radial(n: usize) -> Grid {
    build_grid(&DomainSpec::radial_annulus(1.0, 2.0, n)).expect("valid annulus")
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(", "))
}

fn criterion_1() -> Result<Outcome> {
    let start = Instant::now();
    let g = radial(128);
    let bg = BackgroundProfile::constant(&g, 1.0)?;
    let ss = solve_steady(&bg, GAMMA, &g, None)?;
    let elapsed = start.elapsed().as_secs_f64();
    let r = &ss.residual;
    let dev = ss.rho.map(|v| v - 1.0).max_abs().max(ss.phi.max_abs());
    let worst = [r.momentum, r.momentum_direct, r.poisson, r.mass, r.neumann, r.enthalpy, dev]
        .into_iter()
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-12 && elapsed < 1.0,
        format!("max residual/deviation {worst:.2e} (<= 1e-12), {elapsed:.3} s (< 1 s)"),
    )
}

fn criterion_2() -> Result<Outcome> {
    let g = radial(128);
    let bg = BackgroundProfile::bump(&g, 0.5, [1.5, 0.0, 0.0], 0.2)?;
    let ss = solve_steady(&bg, GAMMA, &g, None)?;
    let r = &ss.residual;
    let large = ss.rho.min() > 0.0 && r.momentum <= 1e-8 && r.poisson <= 1e-8 && r.mass <= 1e-10;

    let l = radial_laplacian(1.0, 2.0, g.len());
    let b = mode_shape(&g, 1);
    let mut errs = Vec::new();
    for eps in [0.02, 0.01, 0.005] {
        let ss = solve_steady(&BackgroundProfile::single_mode(&g, eps, 1)?, GAMMA, &g, None)?;
        let q = linear_response(&l, GAMMA, eps, &b.0);
        errs.push((0..g.len()).map(|i| (ss.rho.0[i] - 1.0 - q[i]).abs()).fold(0.0, f64::max));
    }
    let ord = orders(&errs);
    let quadratic = ord.iter().all(|o| (o - 2.0).abs() <= 0.2);
    outcome(
        large && quadratic,
        format!(
            "bump: min rho {:.3}, momentum {:.1e}, poisson {:.1e}, mass {:.1e}; oracle error at eps=0.01 {:.2e}, orders {}",
            ss.rho.min(),
            r.momentum,
            r.poisson,
            r.mass,
            errs[1],
            fmt(&ord)
        ),
    )
}

fn criterion_3() -> Result<Outcome> {
    let mut errs = Vec::new();
    for n in [64, 128, 256] {
        let g = radial(n);
        let mut exact = g.sample(|x| (PI * (x[0] - 1.0)).cos());
        let mut f = g.sample(|x| {
            let r = x[0];
            -PI * PI * (PI * (r - 1.0)).cos() - 2.0 / r * PI * (PI * (r - 1.0)).sin()
        });
        g.project_mean_zero(&mut f);
        let sol = solve_neumann_poisson(&NeumannProblem::homogeneous(&g, f)?)?;
        g.project_mean_zero(&mut exact);
        errs.push(sol.v.sub(&exact).max_abs());
    }
    let ord = orders(&errs);
    let neumann = ord.iter().all(|o| (o - 2.0).abs() <= 0.2);

    let mut lame_err: f64 = 0.0;
    let g = radial(128);
    let exact = VectorField::from_fn(g.len(), |i| {
        let r = g.nodes[i][0];
        [(r - 1.0).powi(2) * (2.0 - r).powi(2), 0.0, 0.0]
    });
    let mut p = LameProblem::new(&g, g.sample(|x| 1.0 + 0.2 * x[0]), 1.0, 0.0, VectorField::zeros(g.len()), 1.0)?;
    p.rhs = p.apply(&exact)?;
    lame_err = lame_err.max(solve_lame_dirichlet(&p)?.sub(&exact).max_abs());
    let g = build_grid(&DomainSpec::unit_box(12))?;
    let exact = VectorField::from_fn(g.len(), |i| {
        let x = g.nodes[i];
        let b = x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]) * x[2] * (1.0 - x[2]);
        [b, 2.0 * b * x[0], -b * x[2]]
    });
    let mut p = LameProblem::new(&g, ScalarField::constant(g.len(), 1.0), 1.0, -0.5, VectorField::zeros(g.len()), 0.05)?;
    p.rhs = p.apply(&exact)?;
    lame_err = lame_err.max(solve_lame_dirichlet(&p)?.sub(&exact).max_abs());
    outcome(
        neumann && lame_err <= 1e-9,
        format!("Neumann orders {} (2.0 +/- 0.2); Lame recovery {lame_err:.2e} (<= 1e-9)", fmt(&ord)),
    )
}

fn criterion_4() -> Result<Outcome> {
    let shell = DomainSpec::Annulus { r0: 1.0, r1: 2.0, radial: false, resolution: vec![16, 16, 16] };
    let rep = geometry_report(&shell, &[16, 32, 64], &[4e-2, 2e-2, 1e-2], 0)?;
    let mut pass = true;
    let (mut jac, mut orth): (f64, f64) = (0.0, 0.0);
    let mut frenet = Vec::new();
    let mut chain = Vec::new();
    for c in &rep.charts {
        jac = jac.max(c.jacobian_identity);
        orth = orth.max(c.orthonormality).max(c.normalization);
        let fo = observed_orders(&c.frenet_fd).unwrap_or_default();
        let co = observed_orders(&c.chain_rule).unwrap_or_default();
        pass &= fo.len() == 2 && fo.iter().all(|o| (o - 2.0).abs() <= 0.2);
        pass &= co.len() == 2 && co.iter().all(|o| (o - 2.0).abs() <= 0.2);
        frenet.extend(fo);
        chain.extend(co);
    }
    let boxed = geometry_report(&DomainSpec::unit_box(8), &[8, 16], &[1e-2, 5e-3], 0)?;
    let flat: f64 = boxed
        .charts
        .iter()
        .flat_map(|c| c.chain_rule.iter().chain(&c.cross_product).chain(&c.frenet_fd).copied())
        .fold(0.0, f64::max);
    let boxed_jac = boxed.charts.iter().map(|c| c.jacobian_identity).fold(0.0, f64::max);
    pass &= jac <= 1e-14 && boxed_jac <= 1e-14 && orth <= 1e-10 && flat <= 1e-11;
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        format!("[{lo:.3}, {hi:.3}]")
    };
    outcome(
        pass,
        format!(
            "J - (AD - BC) {jac:.1e}, orthonormality {orth:.1e}; Frenet orders {}, chain-rule orders {}; box faces {flat:.1e}",
            range(&frenet),
            range(&chain)
        ),
    )
}

fn criterion_5(decay: &Trajectory, decay_grid: &Grid) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for spec in [DomainSpec::radial_annulus(1.0, 2.0, 128), DomainSpec::unit_box(12)] {
        let g = build_grid(&spec)?;
        let ss = solve_steady(&BackgroundProfile::constant(&g, 1.0)?, GAMMA, &g, None)?;
        let p = SchemeParams { dt: 2e-3, mu: 1.0, lambda: 0.0, gamma: GAMMA, t_end: 2.0, stride: 1 };
        let mut s = PerturbationState::zero(g.len());
        for _ in 0..1000 {
            s = imex_step(&g, &s, &ss, &p)?;
        }
        worst = worst.max(s.q.max_abs()).max(s.u.max_abs()).max(s.phi.max_abs());
        worst = worst.max(s.q_t.max_abs()).max(s.u_t.max_abs());
    }
    let scale = decay_grid.integrate(&decay.snapshots[0].q.map(f64::abs));
    let drift = decay
        .records
        .windows(2)
        .map(|w| (w[1].mass_defect - w[0].mass_defect).abs() / scale)
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-300 && drift <= 1e-12,
        format!("zero state after 1000 steps {worst:.1e}; max mass drift per step {drift:.1e} (<= 1e-12 relative)"),
    )
}

struct DecayRun {
    grid: Grid,
    traj: Trajectory,
    fit: DecayFit,
    elapsed: f64,
    full_abscissa: f64,
    excited_abscissa: f64,
}

const DECAY_T: f64 = 12.0;

fn decay_run(amplitude: f64) -> Result<DecayRun> {
    let start = Instant::now();
    let g = radial(128);
    let ss: SteadyState = solve_steady(&BackgroundProfile::constant(&g, 1.0)?, GAMMA, &g, None)?;
    let p = SchemeParams { dt: 2e-3, mu: 1.0, lambda: 0.0, gamma: GAMMA, t_end: DECAY_T, stride: 50 };
    let (q, u) = build_initial(&g, &InitialCondition::SingleMode { amplitude, wavenumber: 1 }, 0)?;
    let s0 = PerturbationState::from_fields(&g, &ss, &p, q.clone(), u.clone())?;
    let traj = run_trajectory(&g, &s0, &ss, &p, TrajectoryOptions { light: true, ..Default::default() })?;
    if let Some(f) = &traj.failure {
        return Err(f.error.clone());
    }
    let (t, e) = series(&traj, DECAY_T);
    let fit = decay_fit_window(&t, &e, (0.2 * DECAY_T, DECAY_T))?;
    let spec = linear_spectrum(&g, &ss, p.mu, p.lambda, Some((&q, &u)))?;
    Ok(DecayRun {
        elapsed: start.elapsed().as_secs_f64(),
        grid: g,
        traj,
        fit,
        full_abscissa: spec.full_abscissa,
        excited_abscissa: spec.excited_abscissa.unwrap_or(f64::NAN),
    })
}

fn series(traj: &Trajectory, t_end: f64) -> (Vec<f64>, Vec<f64>) {
    traj.records
        .iter()
        .filter(|r| r.t <= t_end + 1e-12)
        .map(|r| (r.t, r.energy))
        .unzip()
}

fn criterion_6(run: &DecayRun) -> Result<Outcome> {
    // E is quadratic in the state
    let predicted = -2.0 * run.excited_abscissa;
    let rel = (run.fit.sigma - predicted).abs() / predicted;
    outcome(
        rel <= 0.05 && run.elapsed < 60.0,
        format!(
            "sigma {:.4} vs 2|excited abscissa| {:.4} (rel {:.2}%, <= 5%); full abscissa {:.4}; {:.1} s (< 60 s)",
            run.fit.sigma,
            predicted,
            100.0 * rel,
            run.full_abscissa,
            run.elapsed
        ),
    )
}

fn criterion_7(run: &DecayRun) -> Result<Outcome> {
    let t_end = 10.0 / run.fit.sigma;
    let (t, e) = series(&run.traj, t_end);
    let fit = decay_fit_window(&t, &e, (0.2 * t_end, t_end))?;
    let reached = *t.last().unwrap_or(&0.0);
    let drop = e.last().copied().unwrap_or(f64::NAN) / e[0];
    outcome(
        fit.goodness >= 0.98 && fit.sigma > 0.0 && drop < 1e-2 && reached >= t_end - 2e-3,
        format!(
            "T = 10/sigma = {t_end:.3}: goodness {:.4} (>= 0.98), sigma {:.4} (> 0), E(T)/E(0) {drop:.2e} (< 1e-2)",
            fit.goodness, fit.sigma
        ),
    )
}

fn criterion_8() -> Result<Outcome> {
    let t_end = 0.4;
    let mut mean = Vec::new();
    let mut max = Vec::new();
    for (n, dt) in [(33, 8e-3), (65, 4e-3), (129, 2e-3)] {
        let g = radial(n);
        let ss = solve_steady(&BackgroundProfile::single_mode(&g, 0.2, 1)?, GAMMA, &g, None)?;
        let p = SchemeParams { dt, mu: 1.0, lambda: 0.0, gamma: GAMMA, t_end, stride: 1 };
        let q = mode_shape(&g, 1).scaled(1e-3);
        let u = VectorField::from_fn(g.len(), |i| [1e-3 * ((g.nodes[i][0] - 1.0) * PI).sin(), 0.0, 0.0]);
        let s0 = PerturbationState::from_fields(&g, &ss, &p, q, u)?;
        let traj = run_trajectory(&g, &s0, &ss, &p, TrajectoryOptions::default())?;
        let res: Vec<f64> = traj.records.iter().filter_map(|r| r.identity_residual).collect();
        mean.push(res.iter().sum::<f64>() / res.len() as f64);
        max.push(res.iter().copied().fold(0.0, f64::max));
    }
    let ord = orders(&mean);
    outcome(
        ord.iter().all(|o| *o >= 1.0),
        format!(
            "time-averaged residual {:.2e} -> {:.2e}, orders {} (>= 1); per-step max orders {}",
            mean[0],
            mean[2],
            fmt(&ord),
            fmt(&orders(&max))
        ),
    )
}

fn imp1_max(n: usize) -> Result<(f64, usize)> {
    let g = radial(n);
    let ss = solve_steady(&BackgroundProfile::single_mode(&g, 0.2, 1)?, GAMMA, &g, None)?;
    let p = SchemeParams { dt: 2e-3, mu: 1.0, lambda: 0.0, gamma: GAMMA, t_end: 1.0, stride: 1 };
    let ic = InitialCondition::RandomSmooth { amplitude: 1e-3, modes: 3, velocity: true };
    let (q, u) = build_initial(&g, &ic, 1)?;
    let s0 = PerturbationState::from_fields(&g, &ss, &p, q, u)?;
    let traj = run_trajectory(&g, &s0, &ss, &p, TrajectoryOptions::default())?;
    let samples: Vec<f64> = traj.records.iter().filter_map(|r| r.imp1_ratio).collect();
    Ok((samples.iter().copied().fold(0.0, f64::max), samples.len()))
}

fn criterion_9() -> Result<Outcome> {
    let (a, na) = imp1_max(64)?;
    let (b, nb) = imp1_max(128)?;
    let rel = (a - b).abs() / b;
    outcome(
        na.min(nb) >= 200 && rel <= 0.25,
        format!("max ratio {a:.4} (64 nodes, {na} samples) vs {b:.4} (128 nodes, {nb} samples), rel {:.2}% (<= 25%)", 100.0 * rel),
    )
}

fn criterion_10() -> Result<Outcome> {
    let mut tested = 0;
    let mut failed = 0;
    let mut tightest = f64::INFINITY;
    let cases: [(DomainSpec, [f64; 3]); 2] = [
        (DomainSpec::radial_annulus(1.0, 2.0, 64), [1.5, 0.0, 0.0]),
        (DomainSpec::unit_box(14), [0.5; 3]),
    ];
    for (spec, center) in cases {
        let g = build_grid(&spec)?;
        let ss = solve_steady(&BackgroundProfile::bump(&g, 0.5, center, 0.3)?, GAMMA, &g, None)?;
        let cut = CutoffSystem::new(&g)?;
        for seed in 0..10 {
            let ic = InitialCondition::RandomSmooth { amplitude: 1e-2, modes: 4, velocity: false };
            let (q, _) = build_initial(&g, &ic, seed)?;
            let mut s = PerturbationState::zero(g.len());
            s.q = q;
            let rep = localized_norms(&g, &s, &ss, &cut)?;
            tested += 1;
            // the stated bounds use 0.5 min-weight below
            let stated = rep.first_order_total >= 0.5 * rep.lower_bound / rep.floor && rep.first_order_total <= rep.upper_bound;
            if !(rep.brackets() && stated) {
                failed += 1;
            }
            tightest = tightest.min((rep.first_order_total - rep.lower_bound) / rep.lower_bound.max(1e-300));
        }
    }
    outcome(
        failed == 0,
        format!("{tested} states, {failed} outside [floor min-weight, max-weight] |Dq|^2; min margin above lower bound {:.2}%", 100.0 * tightest),
    )
}

fn criterion_11(full: &DecayRun) -> Result<Outcome> {
    let half = decay_run(0.5e-3)?;
    let rel = (full.fit.sigma - half.fit.sigma).abs() / full.fit.sigma;
    outcome(
        rel < 0.1,
        format!("sigma {:.6} at 1e-3 vs {:.6} at 5e-4, rel {:.2e} (< 10%)", full.fit.sigma, half.fit.sigma, rel),
    )
}

fn main() -> ExitCode {
    let decay = decay_run(1e-3);
    let mut results: Vec<(&str, Result<Outcome>)> = vec![
        ("steady-state exactness", criterion_1()),
        ("steady-state large variation", criterion_2()),
        ("elliptic convergence", criterion_3()),
        ("geometry identities", criterion_4()),
    ];
    match &decay {
        Ok(run) => {
            results.push(("exact fixed point and mass", criterion_5(&run.traj, &run.grid)));
            results.push(("linear-regime decay vs oracle", criterion_6(run)));
            results.push(("theorem-shape decay", criterion_7(run)));
        }
        Err(e) => {
            for name in ["exact fixed point and mass", "linear-regime decay vs oracle", "theorem-shape decay"] {
                results.push((name, Err(e.clone())));
            }
        }
    }
    results.push(("energy-identity residual", criterion_8()));
    results.push(("imp1 inequality", criterion_9()));
    results.push(("localized-norm bracketing", criterion_10()));
    results.push((
        "small-data sensitivity",
        match &decay {
            Ok(run) => criterion_11(run),
            Err(e) => Err(e.clone()),
        },
    ));
    let mut failures = 0;
    for (i, (name, r)) in results.into_iter().enumerate() {
        let (pass, detail) = match r {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!("{} {:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
