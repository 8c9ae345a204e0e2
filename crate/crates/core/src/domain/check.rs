//! Refinement study of the chart identities for every boundary chart of a
//! domain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::chart::{charts_for, BoundaryChart, BoundaryPatch};
use super::coords::{commutator_residual, coordinate_map, default_collar_depth, frame_derivatives, CollarResolution};
use super::grid::DomainSpec;
use crate::error::{Error, Result};
use crate::field::norm3;

/// Errors below this are round-off and carry no order information.
pub const ROUNDOFF_ERROR: f64 = 1e-11;

const COMMUTATOR_SAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartReport {
    pub patch: BoundaryPatch,
    pub flat: bool,
    pub depth: f64,
    /// Max `|J - (AD - BC)|` over all levels.
    pub jacobian_identity: f64,
    /// Max deviation from `|z_xi| = 1`, `z_xi . z_zeta = 0`.
    pub normalization: f64,
    pub min_z_zeta: f64,
    pub orthonormality: f64,
    /// Frenet finite-difference error per step in `frenet_steps`.
    pub frenet_fd: Vec<f64>,
    /// Per refinement level.
    pub chain_rule: Vec<f64>,
    pub cross_product: Vec<f64>,
    pub gradient_reconstruction: Vec<f64>,
    /// Max commutator ratio over the random sample set.
    pub commutator: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometryReport {
    /// Intervals per axis at each level.
    pub levels: Vec<usize>,
    pub frenet_steps: Vec<f64>,
    pub charts: Vec<ChartReport>,
}

/// `log2` ratios of successive errors under halving, `None` once an error is
/// at round-off.
pub fn observed_orders(errors: &[f64]) -> Option<Vec<f64>> {
    if errors.iter().any(|e| !(*e > ROUNDOFF_ERROR)) {
        return None;
    }
    Some(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

fn resolution(chart: &BoundaryChart, m: usize) -> CollarResolution {
    // periodic axes hold m nodes, bounded ones m + 1, so spacing halves with m
    CollarResolution {
        xi: if chart.xi_periodic { m } else { m + 1 },
        zeta: if chart.zeta_periodic { m } else { m + 1 },
        r: m + 1,
    }
}

/// `sin(a.x + b)` with its gradient.
#[derive(Debug, Clone, Copy)]
struct Wave {
    k: [f64; 3],
    phase: f64,
}

impl Wave {
    fn value(&self, x: [f64; 3]) -> f64 {
        (self.k[0] * x[0] + self.k[1] * x[1] + self.k[2] * x[2] + self.phase).sin()
    }

    fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let c = (self.k[0] * x[0] + self.k[1] * x[1] + self.k[2] * x[2] + self.phase).cos();
        self.k.map(|k| k * c)
    }
}

/// Fundamental wavenumber of each periodic box axis; test functions must be
/// periodic there.
fn periodic_wavenumbers(spec: &DomainSpec) -> [Option<f64>; 3] {
    match spec {
        DomainSpec::Box { lengths, walls, .. } => {
            std::array::from_fn(|a| (!walls[a]).then(|| std::f64::consts::TAU / lengths[a]))
        }
        _ => [None; 3],
    }
}

fn chart_report(spec: &DomainSpec, chart: &BoundaryChart, levels: &[usize], steps: &[f64], seed: u64) -> Result<ChartReport> {
    let depth = default_collar_depth(spec, chart);
    let (normalization, min_z_zeta) = chart.normalization_residual(17);
    let kp = periodic_wavenumbers(spec);
    let base = [1.1, -0.7, 0.9];
    let test_wave = Wave { k: std::array::from_fn(|a| kp[a].unwrap_or(base[a])), phase: 0.3 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Wave> = (0..COMMUTATOR_SAMPLES)
        .map(|_| Wave {
            k: std::array::from_fn(|a| {
                let k: f64 = rng.gen_range(-1.5..1.5);
                kp[a].map_or(k, |k0| k0 * k.signum())
            }),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
        })
        .collect();
    let mut report = ChartReport {
        patch: chart.patch,
        flat: false,
        depth,
        jacobian_identity: 0.0,
        normalization,
        min_z_zeta,
        orthonormality: chart.orthonormality_residual(17),
        frenet_fd: steps.iter().map(|&s| chart.frenet_fd_error(8, s)).collect(),
        chain_rule: Vec::new(),
        cross_product: Vec::new(),
        gradient_reconstruction: Vec::new(),
        commutator: Vec::new(),
    };
    for &m in levels {
        let map = coordinate_map(chart, depth, resolution(chart, m))?;
        report.flat = map.is_flat();
        report.jacobian_identity = report.jacobian_identity.max(map.jacobian_identity_residual());
        report.chain_rule.push(map.chain_rule_residual()?);
        report.cross_product.push(map.jacobian_cross_product_error()?);
        let f = map.sample(|x| test_wave.value(x));
        let ([fx, fz], fr) = frame_derivatives(&f, &map)?;
        let grad = map.reconstruct_gradient(&fx, &fz, &fr);
        let err = map
            .positions
            .iter()
            .zip(&grad.0)
            .map(|(&x, g)| {
                let exact = test_wave.gradient(x);
                norm3(std::array::from_fn(|q| g[q] - exact[q]))
            })
            .fold(0.0, f64::max);
        report.gradient_reconstruction.push(err);
        let mut worst: f64 = 0.0;
        for w in &samples {
            match commutator_residual(&map.sample(|x| w.value(x)), &map) {
                Ok(r) => worst = worst.max(r),
                Err(Error::ZeroDenominator) => {}
                Err(e) => return Err(e),
            }
        }
        report.commutator.push(worst);
    }
    Ok(report)
}

/// Checks every chart of `spec` over collar levels with `levels[i]` intervals
/// per axis, and the Frenet formulas with the given difference steps.
pub fn geometry_report(spec: &DomainSpec, levels: &[usize], frenet_steps: &[f64], seed: u64) -> Result<GeometryReport> {
    spec.validate()?;
    if levels.is_empty() || levels.iter().any(|&m| m < 4) {
        return Err(Error::InvalidParameters(format!("collar levels {levels:?} need at least 4 intervals")));
    }
    if frenet_steps.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidParameters("Frenet steps must be positive".into()));
    }
    let charts = charts_for(spec)?
        .iter()
        .enumerate()
        .map(|(i, c)| chart_report(spec, c, levels, frenet_steps, seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    Ok(GeometryReport {
        levels: levels.to_vec(),
        frenet_steps: frenet_steps.to_vec(),
        charts,
    })
}
