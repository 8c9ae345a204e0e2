use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 10;

/// Least-squares fit of `log E = log C - sigma t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub c: f64,
    pub sigma: f64,
    /// Coefficient of determination of the log-linear fit.
    pub goodness: f64,
    pub samples: usize,
    pub decaying: bool,
}

/// Fits all samples with `window.0 <= t <= window.1`.
pub fn decay_fit_window(t: &[f64], e: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if t.len() != e.len() {
        return Err(Error::InsufficientData(format!("{} times for {} values", t.len(), e.len())));
    }
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (&ti, &ei) in t.iter().zip(e) {
        if ti < window.0 || ti > window.1 {
            continue;
        }
        if !(ei > 0.0) {
            return Err(Error::NonpositiveEnergy { t: ti });
        }
        ts.push(ti);
        ys.push(ei.ln());
    }
    if ts.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples in window, need {MIN_SAMPLES}",
            ts.len()
        )));
    }
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let stt: f64 = ts.iter().map(|t| (t - tm).powi(2)).sum();
    if stt == 0.0 {
        return Err(Error::InsufficientData("all samples at one time".into()));
    }
    let sty: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let slope = sty / stt;
    let intercept = ym - slope * tm;
    let syy: f64 = ys.iter().map(|y| (y - ym).powi(2)).sum();
    let sse: f64 = ts
        .iter()
        .zip(&ys)
        .map(|(t, y)| (y - intercept - slope * t).powi(2))
        .sum();
    let goodness = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let sigma = -slope;
    Ok(DecayFit {
        c: intercept.exp(),
        sigma,
        goodness,
        samples: ts.len(),
        decaying: sigma > 0.0,
    })
}

/// Fit over `[0.2 T, T]` with `T` the last sample time.
pub fn decay_fit(t: &[f64], e: &[f64]) -> Result<DecayFit> {
    let t_end = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let t_start = t.iter().copied().fold(f64::INFINITY, f64::min);
    decay_fit_window(t, e, (t_start + 0.2 * (t_end - t_start), t_end))
}
