//! Run configuration: one JSON document, schema version 1, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nsp_core::domain::{build_grid, DomainSpec, Grid};
use nsp_core::evolve::{build_initial, InitialCondition, SchemeParams};
use nsp_core::field::{ScalarField, VectorField};
use nsp_core::steady::BackgroundProfile;
use nsp_core::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Steady,
    Evolve,
    Decay,
    VerifyElliptic,
    GeometryCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Steady => "steady",
            Experiment::Evolve => "evolve",
            Experiment::Decay => "decay",
            Experiment::VerifyElliptic => "verify-elliptic",
            Experiment::GeometryCheck => "geometry-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    pub gamma: f64,
    pub mu: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Background {
    Constant { value: f64 },
    SingleMode { amplitude: f64, wavenumber: u32 },
    Bump { amplitude: f64, center: [f64; 3], width: f64 },
    Raw { values: Vec<f64> },
}

impl Default for Background {
    fn default() -> Self {
        Background::Constant { value: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scheme {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_stride() -> usize {
    1
}

fn default_initial() -> InitialCondition {
    InitialCondition::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// When present it must agree with the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub domain: DomainSpec,
    pub physics: Physics,
    #[serde(default)]
    pub background: Background,
    #[serde(default = "default_initial")]
    pub initial: InitialCondition,
    pub scheme: Scheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub small_data_bound: Option<f64>,
    /// Decay fit window `[t0, t1]`; `[0.2 T, T]` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[f64; 2]>,
    #[serde(default)]
    pub dump_fields: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn scheme_params(&self) -> SchemeParams {
        SchemeParams {
            dt: self.scheme.dt,
            mu: self.physics.mu,
            lambda: self.physics.lambda,
            gamma: self.physics.gamma,
            t_end: self.scheme.t_end,
            stride: self.scheme.stride,
        }
    }

    /// Schema and admissibility checks that need no grid.
    pub fn validate(&self) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            return Err(config_err(format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.version)));
        }
        self.domain.validate().map_err(|e| config_err(e.to_string()))?;
        self.scheme_params().validate().map_err(|e| config_err(e.to_string()))?;
        match &self.initial {
            InitialCondition::SingleMode { amplitude, .. }
            | InitialCondition::Bump { amplitude, .. }
            | InitialCondition::RandomSmooth { amplitude, .. } => positive("initial amplitude", *amplitude)?,
            InitialCondition::Zero | InitialCondition::Raw { .. } => {}
        }
        if let Some(d) = self.small_data_bound {
            positive("small_data_bound", d)?;
        }
        if let Some([a, b]) = self.fit_window {
            if !(a >= 0.0 && b > a && b.is_finite()) {
                return Err(config_err(format!("fit window [{a}, {b}] must satisfy 0 <= t0 < t1")));
            }
        }
        match &self.background {
            Background::Constant { value } => positive("background value", *value)?,
            Background::Bump { width, .. } => positive("bump width", *width)?,
            Background::SingleMode { amplitude, .. } => {
                if !amplitude.is_finite() {
                    return Err(config_err("background amplitude must be finite"));
                }
            }
            Background::Raw { .. } => {}
        }
        Ok(())
    }

    /// Experiment from the command line, checked against the file.
    pub fn resolve_experiment(&self, cli: Experiment) -> Result<Experiment> {
        match self.experiment {
            Some(e) if e != cli => Err(config_err(format!(
                "config is for experiment {} but {} was requested",
                e.name(),
                cli.name()
            ))),
            _ => Ok(cli),
        }
    }
}

/// Grid-level objects built from a validated config. Failures here are
/// configuration errors.
pub struct Prepared {
    pub grid: Grid,
    pub background: BackgroundProfile,
    pub q0: ScalarField,
    pub u0: VectorField,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let as_config = |e: Error| match e {
        Error::Config(_) => e,
        other => config_err(other.to_string()),
    };
    let grid = build_grid(&cfg.domain).map_err(as_config)?;
    let background = match &cfg.background {
        Background::Constant { value } => BackgroundProfile::constant(&grid, *value),
        Background::SingleMode { amplitude, wavenumber } => BackgroundProfile::single_mode(&grid, *amplitude, *wavenumber),
        Background::Bump { amplitude, center, width } => BackgroundProfile::bump(&grid, *amplitude, *center, *width),
        Background::Raw { values } => BackgroundProfile::raw(&grid, values.clone()),
    }
    .map_err(as_config)?;
    let (q0, u0) = build_initial(&grid, &cfg.initial, cfg.seed).map_err(as_config)?;
    Ok(Prepared { grid, background, q0, u0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "version": 1,
        "domain": {"kind": "annulus", "r0": 1.0, "r1": 2.0, "resolution": [32]},
        "physics": {"gamma": 1.6666666666666667, "mu": 1.0, "lambda": 0.0},
        "scheme": {"dt": 0.002, "t_end": 0.1}
    }"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.background, Background::Constant { value: 1.0 });
        assert_eq!(c.initial, InitialCondition::Zero);
        assert_eq!(c.scheme.stride, 1);
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn echo_round_trips() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replacen("\"version\": 1,", "\"version\": 1, \"colour\": 3,", 1);
        assert!(matches!(RunConfig::from_json(&bad), Err(Error::Config(_))));
        let nested = MINIMAL.replace("\"lambda\": 0.0", "\"lambda\": 0.0, \"kappa\": 1");
        assert!(matches!(RunConfig::from_json(&nested), Err(Error::Config(_))));
    }

    #[test]
    fn inadmissible_physics_is_a_config_error() {
        for (from, to) in [
            ("\"mu\": 1.0", "\"mu\": 0.0"),
            ("\"lambda\": 0.0", "\"lambda\": -1.0"),
            ("\"gamma\": 1.6666666666666667", "\"gamma\": 0.5"),
            ("\"version\": 1", "\"version\": 2"),
            ("\"dt\": 0.002", "\"dt\": -1"),
        ] {
            let text = MINIMAL.replace(from, to);
            assert!(matches!(RunConfig::from_json(&text), Err(Error::Config(_))), "{to}");
        }
    }

    #[test]
    fn experiment_mismatch() {
        let text = MINIMAL.replacen("\"version\": 1,", "\"version\": 1, \"experiment\": \"steady\",", 1);
        let c = RunConfig::from_json(&text).unwrap();
        assert!(c.resolve_experiment(Experiment::Decay).is_err());
        assert_eq!(c.resolve_experiment(Experiment::Steady).unwrap(), Experiment::Steady);
    }

    #[test]
    fn prepare_maps_bad_background_to_config_error() {
        let text = MINIMAL.replacen(
            "\"scheme\"",
            "\"background\": {\"kind\": \"single_mode\", \"amplitude\": 5.0, \"wavenumber\": 1}, \"scheme\"",
            1,
        );
        let c = RunConfig::from_json(&text).unwrap();
        assert!(matches!(prepare(&c), Err(Error::Config(_))));
    }
}
