//! Run configuration, read from TOML.
//!
//! Every section and key is optional; omitted values take the defaults below.
//! Unknown keys are rejected. A complete file:
//!
//! ```toml
//! output_dir = "out"
//! scenarios = ["tripartite", "bipartite"]
//! td_grid = [0.0, 0.5, 1.0, 1.4, 2.0, 4.0]
//! theta_grid = [0.0, 1.5707963267948966, 3.141592653589793]
//!
//! [model]
//! m0 = 1.0
//! omega0 = 2.0
//! n_bath = 150
//! a0 = 1.03
//! gamma = 1.0
//! omega_d = 4.0
//! beta = 10.0
//! tail_match = true
//! sampling = "tan"          # or "tanh"
//! # masses = [1.0, ...]     # one per bath oscillator; all 1 when absent
//!
//! [protocol]
//! exponent = 11
//!
//! [stepper]
//! dt = 1e-3
//! min_steps = 10000
//! refine = false
//! sympl_tol = 1e-8
//! work_tol = 1e-4
//! max_halvings = 12
//!
//! [cycle]                   # scenario, t_d and theta are used by `cycle`
//! scenario = "tripartite"
//! t_d = 0.0
//! theta = 0.0
//! t_charge = 150.0
//! window = 0.2
//! sample_count = 400
//!
//! [oracle]
//! # omega_max = 200.0       # 50 omega_d when absent
//! abs_tol = 1e-10
//! rel_tol = 1e-8
//! max_intervals = 5000
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cycles::{CycleConfig, Scenario, SweepGrid};
use crate::error::{Error, Result};
use crate::evolution::StepperConfig;
use crate::model::ModelSpec;
use crate::oracle::OracleConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    pub exponent: u32,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self { exponent: 11 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub scenarios: Vec<Scenario>,
    pub td_grid: Vec<f64>,
    pub theta_grid: Vec<f64>,
    pub model: ModelSpec,
    pub protocol: ProtocolConfig,
    pub stepper: StepperConfig,
    pub cycle: CycleConfig,
    pub oracle: OracleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            scenarios: vec![Scenario::Tripartite, Scenario::Bipartite],
            td_grid: default_td_grid(),
            theta_grid: uniform_phases(64),
            model: ModelSpec::default(),
            protocol: ProtocolConfig::default(),
            stepper: StepperConfig::default(),
            cycle: CycleConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

/// 39 durations on `[0, 30]`, dense up to 4 where the efficiency peaks.
pub fn default_td_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..=20).map(|i| i as f64 / 10.0).collect();
    g.extend((1..=8).map(|i| 2.0 + 0.25 * i as f64));
    g.extend([5.0, 6.0, 7.0, 8.0, 10.0, 12.5, 15.0, 20.0, 25.0, 30.0]);
    g
}

/// `n` phases `2 pi k / n`, `k = 0..n`.
pub fn uniform_phases(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

/// Prefixes a parameter error with the section it came from.
fn at(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => Error::InvalidParameter {
            name: format!("{section}.{name}"),
            reason,
        },
        other => Error::InvalidParameter {
            name: section.to_string(),
            reason: other.to_string(),
        },
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::param("scenarios", "must not be empty"));
        }
        if self.td_grid.is_empty() {
            return Err(Error::param("td_grid", "must not be empty"));
        }
        for (i, &t) in self.td_grid.iter().enumerate() {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::param(
                    &format!("td_grid[{i}]"),
                    format!("must be non-negative, got {t}"),
                ));
            }
        }
        if self.scenarios.contains(&Scenario::Bipartite) && self.theta_grid.is_empty() {
            return Err(Error::param("theta_grid", "bipartite sweeps need phases"));
        }
        if let Some(i) = self.theta_grid.iter().position(|t| !t.is_finite()) {
            return Err(Error::param(&format!("theta_grid[{i}]"), "must be finite"));
        }
        self.model.validate().map_err(|e| at("model", e))?;
        if self.protocol.exponent == 0 {
            return Err(Error::param("protocol.exponent", "must be at least 1"));
        }
        self.stepper.validate().map_err(|e| at("stepper", e))?;
        self.cycle.validate().map_err(|e| at("cycle", e))?;
        self.oracle
            .validate(&self.model)
            .map_err(|e| at("oracle", e))?;
        Ok(())
    }

    pub fn grid(&self) -> SweepGrid {
        SweepGrid {
            scenarios: self.scenarios.clone(),
            td: self.td_grid.clone(),
            theta: self.theta_grid.clone(),
        }
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config {
        path: "<input>".into(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text).map_err(|e| match e {
        Error::Config { message, .. } => Error::Config {
            path: path.display().to_string(),
            message,
        },
        other => other,
    })
}

pub fn to_toml(cfg: &RunConfig) -> Result<String> {
    toml::to_string_pretty(cfg).map_err(|e| Error::Config {
        path: "<output>".into(),
        message: e.to_string(),
    })
}
