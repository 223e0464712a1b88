//! Run configuration, read from JSON and overridden from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::json::{GaitJson, ProblemJson};
use crate::LabError;

pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Report {
    Trajectory,
    Convergence,
    Velocity,
    Summary,
}

fn all_reports() -> Vec<Report> {
    vec![Report::Trajectory, Report::Convergence, Report::Velocity, Report::Summary]
}

fn default_tol() -> f64 {
    1e-9
}

fn default_tol_v() -> f64 {
    1e-6
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Catalog name; mutually exclusive with `problem` and `gait`.
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub problem: Option<ProblemJson>,
    #[serde(default)]
    pub gait: Option<GaitJson>,
    #[serde(default)]
    pub t0: f64,
    /// Falls back to the scenario's recommendation.
    #[serde(default)]
    pub periods: Option<usize>,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_tol")]
    pub tol_ft: f64,
    #[serde(default = "default_tol_v")]
    pub tol_v: f64,
    /// Explicit initial states (`z` for sweeping problems, `x` for gaits).
    #[serde(default)]
    pub starts: Vec<Vec<f64>>,
    /// Additional starts drawn uniformly from the initial set.
    #[serde(default)]
    pub random_starts: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "all_reports")]
    pub reports: Vec<Report>,
    /// Also run the incremental-minimization solver on gaits.
    #[serde(default)]
    pub compare: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, LabError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let sources = usize::from(self.scenario.is_some())
            + usize::from(self.problem.is_some())
            + usize::from(self.gait.is_some());
        if sources != 1 {
            return Err(LabError::Config(
                "exactly one of scenario, problem or gait must be given".into(),
            ));
        }
        for (name, v) in [("tol", self.tol), ("tol_ft", self.tol_ft), ("tol_v", self.tol_v)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(LabError::Config(format!("{name} must be positive")));
            }
        }
        if self.periods == Some(0) || self.steps == Some(0) {
            return Err(LabError::Config("periods and steps must be positive".into()));
        }
        if !self.t0.is_finite() {
            return Err(LabError::Config("t0 must be finite".into()));
        }
        Ok(())
    }

    pub fn wants(&self, report: Report) -> bool {
        self.reports.contains(&report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = RunConfig::from_json(r#"{"scenario": "wedge"}"#).unwrap();
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.reports.len(), 4);
        assert_eq!(cfg.tol, 1e-9);
    }

    #[test]
    fn rejects_ambiguous_or_unknown() {
        assert!(RunConfig::from_json("{}").is_err());
        assert!(RunConfig::from_json(r#"{"scenario": "wedge", "colour": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"scenario": "wedge", "tol": -1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"scenario": "wedge", "steps": 0}"#).is_err());
    }
}
