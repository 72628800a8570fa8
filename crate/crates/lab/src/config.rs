//! JSON experiment configuration.
//!
//! ```json
//! { "schema_version": 1, "experiment": "duality-check",
//!   "parameters": { "theta": 2.0, "n_paths": 100000 } }
//! ```
//!
//! Unknown keys at either level are rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{param, LabError, LabResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    Picard,
    DualityCheck,
    MomentsCheck,
    Holder,
    YwCheck,
    PathwiseProbe,
    SmoothProbe,
    Sweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Picard => "picard",
            Experiment::DualityCheck => "duality-check",
            Experiment::MomentsCheck => "moments-check",
            Experiment::Holder => "holder",
            Experiment::YwCheck => "yw-check",
            Experiment::PathwiseProbe => "pathwise-probe",
            Experiment::SmoothProbe => "smooth-probe",
            Experiment::Sweep => "sweep",
        }
    }
}

/// Every tunable. `None` means "use the experiment default".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Shared-noise replicates in the uniqueness probes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_rep: Option<usize>,
    /// Number of step-halvings in the smooth-kernel probe.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refinements: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lag_min: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lag_max: Option<usize>,
    /// Moment order for the increment check in `holder` (2 or 4).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_check: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_c: Option<f64>,
    /// Relative discretization allowance of the duality check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allowance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub parameters: Params,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self { schema_version: SCHEMA_VERSION, experiment: Some(experiment), parameters: Params::default() }
    }

    pub fn from_json(text: &str) -> LabResult<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(param!(
                "unsupported schema_version {} (this build reads version {SCHEMA_VERSION})",
                cfg.schema_version
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text =
            fs::read_to_string(path).map_err(|source| LabError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }
}

impl Params {
    /// Applies `key=value` overrides. Values are read as JSON when they
    /// parse, otherwise as strings, so `sigma=linear` and `n_steps=64` both
    /// work.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, pairs: &[S]) -> LabResult<()> {
        if pairs.is_empty() {
            return Ok(());
        }
        let mut map = match serde_json::to_value(&*self)? {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        for pair in pairs {
            let pair = pair.as_ref();
            let (k, v) = pair.split_once('=').ok_or_else(|| param!("override {pair:?} is not key=value"))?;
            let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
            map.insert(k.trim().to_string(), value);
        }
        *self = serde_json::from_value(Value::Object(map)).map_err(|e| param!("invalid override: {e}"))?;
        Ok(())
    }

    /// The parameter echo written into every report row.
    pub fn echo(&self) -> String {
        let mut v = serde_json::to_value(self).unwrap_or(Value::Null);
        if let Value::Object(m) = &mut v {
            m.remove("output");
        }
        v.to_string()
    }

    pub fn validate(&self) -> LabResult<()> {
        let positive = [("t_end", self.t_end), ("tol", self.tol)];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(param!("{name} must be positive and finite, got {v}"));
                }
            }
        }
        let counts = [
            ("n_steps", self.n_steps),
            ("n_paths", self.n_paths),
            ("max_iter", self.max_iter),
            ("n_rep", self.n_rep),
            ("n_check", self.n_check),
        ];
        for (name, v) in counts {
            if v == Some(0) {
                return Err(param!("{name} must be at least 1"));
            }
        }
        if let Some(x) = self.x0 {
            if !x.is_finite() {
                return Err(param!("x0 must be finite, got {x}"));
            }
        }
        if let Some(a) = self.allowance {
            if !(a >= 0.0) {
                return Err(param!("allowance must be non-negative, got {a}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects_unknown_keys() {
        let c = ExperimentConfig::from_json(
            r#"{"schema_version":1,"experiment":"duality-check","parameters":{"theta":2.0,"n_paths":10}}"#,
        )
        .unwrap();
        assert_eq!(c.experiment, Some(Experiment::DualityCheck));
        assert_eq!(c.parameters.n_paths, Some(10));
        assert!(ExperimentConfig::from_json(r#"{"schema_version":1,"parameters":{"thetta":2.0}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"schema_version":1,"extra":0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"schema_version":2}"#).is_err());
    }

    #[test]
    fn overrides() {
        let mut p = Params::default();
        p.apply_overrides(&["sigma=linear", "n_steps=64", "alpha_grid=[0.1,0.2]", "phi=bump:[-1,1]"]).unwrap();
        assert_eq!(p.sigma.as_deref(), Some("linear"));
        assert_eq!(p.n_steps, Some(64));
        assert_eq!(p.alpha_grid, Some(vec![0.1, 0.2]));
        assert_eq!(p.phi.as_deref(), Some("bump:[-1,1]"));
        assert!(p.apply_overrides(&["nope=1"]).is_err());
        assert!(p.apply_overrides(&["n_steps"]).is_err());
        assert!(p.apply_overrides(&["n_steps=abc"]).is_err());
    }

    #[test]
    fn echo_is_sorted_and_skips_output() {
        let p = Params { x0: Some(1.0), alpha: Some(0.25), output: Some("a.csv".into()), ..Default::default() };
        assert_eq!(p.echo(), r#"{"alpha":0.25,"x0":1.0}"#);
    }

    #[test]
    fn validation() {
        assert!(Params { t_end: Some(-1.0), ..Default::default() }.validate().is_err());
        assert!(Params { n_paths: Some(0), ..Default::default() }.validate().is_err());
        assert!(Params::default().validate().is_ok());
    }
}
