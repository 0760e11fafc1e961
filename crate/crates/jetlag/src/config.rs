//! Run configuration: a single JSON document describing the model, initial
//! conditions, integrator settings, and optional sweep axes.
//!
//! The schema (version 1):
//!
//! ```json
//! {
//!   "schema": 1,
//!   "model": {
//!     "kind": "starfish-coral",
//!     "params": { "m": 3.0, "alpha1": 1.0, "alpha2": 1.0,
//!                 "lambda1": 1.0, "lambda2": 1.0,
//!                 "delta1": 0.5, "delta2": 0.5,
//!                 "beta": 0.2, "gamma": 0.1, "rho": 0.3 }
//!   },
//!   "initial_state": [1.0, 1.2, 0.4],
//!   "y0": [0.1, 0.2, 0.3],
//!   "integrator": { "method": "rk45", "t0": 0.0, "t_end": 10.0,
//!                   "init_step": 0.01, "abs_tol": 1e-10, "rel_tol": 1e-10,
//!                   "max_steps": 1000000, "domain_exit": "stop" },
//!   "sweep": [ { "parameter": "m", "values": [2.0, 3.0, 4.0] } ]
//! }
//! ```
//!
//! `model.params` defaults to the desk model and may be given partially.
//! A custom field replaces the model block with
//!
//! ```json
//! { "kind": "custom",
//!   "variables": ["x", "y"],
//!   "expressions": ["a*x - x*y", "x*y - b*y"],
//!   "parameters": { "a": 1.5, "b": 0.7 } }
//! ```
//!
//! `y0` and `sweep` are optional; `integrator` fields all have defaults.

use crate::dynamics::{DomainExitPolicy, IntegratorConfig, Method};
use crate::field::VectorField;
use crate::model::{ModelParams, StarfishCoral};
use crate::vfexpr;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind")]
pub enum ModelSpec {
    #[serde(rename = "starfish-coral")]
    StarfishCoral {
        #[serde(default = "ModelParams::desk_model")]
        params: ModelParams,
    },
    #[serde(rename = "custom")]
    Custom {
        variables: Vec<String>,
        expressions: Vec<String>,
        #[serde(default)]
        parameters: serde_json::Map<String, serde_json::Value>,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSpec {
    pub method: Method,
    pub t0: f64,
    pub t_end: f64,
    pub init_step: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
    pub domain_exit: DomainExitPolicy,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        IntegratorSpec {
            method: d.method,
            t0: d.t0,
            t_end: d.t_end,
            init_step: d.init_step,
            abs_tol: d.abs_tol,
            rel_tol: d.rel_tol,
            max_steps: d.max_steps,
            domain_exit: d.domain_exit,
        }
    }
}

impl IntegratorSpec {
    pub fn to_integrator(self) -> IntegratorConfig {
        IntegratorConfig {
            method: self.method,
            t0: self.t0,
            t_end: self.t_end,
            init_step: self.init_step,
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_steps: self.max_steps,
            domain_exit: self.domain_exit,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: String,
    pub values: Vec<f64>,
}

fn schema_default() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_default")]
    pub schema: u32,
    pub model: ModelSpec,
    pub initial_state: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<Vec<f64>>,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepAxis>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Parameter names that a sweep axis may reference.
    pub fn parameter_names(&self) -> Vec<String> {
        match &self.model {
            ModelSpec::StarfishCoral { .. } => crate::check::STARFISH_PARAM_NAMES
                .iter()
                .map(|s| s.to_string())
                .collect(),
            ModelSpec::Custom { parameters, .. } => parameters.keys().cloned().collect(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != 1 {
            return Err(invalid("schema", format!("unsupported version {}", self.schema)));
        }
        let dim = match &self.model {
            ModelSpec::StarfishCoral { params } => {
                params
                    .validate()
                    .map_err(|e| invalid("model.params", e.to_string()))?;
                3
            }
            ModelSpec::Custom {
                variables,
                expressions,
                parameters,
            } => {
                if variables.is_empty() {
                    return Err(invalid("model.variables", "at least one variable required"));
                }
                if expressions.len() != variables.len() {
                    return Err(invalid(
                        "model.expressions",
                        format!(
                            "{} expressions for {} variables",
                            expressions.len(),
                            variables.len()
                        ),
                    ));
                }
                for (name, value) in parameters {
                    if !value.is_number() {
                        return Err(invalid(
                            &format!("model.parameters.{name}"),
                            "must be a number",
                        ));
                    }
                }
                variables.len()
            }
        };
        if self.initial_state.len() != dim {
            return Err(invalid(
                "initial_state",
                format!("expected {dim} components, got {}", self.initial_state.len()),
            ));
        }
        if let Some(y0) = &self.y0 {
            if y0.len() != dim {
                return Err(invalid(
                    "y0",
                    format!("expected {dim} components, got {}", y0.len()),
                ));
            }
        }
        let known = self.parameter_names();
        let mut seen: Vec<&str> = Vec::new();
        for (i, axis) in self.sweep.iter().enumerate() {
            let field = format!("sweep[{i}]");
            if axis.values.is_empty() {
                return Err(invalid(&format!("{field}.values"), "grid must be nonempty"));
            }
            if !known.iter().any(|n| n == &axis.parameter) {
                return Err(invalid(
                    &format!("{field}.parameter"),
                    format!("unknown parameter `{}`", axis.parameter),
                ));
            }
            if seen.contains(&axis.parameter.as_str()) {
                return Err(invalid(
                    &format!("{field}.parameter"),
                    format!("axis `{}` appears twice", axis.parameter),
                ));
            }
            seen.push(&axis.parameter);
        }
        // the integrator spec is re-validated by the integrator itself; fail
        // early here with a field name
        self.integrator
            .to_integrator()
            .validate()
            .map_err(|e| invalid("integrator", e.to_string()))?;
        Ok(())
    }

    /// Builds the configured vector field.
    pub fn build_field(&self) -> Result<Box<dyn VectorField>, ConfigError> {
        Self::build_field_from(&self.model)
    }

    fn build_field_from(model: &ModelSpec) -> Result<Box<dyn VectorField>, ConfigError> {
        match model {
            ModelSpec::StarfishCoral { params } => Ok(Box::new(
                StarfishCoral::new(*params).map_err(|e| invalid("model.params", e.to_string()))?,
            )),
            ModelSpec::Custom {
                variables,
                expressions,
                parameters,
            } => {
                let vars: Vec<&str> = variables.iter().map(|s| s.as_str()).collect();
                let param_names: Vec<&str> = parameters.keys().map(|s| s.as_str()).collect();
                let param_values: Vec<f64> = parameters
                    .values()
                    .map(|v| v.as_f64().unwrap_or(f64::NAN))
                    .collect();
                let mut exprs = Vec::with_capacity(expressions.len());
                for (i, src) in expressions.iter().enumerate() {
                    let e = vfexpr::parse(src, &vars, &param_names).map_err(|err| {
                        invalid(&format!("model.expressions[{i}]"), err.to_string())
                    })?;
                    exprs.push(e);
                }
                let field = vfexpr::field_from_exprs(exprs, &vars, param_values)
                    .map_err(|e| invalid("model.expressions", e.to_string()))?;
                Ok(Box::new(field))
            }
        }
    }

    /// A copy of this config with one named parameter overridden (used by the
    /// sweep runner). The axis name is assumed validated.
    pub fn with_parameter(&self, name: &str, value: f64) -> RunConfig {
        let mut out = self.clone();
        match &mut out.model {
            ModelSpec::StarfishCoral { params } => match name {
                "m" => params.m = value,
                "alpha1" => params.alpha1 = value,
                "alpha2" => params.alpha2 = value,
                "lambda1" => params.lambda1 = value,
                "lambda2" => params.lambda2 = value,
                "delta1" => params.delta1 = value,
                "delta2" => params.delta2 = value,
                "beta" => params.beta = value,
                "gamma" => params.gamma = value,
                "rho" => params.rho = value,
                _ => unreachable!("validated axis name"),
            },
            ModelSpec::Custom { parameters, .. } => {
                parameters.insert(name.to_string(), serde_json::json!(value));
            }
        }
        out
    }

    /// Coordinate names for output headers.
    pub fn coordinate_names(&self) -> Vec<String> {
        match &self.model {
            ModelSpec::StarfishCoral { .. } => {
                vec!["N1".into(), "N2".into(), "F".into()]
            }
            ModelSpec::Custom { variables, .. } => variables.clone(),
        }
    }
}
