//! Simulation config files: strict JSON, defaults filled, values validated.

use crate::CliError;
use dfrt_core::basis::{ModeIndex, ModeSet};
use dfrt_core::dynamics::{random_real_coefficients, Integrator};
use dfrt_core::transform::CoefficientVector;
use dfrt_core::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeCoeff {
    pub ell: u32,
    pub m: i32,
    pub n: u32,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Either explicit coefficients or a seeded random real field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_coeffs: Option<Vec<ModeCoeff>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self { mode_coeffs: None, random_seed: Some(0), amplitude: Some(DEFAULT_AMPLITUDE) }
    }
}

pub const DEFAULT_AMPLITUDE: f64 = 0.1;

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfigFile {
    pub nu: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default = "default_true")]
    pub real_field: bool,
    #[serde(default)]
    pub initial: InitialSpec,
}

fn invalid(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config { key: key.to_string(), message: message.into() }
}

impl SimConfigFile {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            return Err(invalid("nu", format!("must be a finite nonnegative number, got {}", self.nu)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt) || !self.t_end.is_finite() {
            return Err(invalid("t_end", format!("must be at least dt = {}, got {}", self.dt, self.t_end)));
        }
        let init = &self.initial;
        match (&init.mode_coeffs, init.random_seed) {
            (Some(_), Some(_)) => {
                return Err(invalid("initial", "give either mode_coeffs or random_seed, not both"));
            }
            (Some(list), None) => {
                if init.amplitude.is_some() {
                    return Err(invalid("initial.amplitude", "only valid with random_seed"));
                }
                for c in list {
                    if !c.re.is_finite() || !c.im.is_finite() {
                        return Err(invalid("initial.mode_coeffs", "non-finite coefficient"));
                    }
                }
            }
            _ => {}
        }
        if let Some(a) = init.amplitude {
            if !(a >= 0.0) || !a.is_finite() {
                return Err(invalid("initial.amplitude", format!("must be nonnegative, got {a}")));
            }
        }
        Ok(())
    }

    /// The initial coefficient vector over `mode_set`.
    pub fn initial_coeffs(&self, mode_set: &ModeSet) -> Result<CoefficientVector, CliError> {
        match &self.initial.mode_coeffs {
            Some(list) => {
                let mut c = CoefficientVector::zeros(mode_set.clone());
                for mc in list {
                    let mode = ModeIndex::new(mc.ell, mc.m, mc.n)
                        .map_err(|e| invalid("initial.mode_coeffs", e.to_string()))?;
                    c.set(&mode, Complex64::new(mc.re, mc.im))
                        .map_err(|e| invalid("initial.mode_coeffs", e.to_string()))?;
                }
                Ok(c)
            }
            None => {
                let seed = self.initial.random_seed.unwrap_or(0);
                let amp = self.initial.amplitude.unwrap_or(DEFAULT_AMPLITUDE);
                Ok(random_real_coefficients(mode_set, amp, seed)?)
            }
        }
    }
}

/// Parse and validate a config from JSON text.
pub fn parse_config(text: &str) -> Result<SimConfigFile, CliError> {
    let mut cfg: SimConfigFile = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let key = offending_key(&msg).unwrap_or_else(|| "<document>".to_string());
        CliError::Config { key, message: msg }
    })?;
    if cfg.initial.mode_coeffs.is_none() && cfg.initial.random_seed.is_none() {
        cfg.initial.random_seed = Some(0);
    }
    if cfg.initial.mode_coeffs.is_none() && cfg.initial.amplitude.is_none() {
        cfg.initial.amplitude = Some(DEFAULT_AMPLITUDE);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Read, parse and validate a config file.
pub fn load_config(path: &Path) -> Result<SimConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Core(e.into()))?;
    parse_config(&text)
}

/// Pull the key out of serde messages such as "unknown field `forcing`" or
/// "missing field `dt`".
fn offending_key(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(r#"{"nu": 0.01, "dt": 0.001, "t_end": 1}"#).unwrap();
        assert_eq!(c.integrator, Integrator::Rk4Exponential);
        assert!(c.real_field);
        assert_eq!(c.initial.random_seed, Some(0));
    }

    #[test]
    fn negative_viscosity_names_nu() {
        match parse_config(r#"{"nu": -1, "dt": 0.001, "t_end": 1}"#) {
            Err(CliError::Config { key, .. }) => assert_eq!(key, "nu"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected() {
        match parse_config(r#"{"nu": 0.01, "dt": 0.001, "t_end": 1, "forcing": 3}"#) {
            Err(CliError::Config { key, .. }) => assert_eq!(key, "forcing"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_key_is_named() {
        match parse_config(r#"{"nu": 0.01, "t_end": 1}"#) {
            Err(CliError::Config { key, .. }) => assert_eq!(key, "dt"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nested_unknown_key() {
        match parse_config(r#"{"nu": 0.01, "dt": 0.1, "t_end": 1, "initial": {"seed": 3}}"#) {
            Err(CliError::Config { key, .. }) => assert_eq!(key, "seed"),
            other => panic!("{other:?}"),
        }
    }
}
