//! Service configuration: a TOML file, then `MEMTEACH_*` environment
//! overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leitner::LeitnerConfig;
use crate::memory_model::{ModelKind, Seconds};
use crate::psychologist::GridSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServiceConfig {
    /// Socket address to listen on.
    pub bind: String,
    pub data_dir: PathBuf,
    /// Imported at startup when the store holds no vocabulary yet.
    pub vocabulary: Option<PathBuf>,
    pub seed: u64,
    pub items_per_arm: usize,
    pub questions_per_session: u32,
    pub training_days: u32,
    /// Expected duration of one question, used by the planners.
    pub iteration_seconds: Seconds,
    pub rho: f64,
    pub model: ModelKind,
    pub grid: GridSpec,
    pub leitner: LeitnerConfig,
    /// Accept a `now` field in requests instead of the server clock.
    pub allow_client_time: bool,
    /// fsync the event log after every append.
    pub fsync: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("tutor-data"),
            vocabulary: None,
            seed: 0,
            items_per_arm: 50,
            questions_per_session: 100,
            training_days: 6,
            iteration_seconds: 4.0,
            rho: 0.9,
            model: ModelKind::Isef,
            grid: GridSpec::standard(),
            leitner: LeitnerConfig::default(),
            allow_client_time: false,
            fsync: true,
        }
    }
}

pub const ENV_PREFIX: &str = "MEMTEACH_";

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `path` (if given), applies the process environment and
    /// validates.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        cfg.apply_env(std::env::vars())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Recognised keys: `BIND`, `DATA_DIR`, `VOCABULARY`, `SEED`,
    /// `ITEMS_PER_ARM`, `QUESTIONS_PER_SESSION`, `ALLOW_CLIENT_TIME`, `FSYNC`.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<()> {
        for (key, value) in vars {
            let Some(name) = key.strip_prefix(ENV_PREFIX) else { continue };
            let bad = |e: &dyn std::fmt::Display| Error::Config(format!("{key}: {e}"));
            match name {
                "BIND" => self.bind = value,
                "DATA_DIR" => self.data_dir = value.into(),
                "VOCABULARY" => self.vocabulary = Some(value.into()),
                "SEED" => self.seed = value.parse().map_err(|e| bad(&e))?,
                "ITEMS_PER_ARM" => self.items_per_arm = value.parse().map_err(|e| bad(&e))?,
                "QUESTIONS_PER_SESSION" => self.questions_per_session = value.parse().map_err(|e| bad(&e))?,
                "ALLOW_CLIENT_TIME" => self.allow_client_time = parse_bool(&value).ok_or_else(|| bad(&"not a boolean"))?,
                "FSYNC" => self.fsync = parse_bool(&value).ok_or_else(|| bad(&"not a boolean"))?,
                _ => {}
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: &str| Err(Error::Config(format!("{name}: {msg}")));
        if self.items_per_arm < 6 {
            return field("items_per_arm", "need at least 6 items for six distinct choices");
        }
        if self.questions_per_session == 0 {
            return field("questions_per_session", "must be at least 1");
        }
        if self.training_days == 0 {
            return field("training_days", "must be at least 1");
        }
        if !(self.iteration_seconds > 0.0) {
            return field("iteration_seconds", "must be positive");
        }
        if 2.0 * self.questions_per_session as f64 * self.iteration_seconds >= crate::schedule::DAY {
            return field("questions_per_session", "two sessions must fit in a day");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return field("rho", "must lie in (0, 1)");
        }
        self.grid.validate().map_err(|e| Error::Config(format!("grid: {e}")))?;
        self.leitner.validate().map_err(|e| Error::Config(format!("leitner: {e}")))?;
        Ok(())
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Some(true),
        "0" | "false" | "no" | "off" => Some(false),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ServiceConfig::default().validate().unwrap();
    }

    #[test]
    fn partial_toml() {
        let cfg = ServiceConfig::from_toml("bind = \"0.0.0.0:9000\"\nitems_per_arm = 20\n").unwrap();
        assert_eq!(cfg.bind, "0.0.0.0:9000");
        assert_eq!(cfg.items_per_arm, 20);
        assert_eq!(cfg.questions_per_session, 100);
        assert!(ServiceConfig::from_toml("colour = 1").is_err());
    }

    #[test]
    fn env_overrides() {
        let mut cfg = ServiceConfig::default();
        let vars = [
            ("MEMTEACH_SEED", "42"),
            ("MEMTEACH_DATA_DIR", "/tmp/x"),
            ("MEMTEACH_ALLOW_CLIENT_TIME", "yes"),
            ("HOME", "/root"),
        ];
        cfg.apply_env(vars.iter().map(|(k, v)| (k.to_string(), v.to_string()))).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.data_dir, PathBuf::from("/tmp/x"));
        assert!(cfg.allow_client_time);
        let err = cfg.apply_env([("MEMTEACH_SEED".to_string(), "x".to_string())]).unwrap_err();
        assert!(err.to_string().contains("MEMTEACH_SEED"));
    }

    #[test]
    fn validation_names_field() {
        let cfg = ServiceConfig { items_per_arm: 3, ..Default::default() };
        assert!(cfg.validate().unwrap_err().to_string().contains("items_per_arm"));
    }
}
