//! Experiment configuration (TOML).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leitner::LeitnerConfig;
use crate::memory_model::{ModelKind, Seconds};
use crate::psychologist::GridSpec;
use crate::schedule::{Schedule, Session, DAY};
use crate::teacher::TeacherKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub sessions: usize,
    pub iterations_per_session: u32,
    #[serde(default = "default_iteration_seconds")]
    pub iteration_seconds: Seconds,
    /// Time between consecutive session starts.
    #[serde(default = "default_spacing")]
    pub session_spacing: Seconds,
}

fn default_iteration_seconds() -> Seconds {
    4.0
}

fn default_spacing() -> Seconds {
    DAY
}

impl ScheduleConfig {
    /// Sessions start `session_spacing` apart; evaluation happens one spacing
    /// after the last session started.
    pub fn build(&self) -> Result<Schedule> {
        let sessions = (0..self.sessions)
            .map(|d| Session {
                start: d as f64 * self.session_spacing,
                iterations: self.iterations_per_session,
                iteration_seconds: self.iteration_seconds,
            })
            .collect();
        Schedule::new(sessions, self.sessions as f64 * self.session_spacing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSampling {
    /// Alpha drawn log-uniformly in these bounds.
    pub alpha_bounds: [f64; 2],
    /// Beta drawn uniformly in these bounds.
    pub beta_bounds: [f64; 2],
    /// Resample learners for whom the Leitner teacher learns nothing.
    #[serde(default = "default_true")]
    pub require_leitner_success: bool,
    #[serde(default = "default_max_resamples")]
    pub max_resamples: u32,
}

fn default_true() -> bool {
    true
}

fn default_max_resamples() -> u32 {
    100
}

impl Default for LearnerSampling {
    fn default() -> Self {
        Self {
            alpha_bounds: [2e-7, 0.025],
            beta_bounds: [1e-4, 0.9999],
            require_leitner_success: true,
            max_resamples: default_max_resamples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub population_size: usize,
    pub item_count: usize,
    pub seed: u64,
    pub model: ModelKind,
    pub omniscient: bool,
    #[serde(default = "default_teachers")]
    pub teachers: Vec<TeacherKind>,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub schedule: ScheduleConfig,
    pub grid: GridSpec,
    #[serde(default)]
    pub learners: LearnerSampling,
    #[serde(default)]
    pub leitner: LeitnerConfig,
    /// Keep every trial in the results (and write trials.tsv).
    #[serde(default)]
    pub record_trials: bool,
}

fn default_teachers() -> Vec<TeacherKind> {
    vec![TeacherKind::Leitner, TeacherKind::Myopic, TeacherKind::Conservative]
}

fn default_rho() -> f64 {
    0.9
}

impl ExperimentConfig {
    /// N=100 learners, Q=500 items, six daily sessions of 100 iterations,
    /// 100 x 100 grid.
    pub fn full_scale(model: ModelKind, omniscient: bool) -> Self {
        Self {
            population_size: 100,
            item_count: 500,
            seed: 0,
            model,
            omniscient,
            teachers: default_teachers(),
            rho: 0.9,
            schedule: ScheduleConfig {
                sessions: 6,
                iterations_per_session: 100,
                iteration_seconds: 4.0,
                session_spacing: DAY,
            },
            grid: GridSpec::standard(),
            learners: LearnerSampling::default(),
            leitner: LeitnerConfig::default(),
            record_trials: false,
        }
    }

    /// N=30, Q=100, six daily sessions of 50 iterations, 50 x 50 grid.
    pub fn desk_scale(model: ModelKind, omniscient: bool) -> Self {
        Self {
            population_size: 30,
            item_count: 100,
            schedule: ScheduleConfig {
                sessions: 6,
                iterations_per_session: 50,
                iteration_seconds: 4.0,
                session_spacing: DAY,
            },
            grid: GridSpec::with_points(50, 50),
            ..Self::full_scale(model, omniscient)
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: &str| Err(Error::Config(format!("{name}: {msg}")));
        if self.population_size == 0 {
            return field("population_size", "must be at least 1");
        }
        if self.item_count == 0 || self.item_count > u32::MAX as usize {
            return field("item_count", "must be at least 1");
        }
        if self.teachers.is_empty() {
            return field("teachers", "list at least one teacher");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return field("rho", "must lie in (0, 1)");
        }
        if self.schedule.sessions == 0 || self.schedule.iterations_per_session == 0 {
            return field("schedule", "sessions and iterations_per_session must be at least 1");
        }
        if !(self.schedule.iteration_seconds > 0.0) {
            return field("schedule.iteration_seconds", "must be positive");
        }
        let session_len = self.schedule.iterations_per_session as f64 * self.schedule.iteration_seconds;
        if self.schedule.session_spacing < session_len {
            return field("schedule.session_spacing", "sessions would overlap");
        }
        self.grid.validate().map_err(|e| Error::Config(format!("grid: {e}")))?;
        let [a0, a1] = self.learners.alpha_bounds;
        if !(a0 > 0.0 && a1 >= a0 && a1.is_finite()) {
            return field("learners.alpha_bounds", "need 0 < low <= high");
        }
        let [b0, b1] = self.learners.beta_bounds;
        if !(b0 > 0.0 && b1 >= b0 && b1 < 1.0) {
            return field("learners.beta_bounds", "need 0 < low <= high < 1");
        }
        self.leitner.validate().map_err(|e| Error::Config(format!("leitner: {e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_roundtrip() {
        let cfg = ExperimentConfig::desk_scale(ModelKind::Isef, false);
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn minimal_toml_uses_defaults() {
        let text = r#"
            population_size = 2
            item_count = 5
            seed = 3
            model = "ef"
            omniscient = true
            [schedule]
            sessions = 2
            iterations_per_session = 10
            [grid]
            alpha_points = 5
            alpha_bounds = [2e-7, 0.025]
            beta_points = 5
            beta_bounds = [0.0001, 0.9999]
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.teachers.len(), 3);
        assert_eq!(cfg.rho, 0.9);
        assert_eq!(cfg.leitner, LeitnerConfig::default());
        assert_eq!(cfg.schedule.build().unwrap().eval_time(), 2.0 * DAY);
    }

    #[test]
    fn errors_name_the_field() {
        let mut cfg = ExperimentConfig::desk_scale(ModelKind::Ef, true);
        cfg.rho = 1.5;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("rho"), "{msg}");
        cfg.rho = 0.9;
        cfg.grid.alpha_bounds = [0.0, 1.0];
        assert!(cfg.validate().unwrap_err().to_string().contains("grid"));
    }
}
