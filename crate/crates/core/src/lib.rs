//! Adaptive vocabulary teaching driven by an exponential-forgetting memory
//! model: grid Bayesian inference of each learner's forgetting parameters,
//! schedule-aware item selection, a Leitner baseline, an artificial-learner
//! simulator and a tutor service for live sessions.

pub mod analysis;
pub mod config;
pub mod error;
pub mod leitner;
pub mod memory_model;
pub mod planner;
pub mod psychologist;
pub mod schedule;
pub mod seed;
pub mod simulator;
pub mod stats;
pub mod teacher;
pub mod tutor;

pub use error::{Error, Result};
pub use memory_model::{recall_probability, record_presentation, ItemId, ItemState, ModelKind, ModelParams, ParamPoint, Seconds};
pub use planner::{reward_count, Planner, PlannerConfig, PlannerKind, TeacherState};
pub use psychologist::{init_belief, posterior_mean, update_belief, Belief, BeliefBank, GridSpec, ParamGrid, Psychologist};
pub use schedule::{Schedule, Session};
pub use teacher::{Selection, Teacher, TeacherKind};
