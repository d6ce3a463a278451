//! Artificial-learner experiments.
//!
//! Each learner gets true forgetting parameters; every teacher arm teaches a
//! copy of the same learner (same parameters, same response seed) through
//! the schedule, and at evaluation time an item counts as learned when its
//! true recall probability reaches `rho`.

mod output;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::memory_model::{ItemId, ItemState, ModelKind, ModelParams, ParamPoint, Seconds};
use crate::psychologist::{BeliefBank, ParamGrid, Psychologist};
use crate::schedule::Schedule;
use crate::seed::derive_seed;
use crate::teacher::{Teacher, TeacherKind};

pub use output::{read_learner_table, write_outputs, LearnerRow, RunManifest};

const TAG_LEARNER: u64 = 1;
const TAG_RESPONSES: u64 = 2;
const TAG_LEITNER: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub index: usize,
    pub params: ModelParams,
    pub seed: u64,
    /// Number of resamples before the spec passed the inclusion filter.
    pub resamples: u32,
}

impl LearnerSpec {
    pub fn model(&self) -> ModelKind {
        self.params.kind()
    }
}

/// One simulated interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub step: usize,
    pub session: usize,
    pub time: Seconds,
    pub item: ItemId,
    pub first_presentation: bool,
    pub outcome: bool,
    pub predicted_recall: f64,
    pub true_recall: f64,
}

impl TrialRecord {
    pub fn abs_error(&self) -> f64 {
        (self.predicted_recall - self.true_recall).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub learner: usize,
    pub n_learned: usize,
    pub n_seen: usize,
    /// Mean |predicted - true| recall per session.
    pub session_errors: Vec<f64>,
    /// Empty unless the config asks for trial recording.
    pub trials: Vec<TrialRecord>,
}

impl RunMetrics {
    /// Learned over seen; absent when nothing was seen.
    pub fn ratio(&self) -> Option<f64> {
        (self.n_seen > 0).then(|| self.n_learned as f64 / self.n_seen as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub learners: Vec<LearnerSpec>,
    pub metrics: BTreeMap<TeacherKind, Vec<RunMetrics>>,
}

fn sample_point(rng: &mut ChaCha8Rng, cfg: &ExperimentConfig) -> ParamPoint {
    let [a0, a1] = cfg.learners.alpha_bounds;
    let [b0, b1] = cfg.learners.beta_bounds;
    let alpha = if a1 > a0 { rng.gen_range(a0.ln()..a1.ln()).exp() } else { a0 };
    let beta = if b1 > b0 { rng.gen_range(b0..b1) } else { b0 };
    ParamPoint { alpha, beta }
}

/// Draws learner `index`'s parameters (attempt `resample` of the filter).
pub fn sample_learner(cfg: &ExperimentConfig, index: usize, resample: u32) -> LearnerSpec {
    let seed = derive_seed(cfg.seed, &[TAG_LEARNER, index as u64, resample as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = match cfg.model {
        ModelKind::Ef => ModelParams::Global(sample_point(&mut rng, cfg)),
        ModelKind::Isef => ModelParams::PerItem((0..cfg.item_count).map(|_| sample_point(&mut rng, cfg)).collect()),
    };
    LearnerSpec { index, params, seed, resamples: resample }
}

/// Samples the learner's answer. First presentations show the answer and
/// always count as correct without consuming randomness.
pub fn simulate_learner_response(
    params: &ModelParams,
    item: ItemId,
    state: &ItemState,
    now: Seconds,
    rng: &mut impl Rng,
) -> Result<bool> {
    if !state.is_seen() {
        return Ok(true);
    }
    let p = params.recall(item, state, now)?;
    Ok(rng.gen::<f64>() < p)
}

/// Mean absolute prediction error per session. First presentations count
/// as zero error.
pub fn prediction_error_series(records: &[TrialRecord], sessions: usize) -> Vec<f64> {
    let mut sum = vec![0.0; sessions];
    let mut count = vec![0usize; sessions];
    for r in records {
        if r.session < sessions {
            sum[r.session] += if r.first_presentation { 0.0 } else { r.abs_error() };
            count[r.session] += 1;
        }
    }
    sum.iter().zip(&count).map(|(s, &c)| if c == 0 { 0.0 } else { s / c as f64 }).collect()
}

/// Shared, read-only inputs of one experiment.
pub struct Simulation {
    cfg: ExperimentConfig,
    schedule: Schedule,
    grid: Arc<ParamGrid>,
}

impl Simulation {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let schedule = cfg.schedule.build()?;
        let grid = Arc::new(cfg.grid.build()?);
        Ok(Self { cfg, schedule, grid })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    fn psychologist(&self, spec: &LearnerSpec) -> Psychologist {
        if self.cfg.omniscient {
            Psychologist::Omniscient(spec.params.clone())
        } else {
            Psychologist::Bayesian(BeliefBank::with_grid(self.cfg.model, self.grid.clone()))
        }
    }

    /// Teaches one learner with one teacher through the whole schedule.
    pub fn run_learner(&self, spec: &LearnerSpec, kind: TeacherKind) -> Result<RunMetrics> {
        let cfg = &self.cfg;
        let universe: Vec<ItemId> = (0..cfg.item_count as u32).map(ItemId).collect();
        let mut teacher = Teacher::new(
            kind,
            universe,
            self.psychologist(spec),
            cfg.rho,
            cfg.leitner,
            derive_seed(spec.seed, &[TAG_LEITNER]),
        )?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[TAG_RESPONSES]));
        let mut trials = Vec::with_capacity(self.schedule.horizon());
        for step in 0..self.schedule.horizon() {
            let now = self.schedule.step_time(step).expect("step within horizon");
            let session = self.schedule.locate(step).expect("step within horizon").0;
            let sel = teacher.select(step, now, &self.schedule)?;
            let state = teacher.state().item_state(sel.item)?;
            let true_recall = if state.is_seen() { spec.params.recall(sel.item, &state, now)? } else { 1.0 };
            let outcome = simulate_learner_response(&spec.params, sel.item, &state, now, &mut rng)?;
            trials.push(TrialRecord {
                step,
                session,
                time: now,
                item: sel.item,
                first_presentation: sel.first_presentation,
                outcome,
                predicted_recall: sel.predicted_recall,
                true_recall,
            });
            teacher.observe(sel.item, outcome, now)?;
        }
        let eval = self.schedule.eval_time();
        let state = teacher.state();
        let mut n_learned = 0;
        for &item in &state.introduced {
            if spec.params.recall(item, &state.item_state(item)?, eval)? >= cfg.rho {
                n_learned += 1;
            }
        }
        let session_errors = prediction_error_series(&trials, self.schedule.sessions().len());
        if !cfg.record_trials {
            trials = Vec::new();
        }
        Ok(RunMetrics { learner: spec.index, n_learned, n_seen: state.introduced.len(), session_errors, trials })
    }

    /// Samples learner `index` (applying the inclusion filter) and runs every
    /// configured teacher on it.
    pub fn run_matched(&self, index: usize) -> Result<(LearnerSpec, Vec<(TeacherKind, RunMetrics)>)> {
        let cfg = &self.cfg;
        let mut resample = 0;
        let (spec, leitner_run) = loop {
            let spec = sample_learner(cfg, index, resample);
            if !cfg.learners.require_leitner_success {
                break (spec, None);
            }
            let run = self.run_learner(&spec, TeacherKind::Leitner)?;
            if run.n_learned >= 1 {
                break (spec, Some(run));
            }
            resample += 1;
            if resample > cfg.learners.max_resamples {
                return Err(Error::Config(format!(
                    "learners: no parameter draw for learner {index} passed the Leitner filter after {} tries",
                    cfg.learners.max_resamples
                )));
            }
        };
        let mut runs = Vec::with_capacity(cfg.teachers.len());
        for &kind in &cfg.teachers {
            let run = match (&leitner_run, kind) {
                (Some(r), TeacherKind::Leitner) => r.clone(),
                _ => self.run_learner(&spec, kind)?,
            };
            runs.push((kind, run));
        }
        Ok((spec, runs))
    }

    pub fn run(&self) -> Result<ExperimentResult> {
        let per_learner: Vec<_> = (0..self.cfg.population_size)
            .into_par_iter()
            .map(|i| self.run_matched(i))
            .collect::<Result<_>>()?;
        let mut metrics: BTreeMap<TeacherKind, Vec<RunMetrics>> = BTreeMap::new();
        let mut learners = Vec::with_capacity(per_learner.len());
        for (spec, runs) in per_learner {
            for (kind, run) in runs {
                metrics.entry(kind).or_default().push(run);
            }
            learners.push(spec);
        }
        Ok(ExperimentResult { learners, metrics })
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    Simulation::new(cfg.clone())?.run()
}
