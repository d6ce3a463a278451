//! Tutor core: users, teaching arms, questions, answers and evaluation.
//!
//! Each user gets two disjoint item sets. The `leitner` arm is taught by the
//! Leitner baseline, the `model` arm by a myopic or conservative planner.
//! Training runs for `training_days` days with one session per arm per day;
//! the arm that goes first alternates from day to day. Evaluation opens on
//! the following day.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ServiceConfig;
use super::store::EventLog;
use super::vocabulary::{parse_vocabulary, Vocabulary, VocabularyItem};
use crate::error::Error;
use crate::leitner::LeitnerConfig;
use crate::memory_model::{ItemId, ModelKind, Seconds};
use crate::psychologist::{GridSpec, Psychologist};
use crate::schedule::{Schedule, Session, DAY};
use crate::seed::derive_seed;
use crate::teacher::{Teacher, TeacherKind};

pub const CHOICES: usize = 6;

const TAG_USER_ID: u64 = 1;
const TAG_USER_SEED: u64 = 2;
const TAG_ITEMS: u64 = 3;
const TAG_ASSIGN: u64 = 4;
const TAG_TEACHER: u64 = 5;
const TAG_CHOICES: u64 = 6;
const TAG_EVAL_ORDER: u64 = 7;
const TAG_EVAL_CHOICES: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Leitner,
    Model,
}

impl Arm {
    pub const ALL: [Arm; 2] = [Arm::Leitner, Arm::Model];

    pub fn index(self) -> usize {
        match self {
            Arm::Leitner => 0,
            Arm::Model => 1,
        }
    }

    pub fn other(self) -> Arm {
        match self {
            Arm::Leitner => Arm::Model,
            Arm::Model => Arm::Leitner,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Arm::Leitner => "leitner",
            Arm::Model => "model",
        }
    }

    pub fn parse(s: &str) -> Option<Arm> {
        match s {
            "leitner" => Some(Arm::Leitner),
            "model" => Some(Arm::Model),
            _ => None,
        }
    }
}

impl std::fmt::Display for Arm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error("outside session window: {0}")]
    OutsideWindow(String),
    #[error("session {session} is complete")]
    SessionComplete { session: u32 },
    #[error("trial {trial} is not the pending question")]
    Stale { trial: u64 },
    #[error("trial {trial} was already answered")]
    AlreadyAnswered { trial: u64, correct: bool },
    #[error("{0:?} is not one of the offered choices")]
    InvalidChoice(String),
    #[error("evaluation opens at {opens}")]
    EvaluationNotOpen { opens: Seconds },
    #[error("evaluation is complete")]
    EvaluationComplete,
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("writes are disabled after a storage failure")]
    Unavailable,
    #[error(transparent)]
    Core(#[from] Error),
}

impl ServiceError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownUser(_) => "unknown_user",
            ServiceError::OutsideWindow(_) => "outside_session_window",
            ServiceError::SessionComplete { .. } => "session_complete",
            ServiceError::Stale { .. } => "stale_question",
            ServiceError::AlreadyAnswered { .. } => "already_answered",
            ServiceError::InvalidChoice(_) => "invalid_choice",
            ServiceError::EvaluationNotOpen { .. } => "evaluation_not_open",
            ServiceError::EvaluationComplete => "evaluation_complete",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Unavailable => "unavailable",
            ServiceError::Core(Error::TimeWentBackwards { .. }) => "time_went_backwards",
            ServiceError::Core(Error::Parse { .. }) => "parse_error",
            ServiceError::Core(Error::Config(_)) => "invalid",
            ServiceError::Core(_) => "internal",
        }
    }
}

pub type ServiceResult<T> = std::result::Result<T, ServiceError>;

/// Settings frozen into each user at creation so later config changes do not
/// alter how their history replays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSettings {
    pub questions_per_session: u32,
    pub training_days: u32,
    pub iteration_seconds: Seconds,
    pub rho: f64,
    pub model: ModelKind,
    pub grid: GridSpec,
    pub leitner: LeitnerConfig,
}

impl UserSettings {
    pub fn from_config(cfg: &ServiceConfig) -> Self {
        Self {
            questions_per_session: cfg.questions_per_session,
            training_days: cfg.training_days,
            iteration_seconds: cfg.iteration_seconds,
            rho: cfg.rho,
            model: cfg.model,
            grid: cfg.grid.clone(),
            leitner: cfg.leitner,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub id: String,
    pub seed: u64,
    pub model_teacher: TeacherKind,
    /// Arm taught first on day 0 (and every even day).
    pub first_arm: Arm,
    /// Start of day 0's first session, Unix seconds.
    pub start: Seconds,
    /// Items of the leitner and model arms, in introduction order.
    pub items: [Vec<VocabularyItem>; 2],
    pub settings: UserSettings,
}

impl UserRecord {
    pub fn first_arm_on(&self, day: u32) -> Arm {
        if day % 2 == 0 {
            self.first_arm
        } else {
            self.first_arm.other()
        }
    }

    pub fn teacher_kind(&self, arm: Arm) -> TeacherKind {
        match arm {
            Arm::Leitner => TeacherKind::Leitner,
            Arm::Model => self.model_teacher,
        }
    }

    fn session_seconds(&self) -> Seconds {
        self.settings.questions_per_session as f64 * self.settings.iteration_seconds
    }

    /// Declared start of `arm`'s session on `day`.
    pub fn session_start(&self, arm: Arm, day: u32) -> Seconds {
        let offset = if self.first_arm_on(day) == arm { 0.0 } else { self.session_seconds() };
        self.start + day as f64 * DAY + offset
    }

    pub fn evaluation_start(&self) -> Seconds {
        self.start + self.settings.training_days as f64 * DAY
    }

    pub fn schedule(&self, arm: Arm) -> crate::error::Result<Schedule> {
        let sessions = (0..self.settings.training_days)
            .map(|d| Session {
                start: self.session_start(arm, d),
                iterations: self.settings.questions_per_session,
                iteration_seconds: self.settings.iteration_seconds,
            })
            .collect();
        Schedule::new(sessions, self.evaluation_start())
    }

    /// Day index of `now`; negative before the start.
    pub fn day_at(&self, now: Seconds) -> i64 {
        ((now - self.start) / DAY).floor() as i64
    }

    fn new_teacher(&self, arm: Arm) -> crate::error::Result<Teacher> {
        let s = &self.settings;
        let universe = (0..self.items[arm.index()].len() as u32).map(ItemId).collect();
        let psy = Psychologist::bayesian(s.model, &s.grid)?;
        let seed = derive_seed(self.seed, &[TAG_TEACHER, arm.index() as u64]);
        Teacher::new(self.teacher_kind(arm), universe, psy, s.rho, s.leitner, seed)
    }
}

/// A training question. `reveal` carries the answer on first presentations
/// only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub trial: u64,
    pub item: String,
    pub prompt: String,
    pub choices: Vec<String>,
    pub first_presentation: bool,
    pub reveal: Option<String>,
    pub session: u32,
    pub iteration: u32,
    pub step: usize,
    pub issued_at: Seconds,
    pub predicted_recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub user: String,
    pub arm: Arm,
    pub trial: u64,
    pub session: u32,
    pub iteration: u32,
    pub step: usize,
    /// Presentation time, used as the review timestamp.
    pub issued_at: Seconds,
    pub answered_at: Seconds,
    pub item: String,
    pub choices: Vec<String>,
    pub chosen: String,
    pub correct: bool,
    pub first_presentation: bool,
    pub predicted_recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerAck {
    pub trial: u64,
    pub correct: bool,
    pub correct_answer: String,
    pub session: u32,
    pub answered_in_session: u32,
    pub questions_per_session: u32,
    pub session_complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationQuestion {
    pub index: usize,
    pub total: usize,
    pub item: String,
    pub prompt: String,
    pub choices: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationAnswer {
    pub index: usize,
    pub item: String,
    pub chosen: String,
    pub correct: bool,
    pub answered_at: Seconds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemVerdict {
    pub item: String,
    pub responses: Vec<bool>,
    pub learned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub n_learned: usize,
    pub n_seen: usize,
    pub ratio: Option<f64>,
    pub verdicts: Vec<ItemVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EvaluationStep {
    Question(EvaluationQuestion),
    Complete(EvaluationSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationStatus {
    pub answered: usize,
    pub total: usize,
    pub summary: Option<EvaluationSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    VocabularyImported { items: Vec<VocabularyItem> },
    UserCreated { user: UserRecord },
    QuestionIssued { user: String, arm: Arm, question: Question },
    QuestionExpired { user: String, arm: Arm, trial: u64 },
    AnswerRecorded { record: TrialRecord },
    EvaluationAnswered { user: String, arm: Arm, answer: EvaluationAnswer },
    EvaluationCompleted { user: String, arm: Arm, summary: EvaluationSummary },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NewUser {
    pub model_teacher: Option<TeacherKind>,
    pub first_arm: Option<Arm>,
    /// Defaults to the request time.
    pub start: Option<Seconds>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub day: u32,
    pub arm: Arm,
    pub teacher: TeacherKind,
    pub start: Seconds,
    pub questions: u32,
    pub answered: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleView {
    pub sessions: Vec<SessionView>,
    pub evaluation_start: Seconds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserView {
    pub id: String,
    pub model_teacher: TeacherKind,
    pub first_arm: Arm,
    pub start: Seconds,
    pub items_per_arm: usize,
    pub schedule: ScheduleView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemEstimate {
    pub item: String,
    pub n_presentations: u32,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub arm: Arm,
    pub teacher: TeacherKind,
    pub n_items: usize,
    pub n_seen: usize,
    pub n_trials: usize,
    pub n_correct: usize,
    pub evaluation: Option<EvaluationSummary>,
    pub estimates: Vec<ItemEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserStats {
    pub user: String,
    pub arms: Vec<ArmStats>,
}

#[derive(Debug, Clone)]
struct ArmRuntime {
    teacher: Teacher,
    schedule: Schedule,
    pending: Option<Question>,
    next_trial: u64,
    trials: Vec<TrialRecord>,
    eval_answers: Vec<EvaluationAnswer>,
    eval_summary: Option<EvaluationSummary>,
}

impl ArmRuntime {
    fn answered_in(&self, session: u32) -> u32 {
        self.trials.iter().rev().take_while(|t| t.session >= session).filter(|t| t.session == session).count() as u32
    }
}

#[derive(Debug)]
struct UserRuntime {
    record: UserRecord,
    arms: [ArmRuntime; 2],
}

impl UserRuntime {
    fn new(record: UserRecord) -> crate::error::Result<Self> {
        let arm = |a: Arm| -> crate::error::Result<ArmRuntime> {
            Ok(ArmRuntime {
                teacher: record.new_teacher(a)?,
                schedule: record.schedule(a)?,
                pending: None,
                next_trial: 0,
                trials: Vec::new(),
                eval_answers: Vec::new(),
                eval_summary: None,
            })
        };
        let arms = [arm(Arm::Leitner)?, arm(Arm::Model)?];
        Ok(Self { record, arms })
    }

    fn item_index(&self, arm: Arm, id: &str) -> Option<usize> {
        self.record.items[arm.index()].iter().position(|i| i.id == id)
    }

    fn choices(&self, arm: Arm, target: usize, seed: u64) -> Vec<String> {
        let items = &self.record.items[arm.index()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pool: Vec<usize> = (0..items.len()).filter(|&k| k != target).collect();
        pool.shuffle(&mut rng);
        let mut choices = vec![items[target].answer.clone()];
        for k in pool {
            if choices.len() == CHOICES {
                break;
            }
            if !choices.contains(&items[k].answer) {
                choices.push(items[k].answer.clone());
            }
        }
        choices.shuffle(&mut rng);
        choices
    }

    /// Each seen item twice, in seeded shuffled order.
    fn eval_order(&self, arm: Arm) -> Vec<usize> {
        let introduced = &self.arms[arm.index()].teacher.state().introduced;
        let mut order: Vec<usize> = introduced.iter().flat_map(|i| [i.index(), i.index()]).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.record.seed, &[TAG_EVAL_ORDER, arm.index() as u64]));
        order.shuffle(&mut rng);
        order
    }

    fn eval_question(&self, arm: Arm, index: usize, order: &[usize]) -> EvaluationQuestion {
        let k = order[index];
        let item = &self.record.items[arm.index()][k];
        let seed = derive_seed(self.record.seed, &[TAG_EVAL_CHOICES, arm.index() as u64, index as u64]);
        EvaluationQuestion {
            index,
            total: order.len(),
            item: item.id.clone(),
            prompt: item.prompt.clone(),
            choices: self.choices(arm, k, seed),
        }
    }

    fn eval_summary(&self, arm: Arm) -> EvaluationSummary {
        let rt = &self.arms[arm.index()];
        let mut responses: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
        for a in &rt.eval_answers {
            responses.entry(a.item.as_str()).or_default().push(a.correct);
        }
        let verdicts: Vec<ItemVerdict> = rt
            .teacher
            .state()
            .introduced
            .iter()
            .map(|i| {
                let id = &self.record.items[arm.index()][i.index()].id;
                let r = responses.get(id.as_str()).cloned().unwrap_or_default();
                let learned = r.len() == 2 && r.iter().all(|c| *c);
                ItemVerdict { item: id.clone(), responses: r, learned }
            })
            .collect();
        let n_seen = verdicts.len();
        let n_learned = verdicts.iter().filter(|v| v.learned).count();
        let ratio = (n_seen > 0).then(|| n_learned as f64 / n_seen as f64);
        EvaluationSummary { n_learned, n_seen, ratio, verdicts }
    }

    fn view(&self) -> UserView {
        let r = &self.record;
        let mut sessions = Vec::new();
        for day in 0..r.settings.training_days {
            let first = r.first_arm_on(day);
            for arm in [first, first.other()] {
                sessions.push(SessionView {
                    day,
                    arm,
                    teacher: r.teacher_kind(arm),
                    start: r.session_start(arm, day),
                    questions: r.settings.questions_per_session,
                    answered: self.arms[arm.index()].answered_in(day),
                });
            }
        }
        UserView {
            id: r.id.clone(),
            model_teacher: r.model_teacher,
            first_arm: r.first_arm,
            start: r.start,
            items_per_arm: r.items[0].len(),
            schedule: ScheduleView { sessions, evaluation_start: r.evaluation_start() },
        }
    }

    /// Applies a logged event. Question events re-run the teacher's
    /// selection when `replay` is set.
    fn apply(&mut self, event: &Event, replay: bool) -> crate::error::Result<()> {
        match event {
            Event::QuestionIssued { arm, question, .. } => {
                let local = self
                    .item_index(*arm, &question.item)
                    .ok_or_else(|| Error::Config(format!("unknown item {}", question.item)))?;
                let rt = &mut self.arms[arm.index()];
                if replay {
                    let sel = rt.teacher.select(question.step, question.issued_at, &rt.schedule)?;
                    if sel.item.index() != local {
                        return Err(Error::Config(format!(
                            "replay diverged at trial {}: log has {}, teacher picks {}",
                            question.trial,
                            question.item,
                            self.record.items[arm.index()][sel.item.index()].id
                        )));
                    }
                }
                rt.pending = Some(question.clone());
                rt.next_trial = question.trial + 1;
            }
            Event::QuestionExpired { arm, .. } => {
                self.arms[arm.index()].pending = None;
            }
            Event::AnswerRecorded { record } => {
                let local = self
                    .item_index(record.arm, &record.item)
                    .ok_or_else(|| Error::Config(format!("unknown item {}", record.item)))?;
                let rt = &mut self.arms[record.arm.index()];
                rt.teacher.observe(ItemId(local as u32), record.correct, record.issued_at)?;
                rt.trials.push(record.clone());
                rt.pending = None;
            }
            Event::EvaluationAnswered { arm, answer, .. } => {
                self.arms[arm.index()].eval_answers.push(answer.clone());
            }
            Event::EvaluationCompleted { arm, summary, .. } => {
                self.arms[arm.index()].eval_summary = Some(summary.clone());
            }
            Event::VocabularyImported { .. } | Event::UserCreated { .. } => {}
        }
        Ok(())
    }
}

fn event_user(event: &Event) -> Option<&str> {
    match event {
        Event::QuestionIssued { user, .. }
        | Event::QuestionExpired { user, .. }
        | Event::EvaluationAnswered { user, .. }
        | Event::EvaluationCompleted { user, .. } => Some(user),
        Event::AnswerRecorded { record } => Some(&record.user),
        Event::UserCreated { user } => Some(&user.id),
        Event::VocabularyImported { .. } => None,
    }
}

/// The tutor: all users, the vocabulary and the event log.
#[derive(Debug)]
pub struct TutorService {
    cfg: ServiceConfig,
    vocab: RwLock<Vocabulary>,
    users: RwLock<BTreeMap<String, Arc<Mutex<UserRuntime>>>>,
    log: Mutex<EventLog>,
    failed: AtomicBool,
}

impl TutorService {
    /// Opens the store in `cfg.data_dir`, replays it and imports
    /// `cfg.vocabulary` if the store has no vocabulary yet.
    pub fn open(cfg: ServiceConfig) -> ServiceResult<Self> {
        cfg.validate()?;
        let (log, events) = EventLog::open::<Event>(&cfg.data_dir, cfg.fsync)?;
        let svc = Self {
            cfg,
            vocab: RwLock::new(Vocabulary::default()),
            users: RwLock::new(BTreeMap::new()),
            log: Mutex::new(log),
            failed: AtomicBool::new(false),
        };
        let replayed = events.len();
        for event in &events {
            svc.replay(event)?;
        }
        tracing::info!(events = replayed, users = svc.user_count(), "store replayed");
        if let Some(path) = svc.cfg.vocabulary.clone() {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Config(format!("vocabulary {}: {e}", path.display())))?;
            let items = parse_vocabulary(&text)?;
            if svc.vocabulary_len() == 0 {
                let n = svc.import_items(items)?;
                tracing::info!(items = n, path = %path.display(), "vocabulary imported");
            }
        }
        Ok(svc)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.cfg
    }

    fn replay(&self, event: &Event) -> ServiceResult<()> {
        match event {
            Event::VocabularyImported { items } => {
                self.vocab.write().expect("vocabulary lock").extend(items.clone())?;
            }
            Event::UserCreated { user } => {
                let rt = UserRuntime::new(user.clone())?;
                self.users.write().expect("users lock").insert(user.id.clone(), Arc::new(Mutex::new(rt)));
            }
            other => {
                let id = event_user(other).unwrap_or_default();
                let user = self.user(id)?;
                let mut rt = user.lock().expect("user lock");
                rt.apply(other, true)?;
            }
        }
        Ok(())
    }

    fn persist(&self, event: &Event) -> ServiceResult<()> {
        if self.failed.load(Ordering::SeqCst) {
            return Err(ServiceError::Unavailable);
        }
        let mut log = self.log.lock().expect("log lock");
        if let Err(e) = log.append(event) {
            self.failed.store(true, Ordering::SeqCst);
            tracing::error!(error = %e, "event log append failed; refusing further writes");
            return Err(e.into());
        }
        Ok(())
    }

    fn check_writable(&self) -> ServiceResult<()> {
        if self.failed.load(Ordering::SeqCst) {
            return Err(ServiceError::Unavailable);
        }
        Ok(())
    }

    fn user(&self, id: &str) -> ServiceResult<Arc<Mutex<UserRuntime>>> {
        self.users
            .read()
            .expect("users lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownUser(id.to_string()))
    }

    pub fn user_count(&self) -> usize {
        self.users.read().expect("users lock").len()
    }

    pub fn user_ids(&self) -> Vec<String> {
        self.users.read().expect("users lock").keys().cloned().collect()
    }

    pub fn vocabulary_len(&self) -> usize {
        self.vocab.read().expect("vocabulary lock").len()
    }

    pub fn vocabulary(&self) -> Vec<VocabularyItem> {
        self.vocab.read().expect("vocabulary lock").items().to_vec()
    }

    /// Parses and stores a vocabulary document; nothing is stored if any
    /// line is bad or any id already exists.
    pub fn ingest_vocabulary(&self, text: &str) -> ServiceResult<usize> {
        let items = parse_vocabulary(text)?;
        self.import_items(items)
    }

    fn import_items(&self, items: Vec<VocabularyItem>) -> ServiceResult<usize> {
        self.check_writable()?;
        let mut vocab = self.vocab.write().expect("vocabulary lock");
        vocab.check_new(&items)?;
        let n = items.len();
        let event = Event::VocabularyImported { items };
        self.persist(&event)?;
        if let Event::VocabularyImported { items } = event {
            vocab.extend(items)?;
        }
        Ok(n)
    }

    pub fn create_user(&self, req: NewUser, now: Seconds) -> ServiceResult<UserView> {
        self.check_writable()?;
        let vocab = self.vocab.read().expect("vocabulary lock");
        let mut users = self.users.write().expect("users lock");
        let counter = users.len() as u64;
        let seed = req.seed.unwrap_or_else(|| derive_seed(self.cfg.seed, &[TAG_USER_SEED, counter]));
        let mut id = format!("u{:016x}", derive_seed(self.cfg.seed, &[TAG_USER_ID, counter]));
        let mut bump = 0;
        while users.contains_key(&id) {
            bump += 1;
            id = format!("u{:016x}", derive_seed(self.cfg.seed, &[TAG_USER_ID, counter, bump]));
        }
        let assign = derive_seed(seed, &[TAG_ASSIGN]);
        let model_teacher = match req.model_teacher {
            Some(TeacherKind::Leitner) => {
                return Err(ServiceError::BadRequest("model_teacher must be myopic or conservative".into()))
            }
            Some(k) => k,
            None if assign & 1 == 0 => TeacherKind::Myopic,
            None => TeacherKind::Conservative,
        };
        let first_arm = req.first_arm.unwrap_or(if assign & 2 == 0 { Arm::Leitner } else { Arm::Model });
        let start = req.start.unwrap_or(now);
        if !start.is_finite() {
            return Err(ServiceError::BadRequest("start must be finite".into()));
        }

        let n = self.cfg.items_per_arm;
        if vocab.len() < 2 * n {
            return Err(ServiceError::BadRequest(format!(
                "vocabulary has {} items, {} needed for two arms of {n}",
                vocab.len(),
                2 * n
            )));
        }
        let mut picks: Vec<usize> = (0..vocab.len()).collect();
        picks.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, &[TAG_ITEMS])));
        let take = |r: std::ops::Range<usize>| -> Vec<VocabularyItem> {
            picks[r].iter().map(|&k| vocab.items()[k].clone()).collect()
        };
        let items = [take(0..n), take(n..2 * n)];
        for set in &items {
            let mut answers: Vec<&str> = set.iter().map(|i| i.answer.as_str()).collect();
            answers.sort_unstable();
            answers.dedup();
            if answers.len() < CHOICES {
                return Err(ServiceError::BadRequest("an arm has fewer than six distinct answers".into()));
            }
        }
        let record = UserRecord {
            id: id.clone(),
            seed,
            model_teacher,
            first_arm,
            start,
            items,
            settings: UserSettings::from_config(&self.cfg),
        };
        let rt = UserRuntime::new(record.clone())?;
        self.persist(&Event::UserCreated { user: record })?;
        let view = rt.view();
        users.insert(id, Arc::new(Mutex::new(rt)));
        Ok(view)
    }

    pub fn user_view(&self, id: &str) -> ServiceResult<UserView> {
        Ok(self.user(id)?.lock().expect("user lock").view())
    }

    pub fn user_record(&self, id: &str) -> ServiceResult<UserRecord> {
        Ok(self.user(id)?.lock().expect("user lock").record.clone())
    }

    /// The pending question, or a fresh one from the arm's teacher.
    pub fn next_question(&self, id: &str, arm: Arm, now: Seconds) -> ServiceResult<Question> {
        let user = self.user(id)?;
        let mut rt = user.lock().expect("user lock");
        let day = rt.record.day_at(now);
        let days = rt.record.settings.training_days as i64;
        if day < 0 {
            return Err(ServiceError::OutsideWindow(format!("training starts at {}", rt.record.start)));
        }
        if day >= days {
            return Err(ServiceError::OutsideWindow("training is over, evaluation is open".into()));
        }
        let day = day as u32;
        if let Some(p) = &rt.arms[arm.index()].pending {
            if p.session == day {
                return Ok(p.clone());
            }
            let event = Event::QuestionExpired { user: id.to_string(), arm, trial: p.trial };
            self.persist(&event)?;
            rt.apply(&event, false)?;
        }
        self.check_writable()?;
        let quota = rt.record.settings.questions_per_session;
        let first = rt.record.first_arm_on(day);
        if arm != first && rt.arms[first.index()].answered_in(day) < quota {
            return Err(ServiceError::OutsideWindow(format!("today's {first} session comes first")));
        }
        let answered = rt.arms[arm.index()].answered_in(day);
        if answered >= quota {
            return Err(ServiceError::SessionComplete { session: day });
        }
        let step = day as usize * quota as usize + answered as usize;

        let a = &mut rt.arms[arm.index()];
        let trial = a.next_trial;
        let sel = a.teacher.select(step, now, &a.schedule)?;
        let k = sel.item.index();
        let choices = rt.choices(arm, k, derive_seed(rt.record.seed, &[TAG_CHOICES, arm.index() as u64, trial]));
        let item = &rt.record.items[arm.index()][k];
        let question = Question {
            trial,
            item: item.id.clone(),
            prompt: item.prompt.clone(),
            choices,
            first_presentation: sel.first_presentation,
            reveal: sel.first_presentation.then(|| item.answer.clone()),
            session: day,
            iteration: answered,
            step,
            issued_at: now,
            predicted_recall: sel.predicted_recall,
        };
        let event = Event::QuestionIssued { user: id.to_string(), arm, question: question.clone() };
        self.persist(&event)?;
        rt.apply(&event, false)?;
        Ok(question)
    }

    pub fn submit_answer(
        &self,
        id: &str,
        arm: Arm,
        trial: u64,
        item: &str,
        chosen: &str,
        now: Seconds,
    ) -> ServiceResult<AnswerAck> {
        let user = self.user(id)?;
        let mut rt = user.lock().expect("user lock");
        let a = &rt.arms[arm.index()];
        let pending = match &a.pending {
            Some(p) if p.trial == trial && p.item == item => p.clone(),
            _ => {
                return Err(match a.trials.iter().find(|t| t.trial == trial) {
                    Some(done) => ServiceError::AlreadyAnswered { trial, correct: done.correct },
                    None => ServiceError::Stale { trial },
                })
            }
        };
        if !pending.choices.iter().any(|c| c == chosen) {
            return Err(ServiceError::InvalidChoice(chosen.to_string()));
        }
        if now < pending.issued_at {
            return Err(Error::TimeWentBackwards { last: pending.issued_at, now }.into());
        }
        let local = rt.item_index(arm, item).expect("pending item belongs to the arm");
        let answer = rt.record.items[arm.index()][local].answer.clone();
        let correct = chosen == answer;
        let record = TrialRecord {
            user: id.to_string(),
            arm,
            trial,
            session: pending.session,
            iteration: pending.iteration,
            step: pending.step,
            issued_at: pending.issued_at,
            answered_at: now,
            item: item.to_string(),
            choices: pending.choices.clone(),
            chosen: chosen.to_string(),
            correct,
            first_presentation: pending.first_presentation,
            predicted_recall: pending.predicted_recall,
        };
        let event = Event::AnswerRecorded { record };
        self.persist(&event)?;
        rt.apply(&event, false)?;
        let quota = rt.record.settings.questions_per_session;
        let answered = rt.arms[arm.index()].answered_in(pending.session);
        Ok(AnswerAck {
            trial,
            correct,
            correct_answer: answer,
            session: pending.session,
            answered_in_session: answered,
            questions_per_session: quota,
            session_complete: answered >= quota,
        })
    }

    fn check_eval_open(rt: &UserRuntime, now: Seconds) -> ServiceResult<()> {
        if now < rt.record.evaluation_start() {
            return Err(ServiceError::EvaluationNotOpen { opens: rt.record.evaluation_start() });
        }
        Ok(())
    }

    /// Next evaluation question, or the summary once every seen item has
    /// been asked twice. Resumes where a previous visit stopped.
    pub fn evaluation_next(&self, id: &str, arm: Arm, now: Seconds) -> ServiceResult<EvaluationStep> {
        let user = self.user(id)?;
        let mut rt = user.lock().expect("user lock");
        Self::check_eval_open(&rt, now)?;
        if let Some(s) = &rt.arms[arm.index()].eval_summary {
            return Ok(EvaluationStep::Complete(s.clone()));
        }
        let order = rt.eval_order(arm);
        let index = rt.arms[arm.index()].eval_answers.len();
        if index < order.len() {
            return Ok(EvaluationStep::Question(rt.eval_question(arm, index, &order)));
        }
        let summary = rt.eval_summary(arm);
        let event = Event::EvaluationCompleted { user: id.to_string(), arm, summary: summary.clone() };
        self.persist(&event)?;
        rt.apply(&event, false)?;
        Ok(EvaluationStep::Complete(summary))
    }

    pub fn evaluation_answer(
        &self,
        id: &str,
        arm: Arm,
        index: usize,
        item: &str,
        chosen: &str,
        now: Seconds,
    ) -> ServiceResult<EvaluationStep> {
        let user = self.user(id)?;
        let mut rt = user.lock().expect("user lock");
        Self::check_eval_open(&rt, now)?;
        if rt.arms[arm.index()].eval_summary.is_some() {
            return Err(ServiceError::EvaluationComplete);
        }
        let order = rt.eval_order(arm);
        let expected = rt.arms[arm.index()].eval_answers.len();
        if index < expected {
            let correct = rt.arms[arm.index()].eval_answers[index].correct;
            return Err(ServiceError::AlreadyAnswered { trial: index as u64, correct });
        }
        if index != expected || index >= order.len() {
            return Err(ServiceError::Stale { trial: index as u64 });
        }
        let q = rt.eval_question(arm, index, &order);
        if q.item != item {
            return Err(ServiceError::Stale { trial: index as u64 });
        }
        if !q.choices.iter().any(|c| c == chosen) {
            return Err(ServiceError::InvalidChoice(chosen.to_string()));
        }
        let correct = rt.record.items[arm.index()][order[index]].answer == chosen;
        let answer = EvaluationAnswer { index, item: item.to_string(), chosen: chosen.to_string(), correct, answered_at: now };
        let event = Event::EvaluationAnswered { user: id.to_string(), arm, answer };
        self.persist(&event)?;
        rt.apply(&event, false)?;
        drop(rt);
        self.evaluation_next(id, arm, now)
    }

    pub fn evaluation_status(&self, id: &str, arm: Arm) -> ServiceResult<EvaluationStatus> {
        let user = self.user(id)?;
        let rt = user.lock().expect("user lock");
        let a = &rt.arms[arm.index()];
        Ok(EvaluationStatus {
            answered: a.eval_answers.len(),
            total: 2 * a.teacher.state().introduced.len(),
            summary: a.eval_summary.clone(),
        })
    }

    pub fn trials(&self, id: &str, arm: Arm) -> ServiceResult<Vec<TrialRecord>> {
        Ok(self.user(id)?.lock().expect("user lock").arms[arm.index()].trials.clone())
    }

    pub fn pending(&self, id: &str, arm: Arm) -> ServiceResult<Option<Question>> {
        Ok(self.user(id)?.lock().expect("user lock").arms[arm.index()].pending.clone())
    }

    /// A copy of the arm's teacher (state, psychologist and policy).
    pub fn teacher(&self, id: &str, arm: Arm) -> ServiceResult<Teacher> {
        Ok(self.user(id)?.lock().expect("user lock").arms[arm.index()].teacher.clone())
    }

    pub fn stats(&self, id: &str) -> ServiceResult<UserStats> {
        let user = self.user(id)?;
        let rt = user.lock().expect("user lock");
        let mut arms = Vec::new();
        for arm in Arm::ALL {
            let a = &rt.arms[arm.index()];
            let state = a.teacher.state();
            let mut estimates = Vec::new();
            for item in &state.introduced {
                let p = state.psychologist.estimate(*item)?;
                estimates.push(ItemEstimate {
                    item: rt.record.items[arm.index()][item.index()].id.clone(),
                    n_presentations: state.item_state(*item)?.n_presentations,
                    alpha: p.alpha,
                    beta: p.beta,
                });
            }
            arms.push(ArmStats {
                arm,
                teacher: rt.record.teacher_kind(arm),
                n_items: rt.record.items[arm.index()].len(),
                n_seen: state.introduced.len(),
                n_trials: a.trials.len(),
                n_correct: a.trials.iter().filter(|t| t.correct && !t.first_presentation).count(),
                evaluation: a.eval_summary.clone(),
                estimates,
            });
        }
        Ok(UserStats { user: id.to_string(), arms })
    }
}

/// Rebuilds an arm's teacher by running its trial records through a fresh
/// teacher: selection at each trial's step and time, then the outcome.
pub fn replay_trials(user: &UserRecord, arm: Arm, trials: &[TrialRecord]) -> crate::error::Result<Teacher> {
    let mut teacher = user.new_teacher(arm)?;
    let schedule = user.schedule(arm)?;
    let items = &user.items[arm.index()];
    for t in trials {
        let local = items
            .iter()
            .position(|i| i.id == t.item)
            .ok_or_else(|| Error::Config(format!("unknown item {}", t.item)))?;
        let sel = teacher.select(t.step, t.issued_at, &schedule)?;
        if sel.item.index() != local {
            return Err(Error::Config(format!("trial {} diverged", t.trial)));
        }
        teacher.observe(ItemId(local as u32), t.correct, t.issued_at)?;
    }
    Ok(teacher)
}
