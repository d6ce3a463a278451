//! A teaching arm: selection policy plus the item histories and psychologist
//! it maintains. Leitner arms keep a passive psychologist so that every arm
//! can report recall predictions.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::leitner::{LeitnerConfig, LeitnerState};
use crate::memory_model::{ItemId, Seconds};
use crate::planner::{Planner, PlannerConfig, PlannerKind, TeacherState};
use crate::psychologist::Psychologist;
use crate::schedule::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TeacherKind {
    Leitner,
    Myopic,
    Conservative,
}

impl TeacherKind {
    pub fn name(self) -> &'static str {
        match self {
            TeacherKind::Leitner => "leitner",
            TeacherKind::Myopic => "myopic",
            TeacherKind::Conservative => "conservative",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "leitner" => Some(TeacherKind::Leitner),
            "myopic" => Some(TeacherKind::Myopic),
            "conservative" => Some(TeacherKind::Conservative),
            _ => None,
        }
    }
}

impl std::fmt::Display for TeacherKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub item: ItemId,
    pub first_presentation: bool,
    /// Teacher's predicted recall at decision time; 1 on first presentations.
    pub predicted_recall: f64,
}

#[derive(Debug, Clone)]
enum Policy {
    Leitner(LeitnerState),
    Model(Planner),
}

#[derive(Debug, Clone)]
pub struct Teacher {
    kind: TeacherKind,
    state: TeacherState,
    policy: Policy,
}

impl PartialEq for Teacher {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.state == other.state
            && match (&self.policy, &other.policy) {
                (Policy::Leitner(a), Policy::Leitner(b)) => a == b,
                (Policy::Model(a), Policy::Model(b)) => a.config() == b.config(),
                _ => false,
            }
    }
}

impl Teacher {
    pub fn new(
        kind: TeacherKind,
        universe: Vec<ItemId>,
        psychologist: Psychologist,
        rho: f64,
        leitner: LeitnerConfig,
        seed: u64,
    ) -> Result<Self> {
        let item_count = universe.iter().map(|i| i.index() + 1).max().unwrap_or(0);
        let policy = match kind {
            TeacherKind::Leitner => Policy::Leitner(LeitnerState::new(leitner, universe, seed)?),
            TeacherKind::Myopic => Policy::Model(Planner::new(PlannerConfig::new(rho, universe, PlannerKind::Myopic)?)),
            TeacherKind::Conservative => {
                Policy::Model(Planner::new(PlannerConfig::new(rho, universe, PlannerKind::Conservative)?))
            }
        };
        Ok(Self { kind, state: TeacherState::new(item_count, psychologist), policy })
    }

    pub fn kind(&self) -> TeacherKind {
        self.kind
    }

    pub fn state(&self) -> &TeacherState {
        &self.state
    }

    pub fn leitner_state(&self) -> Option<&LeitnerState> {
        match &self.policy {
            Policy::Leitner(s) => Some(s),
            Policy::Model(_) => None,
        }
    }

    /// Picks the item for schedule step `step`, happening at `now`.
    pub fn select(&mut self, step: usize, now: Seconds, schedule: &Schedule) -> Result<Selection> {
        self.state.clock = now;
        self.state.step = step;
        let item = match &mut self.policy {
            Policy::Leitner(s) => s.select(now, step),
            Policy::Model(p) => p.select(&self.state, schedule)?,
        };
        let st = self.state.item_state(item)?;
        let predicted_recall = if st.is_seen() { self.state.predict_recall(item, now)? } else { 1.0 };
        Ok(Selection { item, first_presentation: !st.is_seen(), predicted_recall })
    }

    /// Feeds back the outcome of presenting `item` at `now`.
    pub fn observe(&mut self, item: ItemId, outcome: bool, now: Seconds) -> Result<()> {
        self.state.observe(item, outcome, now)?;
        if let Policy::Leitner(s) = &mut self.policy {
            s.update(item, outcome, now)?;
        }
        Ok(())
    }
}
