//! Item selection under the item-count reward.
//!
//! The myopic rule re-presents the weakest item that has slipped below the
//! learned threshold and otherwise introduces the next new item. The
//! conservative rule vetoes a myopic proposal when a frozen-belief myopic
//! rollout to the end of the schedule shows that the items introduced up to
//! and including the proposal cannot all be known at evaluation time.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memory_model::{ItemId, ItemState, Seconds};
use crate::psychologist::{Psychologist, RecallCurve};
use crate::schedule::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Myopic,
    Conservative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    /// Recall probability at or above which an item counts as known.
    pub rho: f64,
    /// Introduction order of new items.
    pub universe: Vec<ItemId>,
    pub kind: PlannerKind,
}

impl PlannerConfig {
    pub fn new(rho: f64, universe: Vec<ItemId>, kind: PlannerKind) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Config(format!("rho must lie in (0, 1), got {rho}")));
        }
        if universe.is_empty() {
            return Err(Error::Config("item universe is empty".into()));
        }
        let mut seen = vec![false; universe.iter().map(|i| i.index() + 1).max().unwrap_or(0)];
        for item in &universe {
            if std::mem::replace(&mut seen[item.index()], true) {
                return Err(Error::Config(format!("item {item} appears twice in the universe")));
            }
        }
        Ok(Self { rho, universe, kind })
    }

    /// Universe `0..q` in index order.
    pub fn sequential(rho: f64, q: usize, kind: PlannerKind) -> Result<Self> {
        Self::new(rho, (0..q as u32).map(ItemId).collect(), kind)
    }

    pub fn item_count(&self) -> usize {
        self.universe.iter().map(|i| i.index() + 1).max().unwrap_or(0)
    }
}

/// Everything a model-based teacher knows about one learner.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherState {
    /// Indexed by [`ItemId::index`].
    pub item_states: Vec<ItemState>,
    pub psychologist: Psychologist,
    /// Items in first-presentation order.
    pub introduced: Vec<ItemId>,
    pub step: usize,
    pub clock: Seconds,
}

impl TeacherState {
    pub fn new(item_count: usize, psychologist: Psychologist) -> Self {
        Self {
            item_states: vec![ItemState::unseen(); item_count],
            psychologist,
            introduced: Vec::new(),
            step: 0,
            clock: 0.0,
        }
    }

    pub fn item_state(&self, item: ItemId) -> Result<ItemState> {
        self.item_states.get(item.index()).copied().ok_or(Error::UnknownItem(item))
    }

    pub fn predict_recall(&self, item: ItemId, now: Seconds) -> Result<f64> {
        self.psychologist.predict_recall(item, &self.item_state(item)?, now)
    }

    /// Records that `item` was presented at `now` and answered with `outcome`.
    pub fn observe(&mut self, item: ItemId, outcome: bool, now: Seconds) -> Result<()> {
        let before = self.item_state(item)?;
        let after = before.record_presentation(now)?;
        self.psychologist.observe(item, &before, outcome, now)?;
        self.item_states[item.index()] = after;
        if before.n_presentations == 0 {
            self.introduced.push(item);
        }
        self.step += 1;
        self.clock = now;
        Ok(())
    }

    /// The first never-presented item of `universe`.
    pub fn next_new(&self, universe: &[ItemId]) -> Option<ItemId> {
        universe
            .iter()
            .copied()
            .find(|i| self.item_states.get(i.index()).is_some_and(|s| !s.is_seen()))
    }
}

/// Number of introduced items whose predicted recall at `at` is at least `rho`.
pub fn reward_count(state: &TeacherState, rho: f64, at: Seconds) -> Result<usize> {
    let mut count = 0;
    for &item in &state.introduced {
        if state.predict_recall(item, at)? >= rho {
            count += 1;
        }
    }
    Ok(count)
}

/// Item histories at the end of a simulated myopic continuation.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub item_states: Vec<(ItemId, ItemState)>,
    pub steps: usize,
    pub clock: Seconds,
}

const GLOBAL_CURVE: u64 = u64::MAX - 1;
const PRIOR_CURVE: u64 = u64::MAX;

fn curve_key(psy: &Psychologist, item: ItemId) -> (u64, u64) {
    use crate::memory_model::ModelParams;
    use crate::psychologist::BeliefBank;
    match psy {
        Psychologist::Omniscient(ModelParams::Global(_)) => (GLOBAL_CURVE, 0),
        Psychologist::Omniscient(ModelParams::PerItem(_)) => (item.0 as u64, 0),
        Psychologist::Bayesian(bank) => {
            let version = bank.belief_version(item);
            match bank.mode() {
                crate::memory_model::ModelKind::Ef => (GLOBAL_CURVE, version),
                crate::memory_model::ModelKind::Isef if BeliefBank::is_prior_version(version) => {
                    (PRIOR_CURVE, version)
                }
                crate::memory_model::ModelKind::Isef => (item.0 as u64, version),
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Bracket {
    version: u64,
    lo: Seconds,
    hi: Seconds,
}

/// Memoized threshold crossings and recall values of frozen belief curves.
#[derive(Debug, Default, Clone)]
struct CurveCache {
    rho: f64,
    brackets: HashMap<(u64, u32), Bracket>,
    values: HashMap<(u64, u64, u32, u64), f64>,
}

const VALUE_CACHE_LIMIT: usize = 1 << 20;

struct Evaluator<'a> {
    psy: &'a Psychologist,
    cache: &'a mut CurveCache,
}

impl Evaluator<'_> {
    fn curve(&self, item: ItemId) -> Result<RecallCurve<'_>> {
        self.psy.curve(item)
    }

    fn recall(&mut self, item: ItemId, st: &ItemState, now: Seconds) -> Result<f64> {
        let dt = st.elapsed(now)?;
        let n = st.n_presentations;
        let curve = self.psy.curve(item)?;
        if let RecallCurve::Point(_) = curve {
            return Ok(curve.recall(n, dt));
        }
        let (id, version) = curve_key(self.psy, item);
        let key = (id, version, n, dt.to_bits());
        if let Some(v) = self.cache.values.get(&key) {
            return Ok(*v);
        }
        let v = curve.recall(n, dt);
        if self.cache.values.len() >= VALUE_CACHE_LIMIT {
            self.cache.values.clear();
        }
        self.cache.values.insert(key, v);
        Ok(v)
    }

    /// Whether predicted recall is strictly below the threshold.
    fn below(&mut self, item: ItemId, st: &ItemState, now: Seconds) -> Result<bool> {
        let dt = st.elapsed(now)?;
        let n = st.n_presentations;
        let (id, version) = curve_key(self.psy, item);
        let rho = self.cache.rho;
        let bracket = match self.cache.brackets.get(&(id, n)) {
            Some(b) if b.version == version => *b,
            stale => {
                let hint = stale.map(|b| b.lo).or_else(|| {
                    n.checked_sub(1)
                        .and_then(|m| self.cache.brackets.get(&(id, m)))
                        .filter(|b| b.version == version)
                        .map(|b| b.lo)
                });
                let (lo, hi) = self.curve(item)?.threshold_bracket_near(n, rho, hint);
                let b = Bracket { version, lo, hi };
                self.cache.brackets.insert((id, n), b);
                b
            }
        };
        if dt <= bracket.lo {
            Ok(false)
        } else if dt >= bracket.hi {
            Ok(true)
        } else {
            Ok(self.recall(item, st, now)? < rho)
        }
    }

    /// Myopic choice among `entries`, listed in introduction order. Unseen
    /// entries are candidates for introduction, earliest first.
    fn myopic_pick(&mut self, entries: &[(ItemId, ItemState)], now: Seconds) -> Result<Option<usize>> {
        let mut weakest_below: Option<(usize, f64)> = None;
        let mut first_new = None;
        for (k, (item, st)) in entries.iter().enumerate() {
            if !st.is_seen() {
                first_new.get_or_insert(k);
                continue;
            }
            if self.below(*item, st, now)? {
                let r = self.recall(*item, st, now)?;
                if weakest_below.map_or(true, |(_, best)| r < best) {
                    weakest_below = Some((k, r));
                }
            }
        }
        if let Some((k, _)) = weakest_below {
            return Ok(Some(k));
        }
        if first_new.is_some() {
            return Ok(first_new);
        }
        let mut weakest: Option<(usize, f64)> = None;
        for (k, (item, st)) in entries.iter().enumerate() {
            let r = self.recall(*item, st, now)?;
            if weakest.map_or(true, |(_, best)| r < best) {
                weakest = Some((k, r));
            }
        }
        Ok(weakest.map(|(k, _)| k))
    }

    /// Continues myopic teaching over `entries` at each of `times`.
    fn rollout(
        &mut self,
        entries: &mut [(ItemId, ItemState)],
        times: impl IntoIterator<Item = Seconds>,
    ) -> Result<(usize, Option<Seconds>)> {
        let mut steps = 0;
        let mut clock = None;
        for t in times {
            if let Some(k) = self.myopic_pick(entries, t)? {
                entries[k].1 = entries[k].1.record_presentation(t)?;
            }
            steps += 1;
            clock = Some(t);
        }
        Ok((steps, clock))
    }
}

/// A model-based teacher's selection policy plus its evaluation cache.
#[derive(Debug, Clone)]
pub struct Planner {
    cfg: PlannerConfig,
    cache: CurveCache,
}

impl Planner {
    pub fn new(cfg: PlannerConfig) -> Self {
        let cache = CurveCache { rho: cfg.rho, ..Default::default() };
        Self { cfg, cache }
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.cfg
    }

    fn evaluator<'a>(&'a mut self, psy: &'a Psychologist) -> Evaluator<'a> {
        Evaluator { psy, cache: &mut self.cache }
    }

    /// Introduced items in order, followed by the next new item if any.
    fn candidates(&self, state: &TeacherState) -> Result<Vec<(ItemId, ItemState)>> {
        let mut entries = Vec::with_capacity(state.introduced.len() + 1);
        for &item in &state.introduced {
            entries.push((item, state.item_state(item)?));
        }
        if let Some(item) = state.next_new(&self.cfg.universe) {
            entries.push((item, ItemState::unseen()));
        }
        Ok(entries)
    }

    /// Selects the item for the step taking place at `state.clock`.
    pub fn select(&mut self, state: &TeacherState, schedule: &Schedule) -> Result<ItemId> {
        match self.cfg.kind {
            PlannerKind::Myopic => self.myopic_select(state),
            PlannerKind::Conservative => self.conservative_select(state, schedule),
        }
    }

    pub fn myopic_select(&mut self, state: &TeacherState) -> Result<ItemId> {
        let entries = self.candidates(state)?;
        let now = state.clock;
        let mut ev = self.evaluator(&state.psychologist);
        let k = ev.myopic_pick(&entries, now)?.ok_or_else(|| Error::Config("item universe is empty".into()))?;
        Ok(entries[k].0)
    }

    pub fn conservative_select(&mut self, state: &TeacherState, schedule: &Schedule) -> Result<ItemId> {
        let mut entries = self.candidates(state)?;
        let now = state.clock;
        let eval = schedule.eval_time();
        let mut ev = self.evaluator(&state.psychologist);
        loop {
            let k = ev.myopic_pick(&entries, now)?.ok_or_else(|| Error::Config("item universe is empty".into()))?;
            if k == 0 {
                return Ok(entries[0].0);
            }
            // Can everything introduced before the proposal still be
            // memorized if teaching continued with those items alone?
            let mut sim = entries[..k].to_vec();
            ev.rollout(&mut sim, std::iter::once(now).chain(schedule.future_times(state.step, now)))?;
            let mut feasible = true;
            for (item, st) in &sim {
                if ev.below(*item, st, eval)? {
                    feasible = false;
                    break;
                }
            }
            if feasible {
                return Ok(entries[k].0);
            }
            entries.truncate(k);
        }
    }

    /// Simulates myopic teaching restricted to `restricted` at each of
    /// `times`, with beliefs frozen. The real state is left untouched.
    pub fn rollout_myopic(
        &mut self,
        state: &TeacherState,
        restricted: &[ItemId],
        times: impl IntoIterator<Item = Seconds>,
    ) -> Result<Rollout> {
        let mut entries = Vec::with_capacity(restricted.len());
        for &item in restricted {
            entries.push((item, state.item_state(item)?));
        }
        // introduction order first, unseen items after in the given order
        entries.sort_by_key(|(item, st)| {
            if st.is_seen() {
                (0, state.introduced.iter().position(|i| i == item).unwrap_or(usize::MAX))
            } else {
                (1, 0)
            }
        });
        let mut ev = self.evaluator(&state.psychologist);
        let (steps, clock) = ev.rollout(&mut entries, times)?;
        Ok(Rollout { item_states: entries, steps, clock: clock.unwrap_or(state.clock) })
    }
}
