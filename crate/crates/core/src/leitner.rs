//! Rule-based Leitner baseline.
//!
//! A new item enters box 1. Afterwards success moves it up one box and
//! failure down one (never below 0); the next review is due
//! `delta_a * delta_b^k` seconds after the presentation. Among due items the
//! one that has waited the most iterations wins, then the lowest box, then a
//! seeded coin flip.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memory_model::{ItemId, Seconds};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeitnerConfig {
    pub delta_a: Seconds,
    pub delta_b: f64,
}

impl Default for LeitnerConfig {
    fn default() -> Self {
        Self { delta_a: 4.0, delta_b: 2.0 }
    }
}

impl LeitnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_a > 0.0) || !(self.delta_b > 1.0) {
            return Err(Error::Config(format!(
                "leitner delays need delta_a > 0 and delta_b > 1, got {} and {}",
                self.delta_a, self.delta_b
            )));
        }
        Ok(())
    }

    pub fn delay(&self, k: u32) -> Seconds {
        self.delta_a * self.delta_b.powi(k as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxedItem {
    pub k: u32,
    pub due: Seconds,
    /// Step at which the item was first found due but not selected.
    pub waiting_since: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeitnerState {
    pub config: LeitnerConfig,
    pub universe: Vec<ItemId>,
    /// Indexed by [`ItemId::index`]; `None` until first presentation.
    pub boxes: Vec<Option<BoxedItem>>,
    pub next_new_index: usize,
    /// Base seed for the final random tie-break.
    pub seed: u64,
}

impl LeitnerState {
    pub fn new(config: LeitnerConfig, universe: Vec<ItemId>, seed: u64) -> Result<Self> {
        config.validate()?;
        if universe.is_empty() {
            return Err(Error::Config("item universe is empty".into()));
        }
        let size = universe.iter().map(|i| i.index() + 1).max().unwrap_or(0);
        Ok(Self { config, universe, boxes: vec![None; size], next_new_index: 0, seed })
    }

    pub fn boxed(&self, item: ItemId) -> Option<&BoxedItem> {
        self.boxes.get(item.index()).and_then(Option::as_ref)
    }

    fn next_new(&self) -> Option<ItemId> {
        self.universe[self.next_new_index.min(self.universe.len())..]
            .iter()
            .copied()
            .find(|i| self.boxes[i.index()].is_none())
    }

    /// Chooses the item to present at `step` (time `now`). Due items that are
    /// passed over join the waiting queue.
    pub fn select(&mut self, now: Seconds, step: usize) -> ItemId {
        let mut due: Vec<(ItemId, usize, u32)> = Vec::new();
        for &item in &self.universe {
            if let Some(b) = self.boxes[item.index()].as_mut() {
                if b.due <= now {
                    let since = *b.waiting_since.get_or_insert(step);
                    due.push((item, step - since, b.k));
                }
            }
        }
        if !due.is_empty() {
            let max_wait = due.iter().map(|d| d.1).max().unwrap_or(0);
            due.retain(|d| d.1 == max_wait);
            let min_k = due.iter().map(|d| d.2).min().unwrap_or(0);
            due.retain(|d| d.2 == min_k);
            if due.len() == 1 {
                return due[0].0;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[step as u64]));
            return due.choose(&mut rng).map(|d| d.0).expect("non-empty");
        }
        if let Some(item) = self.next_new() {
            return item;
        }
        // Nothing due and nothing new: earliest upcoming review.
        let mut best: Option<(ItemId, Seconds)> = None;
        for &item in &self.universe {
            if let Some(b) = &self.boxes[item.index()] {
                if best.map_or(true, |(_, d)| b.due < d) {
                    best = Some((item, b.due));
                }
            }
        }
        best.map(|(i, _)| i).unwrap_or(self.universe[0])
    }

    /// Moves `item` between boxes after it was presented at `now`.
    pub fn update(&mut self, item: ItemId, outcome: bool, now: Seconds) -> Result<()> {
        let slot = self.boxes.get_mut(item.index()).ok_or(Error::UnknownItem(item))?;
        let k = match slot {
            None => 1,
            Some(b) if outcome => b.k + 1,
            Some(b) => b.k.saturating_sub(1),
        };
        *slot = Some(BoxedItem { k, due: now + self.config.delay(k), waiting_since: None });
        while self
            .universe
            .get(self.next_new_index)
            .is_some_and(|i| self.boxes[i.index()].is_some())
        {
            self.next_new_index += 1;
        }
        Ok(())
    }
}

/// Functional form of [`LeitnerState::select`].
pub fn leitner_select(state: &LeitnerState, now: Seconds, step: usize) -> (ItemId, LeitnerState) {
    let mut next = state.clone();
    let item = next.select(now, step);
    (item, next)
}

/// Functional form of [`LeitnerState::update`].
pub fn leitner_update(state: &LeitnerState, item: ItemId, outcome: bool, now: Seconds) -> Result<LeitnerState> {
    let mut next = state.clone();
    next.update(item, outcome, now)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(q: u32) -> LeitnerState {
        LeitnerState::new(LeitnerConfig::default(), (0..q).map(ItemId).collect(), 7).unwrap()
    }

    #[test]
    fn fresh_state_introduces_first_item() {
        let mut s = state(3);
        assert_eq!(s.select(0.0, 0), ItemId(0));
    }

    #[test]
    fn box_transitions_and_delays() {
        let mut s = state(3);
        s.update(ItemId(0), false, 100.0).unwrap();
        assert_eq!(s.boxed(ItemId(0)).unwrap().k, 1);
        assert_eq!(s.boxed(ItemId(0)).unwrap().due, 108.0);

        let mut fail = s.clone();
        fail.update(ItemId(0), false, 200.0).unwrap();
        assert_eq!(fail.boxed(ItemId(0)).unwrap().k, 0);
        assert_eq!(fail.boxed(ItemId(0)).unwrap().due, 204.0);

        s.update(ItemId(0), true, 200.0).unwrap();
        assert_eq!(s.boxed(ItemId(0)).unwrap().k, 2);
        assert_eq!(s.boxed(ItemId(0)).unwrap().due, 216.0);
    }

    #[test]
    fn box_zero_stays_zero_on_failure() {
        let mut s = state(1);
        s.update(ItemId(0), true, 0.0).unwrap();
        s.update(ItemId(0), false, 10.0).unwrap();
        s.update(ItemId(0), false, 20.0).unwrap();
        assert_eq!(s.boxed(ItemId(0)).unwrap().k, 0);
    }

    #[test]
    fn longest_waiting_item_wins() {
        let mut s = state(4);
        for i in 0..2 {
            s.update(ItemId(i), true, 0.0).unwrap();
        }
        s.boxes[0].as_mut().unwrap().waiting_since = Some(5);
        s.boxes[1].as_mut().unwrap().waiting_since = Some(8);
        assert_eq!(s.select(100.0, 10), ItemId(0));
    }

    #[test]
    fn equal_wait_prefers_lower_box() {
        let mut s = state(4);
        s.update(ItemId(0), true, 0.0).unwrap();
        s.update(ItemId(1), true, 0.0).unwrap();
        s.boxes[0].as_mut().unwrap().k = 3;
        assert_eq!(s.select(1000.0, 3), ItemId(1));
    }

    #[test]
    fn full_tie_is_seeded() {
        let mut a = state(4);
        for i in 0..3 {
            a.update(ItemId(i), true, 0.0).unwrap();
        }
        let b = a.clone();
        let picks: Vec<_> = (0..20).map(|step| leitner_select(&a, 100.0, step).0).collect();
        let again: Vec<_> = (0..20).map(|step| leitner_select(&b, 100.0, step).0).collect();
        assert_eq!(picks, again);
        assert!(picks.iter().any(|p| *p != picks[0]), "tie-break never varies");
    }

    #[test]
    fn exhausted_universe_takes_earliest_due() {
        let mut s = state(2);
        s.update(ItemId(0), true, 10.0).unwrap();
        s.update(ItemId(1), true, 0.0).unwrap();
        s.update(ItemId(1), true, 1.0).unwrap();
        // due: item 0 at 18, item 1 at 17
        assert_eq!(s.select(5.0, 3), ItemId(1));
    }

    #[test]
    fn no_new_item_while_due() {
        let mut s = state(3);
        s.update(ItemId(0), true, 0.0).unwrap();
        assert_eq!(s.select(8.0, 1), ItemId(0));
        assert_eq!(s.select(7.9, 1), ItemId(1));
    }

    #[test]
    fn rejects_bad_config() {
        let bad = LeitnerConfig { delta_a: 4.0, delta_b: 1.0 };
        assert!(LeitnerState::new(bad, vec![ItemId(0)], 0).is_err());
        assert!(LeitnerState::new(LeitnerConfig::default(), vec![], 0).is_err());
    }
}
