//! Exponential-forgetting recall law and per-item presentation bookkeeping.
//!
//! Recall of an item presented `n` times, last seen `dt` seconds ago, is
//! `exp(-alpha * (1 - beta)^(n - 1) * dt)`. The EF variant shares one
//! [`ParamPoint`] across all of a learner's items; ISEF gives each item its own.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Timestamps and durations are seconds on one continuous clock.
pub type Seconds = f64;

/// Index of an item inside a teacher's universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ItemId(pub u32);

impl ItemId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for ItemId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One `(alpha, beta)` parameterization of the forgetting law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    /// Initial forgetting rate, 1/s.
    pub alpha: f64,
    /// Multiplicative reduction of the rate per additional review.
    pub beta: f64,
}

impl ParamPoint {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Config(format!("beta must lie in (0, 1), got {beta}")));
        }
        Ok(Self { alpha, beta })
    }

    /// Effective decay rate after `n` presentations.
    pub fn decay_rate(&self, n: u32) -> f64 {
        debug_assert!(n >= 1);
        self.alpha * (1.0 - self.beta).powi(n as i32 - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// One parameter point per learner.
    #[serde(alias = "EF")]
    Ef,
    /// One parameter point per (learner, item).
    #[serde(alias = "ISEF")]
    Isef,
}

/// A learner's true parameters: one point for EF, one per item for ISEF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelParams {
    Global(ParamPoint),
    PerItem(Vec<ParamPoint>),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Global(_) => ModelKind::Ef,
            ModelParams::PerItem(_) => ModelKind::Isef,
        }
    }

    pub fn for_item(&self, item: ItemId) -> Result<&ParamPoint> {
        match self {
            ModelParams::Global(p) => Ok(p),
            ModelParams::PerItem(ps) => ps.get(item.index()).ok_or(Error::UnknownItem(item)),
        }
    }

    pub fn recall(&self, item: ItemId, state: &ItemState, now: Seconds) -> Result<f64> {
        recall_probability(state, self.for_item(item)?, now)
    }
}

/// Presentation history summary for one item.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ItemState {
    pub n_presentations: u32,
    pub last_presentation: Option<Seconds>,
}

impl ItemState {
    pub fn unseen() -> Self {
        Self::default()
    }

    pub fn is_seen(&self) -> bool {
        self.n_presentations > 0
    }

    /// Elapsed time since the last presentation.
    pub fn elapsed(&self, now: Seconds) -> Result<Seconds> {
        let last = self.last_presentation.ok_or(Error::UnseenItem)?;
        if now < last {
            return Err(Error::TimeWentBackwards { last, now });
        }
        Ok(now - last)
    }

    pub fn record_presentation(&self, now: Seconds) -> Result<ItemState> {
        if let Some(last) = self.last_presentation {
            if now < last {
                return Err(Error::TimeWentBackwards { last, now });
            }
        }
        Ok(ItemState {
            n_presentations: self.n_presentations + 1,
            last_presentation: Some(now),
        })
    }
}

/// Probability of recalling an item at `now` under parameters `theta`.
///
/// Only presentations strictly before `now` count toward `n`.
pub fn recall_probability(state: &ItemState, theta: &ParamPoint, now: Seconds) -> Result<f64> {
    if state.n_presentations == 0 {
        return Err(Error::UnseenItem);
    }
    let dt = state.elapsed(now)?;
    Ok((-theta.decay_rate(state.n_presentations) * dt).exp())
}

/// Advances an item's history by one presentation at `now`.
pub fn record_presentation(state: &ItemState, now: Seconds) -> Result<ItemState> {
    state.record_presentation(now)
}
