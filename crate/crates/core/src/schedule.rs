//! Deterministic calendar of teaching sessions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memory_model::Seconds;

pub const DAY: Seconds = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub start: Seconds,
    pub iterations: u32,
    pub iteration_seconds: Seconds,
}

impl Session {
    pub fn end(&self) -> Seconds {
        self.start + self.iterations as f64 * self.iteration_seconds
    }
}

/// Sessions in ascending order plus the evaluation time. Steps are numbered
/// `0..horizon()` across all sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct Schedule {
    sessions: Vec<Session>,
    eval_time: Seconds,
    offsets: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawSchedule {
    sessions: Vec<Session>,
    eval_time: Seconds,
}

impl TryFrom<RawSchedule> for Schedule {
    type Error = Error;
    fn try_from(raw: RawSchedule) -> Result<Self> {
        Schedule::new(raw.sessions, raw.eval_time)
    }
}

impl From<Schedule> for RawSchedule {
    fn from(s: Schedule) -> Self {
        RawSchedule { sessions: s.sessions, eval_time: s.eval_time }
    }
}

impl Schedule {
    pub fn new(sessions: Vec<Session>, eval_time: Seconds) -> Result<Self> {
        if sessions.is_empty() {
            return Err(Error::Config("schedule needs at least one session".into()));
        }
        for s in &sessions {
            if s.iterations == 0 || !(s.iteration_seconds > 0.0) || !s.start.is_finite() {
                return Err(Error::Config(format!("invalid session {s:?}")));
            }
        }
        for w in sessions.windows(2) {
            if w[1].start < w[0].end() {
                return Err(Error::Config("sessions must be ascending and non-overlapping".into()));
            }
        }
        let last_end = sessions.last().map(Session::end).unwrap_or(0.0);
        if eval_time < last_end {
            return Err(Error::Config(format!(
                "evaluation at {eval_time} precedes the end of the last session ({last_end})"
            )));
        }
        let mut offsets = Vec::with_capacity(sessions.len() + 1);
        let mut acc = 0;
        for s in &sessions {
            offsets.push(acc);
            acc += s.iterations as usize;
        }
        offsets.push(acc);
        Ok(Self { sessions, eval_time, offsets })
    }

    /// One session per day at a fixed time of day, evaluation on the next day.
    pub fn daily(days: usize, iterations: u32, iteration_seconds: Seconds) -> Result<Self> {
        let sessions = (0..days)
            .map(|d| Session { start: d as f64 * DAY, iterations, iteration_seconds })
            .collect();
        Self::new(sessions, days as f64 * DAY)
    }

    pub fn sessions(&self) -> &[Session] {
        &self.sessions
    }

    pub fn eval_time(&self) -> Seconds {
        self.eval_time
    }

    /// Total number of teaching steps.
    pub fn horizon(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    /// `(session index, iteration within session)` of a step.
    pub fn locate(&self, step: usize) -> Option<(usize, u32)> {
        if step >= self.horizon() {
            return None;
        }
        let s = self.offsets.partition_point(|&o| o <= step) - 1;
        Some((s, (step - self.offsets[s]) as u32))
    }

    pub fn step_time(&self, step: usize) -> Option<Seconds> {
        let (s, i) = self.locate(step)?;
        let sess = &self.sessions[s];
        Some(sess.start + i as f64 * sess.iteration_seconds)
    }

    /// Planned times of steps `step + 1 .. horizon()` when `step` happens at
    /// `now`: the rest of the current session is anchored on `now`, later
    /// sessions keep their declared times.
    pub fn future_times(&self, step: usize, now: Seconds) -> impl Iterator<Item = Seconds> + '_ {
        let (session, iteration) = self.locate(step).unwrap_or((self.sessions.len(), 0));
        let current = self.sessions.get(session).map(|s| {
            let left = s.iterations - iteration - 1;
            (1..=left).map(move |k| now + k as f64 * s.iteration_seconds)
        });
        let later = self.sessions.iter().skip(session + 1).flat_map(|s| {
            (0..s.iterations).map(move |k| s.start + k as f64 * s.iteration_seconds)
        });
        current.into_iter().flatten().chain(later)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn daily_layout() {
        let s = Schedule::daily(6, 100, 4.0).unwrap();
        assert_eq!(s.horizon(), 600);
        assert_eq!(s.locate(0), Some((0, 0)));
        assert_eq!(s.locate(99), Some((0, 99)));
        assert_eq!(s.locate(100), Some((1, 0)));
        assert_eq!(s.locate(600), None);
        assert_eq!(s.step_time(101), Some(DAY + 4.0));
        assert_eq!(s.eval_time(), 6.0 * DAY);
    }

    #[test]
    fn future_times_cross_breaks() {
        let s = Schedule::daily(2, 3, 4.0).unwrap();
        let t: Vec<_> = s.future_times(1, 4.5).collect();
        assert_eq!(t, vec![8.5, DAY, DAY + 4.0, DAY + 8.0]);
        assert_eq!(s.future_times(5, DAY + 8.0).count(), 0);
        assert_eq!(s.future_times(0, 0.0).count(), 5);
    }

    #[test]
    fn rejects_overlap_and_early_eval() {
        let a = Session { start: 0.0, iterations: 10, iteration_seconds: 4.0 };
        let b = Session { start: 20.0, iterations: 10, iteration_seconds: 4.0 };
        assert!(Schedule::new(vec![a, b], 100.0).is_err());
        assert!(Schedule::new(vec![a], 39.0).is_err());
        assert!(Schedule::new(vec![], 39.0).is_err());
    }
}
