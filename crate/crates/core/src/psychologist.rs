//! Grid-based Bayesian inference of forgetting parameters.
//!
//! A [`Belief`] is a discrete posterior over a Cartesian `(alpha, beta)` grid,
//! kept in log space and renormalized after every observation. A
//! [`BeliefBank`] holds one global belief (EF) or one belief per reviewed
//! item (ISEF); unreviewed ISEF items borrow the mean of the reviewed
//! posteriors. [`Psychologist`] wraps either a bank or the learner's true
//! parameters (omniscient simulation mode).

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memory_model::{ItemId, ItemState, ModelKind, ModelParams, ParamPoint, Seconds};

/// Layout of the parameter grid: log-spaced alpha, linearly spaced beta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub alpha_points: usize,
    pub alpha_bounds: [f64; 2],
    pub beta_points: usize,
    pub beta_bounds: [f64; 2],
}

impl GridSpec {
    /// 100 x 100 grid over alpha in [2e-7, 2.5e-2] and beta in [1e-4, 0.9999].
    pub fn standard() -> Self {
        Self::with_points(100, 100)
    }

    pub fn with_points(alpha_points: usize, beta_points: usize) -> Self {
        Self {
            alpha_points,
            alpha_bounds: [2e-7, 2.5e-2],
            beta_points,
            beta_bounds: [1e-4, 0.9999],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha_points < 2 || self.beta_points < 2 {
            return Err(Error::Config(format!(
                "grid needs at least 2 points per axis, got {} x {}",
                self.alpha_points, self.beta_points
            )));
        }
        let [a0, a1] = self.alpha_bounds;
        if !(a0 > 0.0 && a1 > a0 && a1.is_finite()) {
            return Err(Error::Config(format!(
                "alpha bounds must satisfy 0 < low < high for log spacing, got [{a0}, {a1}]"
            )));
        }
        let [b0, b1] = self.beta_bounds;
        if !(b0 > 0.0 && b1 > b0 && b1 < 1.0) {
            return Err(Error::Config(format!(
                "beta bounds must satisfy 0 < low < high < 1, got [{b0}, {b1}]"
            )));
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.alpha_points * self.beta_points
    }

    pub fn build(&self) -> Result<ParamGrid> {
        self.validate()?;
        let (la0, la1) = (self.alpha_bounds[0].ln(), self.alpha_bounds[1].ln());
        let na = self.alpha_points;
        let alphas = (0..na)
            .map(|i| (la0 + (la1 - la0) * i as f64 / (na - 1) as f64).exp())
            .collect();
        let [b0, b1] = self.beta_bounds;
        let nb = self.beta_points;
        let betas = (0..nb)
            .map(|j| b0 + (b1 - b0) * j as f64 / (nb - 1) as f64)
            .collect();
        ParamGrid::from_axes(alphas, betas)
    }
}

/// Cartesian grid of parameter points. Point `k` is
/// `(alphas[k / betas.len()], betas[k % betas.len()])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    alphas: Vec<f64>,
    betas: Vec<f64>,
    log_alphas: Vec<f64>,
    log_one_minus_betas: Vec<f64>,
}

impl ParamGrid {
    pub fn from_axes(alphas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() || betas.is_empty() {
            return Err(Error::Config("grid axes must be non-empty".into()));
        }
        for &a in &alphas {
            ParamPoint::new(a, 0.5)?;
        }
        for &b in &betas {
            ParamPoint::new(0.0, b)?;
        }
        let log_alphas = alphas.iter().map(|a| a.ln()).collect();
        let log_one_minus_betas = betas.iter().map(|b| (-b).ln_1p()).collect();
        Ok(Self { alphas, betas, log_alphas, log_one_minus_betas })
    }

    pub fn len(&self) -> usize {
        self.alphas.len() * self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn point(&self, k: usize) -> ParamPoint {
        let nb = self.betas.len();
        ParamPoint { alpha: self.alphas[k / nb], beta: self.betas[k % nb] }
    }

    pub fn points(&self) -> impl Iterator<Item = ParamPoint> + '_ {
        (0..self.len()).map(move |k| self.point(k))
    }

    /// `(1 - beta_j)^(n - 1) * dt` for every beta on the grid.
    fn scaled_lags(&self, n: u32, dt: Seconds, out: &mut Vec<f64>) {
        let m = (n - 1) as f64;
        out.clear();
        out.extend(self.log_one_minus_betas.iter().map(|l| (m * l).exp() * dt));
    }

    /// Index of the grid point closest to `theta` (log distance on alpha).
    pub fn nearest(&self, theta: &ParamPoint) -> usize {
        let la = theta.alpha.ln();
        let i = argmin(self.log_alphas.iter().map(|x| (x - la).abs()));
        let j = argmin(self.betas.iter().map(|b| (b - theta.beta).abs()));
        i * self.betas.len() + j
    }
}

fn argmin(it: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in it.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Discrete posterior over a [`ParamGrid`].
#[derive(Debug, Clone)]
pub struct Belief {
    grid: Arc<ParamGrid>,
    log_weights: Vec<f64>,
    weights: Vec<f64>,
}

impl PartialEq for Belief {
    fn eq(&self, other: &Self) -> bool {
        self.log_weights == other.log_weights && *self.grid == *other.grid
    }
}

impl Belief {
    pub fn uniform(grid: Arc<ParamGrid>) -> Self {
        let n = grid.len();
        let w = 1.0 / n as f64;
        Self { log_weights: vec![w.ln(); n], weights: vec![w; n], grid }
    }

    /// Builds a belief from unnormalized positive weights.
    pub fn from_weights(grid: Arc<ParamGrid>, weights: &[f64]) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::Config(format!(
                "expected {} weights, got {}",
                grid.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Config("weights must be finite and non-negative".into()));
        }
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        let mut b = Self { grid, log_weights, weights: Vec::new() };
        b.normalize()?;
        Ok(b)
    }

    pub fn grid(&self) -> &Arc<ParamGrid> {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    fn normalize(&mut self) -> Result<()> {
        let max = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY || max.is_nan() {
            return Err(Error::DegeneratePosterior);
        }
        let sum: f64 = self.log_weights.iter().map(|l| (l - max).exp()).sum();
        let lse = max + sum.ln();
        self.weights.clear();
        for l in self.log_weights.iter_mut() {
            *l -= lse;
            self.weights.push(l.exp());
        }
        Ok(())
    }

    /// Reweights every grid point by the likelihood of `outcome` and renormalizes.
    pub fn update(&mut self, state: &ItemState, outcome: bool, now: Seconds) -> Result<()> {
        if state.n_presentations == 0 {
            return Err(Error::UnseenItem);
        }
        let dt = state.elapsed(now)?;
        let mut lags = Vec::new();
        self.grid.scaled_lags(state.n_presentations, dt, &mut lags);
        let nb = lags.len();
        let mut updated = self.log_weights.clone();
        for (i, alpha) in self.grid.alphas.iter().enumerate() {
            for (j, lag) in lags.iter().enumerate() {
                // exponent x = -ln p
                let x = alpha * lag;
                let log_lik = if outcome { -x } else { (-(-x).exp_m1()).ln() };
                updated[i * nb + j] += log_lik;
            }
        }
        let previous = std::mem::replace(&mut self.log_weights, updated);
        if let Err(e) = self.normalize() {
            self.log_weights = previous;
            return Err(e);
        }
        Ok(())
    }

    /// Posterior-expected recall probability.
    pub fn expected_recall(&self, state: &ItemState, now: Seconds) -> Result<f64> {
        if state.n_presentations == 0 {
            return Err(Error::UnseenItem);
        }
        let dt = state.elapsed(now)?;
        Ok(self.recall_at(state.n_presentations, dt))
    }

    pub(crate) fn recall_at(&self, n: u32, dt: Seconds) -> f64 {
        if dt == 0.0 {
            return 1.0;
        }
        let mut lags = Vec::with_capacity(self.grid.betas.len());
        self.grid.scaled_lags(n, dt, &mut lags);
        let nb = lags.len();
        let mut total = 0.0;
        for (i, alpha) in self.grid.alphas.iter().enumerate() {
            let row = &self.weights[i * nb..(i + 1) * nb];
            for (w, lag) in row.iter().zip(&lags) {
                total += w * (-alpha * lag).exp();
            }
        }
        total.min(1.0)
    }

    /// Weighted mean of the parameters, alpha averaged in log space.
    pub fn posterior_mean(&self) -> ParamPoint {
        let nb = self.grid.betas.len();
        let mut log_alpha = 0.0;
        let mut beta = 0.0;
        for (k, w) in self.weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            log_alpha += w * self.grid.log_alphas[k / nb];
            beta += w * self.grid.betas[k % nb];
        }
        ParamPoint { alpha: log_alpha.exp(), beta }
    }

    /// Writes the snapshot as `alpha<TAB>beta<TAB>weight` rows under a header.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "alpha\tbeta\tweight")?;
        for (k, w) in self.weights.iter().enumerate() {
            let p = self.grid.point(k);
            writeln!(out, "{:e}\t{:e}\t{:e}", p.alpha, p.beta, w)?;
        }
        Ok(())
    }

    /// Reads a snapshot written by [`Belief::write_tsv`]. Rows must follow
    /// the grid's alpha-major order.
    pub fn read_tsv<R: BufRead>(input: R) -> Result<Self> {
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut weights = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if idx == 0 {
                if line.trim() != "alpha\tbeta\tweight" {
                    return Err(Error::Parse { line: 1, message: "missing header".into() });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Parse { line: lineno, message: "expected 3 columns".into() });
            }
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse { line: lineno, message: e.to_string() })
            };
            let (a, b, w) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
            if alphas.last() != Some(&a) {
                alphas.push(a);
            }
            if alphas.len() == 1 {
                betas.push(b);
            }
            weights.push(w);
        }
        let grid = Arc::new(ParamGrid::from_axes(alphas, betas)?);
        Belief::from_weights(grid, &weights)
    }
}

/// Uniform belief over the grid described by `spec`.
pub fn init_belief(spec: &GridSpec) -> Result<Belief> {
    Ok(Belief::uniform(Arc::new(spec.build()?)))
}

/// Functional form of [`Belief::update`].
pub fn update_belief(b: &Belief, state: &ItemState, outcome: bool, now: Seconds) -> Result<Belief> {
    let mut next = b.clone();
    next.update(state, outcome, now)?;
    Ok(next)
}

/// Returns `b`'s posterior mean parameters.
pub fn posterior_mean(b: &Belief) -> ParamPoint {
    b.posterior_mean()
}

#[derive(Debug, Clone)]
struct ItemBelief {
    belief: Belief,
    /// Value of the bank's update counter at this belief's last update.
    updated_at: u64,
}

/// All of one learner's beliefs.
#[derive(Debug, Clone)]
pub struct BeliefBank {
    mode: ModelKind,
    grid: Arc<ParamGrid>,
    global: Belief,
    per_item: BTreeMap<ItemId, ItemBelief>,
    reviewed: std::collections::BTreeSet<ItemId>,
    updates: u64,
    prior_cache: OnceCell<Belief>,
}

impl PartialEq for BeliefBank {
    fn eq(&self, other: &Self) -> bool {
        self.mode == other.mode
            && self.global == other.global
            && self.reviewed == other.reviewed
            && self.per_item.len() == other.per_item.len()
            && self
                .per_item
                .iter()
                .zip(&other.per_item)
                .all(|((a, x), (b, y))| a == b && x.belief == y.belief)
    }
}

impl BeliefBank {
    pub fn new(mode: ModelKind, spec: &GridSpec) -> Result<Self> {
        Ok(Self::with_grid(mode, Arc::new(spec.build()?)))
    }

    pub fn with_grid(mode: ModelKind, grid: Arc<ParamGrid>) -> Self {
        Self {
            mode,
            global: Belief::uniform(grid.clone()),
            grid,
            per_item: BTreeMap::new(),
            reviewed: Default::default(),
            updates: 0,
            prior_cache: OnceCell::new(),
        }
    }

    pub fn mode(&self) -> ModelKind {
        self.mode
    }

    pub fn grid(&self) -> &Arc<ParamGrid> {
        &self.grid
    }

    /// Items with at least one informative observation.
    pub fn reviewed_items(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.reviewed.iter().copied()
    }

    /// The belief that governs `item` right now.
    pub fn belief_for(&self, item: ItemId) -> &Belief {
        match self.mode {
            ModelKind::Ef => &self.global,
            ModelKind::Isef => match self.per_item.get(&item) {
                Some(b) => &b.belief,
                None => self.cached_prior(),
            },
        }
    }

    /// Changes whenever the belief returned by [`BeliefBank::belief_for`] may have changed.
    pub fn belief_version(&self, item: ItemId) -> u64 {
        match self.mode {
            ModelKind::Ef => self.updates,
            ModelKind::Isef => match self.per_item.get(&item) {
                Some(b) => b.updated_at,
                None => self.updates | (1 << 63),
            },
        }
    }

    pub(crate) fn is_prior_version(version: u64) -> bool {
        version & (1 << 63) != 0
    }

    fn cached_prior(&self) -> &Belief {
        self.prior_cache.get_or_init(|| self.averaged_prior())
    }

    fn averaged_prior(&self) -> Belief {
        if self.per_item.is_empty() {
            return Belief::uniform(self.grid.clone());
        }
        let mut sum = vec![0.0; self.grid.len()];
        for b in self.per_item.values() {
            for (s, w) in sum.iter_mut().zip(&b.belief.weights) {
                *s += w;
            }
        }
        let m = self.per_item.len() as f64;
        for s in sum.iter_mut() {
            *s /= m;
        }
        Belief::from_weights(self.grid.clone(), &sum).expect("mean of normalized beliefs")
    }

    /// Prior for an item that has not been reviewed yet (ISEF only).
    pub fn prior_for_new_item(&self) -> Result<Belief> {
        match self.mode {
            ModelKind::Ef => Err(Error::Mode("prior_for_new_item requires the item-specific model")),
            ModelKind::Isef => Ok(self.cached_prior().clone()),
        }
    }

    /// Applies one informative observation of `item`, whose history before
    /// this presentation is `state`.
    pub fn update(&mut self, item: ItemId, state: &ItemState, outcome: bool, now: Seconds) -> Result<()> {
        match self.mode {
            ModelKind::Ef => self.global.update(state, outcome, now)?,
            ModelKind::Isef => {
                let mut belief = self.belief_for(item).clone();
                belief.update(state, outcome, now)?;
                self.per_item.insert(item, ItemBelief { belief, updated_at: self.updates + 1 });
            }
        }
        self.updates += 1;
        self.reviewed.insert(item);
        self.prior_cache = OnceCell::new();
        Ok(())
    }

    pub fn predict_recall(&self, item: ItemId, state: &ItemState, now: Seconds) -> Result<f64> {
        self.belief_for(item).expected_recall(state, now)
    }
}

/// Source of recall predictions for a teacher.
#[derive(Debug, Clone, PartialEq)]
pub enum Psychologist {
    Bayesian(BeliefBank),
    /// Simulation-only: reads the learner's true parameters.
    Omniscient(ModelParams),
}

/// Frozen recall curve of one item as a function of `(n, dt)`.
#[derive(Debug, Clone, Copy)]
pub enum RecallCurve<'a> {
    Point(ParamPoint),
    Mixture(&'a Belief),
}

impl RecallCurve<'_> {
    pub fn recall(&self, n: u32, dt: Seconds) -> f64 {
        match self {
            RecallCurve::Point(p) => (-p.decay_rate(n) * dt).exp(),
            RecallCurve::Mixture(b) => b.recall_at(n, dt),
        }
    }

    /// Bracket `(lo, hi)` around the lag at which recall crosses `rho`:
    /// recall(lo) >= rho and recall(hi) < rho. `hi` is infinite when recall
    /// never drops below `rho`.
    pub fn threshold_bracket(&self, n: u32, rho: f64) -> (Seconds, Seconds) {
        self.threshold_bracket_near(n, rho, None)
    }

    /// Same as [`RecallCurve::threshold_bracket`], searching outward from
    /// `hint` (a previous crossing estimate) when given.
    pub fn threshold_bracket_near(&self, n: u32, rho: f64, hint: Option<Seconds>) -> (Seconds, Seconds) {
        if let RecallCurve::Point(p) = self {
            let rate = p.decay_rate(n);
            if rate <= 0.0 {
                return (f64::INFINITY, f64::INFINITY);
            }
            // Closed form, then nudge so the bracket holds bit-exactly.
            let t = -rho.ln() / rate;
            let mut lo = t;
            while lo > 0.0 && self.recall(n, lo) < rho {
                lo = next_down(lo);
            }
            let mut hi = next_up(lo);
            while self.recall(n, hi) >= rho {
                hi = next_up(hi);
            }
            return (lo, hi);
        }
        const STEP: f64 = 8.0;
        let start = hint.filter(|h| h.is_finite() && *h > 0.0).unwrap_or(1.0);
        let f = |x: f64| self.recall(n, x) - rho;
        // (point, value) pairs with value >= 0 at lo and < 0 at hi.
        let (mut lo, mut hi);
        let fs = f(start);
        if fs >= 0.0 {
            lo = (start, fs);
            loop {
                let x = lo.0 * STEP;
                if x > 1e18 {
                    return (lo.0, f64::INFINITY);
                }
                let fx = f(x);
                if fx < 0.0 {
                    hi = (x, fx);
                    break;
                }
                lo = (x, fx);
            }
        } else {
            hi = (start, fs);
            loop {
                let x = hi.0 / STEP;
                if x < 1e-6 {
                    lo = (0.0, 1.0 - rho);
                    break;
                }
                let fx = f(x);
                if fx >= 0.0 {
                    lo = (x, fx);
                    break;
                }
                hi = (x, fx);
            }
        }
        // Illinois variant of regula falsi on log-lag, bisecting near zero.
        let mut side = 0i8;
        for _ in 0..200 {
            if hi.0 - lo.0 <= 1e-9 * hi.0 {
                break;
            }
            let mut x = if lo.0 > 0.0 {
                let (a, b) = (lo.0.ln(), hi.0.ln());
                (a + (b - a) * lo.1 / (lo.1 - hi.1)).exp()
            } else {
                0.5 * hi.0
            };
            if !(x > lo.0 && x < hi.0) {
                x = 0.5 * (lo.0 + hi.0);
                if !(x > lo.0 && x < hi.0) {
                    break;
                }
            }
            let fx = f(x);
            if fx >= 0.0 {
                lo = (x, fx);
                if side == 1 {
                    hi.1 *= 0.5;
                }
                side = 1;
            } else {
                hi = (x, fx);
                if side == -1 {
                    lo.1 *= 0.5;
                }
                side = -1;
            }
        }
        (lo.0, hi.0)
    }
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::from_bits(1);
    }
    f64::from_bits(x.to_bits() + 1)
}

fn next_down(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    f64::from_bits(x.to_bits() - 1)
}

impl Psychologist {
    pub fn bayesian(mode: ModelKind, spec: &GridSpec) -> Result<Self> {
        Ok(Psychologist::Bayesian(BeliefBank::new(mode, spec)?))
    }

    pub fn is_omniscient(&self) -> bool {
        matches!(self, Psychologist::Omniscient(_))
    }

    pub fn predict_recall(&self, item: ItemId, state: &ItemState, now: Seconds) -> Result<f64> {
        match self {
            Psychologist::Bayesian(bank) => bank.predict_recall(item, state, now),
            Psychologist::Omniscient(params) => params.recall(item, state, now),
        }
    }

    /// Records the outcome of presenting `item` with prior history `state`.
    /// First presentations reveal the answer and carry no information.
    pub fn observe(&mut self, item: ItemId, state: &ItemState, outcome: bool, now: Seconds) -> Result<()> {
        match self {
            Psychologist::Bayesian(bank) if state.n_presentations > 0 => bank.update(item, state, outcome, now),
            _ => Ok(()),
        }
    }

    pub fn curve(&self, item: ItemId) -> Result<RecallCurve<'_>> {
        Ok(match self {
            Psychologist::Bayesian(bank) => RecallCurve::Mixture(bank.belief_for(item)),
            Psychologist::Omniscient(params) => RecallCurve::Point(*params.for_item(item)?),
        })
    }

    /// Cache key component that changes whenever [`Psychologist::curve`] may change.
    pub fn curve_version(&self, item: ItemId) -> u64 {
        match self {
            Psychologist::Bayesian(bank) => bank.belief_version(item),
            Psychologist::Omniscient(_) => 0,
        }
    }

    /// Point estimate of `item`'s parameters.
    pub fn estimate(&self, item: ItemId) -> Result<ParamPoint> {
        match self {
            Psychologist::Bayesian(bank) => Ok(bank.belief_for(item).posterior_mean()),
            Psychologist::Omniscient(params) => params.for_item(item).copied(),
        }
    }
}
