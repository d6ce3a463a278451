//! C ABI for the memteach engine.
//!
//! Every fallible function returns an [`MtStatus`]; on failure a message is
//! available from [`mt_last_error_message`] on the same thread. Objects are
//! opaque handles created by `mt_*_new` and released by the matching
//! `mt_*_free`. Passing a handle to its free function twice is undefined.
//! Times are seconds as `double`; an item never presented has
//! `n_presentations == 0` and its `last_presentation` is ignored.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use memteach::leitner::{LeitnerConfig, LeitnerState};
use memteach::{
    init_belief, recall_probability, Belief, Error, GridSpec, ItemId, ItemState, ModelKind, ParamPoint, Psychologist,
    Schedule, Teacher, TeacherKind,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    TimeWentBackwards = 4,
    UnseenItem = 5,
    UnknownItem = 6,
    DegeneratePosterior = 7,
    Panic = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtTeacherKind {
    Leitner = 0,
    Myopic = 1,
    Conservative = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtModel {
    /// One parameter point shared by all items.
    Ef = 0,
    /// One parameter point per item.
    Isef = 1,
}

/// Parameter grid: `alpha_points` log-spaced values in `[alpha_low,
/// alpha_high]` times `beta_points` evenly spaced values in `[beta_low,
/// beta_high]`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtGrid {
    pub alpha_points: usize,
    pub alpha_low: f64,
    pub alpha_high: f64,
    pub beta_points: usize,
    pub beta_low: f64,
    pub beta_high: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtSelection {
    pub item: u32,
    pub first_presentation: bool,
    pub predicted_recall: f64,
}

/// Posterior belief over one item's forgetting parameters.
pub struct MtBelief(Belief);

/// Session timetable plus evaluation time.
pub struct MtSchedule(Schedule);

/// A teacher with its own psychologist and item histories.
pub struct MtTeacher(Teacher);

/// Standalone Leitner box state.
pub struct MtLeitner(LeitnerState);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(MtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Config(_) | Error::Parse { .. } => MtStatus::Config,
            Error::TimeWentBackwards { .. } => MtStatus::TimeWentBackwards,
            Error::UnseenItem => MtStatus::UnseenItem,
            Error::UnknownItem(_) => MtStatus::UnknownItem,
            Error::DegeneratePosterior => MtStatus::DegeneratePosterior,
            _ => MtStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(MtStatus::NullPointer, format!("{name} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(MtStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MtStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            MtStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn get_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

/// Boxes `value` into `out`; the value is dropped if `out` is null.
unsafe fn put_handle<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

fn item_state(n_presentations: u32, last_presentation: f64) -> ItemState {
    if n_presentations == 0 {
        ItemState::unseen()
    } else {
        ItemState { n_presentations, last_presentation: Some(last_presentation) }
    }
}

fn grid_spec(g: &MtGrid) -> GridSpec {
    GridSpec {
        alpha_points: g.alpha_points,
        alpha_bounds: [g.alpha_low, g.alpha_high],
        beta_points: g.beta_points,
        beta_bounds: [g.beta_low, g.beta_high],
    }
}

fn finite(x: f64, name: &str) -> Result<f64, Failure> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The default 100 x 100 grid.
#[no_mangle]
pub extern "C" fn mt_grid_default() -> MtGrid {
    let g = GridSpec::standard();
    MtGrid {
        alpha_points: g.alpha_points,
        alpha_low: g.alpha_bounds[0],
        alpha_high: g.alpha_bounds[1],
        beta_points: g.beta_points,
        beta_low: g.beta_bounds[0],
        beta_high: g.beta_bounds[1],
    }
}

/// Recall probability `exp(-alpha (1 - beta)^(n - 1) (now - last))`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mt_recall_probability(
    n_presentations: u32,
    last_presentation: f64,
    alpha: f64,
    beta: f64,
    now: f64,
    out: *mut f64,
) -> MtStatus {
    guard(|| {
        let theta = ParamPoint::new(alpha, beta)?;
        let p = recall_probability(&item_state(n_presentations, last_presentation), &theta, finite(now, "now")?)?;
        put(out, p, "out")
    })
}

/// Uniform belief on `grid`.
///
/// # Safety
/// `grid` must be null or point to an `MtGrid`; `out` must be null or valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn mt_belief_new(grid: *const MtGrid, out: *mut *mut MtBelief) -> MtStatus {
    guard(|| {
        let g = get(grid, "grid")?;
        let b = init_belief(&grid_spec(g))?;
        put_handle(out, MtBelief(b))
    })
}

/// # Safety
/// `belief` must be null or a handle from [`mt_belief_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mt_belief_free(belief: *mut MtBelief) {
    if !belief.is_null() {
        drop(Box::from_raw(belief));
    }
}

/// Number of grid points.
///
/// # Safety
/// `belief` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mt_belief_len(belief: *const MtBelief, out: *mut usize) -> MtStatus {
    guard(|| put(out, get(belief, "belief")?.0.weights().len(), "out"))
}

/// Bayes update with one recall outcome. The item must have been presented
/// before (`n_presentations >= 1`).
///
/// # Safety
/// `belief` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mt_belief_update(
    belief: *mut MtBelief,
    n_presentations: u32,
    last_presentation: f64,
    outcome: bool,
    now: f64,
) -> MtStatus {
    guard(|| {
        let b = get_mut(belief, "belief")?;
        b.0.update(&item_state(n_presentations, last_presentation), outcome, finite(now, "now")?)?;
        Ok(())
    })
}

/// Posterior expected recall.
///
/// # Safety
/// `belief` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mt_belief_expected_recall(
    belief: *const MtBelief,
    n_presentations: u32,
    last_presentation: f64,
    now: f64,
    out: *mut f64,
) -> MtStatus {
    guard(|| {
        let b = get(belief, "belief")?;
        let p = b.0.expected_recall(&item_state(n_presentations, last_presentation), finite(now, "now")?)?;
        put(out, p, "out")
    })
}

/// Posterior means of alpha and beta.
///
/// # Safety
/// `belief` must be a live handle; `alpha` and `beta` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mt_belief_posterior_mean(
    belief: *const MtBelief,
    alpha: *mut f64,
    beta: *mut f64,
) -> MtStatus {
    guard(|| {
        let m = get(belief, "belief")?.0.posterior_mean();
        put(alpha, m.alpha, "alpha")?;
        put(beta, m.beta, "beta")
    })
}

/// `days` sessions one day apart, each of `iterations` questions lasting
/// `iteration_seconds`; evaluation one day after the last session.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mt_schedule_daily(
    days: usize,
    iterations: u32,
    iteration_seconds: f64,
    out: *mut *mut MtSchedule,
) -> MtStatus {
    guard(|| {
        let s = Schedule::daily(days, iterations, iteration_seconds)?;
        put_handle(out, MtSchedule(s))
    })
}

/// Total number of steps.
///
/// # Safety
/// `schedule` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mt_schedule_horizon(schedule: *const MtSchedule, out: *mut usize) -> MtStatus {
    guard(|| put(out, get(schedule, "schedule")?.0.horizon(), "out"))
}

/// Wall time of `step`.
///
/// # Safety
/// `schedule` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mt_schedule_step_time(schedule: *const MtSchedule, step: usize, out: *mut f64) -> MtStatus {
    guard(|| {
        let t = get(schedule, "schedule")?.0.step_time(step).ok_or_else(|| invalid("step beyond the schedule"))?;
        put(out, t, "out")
    })
}

/// # Safety
/// `schedule` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mt_schedule_free(schedule: *mut MtSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// Teacher over items `0..item_count` with a grid-Bayesian psychologist.
/// `kind` is an [`MtTeacherKind`] value and `model` an [`MtModel`] value.
/// Leitner teachers use the default delays (4 s, doubling).
///
/// # Safety
/// `grid` must point to an `MtGrid`; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mt_teacher_new(
    kind: u32,
    model: u32,
    item_count: u32,
    grid: *const MtGrid,
    rho: f64,
    seed: u64,
    out: *mut *mut MtTeacher,
) -> MtStatus {
    guard(|| {
        let g = get(grid, "grid")?;
        if item_count == 0 {
            return Err(invalid("item_count must be positive"));
        }
        let kind = match kind {
            k if k == MtTeacherKind::Leitner as u32 => TeacherKind::Leitner,
            k if k == MtTeacherKind::Myopic as u32 => TeacherKind::Myopic,
            k if k == MtTeacherKind::Conservative as u32 => TeacherKind::Conservative,
            k => return Err(invalid(format!("unknown teacher kind {k}"))),
        };
        let model = match model {
            m if m == MtModel::Ef as u32 => ModelKind::Ef,
            m if m == MtModel::Isef as u32 => ModelKind::Isef,
            m => return Err(invalid(format!("unknown model {m}"))),
        };
        let psy = Psychologist::bayesian(model, &grid_spec(g))?;
        let universe = (0..item_count).map(ItemId).collect();
        let t = Teacher::new(kind, universe, psy, rho, LeitnerConfig::default(), seed)?;
        put_handle(out, MtTeacher(t))
    })
}

/// # Safety
/// `teacher` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mt_teacher_free(teacher: *mut MtTeacher) {
    if !teacher.is_null() {
        drop(Box::from_raw(teacher));
    }
}

/// Chooses the item for `step` of `schedule`, presented at `now`.
///
/// # Safety
/// Handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mt_teacher_select(
    teacher: *mut MtTeacher,
    schedule: *const MtSchedule,
    step: usize,
    now: f64,
    out: *mut MtSelection,
) -> MtStatus {
    guard(|| {
        let t = get_mut(teacher, "teacher")?;
        let s = get(schedule, "schedule")?;
        let sel = t.0.select(step, finite(now, "now")?, &s.0)?;
        let sel = MtSelection {
            item: sel.item.0,
            first_presentation: sel.first_presentation,
            predicted_recall: sel.predicted_recall,
        };
        put(out, sel, "out")
    })
}

/// Records the outcome of presenting `item` at `now`.
///
/// # Safety
/// `teacher` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mt_teacher_observe(teacher: *mut MtTeacher, item: u32, outcome: bool, now: f64) -> MtStatus {
    guard(|| {
        let t = get_mut(teacher, "teacher")?;
        t.0.observe(ItemId(item), outcome, finite(now, "now")?)?;
        Ok(())
    })
}

/// The teacher's predicted recall of a presented item at `now`.
///
/// # Safety
/// `teacher` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mt_teacher_predict(teacher: *const MtTeacher, item: u32, now: f64, out: *mut f64) -> MtStatus {
    guard(|| {
        let t = get(teacher, "teacher")?;
        let p = t.0.state().predict_recall(ItemId(item), finite(now, "now")?)?;
        put(out, p, "out")
    })
}

/// Number of items presented at least once.
///
/// # Safety
/// `teacher` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mt_teacher_seen_count(teacher: *const MtTeacher, out: *mut usize) -> MtStatus {
    guard(|| put(out, get(teacher, "teacher")?.0.state().introduced.len(), "out"))
}

/// Leitner boxes over items `0..item_count`; item `k` is due
/// `delta_a * delta_b^box` seconds after its last review.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mt_leitner_new(
    item_count: u32,
    delta_a: f64,
    delta_b: f64,
    seed: u64,
    out: *mut *mut MtLeitner,
) -> MtStatus {
    guard(|| {
        let universe = (0..item_count).map(ItemId).collect();
        let s = LeitnerState::new(LeitnerConfig { delta_a, delta_b }, universe, seed)?;
        put_handle(out, MtLeitner(s))
    })
}

/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mt_leitner_free(state: *mut MtLeitner) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// # Safety
/// `state` must be a live handle; `item` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mt_leitner_select(state: *mut MtLeitner, now: f64, step: usize, item: *mut u32) -> MtStatus {
    guard(|| {
        let s = get_mut(state, "state")?;
        let picked = s.0.select(finite(now, "now")?, step);
        put(item, picked.0, "item")
    })
}

/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mt_leitner_update(state: *mut MtLeitner, item: u32, outcome: bool, now: f64) -> MtStatus {
    guard(|| {
        get_mut(state, "state")?.0.update(ItemId(item), outcome, finite(now, "now")?)?;
        Ok(())
    })
}

/// Box index of `item`, or -1 when it has not been presented.
///
/// # Safety
/// `state` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mt_leitner_box(state: *const MtLeitner, item: u32, out: *mut i64) -> MtStatus {
    guard(|| {
        let s = get(state, "state")?;
        if item as usize >= s.0.boxes.len() {
            return Err(Failure(MtStatus::UnknownItem, format!("unknown item {item}")));
        }
        put(out, s.0.boxed(ItemId(item)).map_or(-1, |b| b.k as i64), "out")
    })
}
