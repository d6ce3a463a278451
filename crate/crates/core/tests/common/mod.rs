//! Checks shared by the acceptance target and the focused test files.
//! Every oracle here is written from the formulas directly and does not
//! call the code under test for the quantity it verifies.

#![allow(dead_code)]

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use memteach::config::ExperimentConfig;
use memteach::leitner::{LeitnerConfig, LeitnerState};
use memteach::schedule::DAY;
use memteach::simulator::{ExperimentResult, Simulation};
use memteach::stats::{bonferroni, mann_whitney_u, summarize};
use memteach::tutor::config::ServiceConfig;
use memteach::tutor::service::{replay_trials, Arm, NewUser, Question, TutorService};
use memteach::tutor::vocabulary::SAMPLE_VOCABULARY;
use memteach::{
    init_belief, recall_probability, GridSpec, ItemId, ItemState, ModelKind, ModelParams, ParamPoint, Psychologist,
    Schedule, Session, Teacher, TeacherKind,
};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

fn seen(n: u32, last: f64) -> ItemState {
    ItemState { n_presentations: n, last_presentation: Some(last) }
}

fn oracle_recall(alpha: f64, beta: f64, n: u32, dt: f64) -> f64 {
    (-alpha * (1.0 - beta).powi(n as i32 - 1) * dt).exp()
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

// ---------------------------------------------------------------- model

pub fn closed_form_suite(draws: usize, seed: u64) -> Check {
    let mut failures = Vec::new();
    let hand = [
        (0.025, 0.5, 1, 0.0, 1.0),
        (0.3, 0.2, 1, 0.0, 1.0),
        (0.025, 0.5, 2, 10.0, (-0.125f64).exp()),
        (0.025, 0.9999, 2, 1e6, (-2.5f64).exp()),
    ];
    for (a, b, n, dt, want) in hand {
        let got = recall_probability(&seen(n, 100.0), &ParamPoint::new(a, b).unwrap(), 100.0 + dt).unwrap();
        if (got - want).abs() > 1e-12 {
            failures.push(format!("alpha={a} beta={b} n={n} dt={dt}: {got} != {want}"));
        }
    }
    let p = |a: f64, b: f64, n: u32, dt: f64| {
        recall_probability(&seen(n, 0.0), &ParamPoint { alpha: a, beta: b }, dt).unwrap()
    };
    let distinct = |x1: f64, x2: f64| x1 >= 1e-10 && x2 <= 700.0 && x2 > x1 * (1.0 + 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..draws {
        let a = log_uniform(&mut rng, 1e-7, 1e-1);
        let b = rng.gen_range(1e-4..0.9999);
        let n = rng.gen_range(1..=10u32);
        let dt = log_uniform(&mut rng, 1e-2, 1e6);
        let p0 = p(a, b, n, dt);
        if !(p0 > 0.0 || a * (1.0 - b).powi(n as i32 - 1) * dt > 700.0) || p0 > 1.0 {
            failures.push(format!("range: p({a},{b},{n},{dt}) = {p0}"));
        }
        let dt2 = dt * rng.gen_range(1.01..10.0);
        let p1 = p(a, b, n, dt2);
        let (x1, x2) = (a * (1.0 - b).powi(n as i32 - 1) * dt, a * (1.0 - b).powi(n as i32 - 1) * dt2);
        if p1 > p0 || (distinct(x1, x2) && p1 >= p0) {
            failures.push(format!("lag monotonicity at ({a},{b},{n},{dt})"));
        }
        let pn = p(a, b, n + 1, dt);
        let xn = a * (1.0 - b).powi(n as i32) * dt;
        if pn < p0 || (distinct(xn, x1) && pn <= p0) {
            failures.push(format!("repetition monotonicity at ({a},{b},{n},{dt})"));
        }
        let c = log_uniform(&mut rng, 1e-3, 1e3);
        let scaled = p(a * c, b, n, dt / c);
        if (scaled - p0).abs() > 1e-12 * p0.max(1e-300) && (scaled - p0).abs() > 1e-15 {
            failures.push(format!("scaling at ({a},{b},{n},{dt}) c={c}: {scaled} vs {p0}"));
        }
        let direct = oracle_recall(a, b, n, dt);
        if (direct - p0).abs() > 1e-12 {
            failures.push(format!("closed form at ({a},{b},{n},{dt}): {p0} vs {direct}"));
        }
    }
    let detail = if failures.is_empty() {
        format!("4 hand values to 1e-12; {draws} draws: range, lag and repetition monotonicity, scaling")
    } else {
        format!("{} failures, first: {}", failures.len(), failures[0])
    };
    Check::new("closed-form model suite", failures.is_empty(), detail)
}

// ---------------------------------------------------------------- Bayes

/// Posterior by direct multiplication in probability space on an
/// independently constructed grid, in the same point order
/// (alpha-major, beta-minor).
fn brute_force_posterior(spec: &GridSpec, obs: &[(u32, f64, bool)]) -> Vec<f64> {
    let na = spec.alpha_points;
    let nb = spec.beta_points;
    let [a0, a1] = spec.alpha_bounds;
    let [b0, b1] = spec.beta_bounds;
    let mut w = Vec::with_capacity(na * nb);
    for i in 0..na {
        let alpha = a0 * (a1 / a0).powf(i as f64 / (na - 1) as f64);
        for j in 0..nb {
            let beta = b0 + (b1 - b0) * j as f64 / (nb - 1) as f64;
            let mut l = 1.0;
            for &(n, dt, outcome) in obs {
                let p = oracle_recall(alpha, beta, n, dt);
                l *= if outcome { p } else { 1.0 - p };
            }
            w.push(l);
        }
    }
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

pub fn bayes_oracle(sequences: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut updates = 0;
    for _ in 0..sequences {
        let spec = GridSpec {
            alpha_points: rng.gen_range(2..=5),
            alpha_bounds: [log_uniform(&mut rng, 1e-5, 1e-3), log_uniform(&mut rng, 2e-3, 5e-2)],
            beta_points: rng.gen_range(2..=5),
            beta_bounds: [rng.gen_range(0.01..0.4), rng.gen_range(0.5..0.99)],
        };
        let mut belief = init_belief(&spec).unwrap();
        let mut obs = Vec::new();
        let mut clock = 0.0;
        for _ in 0..rng.gen_range(1..=20) {
            let n = rng.gen_range(1..=6u32);
            let dt = rng.gen_range(0.0..400.0);
            let outcome = rng.gen_bool(0.6);
            let last = clock;
            clock += dt;
            belief.update(&seen(n, last), outcome, clock).unwrap();
            obs.push((n, clock - last, outcome));
            updates += 1;
            let want = brute_force_posterior(&spec, &obs);
            for (g, w) in belief.weights().iter().zip(&want) {
                worst = worst.max((g - w).abs());
            }
        }
    }
    Check::new(
        "Bayes oracle equivalence",
        worst <= 1e-12,
        format!("{sequences} sequences, {updates} updates on grids up to 5x5; max |w - w_oracle| = {worst:.2e} (tol 1e-12)"),
    )
}

// ---------------------------------------------------------------- planner

pub struct ToyInstance {
    pub thetas: Vec<ParamPoint>,
    pub schedule: Schedule,
    pub rho: f64,
}

pub fn toy_instance(rng: &mut impl Rng) -> ToyInstance {
    let q = rng.gen_range(1..=3);
    let f = rng.gen_range(1..=6u32);
    let thetas = (0..q)
        .map(|_| ParamPoint { alpha: log_uniform(rng, 1e-4, 5e-2), beta: rng.gen_range(0.05..0.95) })
        .collect();
    let n_sessions = rng.gen_range(1..=f.min(3));
    let mut cuts: Vec<u32> = (1..f).collect();
    while cuts.len() > (n_sessions - 1) as usize {
        let k = rng.gen_range(0..cuts.len());
        cuts.remove(k);
    }
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(f);
    let iteration_seconds = rng.gen_range(2.0..10.0);
    let mut start = 0.0;
    let mut sessions = Vec::new();
    for w in bounds.windows(2) {
        let s = Session { start, iterations: w[1] - w[0], iteration_seconds };
        start = s.end() + log_uniform(rng, 10.0, 3600.0);
        sessions.push(s);
    }
    let eval = sessions.last().unwrap().end() + log_uniform(rng, 1.0, 600.0);
    ToyInstance { thetas, schedule: Schedule::new(sessions, eval).unwrap(), rho: 0.9 }
}

/// Final reward of presenting `seq[step]` at each step.
pub fn sequence_reward(inst: &ToyInstance, seq: &[usize]) -> usize {
    let mut n = vec![0u32; inst.thetas.len()];
    let mut last = vec![0.0; inst.thetas.len()];
    for (step, &i) in seq.iter().enumerate() {
        n[i] += 1;
        last[i] = inst.schedule.step_time(step).unwrap();
    }
    let eval = inst.schedule.eval_time();
    (0..inst.thetas.len())
        .filter(|&i| n[i] > 0 && oracle_recall(inst.thetas[i].alpha, inst.thetas[i].beta, n[i], eval - last[i]) >= inst.rho)
        .count()
}

pub fn exhaustive_best(inst: &ToyInstance) -> usize {
    let q = inst.thetas.len();
    let f = inst.schedule.horizon();
    let mut best = 0;
    let mut seq = vec![0usize; f];
    for code in 0..q.pow(f as u32) {
        let mut c = code;
        for s in seq.iter_mut() {
            *s = c % q;
            c /= q;
        }
        best = best.max(sequence_reward(inst, &seq));
    }
    best
}

pub fn teacher_sequence(inst: &ToyInstance, kind: TeacherKind) -> Vec<usize> {
    let universe = (0..inst.thetas.len() as u32).map(ItemId).collect();
    let psy = Psychologist::Omniscient(ModelParams::PerItem(inst.thetas.clone()));
    let mut t = Teacher::new(kind, universe, psy, inst.rho, LeitnerConfig::default(), 0).unwrap();
    let mut seq = Vec::new();
    for step in 0..inst.schedule.horizon() {
        let now = inst.schedule.step_time(step).unwrap();
        let sel = t.select(step, now, &inst.schedule).unwrap();
        t.observe(sel.item, true, now).unwrap();
        seq.push(sel.item.index());
    }
    seq
}

pub fn planner_oracle(instances: usize, seed: u64) -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let mut myopic_optimal = 0;
    let mut conservative_optimal = 0;
    for k in 0..instances {
        let inst = toy_instance(&mut rng);
        let best = exhaustive_best(&inst);
        let m = sequence_reward(&inst, &teacher_sequence(&inst, TeacherKind::Myopic));
        let c = sequence_reward(&inst, &teacher_sequence(&inst, TeacherKind::Conservative));
        if m > best || c > best {
            violations.push(format!("instance {k}: oracle {best}, myopic {m}, conservative {c}"));
        }
        myopic_optimal += (m == best) as usize;
        conservative_optimal += (c == best) as usize;
    }
    let elapsed = started.elapsed();
    let passed = violations.is_empty() && elapsed < Duration::from_secs(60);
    let detail = format!(
        "{instances} instances (Q<=3, F<=6): bound violations {}; myopic optimal in {myopic_optimal}/{instances}, conservative in {conservative_optimal}/{instances}; {:.2}s",
        violations.len(),
        elapsed.as_secs_f64()
    );
    Check::new("planner oracle bound", passed, detail)
}

// ---------------------------------------------------------------- Leitner

pub fn leitner_transitions() -> Result<(), String> {
    let cfg = LeitnerConfig { delta_a: 4.0, delta_b: 2.0 };
    let fresh = || LeitnerState::new(cfg, vec![ItemId(0), ItemId(1)], 0).unwrap();
    for outcome in [false, true] {
        let mut s = fresh();
        s.update(ItemId(0), outcome, 100.0).unwrap();
        let b = s.boxed(ItemId(0)).unwrap();
        if (b.k, b.due) != (1, 108.0) {
            return Err(format!("new item with outcome {outcome}: box {} due {}", b.k, b.due));
        }
    }
    let mut s = fresh();
    s.update(ItemId(0), true, 100.0).unwrap();
    let mut fail = s.clone();
    fail.update(ItemId(0), false, 200.0).unwrap();
    let b = fail.boxed(ItemId(0)).unwrap();
    if (b.k, b.due) != (0, 204.0) {
        return Err(format!("box 1 failure: box {} due {}", b.k, b.due));
    }
    s.update(ItemId(0), true, 200.0).unwrap();
    let b = s.boxed(ItemId(0)).unwrap();
    if (b.k, b.due) != (2, 216.0) {
        return Err(format!("box 1 success: box {} due {}", b.k, b.due));
    }
    Ok(())
}

/// 20 selections on a fixed outcome script; returns the picks and the
/// final state.
pub fn leitner_trace(seed: u64) -> (Vec<u32>, LeitnerState) {
    let script = [1, 0, 1, 1, 0, 1, 1, 1, 0, 0, 1, 1, 0, 1, 1, 1, 1, 0, 1, 1];
    let mut s = LeitnerState::new(LeitnerConfig::default(), (0..6).map(ItemId).collect(), seed).unwrap();
    let mut picks = Vec::new();
    for (step, &ok) in script.iter().enumerate() {
        let now = 3.0 * step as f64;
        let item = s.select(now, step);
        s.update(item, ok == 1, now).unwrap();
        picks.push(item.0);
    }
    (picks, s)
}

pub fn leitner_determinism() -> Check {
    if let Err(e) = leitner_transitions() {
        return Check::new("Leitner determinism", false, e);
    }
    let (a, sa) = leitner_trace(17);
    let (b, sb) = leitner_trace(17);
    let json = serde_json::to_string(&sa).unwrap();
    let back: LeitnerState = serde_json::from_str(&json).unwrap();
    let passed = a == b && sa == sb && back == sa;
    Check::new(
        "Leitner determinism",
        passed,
        format!("box transitions 8 s / 4 s / 16 s exact; 20-trial trace {a:?} replayed bit-identically: {}", a == b && sa == sb),
    )
}

// ---------------------------------------------------------------- omniscient

pub fn omniscient_zero_error() -> Check {
    let mut worst = 0.0f64;
    let mut trials = 0;
    for model in [ModelKind::Ef, ModelKind::Isef] {
        let mut cfg = ExperimentConfig::desk_scale(model, true);
        cfg.population_size = 6;
        cfg.item_count = 40;
        cfg.schedule.iterations_per_session = 30;
        cfg.record_trials = true;
        let result = Simulation::new(cfg).unwrap().run().unwrap();
        for runs in result.metrics.values() {
            for m in runs {
                for e in &m.session_errors {
                    worst = worst.max(e.abs());
                }
                for t in &m.trials {
                    worst = worst.max(t.abs_error());
                    trials += 1;
                }
            }
        }
    }
    Check::new(
        "omniscient zero error",
        worst == 0.0,
        format!("EF and ISEF, all teachers, {trials} trials: max error {worst:e}"),
    )
}

// ---------------------------------------------------------------- recovery

/// Posterior mean of log10 alpha after `observations` Bernoulli outcomes at
/// lags chosen so the true recall is mid-range.
pub fn recover(theta: ParamPoint, observations: usize, rng: &mut impl Rng) -> f64 {
    let spec = GridSpec::standard();
    let grid = spec.build().unwrap();
    let mut belief = init_belief(&spec).unwrap();
    for _ in 0..observations {
        let n = rng.gen_range(1..=5u32);
        let target: f64 = rng.gen_range(0.2..0.8);
        let dt = -target.ln() / (theta.alpha * (1.0 - theta.beta).powi(n as i32 - 1));
        let p = oracle_recall(theta.alpha, theta.beta, n, dt);
        let outcome = rng.gen::<f64>() < p;
        belief.update(&seen(n, 0.0), outcome, dt).unwrap();
    }
    belief.weights().iter().enumerate().map(|(k, w)| w * grid.point(k).alpha.log10()).sum()
}

pub fn parameter_recovery(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0;
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let theta = ParamPoint { alpha: 10f64.powf(rng.gen_range(-5.5..-2.5)), beta: rng.gen_range(0.2..0.8) };
        let est = recover(theta, 100, &mut rng);
        let err = (est - theta.alpha.log10()).abs();
        worst = worst.max(err);
        hits += (err <= 0.5) as usize;
    }
    let need = (cases * 4).div_ceil(5);
    Check::new(
        "parameter recovery",
        hits >= need,
        format!("{hits}/{cases} within 0.5 of true log10 alpha (need {need}); worst error {worst:.3}"),
    )
}

// ---------------------------------------------------------------- service

const T0: f64 = 1_700_000_000.0;

pub fn service_config(dir: &std::path::Path) -> ServiceConfig {
    ServiceConfig {
        data_dir: dir.to_path_buf(),
        items_per_arm: 40,
        questions_per_session: 50,
        training_days: 2,
        grid: GridSpec::with_points(30, 30),
        fsync: false,
        ..Default::default()
    }
}

fn open_service(dir: &std::path::Path) -> TutorService {
    let svc = TutorService::open(service_config(dir)).unwrap();
    if svc.vocabulary_len() == 0 {
        svc.ingest_vocabulary(SAMPLE_VOCABULARY).unwrap();
    }
    svc
}

/// Deterministic learner: right on first presentations and on most
/// reviews, a fixed wrong choice otherwise.
fn scripted_choice(svc: &TutorService, user: &str, arm: Arm, q: &Question) -> String {
    let rec = svc.user_record(user).unwrap();
    let answer = rec.items[arm.index()].iter().find(|i| i.id == q.item).unwrap().answer.clone();
    if q.first_presentation || q.trial % 4 != 3 {
        answer
    } else {
        q.choices.iter().find(|c| **c != answer).unwrap().clone()
    }
}

/// Drives every training session, one question every 4 s. Positions
/// before `skip` are passed over without touching the service; at
/// `stop_after` the question is fetched but left unanswered. Returns the
/// questions fetched, in order.
pub fn drive(svc: &TutorService, user: &str, skip: usize, stop_after: Option<usize>) -> Vec<Question> {
    let rec = svc.user_record(user).unwrap();
    let mut seen = Vec::new();
    let mut position = 0;
    for day in 0..rec.settings.training_days {
        let first = rec.first_arm_on(day);
        for arm in [first, first.other()] {
            let start = rec.session_start(arm, day);
            for i in 0..rec.settings.questions_per_session {
                let now = start + 4.0 * i as f64;
                position += 1;
                if position - 1 < skip {
                    continue;
                }
                let q = svc.next_question(user, arm, now).unwrap();
                seen.push(q.clone());
                if stop_after == Some(position - 1) {
                    return seen;
                }
                let choice = scripted_choice(svc, user, arm, &q);
                svc.submit_answer(user, arm, q.trial, &q.item, &choice, now + 3.0).unwrap();
            }
        }
    }
    seen
}

pub fn service_replay() -> Check {
    let new_user = || NewUser {
        model_teacher: Some(TeacherKind::Conservative),
        first_arm: Some(Arm::Model),
        start: Some(T0),
        seed: Some(5),
    };
    // uninterrupted reference run
    let ref_dir = tempfile::tempdir().unwrap();
    let reference = open_service(ref_dir.path());
    let id = reference.create_user(new_user(), T0).unwrap().id;
    let full = drive(&reference, &id, 0, None);

    // the same run, killed in the middle of a session and restarted
    let cut = 70;
    let dir = tempfile::tempdir().unwrap();
    let before = {
        let svc = open_service(dir.path());
        let id2 = svc.create_user(new_user(), T0).unwrap().id;
        assert_eq!(id2, id);
        drive(&svc, &id, 0, Some(cut))
    };
    let restarted = open_service(dir.path());
    let after = drive(&restarted, &id, cut, None);
    let mut resumed = before;
    resumed.pop();
    resumed.extend(after);
    let same_sequence = resumed == full;

    // replay from trial records, and from the log, against the live teachers
    let rec = reference.user_record(&id).unwrap();
    let mut n_trials = 0;
    let mut replay_equal = true;
    let reopened = {
        drop(reference);
        open_service(ref_dir.path())
    };
    for arm in Arm::ALL {
        let live = reopened.teacher(&id, arm).unwrap();
        let trials = reopened.trials(&id, arm).unwrap();
        n_trials += trials.len();
        let replayed = replay_trials(&rec, arm, &trials).unwrap();
        replay_equal &= replayed == live && restarted.teacher(&id, arm).unwrap() == live;
    }
    Check::new(
        "service replay",
        same_sequence && replay_equal && n_trials == 200,
        format!(
            "kill after {cut} answers: remaining {} questions identical: {same_sequence}; {n_trials}-trial replay equality: {replay_equal}",
            full.len() - cut
        ),
    )
}

// ---------------------------------------------------------------- replication

pub struct Batch {
    pub seed: u64,
    pub result: ExperimentResult,
    pub elapsed: Duration,
}

pub fn run_batch(seed: u64) -> Batch {
    let mut cfg = ExperimentConfig::desk_scale(ModelKind::Isef, false);
    cfg.seed = seed;
    let started = Instant::now();
    let result = Simulation::new(cfg).unwrap().run().unwrap();
    Batch { seed, result, elapsed: started.elapsed() }
}

fn learned(r: &ExperimentResult, k: TeacherKind) -> Vec<f64> {
    r.metrics[&k].iter().map(|m| m.n_learned as f64).collect()
}

fn ratios(r: &ExperimentResult, k: TeacherKind) -> Vec<f64> {
    r.metrics[&k].iter().filter_map(|m| m.ratio()).collect()
}

fn median(v: &[f64]) -> f64 {
    summarize(v).map_or(f64::NAN, |s| s.median)
}

pub fn replication(batches: &[Batch]) -> Vec<Check> {
    let mut checks = Vec::new();
    let need = (batches.len() * 4).div_ceil(5);
    for k in [TeacherKind::Myopic, TeacherKind::Conservative] {
        let mut wins = 0;
        let mut parts = Vec::new();
        for b in batches {
            let (x, y) = (learned(&b.result, k), learned(&b.result, TeacherKind::Leitner));
            let p = bonferroni(mann_whitney_u(&x, &y).unwrap().p_value, 2);
            let win = median(&x) > median(&y) && p < 0.05;
            wins += win as usize;
            parts.push(format!("{}:{}v{} p={p:.1e}", b.seed, median(&x), median(&y)));
        }
        checks.push(Check::new(
            format!("replication (a) n_learned {k} > leitner"),
            wins >= need,
            format!("{wins}/{} batches significant (need {need}); seed:median {k} v leitner: {}", batches.len(), parts.join(", ")),
        ));
    }
    let mut lower = 0;
    let mut parts = Vec::new();
    for b in batches {
        let (x, y) = (ratios(&b.result, TeacherKind::Myopic), ratios(&b.result, TeacherKind::Leitner));
        lower += (median(&x) < median(&y)) as usize;
        let u = mann_whitney_u(&x, &y).unwrap();
        parts.push(format!("{}:{:.2}v{:.2} U={}", b.seed, median(&x), median(&y), u.u));
    }
    checks.push(Check::new(
        "replication (b) ratio myopic < leitner",
        lower == batches.len(),
        format!("lower median in {lower}/{} batches; {}", batches.len(), parts.join(", ")),
    ));
    for k in [TeacherKind::Myopic, TeacherKind::Conservative] {
        let (mut first, mut last, mut n) = (0.0, 0.0, 0.0);
        for b in batches {
            for m in &b.result.metrics[&k] {
                let s = &m.session_errors;
                first += (s[0] + s[1]) / 2.0;
                last += (s[s.len() - 2] + s[s.len() - 1]) / 2.0;
                n += 1.0;
            }
        }
        let (first, last) = (first / n, last / n);
        checks.push(Check::new(
            format!("replication (c) prediction error decreases, {k}"),
            last < first,
            format!("mean error sessions 1-2 {first:.4}, sessions 5-6 {last:.4}"),
        ));
    }
    let total: Duration = batches.iter().map(|b| b.elapsed).sum();
    checks.push(Check::new(
        "replication runtime",
        total <= Duration::from_secs(30 * 60),
        format!("{} batches in {:.0}s (budget 1800s)", batches.len(), total.as_secs_f64()),
    ));
    checks
}

pub fn assert_check(c: &Check) {
    assert!(c.passed, "{}: {}", c.name, c.detail);
}

pub fn day() -> f64 {
    DAY
}
