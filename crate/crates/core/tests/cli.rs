use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

const BIN: &str = env!("CARGO_BIN_EXE_memteach");

const TINY: &str = r#"
population_size = 4
item_count = 12
seed = 3
model = "isef"
omniscient = false

[schedule]
sessions = 3
iterations_per_session = 8
iteration_seconds = 4.0
session_spacing = 86400.0

[grid]
alpha_points = 8
alpha_bounds = [2e-7, 0.025]
beta_points = 8
beta_bounds = [1e-4, 0.9999]
"#;

fn memteach(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn simulate_then_analyze_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = dir.path().join("run");
    let out_s = out.to_string_lossy().into_owned();
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        let o = memteach(&["simulate", "--config", &cfg, "--out", &out_s]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let o = memteach(&["analyze", &out_s]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let report = String::from_utf8(o.stdout).unwrap();
        assert!(report.contains("n_learned") && report.contains("ratio"));
        let files = ["learners.tsv", "prediction_error.tsv", "manifest.json", "analysis.tsv", "boxplot.tsv"];
        snapshots.push(files.map(|f| std::fs::read(out.join(f)).unwrap()));
    }
    assert_eq!(snapshots[0], snapshots[1]);
    assert!(!out.join(".memteach.lock").exists());
}

#[test]
fn config_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run").to_string_lossy().into_owned();
    let o = memteach(&["simulate", "--config", "/nonexistent/exp.toml", "--out", &out]);
    assert_eq!(o.status.code(), Some(4));

    let cfg = write_config(dir.path(), &TINY.replace("population_size = 4", "population_size = 0"));
    let o = memteach(&["simulate", "--config", &cfg, "--out", &out]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("population_size"));

    let o = memteach(&["simulate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn analyze_single_arm_names_missing_arm() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("teachers = [\"leitner\"]\n{TINY}"));
    let out = dir.path().join("run").to_string_lossy().into_owned();
    assert!(memteach(&["simulate", "--config", &cfg, "--out", &out]).status.success());
    let o = memteach(&["analyze", &out]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing arm"));
}

#[test]
fn locked_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = dir.path().join("run");
    std::fs::create_dir_all(&out).unwrap();
    std::fs::write(out.join(".memteach.lock"), "").unwrap();
    let o = memteach(&["simulate", "--config", &cfg, "--out", &out.to_string_lossy()]);
    assert_eq!(o.status.code(), Some(5));
    assert!(!out.join("learners.tsv").exists());
}

#[test]
fn template_round_trips() {
    let o = memteach(&["template", "full", "--model", "ef", "--omniscient"]);
    assert!(o.status.success());
    let cfg = memteach::config::ExperimentConfig::from_toml(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(cfg, memteach::config::ExperimentConfig::full_scale(memteach::ModelKind::Ef, true));
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn get(addr: &str, path: &str) -> Option<String> {
    let mut s = TcpStream::connect(addr).ok()?;
    s.set_read_timeout(Some(Duration::from_secs(5))).ok()?;
    write!(s, "GET {path} HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").ok()?;
    let mut body = String::new();
    s.read_to_string(&mut body).ok()?;
    Some(body)
}

#[test]
fn serve_answers_health() {
    let dir = tempfile::tempdir().unwrap();
    let addr = format!("127.0.0.1:{}", free_port());
    let mut child = Command::new(BIN)
        .arg("serve")
        .env("MEMTEACH_BIND", &addr)
        .env("MEMTEACH_DATA_DIR", dir.path())
        .env("MEMTEACH_FSYNC", "false")
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(30);
    let mut reply = None;
    while Instant::now() < deadline {
        if let Some(r) = get(&addr, "/health") {
            reply = Some(r);
            break;
        }
        std::thread::sleep(Duration::from_millis(100));
    }
    child.kill().unwrap();
    child.wait().unwrap();
    let reply = reply.expect("service did not come up");
    assert!(reply.starts_with("HTTP/1.1 200"), "{reply}");
    assert!(reply.contains("\"status\":\"ok\""));
}

#[test]
fn serve_rejects_bad_vocabulary_and_busy_port() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .arg("serve")
        .env("MEMTEACH_BIND", "127.0.0.1:0")
        .env("MEMTEACH_DATA_DIR", dir.path())
        .env("MEMTEACH_VOCABULARY", dir.path().join("nope.tsv"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.tsv"));

    let busy = TcpListener::bind("127.0.0.1:0").unwrap();
    let o = Command::new(BIN)
        .arg("serve")
        .env("MEMTEACH_BIND", busy.local_addr().unwrap().to_string())
        .env("MEMTEACH_DATA_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
}
