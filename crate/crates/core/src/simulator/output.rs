//! Run manifest and tab-separated metric tables.
//!
//! `learners.tsv`: `teacher learner seed resamples n_learned n_seen ratio`
//! (ratio `NA` when nothing was seen).
//! `prediction_error.tsv`: `teacher learner session mean_abs_error`.
//! `trials.tsv` (optional): one row per interaction.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentResult;
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::teacher::TeacherKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub learner_seeds: Vec<u64>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerRow {
    pub teacher: TeacherKind,
    pub learner: usize,
    pub n_learned: usize,
    pub n_seen: usize,
    pub ratio: Option<f64>,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(dir.join(name))?))
}

/// Writes manifest and tables into `dir`, overwriting previous outputs.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, result: &ExperimentResult) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut outputs = vec!["learners.tsv".to_string(), "prediction_error.tsv".to_string()];
    if cfg.record_trials {
        outputs.push("trials.tsv".into());
    }

    let mut w = create(dir, "learners.tsv")?;
    writeln!(w, "teacher\tlearner\tseed\tresamples\tn_learned\tn_seen\tratio")?;
    for (kind, runs) in &result.metrics {
        for m in runs {
            let spec = &result.learners[m.learner];
            let ratio = m.ratio().map_or("NA".to_string(), |r| format!("{r:.6}"));
            writeln!(
                w,
                "{kind}\t{}\t{}\t{}\t{}\t{}\t{ratio}",
                m.learner, spec.seed, spec.resamples, m.n_learned, m.n_seen
            )?;
        }
    }
    w.flush()?;

    let mut w = create(dir, "prediction_error.tsv")?;
    writeln!(w, "teacher\tlearner\tsession\tmean_abs_error")?;
    for (kind, runs) in &result.metrics {
        for m in runs {
            for (s, e) in m.session_errors.iter().enumerate() {
                writeln!(w, "{kind}\t{}\t{s}\t{e:.9}", m.learner)?;
            }
        }
    }
    w.flush()?;

    if cfg.record_trials {
        let mut w = create(dir, "trials.tsv")?;
        writeln!(w, "teacher\tlearner\tstep\tsession\ttime\titem\tfirst\toutcome\tpredicted\ttrue")?;
        for (kind, runs) in &result.metrics {
            for m in runs {
                for t in &m.trials {
                    writeln!(
                        w,
                        "{kind}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.9}\t{:.9}",
                        m.learner,
                        t.step,
                        t.session,
                        t.time,
                        t.item,
                        t.first_presentation as u8,
                        t.outcome as u8,
                        t.predicted_recall,
                        t.true_recall
                    )?;
                }
            }
        }
        w.flush()?;
    }

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        learner_seeds: result.learners.iter().map(|l| l.seed).collect(),
        outputs: outputs.clone(),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    outputs.push("manifest.json".into());
    Ok(outputs.into_iter().map(|o| dir.join(o)).collect())
}

pub fn read_learner_table(path: &Path) -> Result<Vec<LearnerRow>> {
    let file = fs::File::open(path)?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let bad = |m: &str| Error::Parse { line: lineno, message: m.to_string() };
        if f.len() != 7 {
            return Err(bad("expected 7 columns"));
        }
        let teacher = TeacherKind::parse(f[0]).ok_or_else(|| bad("unknown teacher"))?;
        let num = |s: &str| s.parse::<usize>().map_err(|e| bad(&e.to_string()));
        let ratio = match f[6] {
            "NA" => None,
            s => Some(s.parse::<f64>().map_err(|e| bad(&e.to_string()))?),
        };
        rows.push(LearnerRow {
            teacher,
            learner: num(f[1])?,
            n_learned: num(f[4])?,
            n_seen: num(f[5])?,
            ratio,
        });
    }
    Ok(rows)
}
