//! Comparison of simulated teaching arms against the Leitner baseline.
//!
//! Outputs written by [`write_analysis`]:
//! `analysis.tsv`: `teacher baseline metric n n_baseline u p_raw p_bonferroni significant`.
//! `boxplot.tsv`: `teacher metric n mean median q1 q3 iqr whisker_low whisker_high`.
//! `report.txt`: the same numbers as readable text.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::{read_learner_table, LearnerRow, RunManifest};
use crate::stats::{bonferroni, mann_whitney_u, summarize, Summary};
use crate::teacher::TeacherKind;

/// Significance threshold applied to corrected p-values.
pub const SIGNIFICANCE: f64 = 0.05;

/// Each model arm is compared on two metrics.
pub const COMPARISONS_PER_ARM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    NLearned,
    Ratio,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::NLearned => "n_learned",
            Metric::Ratio => "ratio",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub teacher: TeacherKind,
    pub metric: Metric,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub teacher: TeacherKind,
    pub baseline: TeacherKind,
    pub metric: Metric,
    pub n: usize,
    pub n_baseline: usize,
    pub u: f64,
    pub p_raw: f64,
    pub p_corrected: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub summaries: Vec<MetricSummary>,
    pub comparisons: Vec<Comparison>,
}

fn metric_values(rows: &[&LearnerRow], metric: Metric) -> Vec<f64> {
    match metric {
        Metric::NLearned => rows.iter().map(|r| r.n_learned as f64).collect(),
        Metric::Ratio => rows.iter().filter_map(|r| r.ratio).collect(),
    }
}

/// Summaries for every arm and a Mann-Whitney comparison of every
/// non-Leitner arm against Leitner. Learners with no seen items have no
/// ratio and are left out of the ratio comparison.
pub fn analyze(rows: &[LearnerRow]) -> Result<Analysis> {
    let mut by_teacher: BTreeMap<TeacherKind, Vec<&LearnerRow>> = BTreeMap::new();
    for r in rows {
        by_teacher.entry(r.teacher).or_default().push(r);
    }
    let Some(baseline) = by_teacher.get(&TeacherKind::Leitner) else {
        return Err(Error::Config("missing arm: leitner".into()));
    };
    if by_teacher.len() < 2 {
        return Err(Error::Config("missing arm: need myopic or conservative results to compare".into()));
    }

    let mut summaries = Vec::new();
    for (&teacher, arm) in &by_teacher {
        for metric in [Metric::NLearned, Metric::Ratio] {
            if let Some(summary) = summarize(&metric_values(arm, metric)) {
                summaries.push(MetricSummary { teacher, metric, summary });
            }
        }
    }

    let mut comparisons = Vec::new();
    for (&teacher, arm) in &by_teacher {
        if teacher == TeacherKind::Leitner {
            continue;
        }
        for metric in [Metric::NLearned, Metric::Ratio] {
            let a = metric_values(arm, metric);
            let b = metric_values(baseline, metric);
            if a.is_empty() || b.is_empty() {
                continue;
            }
            let mw = mann_whitney_u(&a, &b)?;
            let p_corrected = bonferroni(mw.p_value, COMPARISONS_PER_ARM);
            comparisons.push(Comparison {
                teacher,
                baseline: TeacherKind::Leitner,
                metric,
                n: a.len(),
                n_baseline: b.len(),
                u: mw.u,
                p_raw: mw.p_value,
                p_corrected,
                significant: p_corrected < SIGNIFICANCE,
            });
        }
    }
    Ok(Analysis { summaries, comparisons })
}

impl Analysis {
    pub fn summary(&self, teacher: TeacherKind, metric: Metric) -> Option<&Summary> {
        self.summaries.iter().find(|s| s.teacher == teacher && s.metric == metric).map(|s| &s.summary)
    }

    pub fn comparison(&self, teacher: TeacherKind, metric: Metric) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.teacher == teacher && c.metric == metric)
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        out.push_str("box-plot statistics\n");
        for s in &self.summaries {
            let x = &s.summary;
            let _ = writeln!(
                out,
                "  {:<13} {:<10} n={:<4} median={:.3} IQR={:.3} [{:.3}, {:.3}] mean={:.3}",
                s.teacher.name(),
                s.metric.name(),
                x.n,
                x.median,
                x.iqr(),
                x.q1,
                x.q3,
                x.mean
            );
        }
        out.push_str("\nMann-Whitney U against leitner (Bonferroni x2)\n");
        for c in &self.comparisons {
            let verdict = if c.significant {
                let higher = self.summary(c.teacher, c.metric).map(|s| s.median).unwrap_or(0.0)
                    >= self.summary(c.baseline, c.metric).map(|s| s.median).unwrap_or(0.0);
                if higher {
                    "significantly higher"
                } else {
                    "significantly lower"
                }
            } else {
                "no significant difference"
            };
            let _ = writeln!(
                out,
                "  {:<13} {:<10} U={:<8} p={:.3e} p_corrected={:.3e}  {verdict}",
                c.teacher.name(),
                c.metric.name(),
                c.u,
                c.p_raw,
                c.p_corrected
            );
        }
        out
    }
}

/// Reads `learners.tsv` from a simulate output directory, checking that
/// every teacher listed in its manifest is present.
pub fn analyze_dir(dir: &Path) -> Result<Analysis> {
    let rows = read_learner_table(&dir.join("learners.tsv"))?;
    let manifest_path = dir.join("manifest.json");
    if manifest_path.exists() {
        let text = fs::read_to_string(&manifest_path)?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| Error::Parse { line: e.line(), message: format!("{}: {e}", manifest_path.display()) })?;
        for t in &manifest.config.teachers {
            let n = rows.iter().filter(|r| r.teacher == *t).count();
            if n != manifest.config.population_size {
                return Err(Error::Config(format!(
                    "missing arm: {t} has {n} of {} learners",
                    manifest.config.population_size
                )));
            }
        }
    }
    analyze(&rows)
}

pub fn write_analysis(dir: &Path, analysis: &Analysis) -> Result<Vec<PathBuf>> {
    let mut t = String::from("teacher\tbaseline\tmetric\tn\tn_baseline\tu\tp_raw\tp_bonferroni\tsignificant\n");
    for c in &analysis.comparisons {
        let _ = writeln!(
            t,
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.6e}\t{:.6e}\t{}",
            c.teacher.name(),
            c.baseline.name(),
            c.metric.name(),
            c.n,
            c.n_baseline,
            c.u,
            c.p_raw,
            c.p_corrected,
            c.significant
        );
    }
    let mut b = String::from("teacher\tmetric\tn\tmean\tmedian\tq1\tq3\tiqr\twhisker_low\twhisker_high\n");
    for s in &analysis.summaries {
        let x = &s.summary;
        let _ = writeln!(
            b,
            "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            s.teacher.name(),
            s.metric.name(),
            x.n,
            x.mean,
            x.median,
            x.q1,
            x.q3,
            x.iqr(),
            x.whisker_low,
            x.whisker_high
        );
    }
    let files = [("analysis.tsv", t), ("boxplot.tsv", b), ("report.txt", analysis.report())];
    let mut paths = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body)?;
        paths.push(p);
    }
    Ok(paths)
}
