use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::labels::ErrorLabel;
use crate::runner::BenchmarkReport;
use crate::stats::{ConstructStats, STAT_KEYS};

/// A scored run with its effective labels per problem.
#[derive(Clone, Copy, Debug)]
pub struct RunView<'a> {
    pub run_id: &'a str,
    pub report: &'a BenchmarkReport,
    pub labels: &'a BTreeMap<String, BTreeSet<ErrorLabel>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelDelta {
    pub label: ErrorLabel,
    pub a: usize,
    pub b: usize,
    pub delta: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructDelta {
    pub key: String,
    /// Shared problems using the construct.
    pub problems: usize,
    pub pass_rate_a: f64,
    pub pass_rate_b: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionDiff {
    pub run_a: String,
    pub run_b: String,
    pub dataset_id: String,
    pub labels: Vec<LabelDelta>,
    pub fixed: Vec<String>,
    pub regressed: Vec<String>,
    pub unchanged: Vec<String>,
    pub constructs: Vec<ConstructDelta>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiffError {
    #[error("runs cover different datasets: {0} vs {1}")]
    DatasetMismatch(String, String),
}

/// Problems carrying each label, restricted to problems in `report`.
pub fn label_counts(report: &BenchmarkReport, labels: &BTreeMap<String, BTreeSet<ErrorLabel>>) -> BTreeMap<ErrorLabel, usize> {
    let mut counts: BTreeMap<ErrorLabel, usize> = ErrorLabel::ALL.iter().map(|l| (*l, 0)).collect();
    for p in &report.problems {
        for l in labels.get(&p.problem_id).into_iter().flatten() {
            *counts.entry(*l).or_default() += 1;
        }
    }
    counts
}

pub fn diff_runs(a: RunView<'_>, b: RunView<'_>, stats: &BTreeMap<String, ConstructStats>) -> Result<RegressionDiff, DiffError> {
    if a.report.dataset_id != b.report.dataset_id {
        return Err(DiffError::DatasetMismatch(a.report.dataset_id.clone(), b.report.dataset_id.clone()));
    }
    let (ca, cb) = (label_counts(a.report, a.labels), label_counts(b.report, b.labels));
    let labels = ErrorLabel::ALL
        .iter()
        .map(|l| LabelDelta {
            label: *l,
            a: ca[l],
            b: cb[l],
            delta: cb[l] as i64 - ca[l] as i64,
        })
        .collect();

    let whole_b: BTreeMap<&str, bool> = b.report.problems.iter().map(|p| (p.problem_id.as_str(), p.whole)).collect();
    let mut shared = Vec::new();
    let (mut fixed, mut regressed, mut unchanged) = (Vec::new(), Vec::new(), Vec::new());
    for p in &a.report.problems {
        let Some(&wb) = whole_b.get(p.problem_id.as_str()) else { continue };
        shared.push((p.problem_id.as_str(), p.whole, wb));
        match (p.whole, wb) {
            (false, true) => fixed.push(p.problem_id.clone()),
            (true, false) => regressed.push(p.problem_id.clone()),
            _ => unchanged.push(p.problem_id.clone()),
        }
    }

    let mut constructs = Vec::new();
    for key in STAT_KEYS {
        let using: Vec<(bool, bool)> = shared
            .iter()
            .filter(|(id, _, _)| stats.get(*id).and_then(|s| s.get(key)).is_some_and(|v| v > 0))
            .map(|(_, wa, wb)| (*wa, *wb))
            .collect();
        if using.is_empty() {
            continue;
        }
        let n = using.len() as f64;
        let ra = using.iter().filter(|(wa, _)| *wa).count() as f64 / n;
        let rb = using.iter().filter(|(_, wb)| *wb).count() as f64 / n;
        constructs.push(ConstructDelta {
            key: key.to_string(),
            problems: using.len(),
            pass_rate_a: ra,
            pass_rate_b: rb,
            delta: rb - ra,
        });
    }

    Ok(RegressionDiff {
        run_a: a.run_id.to_string(),
        run_b: b.run_id.to_string(),
        dataset_id: a.report.dataset_id.clone(),
        labels,
        fixed,
        regressed,
        unchanged,
        constructs,
    })
}

impl RegressionDiff {
    pub fn is_zero(&self) -> bool {
        self.labels.iter().all(|l| l.delta == 0)
            && self.fixed.is_empty()
            && self.regressed.is_empty()
            && self.constructs.iter().all(|c| c.delta == 0.0)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} -> {} ({})", self.run_a, self.run_b, self.dataset_id);
        let _ = writeln!(out);
        let a: BTreeMap<ErrorLabel, usize> = self.labels.iter().map(|l| (l.label, l.a)).collect();
        let b: BTreeMap<ErrorLabel, usize> = self.labels.iter().map(|l| (l.label, l.b)).collect();
        out.push_str(&table2_text(&[(self.run_a.as_str(), &a), (self.run_b.as_str(), &b)]));
        let _ = writeln!(out);
        let list = |ids: &[String]| if ids.is_empty() { "-".to_string() } else { ids.join(", ") };
        let _ = writeln!(out, "fixed ({}): {}", self.fixed.len(), list(&self.fixed));
        let _ = writeln!(out, "regressed ({}): {}", self.regressed.len(), list(&self.regressed));
        let _ = writeln!(out, "unchanged: {}", self.unchanged.len());
        if !self.constructs.is_empty() {
            let _ = writeln!(out);
            let width = self.constructs.iter().map(|c| c.key.len()).max().unwrap_or(0).max("construct".len());
            let _ = writeln!(out, "{:<width$} | problems | pass A | pass B | delta", "construct");
            for c in &self.constructs {
                let _ = writeln!(
                    out,
                    "{:<width$} | {:>8} | {:>6.2} | {:>6.2} | {:>+5.2}",
                    c.key, c.problems, c.pass_rate_a, c.pass_rate_b, c.delta
                );
            }
        }
        out
    }
}

/// Label counts side by side, one column per run.
pub fn table2_text(columns: &[(&str, &BTreeMap<ErrorLabel, usize>)]) -> String {
    let label_w = ErrorLabel::ALL.iter().map(|l| l.name().len()).max().unwrap_or(5).max("Label".len());
    let widths: Vec<usize> = columns.iter().map(|(name, _)| name.len().max(3)).collect();
    let mut out = String::new();
    let _ = write!(out, "{:<label_w$}", "Label");
    for ((name, _), w) in columns.iter().zip(&widths) {
        let _ = write!(out, " | {name:>w$}");
    }
    out.push('\n');
    for label in ErrorLabel::ALL {
        let _ = write!(out, "{:<label_w$}", label.name());
        for ((_, counts), w) in columns.iter().zip(&widths) {
            let _ = write!(out, " | {:>w$}", counts.get(&label).copied().unwrap_or(0));
        }
        out.push('\n');
    }
    out
}
