use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::static_check::ParseDiagnostic;
use crate::uast::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TestOutcome {
    Pass,
    Fail {
        actual: Value,
    },
    RuntimeError {
        kind: String,
        message: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        line: Option<usize>,
    },
    Timeout {
        limit_s: f64,
    },
}

impl TestOutcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, TestOutcome::Pass)
    }

    pub fn is_timeout(&self) -> bool {
        matches!(self, TestOutcome::Timeout { .. })
    }
}

/// Why the solution never reached its tests.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadFailure {
    /// `load-timeout`, or the exception name raised while loading.
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemReport {
    pub problem_id: String,
    pub static_error: Option<ParseDiagnostic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load_failure: Option<LoadFailure>,
    pub outcomes: Vec<TestOutcome>,
    pub m: usize,
    pub n: usize,
    pub partial: f64,
    pub whole: bool,
    pub inf_flag: bool,
}

impl ProblemReport {
    /// Scores `outcomes`, one per test.
    pub fn from_outcomes(problem_id: &str, outcomes: Vec<TestOutcome>) -> Self {
        let n = outcomes.len();
        let m = outcomes.iter().filter(|o| o.is_pass()).count();
        ProblemReport {
            problem_id: problem_id.to_string(),
            static_error: None,
            load_failure: None,
            m,
            n,
            partial: if n == 0 { 0.0 } else { m as f64 / n as f64 },
            whole: n > 0 && m == n,
            inf_flag: outcomes.iter().any(TestOutcome::is_timeout),
            outcomes,
        }
    }

    /// A solution that did not parse; it scores 0 on all `n` tests.
    pub fn static_failure(problem_id: &str, diagnostic: ParseDiagnostic, n: usize) -> Self {
        ProblemReport {
            problem_id: problem_id.to_string(),
            static_error: Some(diagnostic),
            load_failure: None,
            outcomes: Vec::new(),
            m: 0,
            n,
            partial: 0.0,
            whole: false,
            inf_flag: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMeta {
    pub model_id: String,
    pub dataset_id: String,
    pub timestamp: String,
    pub config_digest: String,
    /// False when the endpoint refused temperature 0 and sampling was used.
    pub greedy: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub model_id: String,
    pub dataset_id: String,
    pub timestamp: String,
    pub config_digest: String,
    pub greedy: bool,
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "P_micro")]
    pub p_micro: f64,
    #[serde(rename = "P_macro")]
    pub p_macro: f64,
    pub static_err_count: usize,
    pub inf_err_count: usize,
    pub problems: Vec<ProblemReport>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("no problem reports to aggregate")]
    Empty,
    #[error("duplicate problem id {0}")]
    DuplicateProblem(String),
}

/// Combines per-problem reports. Problems are sorted by id so the result
/// does not depend on completion order.
pub fn aggregate(problems: Vec<ProblemReport>, meta: RunMeta) -> Result<BenchmarkReport, ScoreError> {
    if problems.is_empty() {
        return Err(ScoreError::Empty);
    }
    let mut seen = BTreeSet::new();
    for p in &problems {
        if !seen.insert(p.problem_id.as_str()) {
            return Err(ScoreError::DuplicateProblem(p.problem_id.clone()));
        }
    }
    let mut problems = problems;
    problems.sort_by(|a, b| a.problem_id.cmp(&b.problem_id));
    let count = problems.len() as f64;
    let whole = problems.iter().filter(|p| p.whole).count() as f64;
    let (sum_m, sum_n) = problems.iter().fold((0usize, 0usize), |(m, n), p| (m + p.m, n + p.n));
    Ok(BenchmarkReport {
        model_id: meta.model_id,
        dataset_id: meta.dataset_id,
        timestamp: meta.timestamp,
        config_digest: meta.config_digest,
        greedy: meta.greedy,
        w: whole / count,
        p_micro: if sum_n == 0 { 0.0 } else { sum_m as f64 / sum_n as f64 },
        p_macro: problems.iter().map(|p| p.partial).sum::<f64>() / count,
        static_err_count: problems.iter().filter(|p| p.static_error.is_some()).count(),
        inf_err_count: problems.iter().filter(|p| p.inf_flag).count(),
        problems,
    })
}

impl BenchmarkReport {
    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, dir: &Path, run_id: &str) -> std::io::Result<std::path::PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{run_id}.report"));
        std::fs::write(&path, self.to_text())?;
        Ok(path)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }
}

/// Hex SHA-256 of the canonical JSON of `config`.
pub fn config_digest(config: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(config.to_string().as_bytes()))
}

const TABLE_HEADER: [&str; 5] = ["Model", "W", "P", "Static Err", "Inf Err"];

fn table_cells(r: &BenchmarkReport) -> [String; 5] {
    [
        r.model_id.clone(),
        format!("{:.2}", r.w),
        format!("{:.2}", r.p_micro),
        r.static_err_count.to_string(),
        r.inf_err_count.to_string(),
    ]
}

/// Aligned text table, one row per report, with a footnote giving the
/// macro-averaged P and any non-greedy runs.
pub fn table1_text(reports: &[&BenchmarkReport]) -> String {
    let rows: Vec<[String; 5]> = reports.iter().map(|r| table_cells(r)).collect();
    let mut widths: Vec<usize> = TABLE_HEADER.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |cells: &[String], header: bool, out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 || header { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join(" | ").trim_end());
    };
    line(&TABLE_HEADER.map(String::from), true, &mut out);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(out, "{}", rule.join("-|-"));
    for row in &rows {
        line(row, false, &mut out);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "P is the fraction of all tests passed. Mean per-problem score:");
    for r in reports {
        let note = if r.greedy { "" } else { " (sampled, not greedy)" };
        let _ = writeln!(out, "  {}: {:.2}{note}", r.model_id, r.p_macro);
    }
    out
}

pub fn table1_csv(reports: &[&BenchmarkReport]) -> String {
    let mut out = String::from("Model,W,P,P_macro,Static Err,Inf Err,greedy\n");
    for r in reports {
        let c = table_cells(r);
        let model = if c[0].contains([',', '"']) {
            format!("\"{}\"", c[0].replace('"', "\"\""))
        } else {
            c[0].clone()
        };
        let _ = writeln!(
            out,
            "{model},{},{},{:.2},{},{},{}",
            c[1], c[2], r.p_macro, c[3], c[4], r.greedy
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> RunMeta {
        RunMeta {
            model_id: "m".into(),
            dataset_id: "d".into(),
            timestamp: "t".into(),
            config_digest: "c".into(),
            greedy: true,
        }
    }

    #[test]
    fn partial_score() {
        let mut outcomes = vec![TestOutcome::Pass; 6];
        outcomes.push(TestOutcome::Fail { actual: Value::Int(1) });
        outcomes.push(TestOutcome::Timeout { limit_s: 5.0 });
        let r = ProblemReport::from_outcomes("p", outcomes);
        assert_eq!((r.m, r.n, r.partial, r.whole, r.inf_flag), (6, 8, 0.75, false, true));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let p = ProblemReport::from_outcomes("p", vec![TestOutcome::Pass]);
        assert_eq!(
            aggregate(vec![p.clone(), p], meta()),
            Err(ScoreError::DuplicateProblem("p".into()))
        );
        assert_eq!(aggregate(vec![], meta()), Err(ScoreError::Empty));
    }

    #[test]
    fn table_has_the_five_columns() {
        let p = ProblemReport::from_outcomes("p", vec![TestOutcome::Pass]);
        let r = aggregate(vec![p], meta()).unwrap();
        let text = table1_text(&[&r]);
        assert!(text.starts_with("Model | W    | P    | Static Err | Inf Err\n"), "{text}");
        assert!(text.contains("m     | 1.00 | 1.00 |          0 |       0"), "{text}");
        assert!(table1_csv(&[&r]).starts_with("Model,W,P,"));
    }
}
