use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

use super::score::{LoadFailure, ProblemReport, TestOutcome};
use super::static_check::static_check_with;
use crate::codegen::SourceText;
use crate::problem::{tests_to_json, TestCase};
use crate::uast::Value;

/// The sandbox harness, run by `python3` for every problem.
pub const SHIM_SOURCE: &str = include_str!("../../shim/astbench_shim.py");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunLimits {
    pub per_test_timeout_s: f64,
    pub import_timeout_s: f64,
    pub memory_mb: u64,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits {
            per_test_timeout_s: 5.0,
            import_timeout_s: 5.0,
            memory_mb: 512,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("could not launch the sandbox: {0}")]
    Launch(#[from] std::io::Error),
    #[error("sandbox failed: {0}")]
    Sandbox(String),
}

/// One line of shim output.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct ShimRecord {
    pub event: String,
    pub index: Option<usize>,
    pub status: Option<String>,
    pub actual: Option<Value>,
    pub kind: Option<String>,
    pub message: Option<String>,
    pub line: Option<usize>,
    pub elapsed_ms: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Runner {
    pub python: PathBuf,
    pub limits: RunLimits,
    /// Where solution stdout/stderr logs go; discarded when `None`.
    pub log_dir: Option<PathBuf>,
}

impl Default for Runner {
    fn default() -> Self {
        Runner {
            python: PathBuf::from("python3"),
            limits: RunLimits::default(),
            log_dir: None,
        }
    }
}

fn outcome_for(record: &ShimRecord, test: &TestCase, limits: &RunLimits) -> TestOutcome {
    match record.status.as_deref() {
        Some("pass") | Some("fail") => match &record.actual {
            Some(actual) if test.expected.matches(actual, test.comparison) => TestOutcome::Pass,
            Some(actual) => TestOutcome::Fail { actual: actual.clone() },
            None => TestOutcome::Fail { actual: Value::Null },
        },
        Some("timeout") => TestOutcome::Timeout {
            limit_s: limits.per_test_timeout_s,
        },
        _ => TestOutcome::RuntimeError {
            kind: record.kind.clone().unwrap_or_else(|| "Unknown".into()),
            message: record.message.clone().unwrap_or_default(),
            line: record.line,
        },
    }
}

impl Runner {
    pub fn new(limits: RunLimits) -> Self {
        Runner {
            limits,
            ..Runner::default()
        }
    }

    /// Parses the shim's record stream into per-test outcomes.
    pub fn outcomes_from_records(
        &self,
        problem_id: &str,
        records: &[ShimRecord],
        tests: &[TestCase],
    ) -> Result<ProblemReport, RunnerError> {
        let load = records
            .iter()
            .find(|r| r.event.starts_with("load-"))
            .ok_or_else(|| RunnerError::Sandbox("no load record".into()))?;
        if load.event != "load-ok" {
            let kind = if load.event == "load-timeout" {
                "load-timeout".to_string()
            } else {
                load.kind.clone().unwrap_or_else(|| "load-error".into())
            };
            let message = load.message.clone().unwrap_or_default();
            let outcomes = tests
                .iter()
                .map(|_| TestOutcome::RuntimeError {
                    kind: kind.clone(),
                    message: message.clone(),
                    line: None,
                })
                .collect();
            let mut report = ProblemReport::from_outcomes(problem_id, outcomes);
            report.load_failure = Some(LoadFailure { kind, message });
            return Ok(report);
        }
        let mut slots: Vec<Option<TestOutcome>> = vec![None; tests.len()];
        for r in records.iter().filter(|r| r.event == "test-result") {
            let i = r
                .index
                .filter(|i| *i < tests.len())
                .ok_or_else(|| RunnerError::Sandbox(format!("bad test index {:?}", r.index)))?;
            if slots[i].is_some() {
                return Err(RunnerError::Sandbox(format!("test {i} reported twice")));
            }
            slots[i] = Some(outcome_for(r, &tests[i], &self.limits));
        }
        let outcomes = slots
            .into_iter()
            .enumerate()
            .map(|(i, o)| o.ok_or_else(|| RunnerError::Sandbox(format!("no result for test {i}"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ProblemReport::from_outcomes(problem_id, outcomes))
    }

    /// Static check, then every test through the shim in one worker.
    pub fn run_problem(
        &self,
        problem_id: &str,
        solution: &SourceText,
        tests: &[TestCase],
    ) -> Result<ProblemReport, RunnerError> {
        if let Err(d) = static_check_with(solution, Some(&self.python)) {
            return Ok(ProblemReport::static_failure(problem_id, d, tests.len()));
        }
        let records = self.execute(problem_id, solution, tests)?;
        self.outcomes_from_records(problem_id, &records, tests)
    }

    /// Raw shim records for `solution` on `tests`.
    pub fn execute(&self, problem_id: &str, solution: &SourceText, tests: &[TestCase]) -> Result<Vec<ShimRecord>, RunnerError> {
        let dir = tempfile::tempdir()?;
        let shim = dir.path().join("astbench_shim.py");
        let sol = dir.path().join("solution.py");
        let tests_path = dir.path().join("tests.json");
        std::fs::write(&shim, SHIM_SOURCE)?;
        std::fs::write(&sol, &solution.code)?;
        std::fs::write(&tests_path, tests_to_json(tests).to_string())?;

        let mut cmd = Command::new(&self.python);
        cmd.args(["-I", "-B", "-X", "utf8"])
            .arg(&shim)
            .arg("--solution")
            .arg(&sol)
            .arg("--entry")
            .arg(&solution.entry_name)
            .arg("--tests")
            .arg(&tests_path)
            .arg("--timeout")
            .arg(self.limits.per_test_timeout_s.to_string())
            .arg("--import-timeout")
            .arg(self.limits.import_timeout_s.to_string())
            .arg("--memory-mb")
            .arg(self.limits.memory_mb.to_string())
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        if let Some(log_dir) = &self.log_dir {
            std::fs::create_dir_all(log_dir)?;
            cmd.arg("--log").arg(log_dir.join(format!("{}.log", sanitize(problem_id))));
        }
        let mut child = cmd.spawn()?;
        let stdout = child.stdout.take().expect("stdout is piped");
        let mut stderr = child.stderr.take().expect("stderr is piped");
        let reader = std::thread::spawn(move || {
            BufReader::new(stdout).lines().map_while(Result::ok).collect::<Vec<String>>()
        });
        let err_reader = std::thread::spawn(move || {
            let mut s = String::new();
            let _ = stderr.read_to_string(&mut s);
            s
        });
        let budget = self.limits.import_timeout_s
            + tests.len() as f64 * (self.limits.per_test_timeout_s + 2.0)
            + 10.0;
        let status = match child.wait_timeout(Duration::from_secs_f64(budget))? {
            Some(s) => s,
            None => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(RunnerError::Sandbox(format!("shim exceeded {budget:.0}s overall")));
            }
        };
        let lines = reader.join().map_err(|_| RunnerError::Sandbox("reader thread panicked".into()))?;
        let err_text = err_reader.join().unwrap_or_default();
        if !status.success() {
            return Err(RunnerError::Sandbox(format!("shim exited with {status}: {}", err_text.trim())));
        }
        lines
            .iter()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str::<ShimRecord>(l).map_err(|e| RunnerError::Sandbox(format!("bad record {l:?}: {e}"))))
            .collect()
    }
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Runs every job on a pool of `workers` threads, each driving its own
/// shim process. Results come back in job order.
pub fn run_all(
    runner: &Runner,
    jobs: &[(String, SourceText, Vec<TestCase>)],
    workers: usize,
) -> Vec<Result<ProblemReport, RunnerError>> {
    use rayon::prelude::*;
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(p) => p,
        Err(e) => return jobs.iter().map(|_| Err(RunnerError::Sandbox(e.to_string()))).collect(),
    };
    pool.install(|| {
        jobs.par_iter()
            .map(|(id, src, tests)| runner.run_problem(id, src, tests))
            .collect()
    })
}

/// Whether `python` can be launched at all.
pub fn python_available(python: &Path) -> bool {
    Command::new(python)
        .arg("--version")
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}
