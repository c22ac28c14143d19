//! One benchmark run: prompt the model for every problem, extract and
//! execute its code, score, and keep the artifacts in a run directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bridge::{build_prompt, extract_code, BridgeError, BridgeSettings, Client, GenParams, ModelEndpoint, PromptSpec};
use crate::codegen::{SourceText, PYTHON3};
use crate::dataset::Dataset;
use crate::debugdict::{classify_failure, Annotation, AnnotationStore, FailureContext, StoreError};
use crate::runner::{
    aggregate, config_digest, run_all, BenchmarkReport, DiagKind, LoadFailure, ParseDiagnostic, ProblemReport,
    RunLimits, RunMeta, Runner, ScoreError, TestOutcome,
};
use crate::stats::ConstructStats;

pub const RUN_FILE: &str = "run.json";
pub const REQUEST_LOG: &str = "requests.jsonl";
pub const STATS_FILE: &str = "stats.json";

/// Everything a run reads from the config file. Secrets are named, never
/// held: `endpoint.auth_token_env` is the variable to read.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub endpoint: ModelEndpoint,
    #[serde(default)]
    pub gen: GenParams,
    #[serde(default)]
    pub bridge: BridgeSettings,
    #[serde(default)]
    pub runner: RunLimits,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn digest(&self) -> String {
        config_digest(&serde_json::to_value(self).expect("config serializes"))
    }
}

/// Identity of a stored run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub model_id: String,
    pub dataset_id: String,
    pub dataset_digest: String,
    pub config_digest: String,
    pub timestamp: String,
}

/// Per-request line of the run log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RequestLogEntry {
    pub problem_id: String,
    pub latency_ms: Option<f64>,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    pub retries: Option<u32>,
    pub temperature: Option<f64>,
    pub greedy: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Bridge(#[from] BridgeError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error("sandbox failure on {problem}: {message}")]
    Sandbox { problem: String, message: String },
    #[error("run directory: {0}")]
    Layout(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// What came back for one problem.
#[derive(Clone, Debug)]
pub enum Answer {
    Code { raw: String, solution: SourceText },
    Unusable { raw: String, reason: String },
    Failed(BridgeError),
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub record: RunRecord,
    pub report: BenchmarkReport,
    pub answers: Vec<(String, Answer)>,
    pub log: Vec<RequestLogEntry>,
}

impl RunOutput {
    /// Problems whose request failed outright.
    pub fn failed_requests(&self) -> usize {
        self.answers.iter().filter(|(_, a)| matches!(a, Answer::Failed(_))).count()
    }
}

pub fn prompt_for(problem: &crate::dataset::DatasetProblem, params: &GenParams) -> String {
    let mut spec = PromptSpec::new(PYTHON3.language_name, problem.instructions.clone());
    spec.extra_template = params.extra_template.clone();
    build_prompt(&spec)
}

/// Queries `client` for every problem of `dataset`, then runs and scores
/// the extracted code.
#[allow(clippy::too_many_arguments)]
pub fn run_dataset(
    dataset: &Dataset,
    client: &Client,
    params: &GenParams,
    runner: &Runner,
    workers: usize,
    run_id: &str,
    config_digest: &str,
    timestamp: &str,
) -> Result<RunOutput, RunError> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| RunError::Layout(e.to_string()))?;
    let completions: Vec<_> = pool.install(|| {
        dataset
            .problems
            .par_iter()
            .map(|p| client.request_completion(&prompt_for(p, params), params))
            .collect()
    });
    if let Some(Err(e)) = completions.iter().find(|c| matches!(c, Err(e) if e.is_config() || matches!(e, BridgeError::Auth(_)))) {
        return Err(e.clone().into());
    }

    let mut answers = Vec::new();
    let mut log = Vec::new();
    let mut greedy = true;
    for (p, c) in dataset.problems.iter().zip(completions) {
        let id = p.problem.id.clone();
        let answer = match c {
            Ok(c) => {
                greedy &= c.greedy;
                log.push(RequestLogEntry {
                    problem_id: id.clone(),
                    latency_ms: Some(c.latency_ms),
                    prompt_tokens: c.prompt_tokens,
                    completion_tokens: c.completion_tokens,
                    retries: Some(c.retries),
                    temperature: Some(c.temperature),
                    greedy: Some(c.greedy),
                    error: None,
                });
                let entry = &p.ground_truth.entry_name;
                match extract_code(&c.text, entry, PYTHON3.language_id, Some(&runner.python)) {
                    Ok(solution) => Answer::Code { raw: c.text, solution },
                    Err(e) => Answer::Unusable {
                        raw: c.text,
                        reason: e.to_string(),
                    },
                }
            }
            Err(e) => {
                log.push(RequestLogEntry {
                    problem_id: id.clone(),
                    latency_ms: None,
                    prompt_tokens: None,
                    completion_tokens: None,
                    retries: None,
                    temperature: None,
                    greedy: None,
                    error: Some(e.to_string()),
                });
                Answer::Failed(e)
            }
        };
        answers.push((id, answer));
    }

    let jobs: Vec<_> = dataset
        .problems
        .iter()
        .zip(&answers)
        .filter_map(|(p, (id, a))| match a {
            Answer::Code { solution, .. } => Some((id.clone(), solution.clone(), p.problem.tests.clone())),
            _ => None,
        })
        .collect();
    let mut executed = run_all(runner, &jobs, workers).into_iter();
    let mut reports = Vec::new();
    for (p, (id, a)) in dataset.problems.iter().zip(&answers) {
        let n = p.problem.tests.len();
        let report = match a {
            Answer::Code { .. } => executed
                .next()
                .expect("one result per job")
                .map_err(|e| RunError::Sandbox {
                    problem: id.clone(),
                    message: e.to_string(),
                })?,
            Answer::Unusable { reason, .. } => ProblemReport::static_failure(
                id,
                ParseDiagnostic {
                    kind: DiagKind::OtherSyntax,
                    line: 0,
                    message: reason.clone(),
                },
                n,
            ),
            Answer::Failed(e) => {
                let failure = LoadFailure {
                    kind: "request-failed".into(),
                    message: e.to_string(),
                };
                let outcomes = (0..n)
                    .map(|_| TestOutcome::RuntimeError {
                        kind: failure.kind.clone(),
                        message: failure.message.clone(),
                        line: None,
                    })
                    .collect();
                let mut r = ProblemReport::from_outcomes(id, outcomes);
                r.load_failure = Some(failure);
                r
            }
        };
        reports.push(report);
    }
    let model_id = client.endpoint().model_id.clone();
    let report = aggregate(
        reports,
        RunMeta {
            model_id: model_id.clone(),
            dataset_id: dataset.manifest.dataset_id.clone(),
            timestamp: timestamp.to_string(),
            config_digest: config_digest.to_string(),
            greedy,
        },
    )?;
    Ok(RunOutput {
        record: RunRecord {
            run_id: run_id.to_string(),
            model_id,
            dataset_id: dataset.manifest.dataset_id.clone(),
            dataset_digest: dataset.manifest.digest.clone(),
            config_digest: config_digest.to_string(),
            timestamp: timestamp.to_string(),
        },
        report,
        answers,
        log,
    })
}

fn write(path: &Path, text: &str) -> Result<(), RunError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io(dir))?;
    }
    std::fs::write(path, text).map_err(io(path))
}

fn json_text<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("run artifacts serialize");
    s.push('\n');
    s
}

/// A run directory: `run.json`, `{run_id}.report`, `stats.json`,
/// `requests.jsonl`, `responses/{id}.txt`, `solutions/{id}.py` and, after
/// classification, `{run_id}.annotations`.
#[derive(Clone, Debug)]
pub struct RunDir {
    pub path: PathBuf,
    pub record: RunRecord,
    pub report: BenchmarkReport,
}

impl RunDir {
    pub fn save(dir: &Path, out: &RunOutput, stats: &BTreeMap<String, ConstructStats>) -> Result<RunDir, RunError> {
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        write(&dir.join(RUN_FILE), &json_text(&out.record))?;
        out.report.save(dir, &out.record.run_id).map_err(io(dir))?;
        write(&dir.join(STATS_FILE), &json_text(stats))?;
        let log: String = out
            .log
            .iter()
            .map(|e| serde_json::to_string(e).expect("log entry serializes") + "\n")
            .collect();
        write(&dir.join(REQUEST_LOG), &log)?;
        for (id, a) in &out.answers {
            match a {
                Answer::Code { raw, solution } => {
                    write(&dir.join("responses").join(format!("{id}.txt")), raw)?;
                    write(&dir.join("solutions").join(format!("{id}.py")), &solution.code)?;
                }
                Answer::Unusable { raw, .. } => write(&dir.join("responses").join(format!("{id}.txt")), raw)?,
                Answer::Failed(_) => {}
            }
        }
        Ok(RunDir {
            path: dir.to_path_buf(),
            record: out.record.clone(),
            report: out.report.clone(),
        })
    }

    pub fn open(dir: &Path) -> Result<RunDir, RunError> {
        let rpath = dir.join(RUN_FILE);
        let text = std::fs::read_to_string(&rpath).map_err(io(&rpath))?;
        let record: RunRecord =
            serde_json::from_str(&text).map_err(|e| RunError::Layout(format!("{}: {e}", rpath.display())))?;
        let report_path = dir.join(format!("{}.report", record.run_id));
        let report = BenchmarkReport::load(&report_path).map_err(io(&report_path))?;
        Ok(RunDir {
            path: dir.to_path_buf(),
            record,
            report,
        })
    }

    pub fn stats(&self) -> Result<BTreeMap<String, ConstructStats>, RunError> {
        let path = self.path.join(STATS_FILE);
        let text = std::fs::read_to_string(&path).map_err(io(&path))?;
        serde_json::from_str(&text).map_err(|e| RunError::Layout(format!("{}: {e}", path.display())))
    }

    /// The extracted solution for `id`, if the model produced one.
    pub fn solution(&self, id: &str, entry_name: &str) -> Option<SourceText> {
        let code = std::fs::read_to_string(self.path.join("solutions").join(format!("{id}.py"))).ok()?;
        Some(SourceText::new(code, entry_name, PYTHON3.language_id))
    }

    pub fn annotations(&self) -> Result<AnnotationStore, RunError> {
        let ids = self.report.problems.iter().map(|p| p.problem_id.clone());
        Ok(AnnotationStore::open(&self.path, &self.record.run_id, ids)?)
    }
}

/// Runs the classifier on every failing problem and appends the results to
/// the run's annotation log. Returns the annotations written.
pub fn classify_run(run: &RunDir, dataset: &Dataset) -> Result<Vec<Annotation>, RunError> {
    if run.record.dataset_digest != dataset.manifest.digest {
        return Err(RunError::Layout(format!(
            "run {} was made on dataset digest {}, not {}",
            run.record.run_id, run.record.dataset_digest, dataset.manifest.digest
        )));
    }
    let mut store = run.annotations()?;
    let mut written = Vec::new();
    for report in &run.report.problems {
        let Some(p) = dataset.get(&report.problem_id) else { continue };
        let solution = run
            .solution(&report.problem_id, &p.ground_truth.entry_name)
            .unwrap_or_else(|| SourceText::new("", &p.ground_truth.entry_name, PYTHON3.language_id));
        let ctx = FailureContext {
            run_id: &run.record.run_id,
            model_id: &run.record.model_id,
            problem: &p.problem,
            report,
            solution: &solution,
            ground_truth: &p.ground_truth,
            stats: &p.stats,
        };
        if let Some(a) = classify_failure(&ctx) {
            if store.annotate(a.clone())? {
                written.push(a);
            }
        }
    }
    Ok(written)
}

/// The ground-truth stub's answer table for `dataset`.
pub fn ground_truth_answers(dataset: &Dataset) -> BTreeMap<String, String> {
    dataset
        .problems
        .iter()
        .map(|p| (p.instructions.text(), p.ground_truth.code.clone()))
        .collect()
}
