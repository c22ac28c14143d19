//! Benchmark datasets on disk: generation from problem files, loading with
//! digest checks, and ground-truth verification.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codegen::{emit_ground_truth, CodegenError, SourceText, PYTHON3};
use crate::instruct::{render_problem, InstructionDoc};
use crate::problem::Problem;
use crate::runner::{run_all, ProblemReport, Runner};
use crate::stats::{collect_stats, ConstructStats};
use crate::uast::{validate, ParseError};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Version of the problem, manifest and report formats.
pub const SCHEMA_VERSION: &str = "1";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Conventional names for datasets of a known size.
pub fn size_class(count: usize) -> &'static str {
    match count {
        135 => "tiny",
        460 => "small",
        _ => "custom",
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Problem file: the uAST and its tests.
    pub problem: String,
    pub instructions: String,
    pub ground_truth: String,
    pub stats: ConstructStats,
    pub stats_file: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dataset_id: String,
    pub size_class: String,
    pub tool_version: String,
    pub schema_version: String,
    pub target: String,
    pub problems: Vec<ManifestEntry>,
    /// SHA-256 over every referenced file, in entry order.
    pub digest: String,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("problem {id}: {message}")]
    Invalid { id: String, message: String },
    #[error("problem {id}: {source}")]
    Codegen { id: String, source: CodegenError },
    #[error("duplicate problem id {0}")]
    Duplicate(String),
    #[error("no problem files in {0}")]
    Empty(PathBuf),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("digest mismatch: manifest says {expected}, files give {actual}")]
    DigestMismatch { expected: String, actual: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read(path: &Path) -> Result<Vec<u8>, DatasetError> {
    std::fs::read(path).map_err(io_err(path))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(path, bytes).map_err(io_err(path))
}

/// Reads every `*.json` problem file in `dir`, sorted by file name.
pub fn load_problems_dir(dir: &Path) -> Result<Vec<Problem>, DatasetError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(DatasetError::Empty(dir.to_path_buf()));
    }
    let mut seen = BTreeSet::new();
    let mut problems = Vec::new();
    for path in files {
        let text = String::from_utf8_lossy(&read(&path)?).into_owned();
        let problem = Problem::parse(&text).map_err(|source| DatasetError::Parse {
            path: path.clone(),
            source,
        })?;
        if !seen.insert(problem.id.clone()) {
            return Err(DatasetError::Duplicate(problem.id));
        }
        problems.push(problem);
    }
    Ok(problems)
}

/// Writes `problems` as problem files, one per problem.
pub fn write_problems_dir(dir: &Path, problems: &[Problem]) -> Result<(), DatasetError> {
    for p in problems {
        write(&dir.join(format!("{}.json", p.id)), p.to_text().as_bytes())?;
    }
    Ok(())
}

fn safe_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')) && !id.starts_with('.')
}

fn digest_files(root: &Path, entries: &[ManifestEntry]) -> Result<String, DatasetError> {
    let mut h = Sha256::new();
    for e in entries {
        for rel in [&e.problem, &e.instructions, &e.ground_truth, &e.stats_file] {
            let bytes = read(&root.join(rel))?;
            h.update(rel.as_bytes());
            h.update([0]);
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(&bytes);
        }
    }
    Ok(hex::encode(h.finalize()))
}

/// Validates, renders, emits and measures every problem, then writes the
/// artifacts and `manifest.json` under `out`.
pub fn generate(problems: &[Problem], dataset_id: &str, out: &Path) -> Result<DatasetManifest, DatasetError> {
    let mut seen = BTreeSet::new();
    let mut entries = Vec::new();
    for p in problems {
        if !safe_id(&p.id) {
            return Err(DatasetError::Invalid {
                id: p.id.clone(),
                message: "ids may only use letters, digits, '-', '_' and '.'".into(),
            });
        }
        if !seen.insert(p.id.as_str()) {
            return Err(DatasetError::Duplicate(p.id.clone()));
        }
        let errors = validate::errors(&p.program);
        if let Some(v) = errors.first() {
            return Err(DatasetError::Invalid {
                id: p.id.clone(),
                message: match errors.len() {
                    1 => v.to_string(),
                    n => format!("{v} (and {} more)", n - 1),
                },
            });
        }
        if p.tests.is_empty() {
            return Err(DatasetError::Invalid {
                id: p.id.clone(),
                message: "no tests".into(),
            });
        }
        let doc = render_problem(p);
        let gt = emit_ground_truth(&p.program, &PYTHON3).map_err(|source| DatasetError::Codegen {
            id: p.id.clone(),
            source,
        })?;
        let stats = collect_stats(&p.id, &p.program);
        let entry = ManifestEntry {
            id: p.id.clone(),
            problem: format!("problems/{}.json", p.id),
            instructions: format!("instructions/{}.instr.txt", p.id),
            ground_truth: format!("ground_truth/{}.gt.py", p.id),
            stats_file: format!("stats/{}.stats.json", p.id),
            stats,
        };
        write(&out.join(&entry.problem), p.to_text().as_bytes())?;
        write(&out.join(&entry.instructions), doc.text().as_bytes())?;
        write(&out.join(&entry.ground_truth), gt.code.as_bytes())?;
        let mut stats_text = serde_json::to_string_pretty(&entry.stats).expect("stats serialize");
        stats_text.push('\n');
        write(&out.join(&entry.stats_file), stats_text.as_bytes())?;
        entries.push(entry);
    }
    if entries.is_empty() {
        return Err(DatasetError::Empty(out.to_path_buf()));
    }
    let manifest = DatasetManifest {
        dataset_id: dataset_id.to_string(),
        size_class: size_class(entries.len()).to_string(),
        tool_version: TOOL_VERSION.to_string(),
        schema_version: SCHEMA_VERSION.to_string(),
        target: PYTHON3.language_id.to_string(),
        digest: digest_files(out, &entries)?,
        problems: entries,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write(&out.join(MANIFEST_FILE), text.as_bytes())?;
    Ok(manifest)
}

/// One loaded problem with its derived artifacts.
#[derive(Clone, Debug)]
pub struct DatasetProblem {
    pub problem: Problem,
    pub instructions: InstructionDoc,
    pub ground_truth: SourceText,
    pub stats: ConstructStats,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
    pub problems: Vec<DatasetProblem>,
}

impl Dataset {
    /// Loads `dir`, checking the digest. Instructions and ground truth are
    /// re-derived from each problem so line maps are available, and must
    /// agree with the stored files.
    pub fn load(dir: &Path) -> Result<Dataset, DatasetError> {
        let path = dir.join(MANIFEST_FILE);
        let manifest: DatasetManifest = serde_json::from_slice(&read(&path)?)
            .map_err(|e| DatasetError::Manifest(format!("{}: {e}", path.display())))?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(DatasetError::Manifest(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                manifest.schema_version
            )));
        }
        let actual = digest_files(dir, &manifest.problems)?;
        if actual != manifest.digest {
            return Err(DatasetError::DigestMismatch {
                expected: manifest.digest.clone(),
                actual,
            });
        }
        let mut problems = Vec::new();
        for e in &manifest.problems {
            let ppath = dir.join(&e.problem);
            let text = String::from_utf8_lossy(&read(&ppath)?).into_owned();
            let problem = Problem::parse(&text).map_err(|source| DatasetError::Parse { path: ppath, source })?;
            if problem.id != e.id {
                return Err(DatasetError::Manifest(format!("{} holds problem {}", e.problem, problem.id)));
            }
            let instructions = render_problem(&problem);
            let ground_truth = emit_ground_truth(&problem.program, &PYTHON3).map_err(|source| DatasetError::Codegen {
                id: e.id.clone(),
                source,
            })?;
            let stored_gt = String::from_utf8_lossy(&read(&dir.join(&e.ground_truth))?).into_owned();
            let stored_doc = String::from_utf8_lossy(&read(&dir.join(&e.instructions))?).into_owned();
            if stored_gt != ground_truth.code || stored_doc != instructions.text() {
                return Err(DatasetError::Manifest(format!(
                    "artifacts of {} were not produced by this tool version",
                    e.id
                )));
            }
            problems.push(DatasetProblem {
                problem,
                instructions,
                ground_truth,
                stats: e.stats.clone(),
            });
        }
        Ok(Dataset {
            root: dir.to_path_buf(),
            manifest,
            problems,
        })
    }

    pub fn get(&self, id: &str) -> Option<&DatasetProblem> {
        self.problems.iter().find(|p| p.problem.id == id)
    }

    /// Runs every ground truth against its tests. A sandbox failure comes
    /// back as the error text for that problem.
    pub fn verify(&self, runner: &Runner, workers: usize) -> Vec<Result<ProblemReport, String>> {
        let jobs: Vec<_> = self
            .problems
            .iter()
            .map(|p| (p.problem.id.clone(), p.ground_truth.clone(), p.problem.tests.clone()))
            .collect();
        run_all(runner, &jobs, workers)
            .into_iter()
            .map(|r| r.map_err(|e| e.to_string()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_reproducible_and_tamper_evident() {
        let problems: Vec<Problem> = crate::fixtures::hand_built().into_iter().take(3).collect();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ma = generate(&problems, "t", a.path()).unwrap();
        let mb = generate(&problems, "t", b.path()).unwrap();
        assert_eq!(ma.digest, mb.digest);
        for e in &ma.problems {
            for rel in [&e.problem, &e.instructions, &e.ground_truth, &e.stats_file] {
                assert!(a.path().join(rel).is_file(), "{rel}");
            }
        }
        let ds = Dataset::load(a.path()).unwrap();
        assert_eq!(ds.problems.len(), 3);
        std::fs::write(a.path().join(&ma.problems[0].ground_truth), "pass\n").unwrap();
        assert!(matches!(Dataset::load(a.path()), Err(DatasetError::DigestMismatch { .. })));
    }

    #[test]
    fn size_classes() {
        assert_eq!(size_class(135), "tiny");
        assert_eq!(size_class(460), "small");
        assert_eq!(size_class(7), "custom");
    }
}
