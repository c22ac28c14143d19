use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::classify::{Annotation, Author};
use super::labels::ErrorLabel;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("annotation is for run {got}, store holds run {expected}")]
    UnknownRun { expected: String, got: String },
    #[error("run has no problem {0}")]
    UnknownProblem(String),
    #[error("{path}:{line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
}

/// Append-only annotation log of one run, `{run_id}.annotations`. Human
/// annotations shadow automatic ones; nothing is ever removed.
#[derive(Debug)]
pub struct AnnotationStore {
    path: PathBuf,
    run_id: String,
    problems: BTreeSet<String>,
    history: Vec<Annotation>,
}

impl AnnotationStore {
    pub fn file_name(run_id: &str) -> String {
        format!("{run_id}.annotations")
    }

    /// Opens (or starts) the log in `dir` for a run covering `problems`.
    pub fn open(dir: &Path, run_id: &str, problems: impl IntoIterator<Item = String>) -> Result<Self, StoreError> {
        let path = dir.join(Self::file_name(run_id));
        let mut history = Vec::new();
        if path.exists() {
            let text = std::fs::read_to_string(&path)?;
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let a: Annotation = serde_json::from_str(line).map_err(|e| StoreError::Corrupt {
                    path: path.clone(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
                history.push(a);
            }
        }
        Ok(AnnotationStore {
            path,
            run_id: run_id.to_string(),
            problems: problems.into_iter().collect(),
            history,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Records `annotation`. Returns `false` when an identical record is
    /// already present.
    pub fn annotate(&mut self, annotation: Annotation) -> Result<bool, StoreError> {
        if annotation.run_id != self.run_id {
            return Err(StoreError::UnknownRun {
                expected: self.run_id.clone(),
                got: annotation.run_id,
            });
        }
        if !self.problems.contains(&annotation.problem_id) {
            return Err(StoreError::UnknownProblem(annotation.problem_id));
        }
        if self.history.contains(&annotation) {
            return Ok(false);
        }
        let mut line = serde_json::to_string(&annotation).map_err(std::io::Error::other)?;
        line.push('\n');
        if let Some(dir) = self.path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        f.write_all(line.as_bytes())?;
        f.flush()?;
        self.history.push(annotation);
        Ok(true)
    }

    pub fn history(&self, problem_id: &str) -> Vec<&Annotation> {
        self.history.iter().filter(|a| a.problem_id == problem_id).collect()
    }

    /// The latest human annotation, else the latest automatic one.
    pub fn effective(&self, problem_id: &str) -> Option<&Annotation> {
        let h = self.history(problem_id);
        h.iter()
            .rev()
            .find(|a| a.author == Author::Human)
            .or_else(|| h.iter().rev().find(|a| a.author == Author::Auto))
            .copied()
    }

    pub fn effective_labels(&self) -> BTreeMap<String, BTreeSet<ErrorLabel>> {
        self.problems
            .iter()
            .filter_map(|p| self.effective(p).map(|a| (p.clone(), a.labels.clone())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::debugdict::Evidence;

    fn auto(labels: &[ErrorLabel]) -> Annotation {
        Annotation {
            problem_id: "p1".into(),
            model_id: "m".into(),
            run_id: "r".into(),
            labels: labels.iter().copied().collect(),
            evidence: vec![Evidence {
                detector_id: "line-diff-wrong".into(),
                node_id: None,
                line: Some(3),
                note: "x".into(),
            }],
            author: Author::Auto,
        }
    }

    #[test]
    fn human_shadows_auto_and_history_is_kept() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = AnnotationStore::open(dir.path(), "r", ["p1".to_string()]).unwrap();
        assert!(s.annotate(auto(&[ErrorLabel::Wrong])).unwrap());
        let human = Annotation::human("p1", "m", "r", &[ErrorLabel::Ascii], "missing ord");
        assert!(s.annotate(human).unwrap());
        assert_eq!(s.effective("p1").unwrap().labels, [ErrorLabel::Ascii].into());
        assert_eq!(s.history("p1").len(), 2);

        let reopened = AnnotationStore::open(dir.path(), "r", ["p1".to_string()]).unwrap();
        assert_eq!(reopened.effective("p1").unwrap().labels, [ErrorLabel::Ascii].into());
        assert_eq!(reopened.history("p1").len(), 2);
    }

    #[test]
    fn duplicates_are_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = AnnotationStore::open(dir.path(), "r", ["p1".to_string()]).unwrap();
        assert!(s.annotate(auto(&[ErrorLabel::Wrong])).unwrap());
        assert!(!s.annotate(auto(&[ErrorLabel::Wrong])).unwrap());
        let text = std::fs::read_to_string(s.path()).unwrap();
        assert_eq!(text.lines().count(), 1);
    }

    #[test]
    fn unknown_references_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = AnnotationStore::open(dir.path(), "r", ["p1".to_string()]).unwrap();
        let mut a = auto(&[ErrorLabel::Wrong]);
        a.run_id = "other".into();
        assert!(matches!(s.annotate(a), Err(StoreError::UnknownRun { .. })));
        let mut a = auto(&[ErrorLabel::Wrong]);
        a.problem_id = "p9".into();
        assert!(matches!(s.annotate(a), Err(StoreError::UnknownProblem(_))));
    }
}
