//! Error labels, automated failure classification, annotations and
//! run-to-run regression diffs.

mod classify;
mod diff;
mod labels;
pub mod normalize;
mod store;

pub use classify::{classify_failure, Annotation, Author, Evidence, FailureContext};
pub use diff::{diff_runs, label_counts, table2_text, ConstructDelta, DiffError, LabelDelta, RegressionDiff, RunView};
pub use labels::{DebugDictionary, DictionaryError, ErrorLabel, LabelEntry, DICTIONARY_SOURCE};
pub use store::{AnnotationStore, StoreError};
