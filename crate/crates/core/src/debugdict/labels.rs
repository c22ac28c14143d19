use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::STAT_KEYS;

/// The shipped dictionary file.
pub const DICTIONARY_SOURCE: &str = include_str!("../../data/debug_dictionary.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorLabel {
    Loop,
    Ignored,
    Wrong,
    Ascii,
    Unbalanced,
    Division,
    Indent,
    Split,
    Global,
    Other,
}

impl ErrorLabel {
    pub const ALL: [ErrorLabel; 10] = [
        ErrorLabel::Loop,
        ErrorLabel::Ignored,
        ErrorLabel::Wrong,
        ErrorLabel::Ascii,
        ErrorLabel::Unbalanced,
        ErrorLabel::Division,
        ErrorLabel::Indent,
        ErrorLabel::Split,
        ErrorLabel::Global,
        ErrorLabel::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorLabel::Loop => "loop",
            ErrorLabel::Ignored => "ignored",
            ErrorLabel::Wrong => "wrong",
            ErrorLabel::Ascii => "ascii",
            ErrorLabel::Unbalanced => "unbalanced",
            ErrorLabel::Division => "division",
            ErrorLabel::Indent => "indent",
            ErrorLabel::Split => "split",
            ErrorLabel::Global => "global",
            ErrorLabel::Other => "other",
        }
    }
}

impl fmt::Display for ErrorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorLabel {
    type Err = DictionaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        ErrorLabel::ALL
            .into_iter()
            .find(|l| l.name() == lower)
            .ok_or_else(|| DictionaryError::UnknownLabel(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub description: String,
    #[serde(default)]
    pub detector: Option<String>,
    #[serde(default)]
    pub constructs: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DictionaryError {
    #[error("dictionary file: {0}")]
    Syntax(String),
    #[error("unknown label {0}")]
    UnknownLabel(String),
    #[error("label {0} is missing")]
    MissingLabel(ErrorLabel),
    #[error("label {0} has no description")]
    EmptyDescription(ErrorLabel),
    #[error("label {label} names unknown construct {key}")]
    UnknownConstruct { label: ErrorLabel, key: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DebugDictionary {
    pub labels: BTreeMap<ErrorLabel, LabelEntry>,
}

#[derive(Deserialize)]
struct DictionaryFile {
    labels: BTreeMap<String, LabelEntry>,
}

impl DebugDictionary {
    pub fn parse(text: &str) -> Result<Self, DictionaryError> {
        let file: DictionaryFile = toml::from_str(text).map_err(|e| DictionaryError::Syntax(e.to_string()))?;
        let mut labels = BTreeMap::new();
        for (name, entry) in file.labels {
            let label: ErrorLabel = name.parse()?;
            if entry.description.trim().is_empty() {
                return Err(DictionaryError::EmptyDescription(label));
            }
            if let Some(key) = entry.constructs.iter().find(|k| !STAT_KEYS.contains(&k.as_str())) {
                return Err(DictionaryError::UnknownConstruct { label, key: key.clone() });
            }
            labels.insert(label, entry);
        }
        if let Some(missing) = ErrorLabel::ALL.into_iter().find(|l| !labels.contains_key(l)) {
            return Err(DictionaryError::MissingLabel(missing));
        }
        Ok(DebugDictionary { labels })
    }

    pub fn builtin() -> Self {
        Self::parse(DICTIONARY_SOURCE).expect("shipped dictionary is valid")
    }

    pub fn entry(&self, label: ErrorLabel) -> &LabelEntry {
        &self.labels[&label]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_dictionary_covers_every_label() {
        let d = DebugDictionary::builtin();
        assert_eq!(d.labels.len(), 10);
        assert!(d.entry(ErrorLabel::Global).description.contains("needs to be declared"));
        assert_eq!(d.entry(ErrorLabel::Other).detector, None);
    }

    #[test]
    fn incomplete_dictionary_is_rejected() {
        let text = "[labels.loop]\ndescription = \"x\"\n";
        assert_eq!(DebugDictionary::parse(text), Err(DictionaryError::MissingLabel(ErrorLabel::Ignored)));
        let text = "[labels.loops]\ndescription = \"x\"\n";
        assert!(matches!(DebugDictionary::parse(text), Err(DictionaryError::UnknownLabel(_))));
    }

    #[test]
    fn label_names_round_trip() {
        for l in ErrorLabel::ALL {
            assert_eq!(l.name().parse::<ErrorLabel>().unwrap(), l);
        }
        assert_eq!("ASCII".parse::<ErrorLabel>().unwrap(), ErrorLabel::Ascii);
    }
}
