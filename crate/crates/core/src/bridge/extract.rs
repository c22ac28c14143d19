use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codegen::SourceText;
use crate::runner::static_check_with;

#[derive(Clone, Debug, Error, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractionError {
    #[error("response has no code fence and does not parse as code")]
    NoFenceAndUnparseable,
    #[error("the first code fence is empty")]
    EmptyBlock,
}

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

/// Contents of the first fenced block, without its language tag. A fence
/// left open (e.g. the model ran out of tokens) runs to the end of the text.
pub fn first_fenced_block(raw: &str) -> Option<String> {
    let mut lines = raw.lines();
    lines.by_ref().find(|l| is_fence(l))?;
    let body: Vec<&str> = lines.take_while(|l| !is_fence(l)).collect();
    let mut s = body.join("\n");
    s.push('\n');
    Some(s)
}

/// Picks the solution code out of a model response. Without a fence the
/// whole response is accepted only if it parses.
pub fn extract_code(
    raw: &str,
    entry_name: &str,
    profile_id: &str,
    python: Option<&Path>,
) -> Result<SourceText, ExtractionError> {
    match first_fenced_block(raw) {
        Some(code) if code.trim().is_empty() => Err(ExtractionError::EmptyBlock),
        Some(code) => Ok(SourceText::new(code, entry_name, profile_id)),
        None => {
            let src = SourceText::new(raw, entry_name, profile_id);
            if raw.trim().is_empty() || static_check_with(&src, python).is_err() {
                Err(ExtractionError::NoFenceAndUnparseable)
            } else {
                Ok(src)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(raw: &str) -> Result<String, ExtractionError> {
        extract_code(raw, "__main__", "python3", Some(Path::new("python3"))).map(|s| s.code)
    }

    #[test]
    fn single_block_with_tag() {
        let raw = "```python\ndef __main__(var0):\n    return var0\n```\n";
        assert_eq!(ex(raw).unwrap(), "def __main__(var0):\n    return var0\n");
    }

    #[test]
    fn first_of_two_blocks() {
        let raw = "Here you go:\n```\nx = 1\n```\nAnd a test:\n```python\nprint(x)\n```";
        assert_eq!(ex(raw).unwrap(), "x = 1\n");
    }

    #[test]
    fn prose_and_empty() {
        assert_eq!(ex("I am unable to help with that request."), Err(ExtractionError::NoFenceAndUnparseable));
        assert_eq!(ex(""), Err(ExtractionError::NoFenceAndUnparseable));
        assert_eq!(ex("```python\n\n```"), Err(ExtractionError::EmptyBlock));
        assert_eq!(ex("def __main__():\n    return 1\n").unwrap(), "def __main__():\n    return 1\n");
    }

    #[test]
    fn open_fence_runs_to_end() {
        assert_eq!(ex("```py\ndef f():\n    return 2").unwrap(), "def f():\n    return 2\n");
    }
}
