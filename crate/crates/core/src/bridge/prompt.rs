use serde::{Deserialize, Serialize};

use crate::instruct::InstructionDoc;

pub const LANGUAGE_PLACEHOLDER: &str = "{LANGUAGE}";
/// Where a wrapper template receives the assembled prompt.
pub const PROMPT_PLACEHOLDER: &str = "{PROMPT}";

/// The generic instruction block sent ahead of every instruction document.
pub const GENERIC_INSTRUCTIONS: [&str; 10] = [
    "Implement the following pseudocode in {LANGUAGE}.",
    "The implementation should cover all aspects of the provided pseudocode, leaving no functions or functionality unimplemented.",
    "Do NOT ask for user input.",
    "Always define the requested function!",
    "Replace all array_* methods with {LANGUAGE} list operations",
    "Replace all string_* methods, substring* and concat with {LANGUAGE} string operations.",
    "Update loop variable before issuing the \"continue\" keyword.",
    "Do NOT add any additional text. Wrap the code in triple back-quotes.",
    "Global variables must be outside the function.",
    "Unless specifically requested, initialization is to an empty container.",
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub generic_instructions: Vec<String>,
    pub language_name: String,
    pub instruction_doc: InstructionDoc,
    /// Model-specific wrapper containing `{PROMPT}`; empty means none.
    #[serde(default)]
    pub extra_template: Option<String>,
}

impl PromptSpec {
    pub fn new(language_name: &str, instruction_doc: InstructionDoc) -> Self {
        PromptSpec {
            generic_instructions: GENERIC_INSTRUCTIONS.iter().map(|s| s.to_string()).collect(),
            language_name: language_name.to_string(),
            instruction_doc,
            extra_template: None,
        }
    }
}

/// Generic lines with the language filled in, each newline terminated.
pub fn generic_block(lines: &[String], language_name: &str) -> String {
    let mut out = String::new();
    for line in lines {
        out.push_str(&line.replace(LANGUAGE_PLACEHOLDER, language_name));
        out.push('\n');
    }
    out
}

/// Generic block, a blank line, then the instruction document verbatim,
/// optionally wrapped in the model template.
pub fn build_prompt(spec: &PromptSpec) -> String {
    let mut inner = generic_block(&spec.generic_instructions, &spec.language_name);
    inner.push('\n');
    inner.push_str(&spec.instruction_doc.text());
    match spec.extra_template.as_deref() {
        Some(t) if !t.is_empty() => t.replace(PROMPT_PLACEHOLDER, &inner),
        _ => inner,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> InstructionDoc {
        InstructionDoc {
            problem_id: "p".into(),
            lines: vec!["Define a function called __main__ getting as parameters var0 as integer and returns integer.".into(), "Return var0.".into()],
            construct_index: Default::default(),
        }
    }

    #[test]
    fn default_prompt_shape() {
        let p = build_prompt(&PromptSpec::new("Python", doc()));
        assert!(p.starts_with("Implement the following pseudocode in Python.\n"));
        assert!(p.contains("Wrap the code in triple back-quotes.\n"));
        assert!(p.contains("with Python list operations\n"));
        assert!(!p.contains(LANGUAGE_PLACEHOLDER));
        assert!(p.ends_with(".\n\nDefine a function called __main__ getting as parameters var0 as integer and returns integer.\nReturn var0.\n"));
    }

    #[test]
    fn single_line_override() {
        let mut spec = PromptSpec::new("Python", doc());
        spec.generic_instructions.truncate(1);
        let p = build_prompt(&spec);
        let parts: Vec<&str> = p.splitn(2, "\n\n").collect();
        assert_eq!(parts[0], "Implement the following pseudocode in Python.");
        assert_eq!(parts[1], doc().text());
    }

    #[test]
    fn wrapper_keeps_inner_text() {
        let mut spec = PromptSpec::new("Python", doc());
        let plain = build_prompt(&spec);
        spec.extra_template = Some(String::new());
        assert_eq!(build_prompt(&spec), plain);
        spec.extra_template = Some("<s>[INST] {PROMPT} [/INST]".into());
        let wrapped = build_prompt(&spec);
        assert_eq!(wrapped, format!("<s>[INST] {plain} [/INST]"));
    }
}
