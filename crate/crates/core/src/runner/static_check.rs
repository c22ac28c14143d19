//! Parse checks for Python candidates.
//!
//! A small tokenizer finds bracket and indentation faults and names them
//! precisely; `python3`'s own compiler then catches everything else.

use std::path::Path;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::codegen::SourceText;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagKind {
    UnbalancedBracket,
    Indentation,
    OtherSyntax,
}

impl DiagKind {
    pub fn name(self) -> &'static str {
        match self {
            DiagKind::UnbalancedBracket => "unbalanced-bracket",
            DiagKind::Indentation => "indentation",
            DiagKind::OtherSyntax => "other-syntax",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub kind: DiagKind,
    /// 1-based; 0 when the compiler gave no line.
    pub line: usize,
    pub message: String,
}

impl ParseDiagnostic {
    fn new(kind: DiagKind, line: usize, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            kind,
            line,
            message: message.into(),
        }
    }
}

fn closer(open: char) -> char {
    match open {
        '(' => ')',
        '[' => ']',
        _ => '}',
    }
}

fn bracket_word(c: char) -> &'static str {
    match c {
        '(' | ')' => "parenthesis",
        '[' | ']' => "bracket",
        _ => "brace",
    }
}

/// Indentation width with tabs advancing to the next multiple of 8.
fn indent_width(line: &str) -> usize {
    let mut w = 0;
    for c in line.chars() {
        match c {
            ' ' => w += 1,
            '\t' => w = (w / 8 + 1) * 8,
            '\x0c' => w = 0,
            _ => break,
        }
    }
    w
}

/// Tokenizer-level check for bracket balance and block indentation.
pub fn scan_python(code: &str) -> Option<ParseDiagnostic> {
    let chars: Vec<char> = code.chars().collect();
    let mut stack: Vec<(char, usize)> = Vec::new();
    let mut indents = vec![0usize];
    let mut expect_indent: Option<usize> = None;
    let mut line = 1usize;
    let mut at_line_start = true;
    let mut continuation = false;
    let mut last_significant: Option<char> = None;
    let mut i = 0;

    while i < chars.len() {
        if at_line_start {
            at_line_start = false;
            let rest: String = chars[i..].iter().take_while(|c| **c != '\n').collect();
            let trimmed = rest.trim_start();
            let logical_start = stack.is_empty() && !continuation;
            if logical_start && !trimmed.is_empty() && !trimmed.starts_with('#') {
                let width = indent_width(&rest);
                let top = *indents.last().unwrap();
                if let Some(opener) = expect_indent.take() {
                    if width <= top {
                        return Some(ParseDiagnostic::new(
                            DiagKind::Indentation,
                            line,
                            format!("expected an indented block after line {opener}"),
                        ));
                    }
                    indents.push(width);
                } else if width > top {
                    return Some(ParseDiagnostic::new(DiagKind::Indentation, line, "unexpected indent"));
                } else if width < top {
                    while *indents.last().unwrap() > width {
                        indents.pop();
                    }
                    if *indents.last().unwrap() != width {
                        return Some(ParseDiagnostic::new(
                            DiagKind::Indentation,
                            line,
                            "unindent does not match any outer indentation level",
                        ));
                    }
                }
            }
            continuation = false;
        }
        let c = chars[i];
        match c {
            '\n' => {
                if stack.is_empty() && !continuation && last_significant == Some(':') {
                    expect_indent = Some(line);
                }
                if stack.is_empty() && !continuation {
                    last_significant = None;
                }
                line += 1;
                at_line_start = true;
                i += 1;
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '\\' if chars.get(i + 1) == Some(&'\n') => {
                continuation = true;
                line += 1;
                at_line_start = true;
                i += 2;
                continue;
            }
            '"' | '\'' => {
                let mut p = i;
                let mut raw = false;
                while p > 0 && chars[p - 1].is_ascii_alphabetic() {
                    p -= 1;
                    if matches!(chars[p], 'r' | 'R') {
                        raw = true;
                    }
                }
                let triple = chars.get(i + 1) == Some(&c) && chars.get(i + 2) == Some(&c);
                let start_line = line;
                i += if triple { 3 } else { 1 };
                let mut closed = false;
                while i < chars.len() {
                    let d = chars[i];
                    if d == '\\' && !raw {
                        if chars.get(i + 1) == Some(&'\n') {
                            line += 1;
                        }
                        i += 2;
                        continue;
                    }
                    if d == '\\' && raw {
                        i += 2.min(chars.len() - i);
                        continue;
                    }
                    if d == '\n' {
                        if !triple {
                            return Some(ParseDiagnostic::new(
                                DiagKind::OtherSyntax,
                                start_line,
                                "unterminated string literal",
                            ));
                        }
                        line += 1;
                    }
                    if d == c && (!triple || (chars.get(i + 1) == Some(&c) && chars.get(i + 2) == Some(&c))) {
                        i += if triple { 3 } else { 1 };
                        closed = true;
                        break;
                    }
                    i += 1;
                }
                if !closed {
                    return Some(ParseDiagnostic::new(
                        DiagKind::OtherSyntax,
                        start_line,
                        "unterminated string literal",
                    ));
                }
                last_significant = Some(c);
                continue;
            }
            '(' | '[' | '{' => stack.push((c, line)),
            ')' | ']' | '}' => match stack.pop() {
                None => {
                    return Some(ParseDiagnostic::new(
                        DiagKind::UnbalancedBracket,
                        line,
                        format!("unmatched '{c}'"),
                    ))
                }
                Some((open, open_line)) if closer(open) != c => {
                    return Some(ParseDiagnostic::new(
                        DiagKind::UnbalancedBracket,
                        line,
                        format!(
                            "closing {} '{c}' does not match opening {} '{open}' on line {open_line}",
                            bracket_word(c),
                            bracket_word(open)
                        ),
                    ))
                }
                Some(_) => {}
            },
            _ => {}
        }
        if !c.is_whitespace() {
            last_significant = Some(c);
        }
        i += 1;
    }
    if let Some((open, open_line)) = stack.first() {
        return Some(ParseDiagnostic::new(
            DiagKind::UnbalancedBracket,
            *open_line,
            format!("'{open}' was never closed"),
        ));
    }
    if last_significant == Some(':') || expect_indent.is_some() {
        return Some(ParseDiagnostic::new(
            DiagKind::Indentation,
            line,
            "expected an indented block at end of file",
        ));
    }
    None
}

const COMPILE_SCRIPT: &str = r#"
import json, sys
src = open(sys.argv[1], encoding="utf-8").read()
try:
    compile(src, "solution.py", "exec")
    print(json.dumps({"ok": True}))
except SyntaxError as e:
    print(json.dumps({"ok": False, "kind": type(e).__name__, "line": e.lineno or 0, "msg": e.msg}))
"#;

fn classify_compiler(kind: &str, msg: &str) -> DiagKind {
    let lower = msg.to_ascii_lowercase();
    if kind == "IndentationError" || kind == "TabError" {
        DiagKind::Indentation
    } else if lower.contains("never closed") || lower.contains("unmatched") || lower.contains("does not match") {
        DiagKind::UnbalancedBracket
    } else {
        DiagKind::OtherSyntax
    }
}

/// Runs `python` to compile `code`. `Ok(None)` means it parses; `Err` means
/// the interpreter could not be run at all.
pub fn python_compile(python: &Path, code: &str) -> std::io::Result<Option<ParseDiagnostic>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("solution.py");
    std::fs::write(&path, code)?;
    let out = Command::new(python)
        .args(["-I", "-B", "-X", "utf8", "-c", COMPILE_SCRIPT])
        .arg(&path)
        .stdin(Stdio::null())
        .stderr(Stdio::piped())
        .output()?;
    let text = String::from_utf8_lossy(&out.stdout);
    let v: serde_json::Value = serde_json::from_str(text.trim()).map_err(|e| {
        std::io::Error::other(format!(
            "compile check produced no verdict ({e}): {}",
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    })?;
    if v["ok"].as_bool() == Some(true) {
        return Ok(None);
    }
    let kind = v["kind"].as_str().unwrap_or("SyntaxError");
    let msg = v["msg"].as_str().unwrap_or("invalid syntax");
    Ok(Some(ParseDiagnostic::new(
        classify_compiler(kind, msg),
        v["line"].as_u64().unwrap_or(0) as usize,
        format!("{kind}: {msg}"),
    )))
}

/// Checks that the candidate parses. The tokenizer verdict wins when it
/// finds something; otherwise the compiler decides. If `python` is `None`
/// or cannot be launched only the tokenizer runs.
pub fn static_check_with(solution: &SourceText, python: Option<&Path>) -> Result<(), ParseDiagnostic> {
    if let Some(d) = scan_python(&solution.code) {
        return Err(d);
    }
    if let Some(py) = python {
        match python_compile(py, &solution.code) {
            Ok(Some(d)) => return Err(d),
            Ok(None) => {}
            Err(e) => log::warn!("compile check skipped: {e}"),
        }
    }
    Ok(())
}

pub fn static_check(solution: &SourceText) -> Result<(), ParseDiagnostic> {
    static_check_with(solution, Some(Path::new("python3")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(code: &str) -> Option<DiagKind> {
        scan_python(code).map(|d| d.kind)
    }

    #[test]
    fn balanced_code_passes() {
        let code = "def f(a):\n    x = [1, (2 + 3)]  # )\n    s = \"(\" + ')'\n    if a:\n        return {'k': x}\n    return \"\"\"\n)\"\"\"\n";
        assert_eq!(scan_python(code), None);
    }

    #[test]
    fn unclosed_paren() {
        let d = scan_python("def f(a):\n    return (a + 1\n").unwrap();
        assert_eq!(d.kind, DiagKind::UnbalancedBracket);
        assert_eq!(d.line, 2);
        assert_eq!(kind("x = a + 1)\n"), Some(DiagKind::UnbalancedBracket));
        assert_eq!(kind("x = [a + 1)\n"), Some(DiagKind::UnbalancedBracket));
    }

    #[test]
    fn indentation_faults() {
        assert_eq!(kind("def f():\nreturn 1\n"), Some(DiagKind::Indentation));
        assert_eq!(kind("def f():\n    x = 1\n        return x\n"), Some(DiagKind::Indentation));
        assert_eq!(kind("def f():\n    if x:\n        y = 1\n      z = 2\n"), Some(DiagKind::Indentation));
        assert_eq!(kind("def f():\n    x = (1,\n  2)\n    return x\n"), None);
    }

    #[test]
    fn strings_and_continuations() {
        assert_eq!(kind("x = 'abc\n"), Some(DiagKind::OtherSyntax));
        assert_eq!(kind("x = 1 + \\\n  2\ny = r'\\d'\n"), None);
    }
}
