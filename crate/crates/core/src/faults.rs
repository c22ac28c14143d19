//! Seeded faults in ground-truth code, used to measure how well the
//! failure classifier recovers the label of a known defect.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codegen::{emit_ground_truth, SourceText, PYTHON3};
use crate::debugdict::{classify_failure, ErrorLabel, FailureContext};
use crate::problem::Problem;
use crate::runner::{run_all, Runner};
use crate::stats::collect_stats;
use crate::uast::gen::{gen_problem, Construct, SizeProfile};
use crate::uast::{NodeId, Program, StmtKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultClass {
    Unbalanced,
    Indent,
    LoopUpdate,
    Division,
    Global,
    Ascii,
    Split,
}

impl FaultClass {
    pub const ALL: [FaultClass; 7] = [
        FaultClass::Unbalanced,
        FaultClass::Indent,
        FaultClass::LoopUpdate,
        FaultClass::Division,
        FaultClass::Global,
        FaultClass::Ascii,
        FaultClass::Split,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FaultClass::Unbalanced => "unbalanced",
            FaultClass::Indent => "indent",
            FaultClass::LoopUpdate => "loop-update",
            FaultClass::Division => "division",
            FaultClass::Global => "global",
            FaultClass::Ascii => "ascii",
            FaultClass::Split => "split",
        }
    }

    /// The label a correct classifier should report.
    pub fn label(self) -> ErrorLabel {
        match self {
            FaultClass::Unbalanced => ErrorLabel::Unbalanced,
            FaultClass::Indent => ErrorLabel::Indent,
            FaultClass::LoopUpdate => ErrorLabel::Loop,
            FaultClass::Division => ErrorLabel::Division,
            FaultClass::Global => ErrorLabel::Global,
            FaultClass::Ascii => ErrorLabel::Ascii,
            FaultClass::Split => ErrorLabel::Split,
        }
    }
}

/// Constructs that give `class` plenty of injection sites.
pub fn focus_profile(class: FaultClass) -> SizeProfile {
    use Construct::*;
    let constructs: &[Construct] = match class {
        FaultClass::Unbalanced | FaultClass::Indent | FaultClass::LoopUpdate => &[If, IfElse, While, Continue, Lists],
        FaultClass::Division => &[Division, While, If, Continue, Calls],
        FaultClass::Global => &[Globals, Calls, If, While],
        FaultClass::Ascii => &[Strings, Ascii, ForEach, IfElse, Lists],
        FaultClass::Split => &[Strings, Split, ForEach, Lists, IfElse],
    };
    SizeProfile::only(12, 2, constructs)
}

/// The bundled problems plus `extra` generated ones aimed at `class`.
pub fn injection_pool(class: FaultClass, extra: usize) -> Vec<Problem> {
    let mut pool = crate::fixtures::bundled();
    let profile = focus_profile(class);
    let base = 7000 + 1000 * FaultClass::ALL.iter().position(|c| *c == class).unwrap_or(0) as u64;
    pool.extend(
        (0..extra).filter_map(|i| gen_problem(&format!("{}-{i:03}", class.name()), base + i as u64, &profile, 10)),
    );
    pool
}

#[derive(Clone, Debug, PartialEq)]
pub struct InjectedFault {
    pub class: FaultClass,
    /// 1-based line of the ground truth that was changed.
    pub line: usize,
    pub description: String,
    pub solution: SourceText,
}

fn indent_of(line: &str) -> usize {
    line.len() - line.trim_start().len()
}

/// Byte index of the `)` closing the `(` at `open`.
fn matching_paren(s: &str, open: usize) -> Option<usize> {
    let mut depth = 0;
    let mut quote: Option<char> = None;
    for (i, c) in s[open..].char_indices() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None => match c {
                '"' | '\'' => quote = Some(c),
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(open + i);
                    }
                }
                _ => {}
            },
        }
    }
    None
}

/// Splits call arguments at top-level commas.
fn split_args(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    let mut quote: Option<char> = None;
    for (i, c) in s.char_indices() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None => match c {
                '"' | '\'' => quote = Some(c),
                '(' | '[' | '{' => depth += 1,
                ')' | ']' | '}' => depth -= 1,
                ',' if depth == 0 => {
                    out.push(s[start..i].trim());
                    start = i + 1;
                }
                _ => {}
            },
        }
    }
    out.push(s[start..].trim());
    out
}

/// Index of the first `name(` call not preceded by an identifier character.
fn find_call(line: &str, name: &str) -> Option<usize> {
    let pat = format!("{name}(");
    let mut from = 0;
    while let Some(p) = line[from..].find(&pat) {
        let at = from + p;
        let prev = line[..at].chars().next_back();
        if !prev.is_some_and(|c| c.is_alphanumeric() || c == '_' || c == '.') {
            return Some(at);
        }
        from = at + pat.len();
    }
    None
}

/// Last `)` outside string literals.
fn last_close_paren(line: &str) -> Option<usize> {
    let mut quote: Option<char> = None;
    let mut last = None;
    for (i, c) in line.char_indices() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None if c == '"' || c == '\'' => quote = Some(c),
            None if c == ')' => last = Some(i),
            None => {}
        }
    }
    last
}

fn node_kinds(program: &Program) -> BTreeMap<NodeId, &'static str> {
    let mut kinds = BTreeMap::new();
    for f in &program.funcs {
        for s in f.statements() {
            let k = match s.kind {
                StmtKind::While { .. } => "while",
                StmtKind::Continue => "continue",
                _ => "other",
            };
            kinds.insert(s.id, k);
        }
    }
    kinds
}

fn with_line(gt: &SourceText, number: usize, replacement: Option<String>) -> SourceText {
    let mut lines: Vec<String> = gt.code.lines().map(str::to_string).collect();
    match replacement {
        Some(r) => lines[number - 1] = r,
        None => {
            lines.remove(number - 1);
        }
    }
    let mut code = lines.join("\n");
    code.push('\n');
    SourceText::new(code, gt.entry_name.clone(), gt.profile_id.clone())
}

/// Every single-site fault of `class` on the program's own lines of `gt`.
pub fn inject_all(gt: &SourceText, program: &Program, class: FaultClass) -> Vec<InjectedFault> {
    let kinds = node_kinds(program);
    let lines: Vec<&str> = gt.code.lines().collect();
    let mut out = Vec::new();
    for (i, &line) in lines.iter().enumerate() {
        let number = i + 1;
        if !gt.line_map.contains_key(&number) {
            continue;
        }
        let trimmed = line.trim();
        let pad = " ".repeat(indent_of(line));
        let fault = |desc: String, replacement: Option<String>| InjectedFault {
            class,
            line: number,
            description: desc,
            solution: with_line(gt, number, replacement),
        };
        match class {
            FaultClass::Unbalanced => {
                if let Some(p) = last_close_paren(line) {
                    let mut s = line.to_string();
                    s.remove(p);
                    out.push(fault("dropped a closing parenthesis".into(), Some(s)));
                }
            }
            FaultClass::Indent => {
                if trimmed.is_empty() || indent_of(line) == 0 {
                    continue;
                }
                let prev = lines[..i].iter().rev().find(|l| !l.trim().is_empty());
                let opens_block = prev.is_some_and(|p| p.trim_end().ends_with(':'));
                let s = if opens_block {
                    format!("{}{trimmed}", " ".repeat(indent_of(line).saturating_sub(4)))
                } else {
                    format!(" {line}")
                };
                out.push(fault("shifted the indentation of a line".into(), Some(s)));
            }
            FaultClass::LoopUpdate => {
                let kind = gt.line_map.get(&number).and_then(|n| kinds.get(n)).copied();
                let is_update = match kind {
                    Some("while") => !trimmed.starts_with("while"),
                    Some("continue") => trimmed != "continue",
                    _ => false,
                };
                if is_update {
                    out.push(fault(format!("removed `{trimmed}`"), Some(format!("{pad}pass"))));
                }
            }
            FaultClass::Division => {
                for (helper, ops) in [("_idiv", &["//", "/"][..]), ("_imod", &["%"][..])] {
                    let Some(at) = find_call(line, helper) else { continue };
                    let open = at + helper.len();
                    let Some(close) = matching_paren(line, open) else { continue };
                    let args = split_args(&line[open + 1..close]);
                    if args.len() != 2 {
                        continue;
                    }
                    for op in ops {
                        let s = format!("{}({}) {op} ({}){}", &line[..at], args[0], args[1], &line[close + 1..]);
                        out.push(fault(format!("replaced {helper} with `{op}`"), Some(s)));
                    }
                    break;
                }
            }
            FaultClass::Global => {
                if trimmed.starts_with("global ") {
                    out.push(fault(format!("removed `{trimmed}`"), Some(format!("{pad}pass"))));
                }
            }
            FaultClass::Ascii => {
                for conv in ["ord", "chr"] {
                    let Some(at) = find_call(line, conv) else { continue };
                    let open = at + conv.len();
                    let Some(close) = matching_paren(line, open) else { continue };
                    let inner = &line[open + 1..close];
                    let simple = inner.chars().all(|c| c.is_alphanumeric() || "_[]".contains(c));
                    let inner = if simple { inner.to_string() } else { format!("({inner})") };
                    let s = format!("{}{inner}{}", &line[..at], &line[close + 1..]);
                    out.push(fault(format!("removed a {conv}() conversion"), Some(s)));
                    break;
                }
            }
            FaultClass::Split => {
                if line.contains(".split()") {
                    out.push(fault("dropped the split call".into(), Some(line.replacen(".split()", "", 1))));
                    out.push(fault("split on a single space".into(), Some(line.replacen(".split()", ".split(\" \")", 1))));
                }
            }
        }
    }
    out
}

/// Detection results for one fault class.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InjectionSummary {
    pub attempted: usize,
    /// Mutants that still passed every test and so cannot be classified.
    pub equivalent: usize,
    pub effective: usize,
    pub detected: usize,
    /// Detections whose label is backed by at least one evidence item.
    pub with_evidence: usize,
    pub misses: Vec<String>,
}

impl InjectionSummary {
    pub fn rate(&self) -> f64 {
        if self.effective == 0 {
            0.0
        } else {
            self.detected as f64 / self.effective as f64
        }
    }
}

/// Injects every fault of `class` into the ground truth of `problems` (at
/// most `per_problem` each, `limit` overall), runs the mutants and
/// classifies the failures.
pub fn evaluate(
    problems: &[Problem],
    class: FaultClass,
    runner: &Runner,
    workers: usize,
    per_problem: usize,
    limit: usize,
) -> InjectionSummary {
    let mut jobs = Vec::new();
    let mut meta = Vec::new();
    for p in problems {
        let Ok(gt) = emit_ground_truth(&p.program, &PYTHON3) else { continue };
        for f in inject_all(&gt, &p.program, class).into_iter().take(per_problem) {
            if jobs.len() >= limit {
                break;
            }
            let id = format!("{}@{}", p.id, jobs.len());
            jobs.push((id, f.solution.clone(), p.tests.clone()));
            meta.push((p, gt.clone(), f));
        }
    }
    let reports = run_all(runner, &jobs, workers);
    let mut summary = InjectionSummary {
        attempted: jobs.len(),
        ..Default::default()
    };
    let label = class.label();
    for ((report, (p, gt, fault)), (id, _, _)) in reports.into_iter().zip(meta).zip(&jobs) {
        let report = match report {
            Ok(r) => r,
            Err(e) => {
                summary.effective += 1;
                summary.misses.push(format!("{id}: sandbox error {e}"));
                continue;
            }
        };
        let stats = collect_stats(&p.id, &p.program);
        let ctx = FailureContext {
            run_id: "inject",
            model_id: "ground-truth-mutant",
            problem: p,
            report: &report,
            solution: &fault.solution,
            ground_truth: &gt,
            stats: &stats,
        };
        let Some(annotation) = classify_failure(&ctx) else {
            summary.equivalent += 1;
            continue;
        };
        summary.effective += 1;
        if annotation.labels.contains(&label) {
            summary.detected += 1;
            let detector = crate::debugdict::DebugDictionary::builtin().entry(label).detector.clone();
            if annotation.evidence.iter().any(|e| Some(&e.detector_id) == detector.as_ref()) {
                summary.with_evidence += 1;
            }
        } else {
            let labels: Vec<&str> = annotation.labels.iter().map(|l| l.name()).collect();
            summary.misses.push(format!(
                "{id} line {}: {} -> [{}]",
                fault.line,
                fault.description,
                labels.join(", ")
            ));
        }
    }
    summary
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::scan_python;

    #[test]
    fn static_faults_always_break_parsing() {
        for p in crate::fixtures::hand_built() {
            let gt = emit_ground_truth(&p.program, &PYTHON3).unwrap();
            for class in [FaultClass::Unbalanced, FaultClass::Indent] {
                for f in inject_all(&gt, &p.program, class) {
                    assert!(scan_python(&f.solution.code).is_some(), "{} {:?}:\n{}", p.id, class, f.solution.code);
                }
            }
        }
    }

    #[test]
    fn division_rewrite() {
        let mut gt = SourceText::new("x = _idiv(a + 1, f(b, c)) * 2\n", "__main__", "python3");
        gt.line_map.insert(1, NodeId(3));
        let program = Program::new(vec![], vec![], "__main__");
        let f = &inject_all(&gt, &program, FaultClass::Division)[0];
        assert_eq!(f.solution.code, "x = (a + 1) // (f(b, c)) * 2\n");
    }
}
