//! Automated failure classification.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::labels::ErrorLabel;
use super::normalize::{self, NormLine};
use crate::codegen::SourceText;
use crate::problem::Problem;
use crate::runner::{DiagKind, ProblemReport, TestOutcome};
use crate::stats::ConstructStats;
use crate::uast::{interpret_with, IntDivision, Limits, NodeId, Program, StmtKind};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub detector_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_id: Option<NodeId>,
    /// Line in the solution, when the evidence points at one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    pub note: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Author {
    Auto,
    Human,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub problem_id: String,
    pub model_id: String,
    pub run_id: String,
    pub labels: BTreeSet<ErrorLabel>,
    pub evidence: Vec<Evidence>,
    pub author: Author,
}

impl Annotation {
    pub fn human(problem_id: &str, model_id: &str, run_id: &str, labels: &[ErrorLabel], note: &str) -> Self {
        Annotation {
            problem_id: problem_id.into(),
            model_id: model_id.into(),
            run_id: run_id.into(),
            labels: labels.iter().copied().collect(),
            evidence: vec![Evidence {
                detector_id: "human".into(),
                node_id: None,
                line: None,
                note: note.into(),
            }],
            author: Author::Human,
        }
    }
}

/// Everything known about one failed problem.
pub struct FailureContext<'a> {
    pub run_id: &'a str,
    pub model_id: &'a str,
    pub problem: &'a Problem,
    pub report: &'a ProblemReport,
    pub solution: &'a SourceText,
    pub ground_truth: &'a SourceText,
    pub stats: &'a ConstructStats,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum NodeKind {
    While,
    Continue,
    Other,
}

fn node_kinds(program: &Program) -> BTreeMap<NodeId, NodeKind> {
    let mut kinds = BTreeMap::new();
    for f in &program.funcs {
        for s in f.statements() {
            let k = match s.kind {
                StmtKind::While { .. } => NodeKind::While,
                StmtKind::Continue => NodeKind::Continue,
                _ => NodeKind::Other,
            };
            kinds.insert(s.id, k);
        }
    }
    kinds
}

const CONVERSIONS: [&str; 2] = ["ord", "chr"];
const DIVISION_CALLS: [&str; 6] = ["_idiv", "_imod", "int", "math.trunc", "math.floor", "math.fmod"];

fn conversion_skeleton(s: &str) -> (String, usize) {
    let mut skel = s.to_string();
    let mut removed = 0;
    for c in CONVERSIONS {
        let next = normalize::remove_call(&skel, c, true);
        removed += skel.matches(&format!("{c}(")).count() - next.matches(&format!("{c}(")).count();
        skel = next;
    }
    (skel.chars().filter(|c| !matches!(c, '(' | ')')).collect(), removed)
}

fn division_skeleton(s: &str) -> String {
    let mut skel = s.to_string();
    for c in DIVISION_CALLS {
        skel = normalize::remove_call(&skel, c, true);
    }
    skel.chars().filter(|c| !matches!(c, '/' | '%' | ',' | '(' | ')')).collect()
}

fn helper_calls(s: &str) -> usize {
    s.matches("_idiv(").count() + s.matches("_imod(").count()
}

fn quoted_names(message: &str) -> Vec<&str> {
    message.split('\'').skip(1).step_by(2).collect()
}

fn is_type_mixing(kind: &str, message: &str) -> bool {
    kind == "TypeError"
        && (message.contains("'str' and 'int'")
            || message.contains("'int' and 'str'")
            || message.contains("ord()")
            || message.contains("chr()")
            || message.contains("can only concatenate str")
            || message.contains("must be str, not int")
            || message.contains("'str' object cannot be interpreted as an integer"))
}

fn is_float_misuse(kind: &str, message: &str) -> bool {
    kind == "TypeError" && (message.contains("not float") || message.contains("'float' object cannot be interpreted"))
}

fn is_split_misuse(kind: &str, message: &str) -> bool {
    kind == "AttributeError" && (message.contains("has no attribute 'split'") || message.contains("'str' object has no attribute"))
}

struct Work<'a, 'c> {
    ctx: &'a FailureContext<'c>,
    gt: Vec<NormLine>,
    sol: Vec<NormLine>,
    kinds: BTreeMap<NodeId, NodeKind>,
    /// Ground-truth line numbers already explained by a detector.
    claimed: BTreeSet<usize>,
    labels: BTreeSet<ErrorLabel>,
    evidence: Vec<Evidence>,
}

impl<'a, 'c> Work<'a, 'c> {
    fn add(&mut self, label: ErrorLabel, detector: &str, node: Option<NodeId>, line: Option<usize>, note: String) {
        self.labels.insert(label);
        self.evidence.push(Evidence {
            detector_id: detector.into(),
            node_id: node,
            line,
            note,
        });
    }

    fn node_of(&self, gt_line: usize) -> Option<NodeId> {
        self.ctx.ground_truth.line_map.get(&gt_line).copied()
    }

    fn kind_of(&self, gt_line: usize) -> NodeKind {
        self.node_of(gt_line)
            .and_then(|n| self.kinds.get(&n).copied())
            .unwrap_or(NodeKind::Other)
    }

    fn funcs(&self) -> Vec<Option<String>> {
        let mut seen = Vec::new();
        for l in &self.gt {
            if !seen.contains(&l.func) {
                seen.push(l.func.clone());
            }
        }
        seen
    }

    fn gt_in(&self, func: &Option<String>) -> Vec<&NormLine> {
        self.gt.iter().filter(|l| &l.func == func).collect()
    }

    /// Solution lines of the same function; all of them if the solution
    /// does not define it.
    fn sol_in(&self, func: &Option<String>) -> Vec<&NormLine> {
        let own: Vec<&NormLine> = self.sol.iter().filter(|l| &l.func == func).collect();
        if own.is_empty() && func.is_some() {
            self.sol.iter().collect()
        } else {
            own
        }
    }

    fn outcomes(&self) -> impl Iterator<Item = (usize, &TestOutcome)> {
        self.ctx.report.outcomes.iter().enumerate()
    }

    fn loop_updates(&mut self) {
        if self.ctx.report.inf_flag {
            let timeouts: Vec<(usize, f64)> = self
                .outcomes()
                .filter_map(|(i, o)| match o {
                    TestOutcome::Timeout { limit_s } => Some((i, *limit_s)),
                    _ => None,
                })
                .collect();
            for (i, limit) in timeouts {
                self.add(ErrorLabel::Loop, "loop-update", None, None, format!("test {i} exceeded {limit}s"));
            }
        }
        let mut found = Vec::new();
        for func in self.funcs() {
            let gt = self.gt_in(&func);
            let sol = self.sol_in(&func);
            let sol_texts: BTreeSet<&str> = sol.iter().map(|l| l.text.as_str()).collect();
            let mut pair_sites: BTreeMap<String, Vec<usize>> = BTreeMap::new();
            let mut end_sites: BTreeMap<String, Vec<usize>> = BTreeMap::new();
            let mut headers: BTreeMap<String, String> = BTreeMap::new();
            for (i, l) in gt.iter().enumerate() {
                match self.kind_of(l.number) {
                    NodeKind::Continue if l.text != "continue" => {
                        pair_sites.entry(l.text.clone()).or_default().push(l.number)
                    }
                    NodeKind::While if !l.text.starts_with("while") => {
                        end_sites.entry(l.text.clone()).or_default().push(l.number);
                        if let Some(h) = gt[..i].iter().rev().find(|h| h.text.starts_with("while") && h.indent < l.indent) {
                            headers.insert(l.text.clone(), h.text.clone());
                        }
                    }
                    _ => {}
                }
            }
            let count = |lines: &[&NormLine], text: &str| lines.iter().filter(|l| l.text == text).count();
            let pairs = |lines: &[&NormLine], text: &str| {
                lines.windows(2).filter(|w| w[0].text == text && w[1].text == "continue").count()
            };
            let updates: BTreeSet<String> = pair_sites.keys().chain(end_sites.keys()).cloned().collect();
            for u in updates {
                let gt_pairs = pair_sites.get(&u).map_or(0, Vec::len);
                let pair_def = gt_pairs.saturating_sub(pairs(&sol, &u));
                let total_def = count(&gt, &u).saturating_sub(count(&sol, &u));
                let end_def = total_def.saturating_sub(pair_def);
                let header_kept = headers.get(&u).is_none_or(|h| sol_texts.contains(h.as_str()));
                for &line in pair_sites.get(&u).into_iter().flatten().take(pair_def) {
                    found.push((line, format!("no `{u}` before continue")));
                }
                if header_kept {
                    for &line in end_sites.get(&u).into_iter().flatten().take(end_def) {
                        found.push((line, format!("loop update `{u}` missing")));
                    }
                }
            }
        }
        for (line, note) in found {
            let node = self.node_of(line);
            self.claimed.insert(line);
            self.add(ErrorLabel::Loop, "loop-update", node, None, note);
        }
    }

    fn globals(&mut self) {
        let globals: BTreeSet<&str> = self.ctx.problem.program.globals.iter().map(|g| g.name.as_str()).collect();
        if globals.is_empty() {
            return;
        }
        let hits: Vec<(usize, String)> = self
            .outcomes()
            .filter_map(|(i, o)| match o {
                TestOutcome::RuntimeError { kind, message, .. }
                    if kind == "UnboundLocalError" || kind == "NameError" =>
                {
                    quoted_names(message)
                        .into_iter()
                        .find(|n| globals.contains(n))
                        .map(|n| (i, format!("test {i}: {kind} on module-level {n}")))
                }
                _ => None,
            })
            .collect();
        for (_, note) in hits {
            self.add(ErrorLabel::Global, "unbound-global", None, None, note);
        }
        for func in self.funcs() {
            let decls: Vec<(usize, Vec<String>)> = self
                .gt_in(&func)
                .iter()
                .filter_map(|l| l.text.strip_prefix("global").map(|rest| (l.number, rest.split(',').map(|n| n.trim().to_string()).collect())))
                .collect();
            let sol = self.sol_in(&func);
            let declared: BTreeSet<String> = sol
                .iter()
                .filter_map(|l| l.text.strip_prefix("global"))
                .flat_map(|rest| rest.split(',').map(|n| n.trim().to_string()))
                .collect();
            let mut found = Vec::new();
            for (line, names) in decls {
                for name in names {
                    if declared.contains(&name) {
                        continue;
                    }
                    if let Some(assign) = sol.iter().find(|l| normalize::assignment_target(&l.text) == Some(name.as_str())) {
                        found.push((line, assign.number, name));
                    }
                }
            }
            for (line, sol_line, name) in found {
                let node = self.node_of(line);
                self.claimed.insert(line);
                self.add(
                    ErrorLabel::Global,
                    "unbound-global",
                    node,
                    Some(sol_line),
                    format!("{name} is assigned without a global declaration"),
                );
            }
        }
    }

    fn ascii(&mut self) {
        if self.ctx.stats.ascii_ops == 0 {
            return;
        }
        let runtime: Vec<String> = self
            .outcomes()
            .filter_map(|(i, o)| match o {
                TestOutcome::RuntimeError { kind, message, .. } if is_type_mixing(kind, message) => {
                    Some(format!("test {i}: {kind}: {message}"))
                }
                _ => None,
            })
            .collect();
        for note in runtime {
            self.add(ErrorLabel::Ascii, "ascii-conversion", None, None, note);
        }
        let mut found = Vec::new();
        for func in self.funcs() {
            let sol = self.sol_in(&func);
            for g in self.gt_in(&func) {
                let (skel, convs) = conversion_skeleton(&g.text);
                if convs == 0 || sol.iter().any(|s| s.text == g.text) {
                    continue;
                }
                if let Some(s) = sol.iter().find(|s| {
                    let (sk, n) = conversion_skeleton(&s.text);
                    sk == skel && n < convs
                }) {
                    found.push((g.number, s.number));
                }
            }
        }
        for (line, sol_line) in found {
            let node = self.node_of(line);
            self.claimed.insert(line);
            self.add(ErrorLabel::Ascii, "ascii-conversion", node, Some(sol_line), "ord()/chr() conversion missing".into());
        }
    }

    fn division(&mut self) {
        if self.ctx.stats.int_division_ops == 0 {
            return;
        }
        let program = &self.ctx.problem.program;
        let mut notes = Vec::new();
        for (i, o) in self.outcomes() {
            match o {
                TestOutcome::Fail { actual } => {
                    let Some(test) = self.ctx.problem.tests.get(i) else { continue };
                    for (sem, name) in [(IntDivision::Floor, "floor"), (IntDivision::True, "true")] {
                        if let Ok(v) = interpret_with(program, &test.inputs, Limits::default(), sem) {
                            if v.matches(actual, test.comparison) && !test.expected.matches(&v, test.comparison) {
                                notes.push(format!("test {i}: output equals {name} division result {v}"));
                                break;
                            }
                        }
                    }
                }
                TestOutcome::RuntimeError { kind, message, .. } if is_float_misuse(kind, message) => {
                    notes.push(format!("test {i}: {kind}: {message}"));
                }
                _ => {}
            }
        }
        for note in notes {
            self.add(ErrorLabel::Division, "division-semantics", None, None, note);
        }
        let mut found = Vec::new();
        for func in self.funcs() {
            let sol = self.sol_in(&func);
            for g in self.gt_in(&func) {
                let helpers = helper_calls(&g.text);
                if helpers == 0 || sol.iter().any(|s| s.text == g.text) {
                    continue;
                }
                let skel = division_skeleton(&g.text);
                if let Some(s) = sol
                    .iter()
                    .find(|s| helper_calls(&s.text) < helpers && division_skeleton(&s.text) == skel)
                {
                    found.push((g.number, s.number));
                }
            }
        }
        for (line, sol_line) in found {
            let node = self.node_of(line);
            self.claimed.insert(line);
            self.add(
                ErrorLabel::Division,
                "division-semantics",
                node,
                Some(sol_line),
                "integer division written with a non-truncating operator".into(),
            );
        }
    }

    fn split(&mut self) {
        if self.ctx.stats.string_split_ops == 0 {
            return;
        }
        let mut notes = Vec::new();
        for (i, o) in self.outcomes() {
            match o {
                TestOutcome::Fail { actual } => {
                    let Some(test) = self.ctx.problem.tests.get(i) else { continue };
                    let shapes = [test.expected.shape(), actual.shape()];
                    if shapes.contains(&"string") && shapes.contains(&"list") {
                        notes.push(format!("test {i}: expected a {} but got a {}", shapes[0], shapes[1]));
                    }
                }
                TestOutcome::RuntimeError { kind, message, .. } if is_split_misuse(kind, message) => {
                    notes.push(format!("test {i}: {kind}: {message}"));
                }
                _ => {}
            }
        }
        for note in notes {
            self.add(ErrorLabel::Split, "split-shape", None, None, note);
        }
        let mut found = Vec::new();
        for func in self.funcs() {
            let sol = self.sol_in(&func);
            for g in self.gt_in(&func) {
                if !g.text.contains(".split(") || sol.iter().any(|s| s.text == g.text) {
                    continue;
                }
                let skel = normalize::remove_call(&g.text, ".split", false);
                if let Some(s) = sol.iter().find(|s| normalize::remove_call(&s.text, ".split", false) == skel) {
                    found.push((g.number, s.number));
                }
            }
        }
        for (line, sol_line) in found {
            let node = self.node_of(line);
            self.claimed.insert(line);
            self.add(ErrorLabel::Split, "split-shape", node, Some(sol_line), "string split differs".into());
        }
    }

    fn line_diff(&mut self) {
        let mut found = Vec::new();
        for func in self.funcs() {
            let gt = self.gt_in(&func);
            let sol = self.sol_in(&func);
            let gt_texts: BTreeSet<&str> = gt.iter().map(|l| l.text.as_str()).collect();
            let mut available: BTreeMap<&str, usize> = BTreeMap::new();
            for s in &sol {
                *available.entry(s.text.as_str()).or_default() += 1;
            }
            for g in &gt {
                if let Some(n) = available.get_mut(g.text.as_str()).filter(|n| **n > 0) {
                    *n -= 1;
                    continue;
                }
                let kind = normalize::statement_kind(&g.text);
                if kind == "def" || self.claimed.contains(&g.number) || self.node_of(g.number).is_none() {
                    continue;
                }
                let g_tokens = sorted_tokens(&g.text);
                let counterpart = sol.iter().find(|s| {
                    !gt_texts.contains(s.text.as_str())
                        && normalize::statement_kind(&s.text) == kind
                        && (sorted_tokens(&s.text) == g_tokens
                            || (kind == "assign"
                                && normalize::assignment_target(&s.text) == normalize::assignment_target(&g.text))
                            || (kind != "assign" && jaccard(&s.text, &g.text) >= 0.5))
                });
                found.push((g.number, counterpart.map(|s| s.number), g.text.clone()));
            }
        }
        for (line, counterpart, text) in found {
            let node = self.node_of(line);
            match counterpart {
                Some(s) => self.add(ErrorLabel::Wrong, "line-diff-wrong", node, Some(s), format!("differs from `{text}`")),
                None => self.add(ErrorLabel::Ignored, "line-diff-ignored", node, None, format!("nothing implements `{text}`")),
            }
        }
    }
}

fn sorted_tokens(s: &str) -> Vec<String> {
    let mut t = normalize::tokens(s);
    t.sort();
    t
}

fn jaccard(a: &str, b: &str) -> f64 {
    let a: BTreeSet<String> = normalize::tokens(a).into_iter().collect();
    let b: BTreeSet<String> = normalize::tokens(b).into_iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Proposes labels for a failed problem. Returns `None` when the report
/// shows no failure.
pub fn classify_failure(ctx: &FailureContext<'_>) -> Option<Annotation> {
    let report = ctx.report;
    if report.whole && report.static_error.is_none() {
        return None;
    }
    let mut work = Work {
        ctx,
        gt: normalize::lines(&ctx.ground_truth.code),
        sol: normalize::lines(&ctx.solution.code),
        kinds: node_kinds(&ctx.problem.program),
        claimed: BTreeSet::new(),
        labels: BTreeSet::new(),
        evidence: Vec::new(),
    };
    if let Some(d) = &report.static_error {
        match d.kind {
            DiagKind::UnbalancedBracket => {
                work.add(ErrorLabel::Unbalanced, "static-bracket", None, Some(d.line), d.message.clone())
            }
            DiagKind::Indentation => work.add(ErrorLabel::Indent, "static-indent", None, Some(d.line), d.message.clone()),
            DiagKind::OtherSyntax => {}
        }
    } else {
        work.loop_updates();
        work.globals();
        work.ascii();
        work.division();
        work.split();
        work.line_diff();
    }
    if work.labels.is_empty() {
        let note = match (&report.static_error, &report.load_failure) {
            (Some(d), _) => format!("does not parse: {}", d.message),
            (None, Some(f)) => format!("could not load: {} {}", f.kind, f.message),
            _ => format!("{} of {} tests passed; no detector matched", report.m, report.n),
        };
        work.add(ErrorLabel::Other, "fallback", None, None, note);
    }
    Some(Annotation {
        problem_id: report.problem_id.clone(),
        model_id: ctx.model_id.to_string(),
        run_id: ctx.run_id.to_string(),
        labels: work.labels,
        evidence: work.evidence,
        author: Author::Auto,
    })
}
