use std::collections::HashSet;

use serde::Serialize;

use super::ast::*;
use super::typeck::{self, FuncScope};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub node: NodeId,
    pub rule: String,
    pub message: String,
    pub severity: Severity,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}] node {}: {}", self.rule, self.node, self.message)
    }
}

/// Names the emitted Python relies on, plus Python keywords.
const RESERVED: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
    "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global",
    "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return",
    "try", "while", "with", "yield", "abs", "chr", "dict", "float", "input", "int", "len",
    "list", "math", "max", "min", "ord", "print", "range", "set", "sorted", "str", "_idiv",
    "_imod", "_",
];

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn follows_convention(name: &str, prefix: &str) -> bool {
    name.strip_prefix(prefix)
        .is_some_and(|digits| !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()))
}

/// Variable references that resolve to nothing, with the citing node.
pub fn unresolved_vars(program: &Program) -> Vec<(String, NodeId)> {
    program
        .funcs
        .iter()
        .flat_map(|f| unresolved_vars_in(program, f))
        .collect()
}

fn unresolved_vars_in(program: &Program, func: &FuncDef) -> Vec<(String, NodeId)> {
    let mut out = Vec::new();
    let scope = FuncScope::new(program, func);
    for stmt in func.statements() {
        let named = match &stmt.kind {
            StmtKind::ForEach { var, .. } => Some(var.as_str()),
            StmtKind::While { step, .. } => step.var(),
            _ => None,
        };
        if let Some(name) = named {
            if scope.lookup(name).is_none() {
                out.push((name.to_string(), stmt.id));
            }
        }
        for e in stmt.exprs() {
            e.walk(&mut |x| {
                if let ExprKind::Var(name) = &x.kind {
                    if scope.lookup(name).is_none() {
                        out.push((name.clone(), x.id));
                    }
                }
            });
        }
    }
    out
}

struct Checker<'p> {
    program: &'p Program,
    out: Vec<Violation>,
}

impl<'p> Checker<'p> {
    fn push(&mut self, node: NodeId, rule: &str, message: impl Into<String>, severity: Severity) {
        self.out.push(Violation {
            node,
            rule: rule.to_string(),
            message: message.into(),
            severity,
        });
    }

    fn error(&mut self, node: NodeId, rule: &str, message: impl Into<String>) {
        self.push(node, rule, message, Severity::Error);
    }

    fn type_error(&mut self, e: typeck::TypeError) {
        self.error(e.node, e.rule, e.message);
    }

    fn name(&mut self, node: NodeId, name: &str) {
        if !is_identifier(name) || RESERVED.contains(&name) {
            self.error(node, "reserved-name", format!("{name:?} cannot be used as a name"));
        }
    }

    /// Type of a value expression; reports void calls and type errors.
    fn value(&mut self, scope: &FuncScope<'p>, e: &Expr) -> Option<TypeTag> {
        match typeck::type_of(scope, e) {
            Ok(Some(t)) => Some(t),
            Ok(None) => {
                self.error(e.id, "void-in-expression", "call produces no value");
                None
            }
            Err(err) => {
                self.type_error(err);
                None
            }
        }
    }

    fn condition(&mut self, scope: &FuncScope<'p>, e: &Expr) {
        if let Some(t) = self.value(scope, e) {
            if t != TypeTag::Bool {
                self.error(e.id, "type-mismatch", format!("condition has type {t}, expected bool"));
            }
        }
    }

    fn nested_initializers(&mut self, e: &Expr, allowed_at_root: bool) {
        let mut first = true;
        e.walk(&mut |x| {
            let root = std::mem::take(&mut first);
            if x.as_builtin_call(Builtin::ArrayInitializer).is_some() && !(root && allowed_at_root) {
                self.out.push(Violation {
                    node: x.id,
                    rule: "initializer-context".into(),
                    message: "array_initializer may only be the value of an assignment".into(),
                    severity: Severity::Error,
                });
            }
        });
    }

    fn block(&mut self, scope: &FuncScope<'p>, block: &[Stmt], loop_depth: usize) {
        for stmt in block {
            self.stmt(scope, stmt, loop_depth);
        }
    }

    fn stmt(&mut self, scope: &FuncScope<'p>, stmt: &Stmt, loop_depth: usize) {
        let func = scope.func();
        match &stmt.kind {
            StmtKind::Declare(bindings) => {
                for b in bindings {
                    self.name(stmt.id, &b.name);
                }
            }
            StmtKind::Assign { target, value } => {
                self.nested_initializers(target, false);
                self.nested_initializers(value, true);
                let target_ty = match typeck::lvalue_type(scope, target) {
                    Ok(t) => t,
                    Err(e) => return self.type_error(e),
                };
                if let Some(dims) = value.as_builtin_call(Builtin::ArrayInitializer) {
                    let fits = match &target_ty {
                        TypeTag::List(_) => dims.len() <= target_ty.list_depth(),
                        TypeTag::Map(..) | TypeTag::Set(_) => dims.is_empty(),
                        _ => false,
                    };
                    if !fits {
                        self.error(
                            value.id,
                            "type-mismatch",
                            format!("cannot initialize {target_ty} with {} dimensions", dims.len()),
                        );
                    }
                    for d in dims {
                        if let Some(t) = self.value(scope, d) {
                            if !t.is_integral() {
                                self.error(d.id, "type-mismatch", format!("dimension has type {t}"));
                            }
                        }
                    }
                } else if let Some(t) = self.value(scope, value) {
                    if !typeck::assignable(&t, &target_ty) {
                        self.error(stmt.id, "type-mismatch", format!("cannot assign {t} to {target_ty}"));
                    }
                }
            }
            StmtKind::If {
                cond,
                then,
                otherwise,
            } => {
                self.nested_initializers(cond, false);
                self.condition(scope, cond);
                self.block(scope, then, loop_depth);
                if let Some(o) = otherwise {
                    self.block(scope, o, loop_depth);
                }
            }
            StmtKind::While { cond, body, step } => {
                self.nested_initializers(cond, false);
                self.condition(scope, cond);
                if let Some(v) = step.var() {
                    match scope.lookup(v) {
                        Some(TypeTag::Int) => {}
                        Some(t) => self.error(stmt.id, "step-var", format!("step variable {v} has type {t}")),
                        None => self.error(stmt.id, "unresolved-var", format!("unresolved variable {v}")),
                    }
                }
                self.block(scope, body, loop_depth + 1);
            }
            StmtKind::ForEach {
                var,
                iterable,
                body,
            } => {
                self.nested_initializers(iterable, false);
                if let Some(t) = self.value(scope, iterable) {
                    match (typeck::iteration_element(&t), scope.lookup(var)) {
                        (None, _) => self.error(iterable.id, "type-mismatch", format!("cannot iterate over {t}")),
                        (_, None) => self.error(stmt.id, "unresolved-var", format!("unresolved variable {var}")),
                        (Some(elem), Some(declared)) if elem != *declared => self.error(
                            stmt.id,
                            "type-mismatch",
                            format!("loop variable {var} is {declared} but elements are {elem}"),
                        ),
                        _ => {}
                    }
                }
                self.block(scope, body, loop_depth + 1);
            }
            StmtKind::Continue if loop_depth == 0 => {
                self.error(stmt.id, "continue-outside-loop", "continue outside of a loop")
            }
            StmtKind::Break if loop_depth == 0 => {
                self.error(stmt.id, "break-outside-loop", "break outside of a loop")
            }
            StmtKind::Continue | StmtKind::Break => {}
            StmtKind::Return(value) => {
                if let Some(e) = value {
                    self.nested_initializers(e, false);
                    if let Some(t) = self.value(scope, e) {
                        if !typeck::assignable(&t, &func.return_type) {
                            self.error(
                                stmt.id,
                                "type-mismatch",
                                format!("{} returns {}, got {t}", func.name, func.return_type),
                            );
                        }
                    }
                }
            }
            StmtKind::ExprStmt(e) => {
                self.nested_initializers(e, false);
                if !matches!(e.kind, ExprKind::Call { .. }) {
                    self.error(e.id, "expr-stmt-not-call", "expression statements must be calls");
                } else if let Err(err) = typeck::type_of(scope, e) {
                    self.type_error(err);
                }
            }
        }
    }

    fn run(mut self) -> Vec<Violation> {
        let program = self.program;
        let func_names: HashSet<&str> = program.funcs.iter().map(|f| f.name.as_str()).collect();
        if program.entry_func().is_none() {
            self.error(NodeId(0), "missing-entry", format!("entry function {} is not defined", program.entry));
        }

        let mut seen = HashSet::new();
        for g in &program.globals {
            self.name(g.id, &g.name);
            if !seen.insert(g.name.as_str()) {
                self.error(g.id, "duplicate-global", format!("global {} declared twice", g.name));
            }
            if func_names.contains(g.name.as_str()) {
                self.error(g.id, "name-clash", format!("global {} has a function's name", g.name));
            }
            if !follows_convention(&g.name, "var") {
                self.push(g.id, "naming-convention", format!("global {} is not named varN", g.name), Severity::Warning);
            }
            if let Some(init) = &g.init {
                if !typeck::assignable(&init.type_tag(), &g.ty) || g.ty.is_container() {
                    self.error(g.id, "type-mismatch", format!("global {} of type {} has an invalid initializer", g.name, g.ty));
                }
            }
        }

        let mut seen = HashSet::new();
        for func in &program.funcs {
            if func.name != "__main__" {
                self.name(func.id, &func.name);
            }
            if Builtin::from_name(&func.name).is_some() {
                self.error(func.id, "name-clash", format!("function {} has a builtin's name", func.name));
            }
            if !seen.insert(func.name.as_str()) {
                self.error(func.id, "duplicate-func", format!("function {} defined twice", func.name));
            }
            if func.name != "__main__" && !follows_convention(&func.name, "func") {
                self.push(func.id, "naming-convention", format!("function {} is not named funcN", func.name), Severity::Warning);
            }

            let mut bound = HashSet::new();
            let declared = func.statements().into_iter().filter_map(|s| match &s.kind {
                StmtKind::Declare(bs) => Some(bs.iter().map(move |b| (s.id, b))),
                _ => None,
            });
            let all: Vec<(NodeId, &Binding)> = func
                .params
                .iter()
                .chain(&func.locals)
                .map(|b| (func.id, b))
                .chain(declared.flatten())
                .collect();
            for (node, binding) in all {
                self.name(node, &binding.name);
                if !bound.insert(binding.name.as_str()) {
                    self.error(node, "duplicate-binding", format!("{} bound twice in {}", binding.name, func.name));
                }
                if program.global(&binding.name).is_some() {
                    self.error(node, "shadowed-global", format!("{} in {} shadows a global", binding.name, func.name));
                }
                if func_names.contains(binding.name.as_str()) {
                    self.error(node, "name-clash", format!("{} in {} has a function's name", binding.name, func.name));
                }
                if !follows_convention(&binding.name, "var") {
                    self.push(node, "naming-convention", format!("{} is not named varN", binding.name), Severity::Warning);
                }
            }

            for (name, node) in unresolved_vars_in(program, func) {
                self.error(node, "unresolved-var", format!("unresolved variable {name}"));
            }
            let scope = FuncScope::new(program, func);
            self.block(&scope, &func.body, 0);
        }

        // An unresolved name also surfaces as a type error at the same node.
        let mut seen = HashSet::new();
        self.out.retain(|v| seen.insert((v.node, v.rule.clone(), v.message.clone())));
        let unresolved: HashSet<NodeId> = self
            .out
            .iter()
            .filter(|v| v.rule == "unresolved-var")
            .map(|v| v.node)
            .collect();
        self.out.retain(|v| v.rule == "unresolved-var" || !unresolved.contains(&v.node));
        self.out.sort_by_key(|v| v.node);
        self.out
    }
}

/// Every invariant violation in `program`, ordered by node id. Errors make
/// the program unusable; warnings flag naming-convention deviations only.
pub fn validate(program: &Program) -> Vec<Violation> {
    Checker {
        program,
        out: Vec::new(),
    }
    .run()
}

/// Errors only.
pub fn errors(program: &Program) -> Vec<Violation> {
    validate(program)
        .into_iter()
        .filter(|v| v.severity == Severity::Error)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uast::build::*;

    fn main_with(locals: Vec<Binding>, body: Block) -> Program {
        Program::new(
            vec![],
            vec![func("__main__", vec![b("var0", TypeTag::Int)], TypeTag::Int, locals, body)],
            "__main__",
        )
    }

    fn rules(p: &Program) -> Vec<String> {
        validate(p).into_iter().map(|v| v.rule).collect()
    }

    #[test]
    fn continue_outside_loop() {
        let p = main_with(vec![], vec![cont(), ret(var("var0"))]);
        assert_eq!(rules(&p), vec!["continue-outside-loop"]);
    }

    #[test]
    fn declared_step_variable_is_valid() {
        let p = main_with(
            vec![b("var7", TypeTag::Int)],
            vec![
                assign(var("var7"), int(3)),
                while_dec(ge(var("var7"), int(0)), "var7", vec![]),
                ret(var("var7")),
            ],
        );
        assert_eq!(validate(&p), vec![]);
    }

    #[test]
    fn duplicate_function() {
        let f = || func("func0", vec![], TypeTag::Int, vec![], vec![ret(int(0))]);
        let main = func("__main__", vec![], TypeTag::Int, vec![], vec![ret(int(0))]);
        let p = Program::new(vec![], vec![main, f(), f()], "__main__");
        assert_eq!(rules(&p), vec!["duplicate-func"]);
    }

    #[test]
    fn type_and_context_errors() {
        let p = main_with(
            vec![b("var1", TypeTag::list(TypeTag::Int))],
            vec![
                if_(var("var0"), vec![]),
                expr_stmt(call("array_push", vec![var("var1"), string("x")])),
                assign(var("var0"), new_container(vec![])),
                ret(len(new_container(vec![]))),
            ],
        );
        let r = rules(&p);
        assert!(r.contains(&"type-mismatch".to_string()), "{r:?}");
        assert!(r.contains(&"initializer-context".to_string()), "{r:?}");
        assert_eq!(r.iter().filter(|x| *x == "type-mismatch").count(), 3, "{r:?}");
    }

    #[test]
    fn naming_deviation_is_a_warning() {
        let p = Program::new(
            vec![],
            vec![func("__main__", vec![b("count", TypeTag::Int)], TypeTag::Int, vec![], vec![ret(var("count"))])],
            "__main__",
        );
        let v = validate(&p);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].severity, Severity::Warning);
        assert!(errors(&p).is_empty());
    }

    #[test]
    fn unresolved_reference_reported_once() {
        let p = main_with(vec![], vec![ret(add(var("var9"), int(1)))]);
        assert_eq!(rules(&p), vec!["unresolved-var"]);
    }
}
