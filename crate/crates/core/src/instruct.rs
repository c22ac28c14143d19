//! Renders programs into the low-level English instructions given to a model.
//!
//! Rendering is a single pre-order pass. Operands that are not constants,
//! variables or calls are always parenthesized, and nested calls are printed
//! as-is.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::uast::*;

/// Detail-level knobs. Only the defaults (both off) are implemented.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub expand_nested_calls: bool,
    pub minimize_parens: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("render option {0} is reserved and not implemented")]
    Unsupported(&'static str),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionDoc {
    pub problem_id: String,
    pub lines: Vec<String>,
    /// 1-based line number to the nodes the line describes. Function
    /// headers and local declarations cite the function node, global
    /// declarations the global node.
    pub construct_index: BTreeMap<usize, Vec<NodeId>>,
}

impl InstructionDoc {
    /// The document as text, one line per entry, newline terminated.
    pub fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }

    /// Number of non-blank lines.
    pub fn instruction_count(&self) -> usize {
        self.lines.iter().filter(|l| !l.trim().is_empty()).count()
    }
}

fn spell_scalar_plural(ty: &TypeTag) -> String {
    match ty {
        TypeTag::Int => "integers".into(),
        TypeTag::Real => "reals".into(),
        TypeTag::Bool => "booleans".into(),
        TypeTag::Char => "characters".into(),
        TypeTag::String => "strings".into(),
        TypeTag::List(_) => "lists".into(),
        TypeTag::Map(..) => "maps".into(),
        TypeTag::Set(_) => "sets".into(),
    }
}

/// English name of a type as used in headers and declarations.
pub fn spell_type(ty: &TypeTag) -> String {
    match ty {
        TypeTag::Int => "integer".into(),
        TypeTag::Real => "real".into(),
        TypeTag::Bool => "boolean".into(),
        TypeTag::Char => "character".into(),
        TypeTag::String => "string".into(),
        TypeTag::List(e) if matches!(**e, TypeTag::List(_)) => "list".into(),
        TypeTag::List(e) => format!("list of {}", spell_scalar_plural(e)),
        TypeTag::Map(k, v) => format!("map from {} to {}", spell_scalar_plural(k), spell_scalar_plural(v)),
        TypeTag::Set(e) => format!("set of {}", spell_scalar_plural(e)),
    }
}

fn op_word(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "plus",
        BinOp::Sub => "minus",
        BinOp::Mul => "multiplied by",
        BinOp::Div => "divided by",
        BinOp::Mod => "modulo",
        BinOp::Eq => "is equal to",
        BinOp::Neq => "is not equal to",
        BinOp::Lt => "is less than",
        BinOp::Le => "is less than or equal to",
        BinOp::Gt => "is greater than",
        BinOp::Ge => "is greater than or equal to",
        BinOp::And => "and",
        BinOp::Or => "or",
    }
}

fn render_literal(lit: &Literal) -> String {
    match lit {
        Literal::Int(i) => i.to_string(),
        Literal::Real(r) => format!("{r:?}"),
        Literal::Bool(b) => b.to_string(),
        Literal::Char(c) => match char::from_u32(*c) {
            Some('\'') => "'\\''".into(),
            Some('\\') => "'\\\\'".into(),
            Some(ch) if !ch.is_control() => format!("'{ch}'"),
            _ => format!("character {c}"),
        },
        Literal::Str(s) => format!("{s:?}"),
    }
}

fn lowercase_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// A statement's rendering before placement.
enum Piece {
    /// One sentence; `sentence` is false for verbatim call statements,
    /// which keep their case when inlined.
    Line { text: String, sentence: bool },
    /// A header followed by a numbered block.
    Block { header: String, body: Vec<Item> },
    /// A header with an empty body, already terminated.
    Empty(String),
    /// An if/otherwise chain, one line per link.
    Chain(Vec<Link>),
}

struct Item {
    ids: Vec<NodeId>,
    piece: Piece,
}

struct Link {
    ids: Vec<NodeId>,
    /// `If c` / `Otherwise if c` / `Otherwise`.
    lead: String,
    /// Text after `then`, or the inline statement for a bare `Otherwise`.
    body: LinkBody,
}

enum LinkBody {
    Inline(String),
    Block(Vec<Item>),
    Nothing,
}

struct Renderer<'p> {
    scope: Option<typeck::FuncScope<'p>>,
    visits: usize,
}

impl<'p> Renderer<'p> {
    fn expr(&mut self, e: &Expr) -> String {
        self.visits += 1;
        match &e.kind {
            ExprKind::Const(lit) => render_literal(lit),
            ExprKind::Var(name) => name.clone(),
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.operand(lhs);
                let r = self.operand(rhs);
                format!("{l} {} {r}", op_word(*op))
            }
            ExprKind::Unary { op, operand } => {
                let inner = self.operand(operand);
                match op {
                    UnOp::Neg => format!("-{inner}"),
                    UnOp::Not => format!("not {inner}"),
                }
            }
            ExprKind::Ternary {
                cond,
                then,
                otherwise,
            } => {
                let t = self.expr(then);
                let c = self.expr(cond);
                let o = self.expr(otherwise);
                format!("({t} if {c} else {o})")
            }
            ExprKind::Call { callee, args } => {
                let args: Vec<String> = args.iter().map(|a| self.operand(a)).collect();
                format!("{}({})", callee.name(), args.join(", "))
            }
        }
    }

    /// An expression in operand position: parenthesized unless atomic.
    /// Ternaries carry their own parentheses.
    fn operand(&mut self, e: &Expr) -> String {
        let text = self.expr(e);
        if e.is_atomic() || matches!(e.kind, ExprKind::Ternary { .. }) {
            text
        } else {
            format!("({text})")
        }
    }

    fn block(&mut self, stmts: &[Stmt]) -> Vec<Item> {
        stmts.iter().map(|s| self.stmt(s)).collect()
    }

    fn line(ids: Vec<NodeId>, text: String) -> Item {
        Item {
            ids,
            piece: Piece::Line { text, sentence: true },
        }
    }

    fn stmt(&mut self, s: &Stmt) -> Item {
        self.visits += 1;
        let ids = vec![s.id];
        match &s.kind {
            StmtKind::Declare(bindings) => {
                let parts: Vec<String> = bindings
                    .iter()
                    .map(|b| format!("{} as {}", b.name, spell_type(&b.ty)))
                    .collect();
                Self::line(ids, format!("Declare {}.", parts.join(", ")))
            }
            StmtKind::Assign { target, value } => {
                let text = match value.as_builtin_call(Builtin::ArrayInitializer) {
                    Some(dims) => {
                        self.visits += 1;
                        let dims: Vec<String> = dims.iter().map(|d| self.operand(d)).collect();
                        let t = self.expr(target);
                        if dims.is_empty() {
                            let ty = self
                                .scope
                                .as_ref()
                                .and_then(|scope| typeck::lvalue_type(scope, target).ok());
                            let name = ty.as_ref().map(spell_type).unwrap_or_else(|| "list".into());
                            format!("Assign a new {name} to {t}.")
                        } else {
                            format!("Assign a new list with dimensions of sizes {} to {t}.", dims.join(", "))
                        }
                    }
                    None => {
                        let v = self.expr(value);
                        let t = self.expr(target);
                        format!("Assign {v} to {t}.")
                    }
                };
                Self::line(ids, text)
            }
            StmtKind::If { .. } => self.chain(s),
            StmtKind::While { cond, body, step } => {
                let c = self.expr(cond);
                let body = self.block(body);
                let header = match step {
                    Step::None => format!("While {c} do"),
                    Step::Increment(v) => format!("While {c} do the following and increment {v}"),
                    Step::Decrement(v) => format!("While {c} do the following and decrement {v}"),
                };
                if body.is_empty() {
                    let text = match step {
                        Step::None => format!("While {c} do nothing."),
                        Step::Increment(v) => format!("While {c} do nothing and increment {v}."),
                        Step::Decrement(v) => format!("While {c} do nothing and decrement {v}."),
                    };
                    Item {
                        ids,
                        piece: Piece::Empty(text),
                    }
                } else {
                    Item {
                        ids,
                        piece: Piece::Block {
                            header: format!("{header}:"),
                            body,
                        },
                    }
                }
            }
            StmtKind::ForEach {
                var,
                iterable,
                body,
            } => {
                let it = self.expr(iterable);
                let body = self.block(body);
                if body.is_empty() {
                    Item {
                        ids,
                        piece: Piece::Empty(format!("For each {var} in {it} do nothing.")),
                    }
                } else {
                    Item {
                        ids,
                        piece: Piece::Block {
                            header: format!("For each {var} in {it} do:"),
                            body,
                        },
                    }
                }
            }
            StmtKind::Continue => Self::line(ids, "Continue to the next iteration.".into()),
            StmtKind::Break => Self::line(ids, "Break out of the loop.".into()),
            StmtKind::Return(None) => Self::line(ids, "Return.".into()),
            StmtKind::Return(Some(e)) => {
                let v = self.expr(e);
                let text = if matches!(e.kind, ExprKind::Const(Literal::Str(_))) {
                    format!("Return {v}")
                } else {
                    format!("Return {v}.")
                };
                Self::line(ids, text)
            }
            StmtKind::ExprStmt(e) => Item {
                ids,
                piece: Piece::Line {
                    text: self.expr(e),
                    sentence: false,
                },
            },
        }
    }

    fn chain(&mut self, s: &Stmt) -> Item {
        let mut links = Vec::new();
        let mut all_ids = Vec::new();
        let mut current = s;
        let mut lead = "If".to_string();
        loop {
            if !std::ptr::eq(current, s) {
                self.visits += 1;
            }
            let StmtKind::If {
                cond,
                then,
                otherwise,
            } = &current.kind
            else {
                unreachable!("chain starts at an If")
            };
            all_ids.push(current.id);
            let c = self.expr(cond);
            let (body, mut ids) = self.branch(then);
            ids.insert(0, current.id);
            links.push(Link {
                ids,
                lead: format!("{lead} {c}"),
                body,
            });
            match otherwise {
                None => break,
                Some(o) if o.len() == 1 && matches!(o[0].kind, StmtKind::If { .. }) => {
                    current = &o[0];
                    lead = "Otherwise if".into();
                }
                Some(o) => {
                    let (body, mut ids) = self.branch(o);
                    ids.insert(0, current.id);
                    links.push(Link {
                        ids,
                        lead: "Otherwise".into(),
                        body,
                    });
                    break;
                }
            }
        }
        Item {
            ids: all_ids,
            piece: Piece::Chain(links),
        }
    }

    /// Renders a branch inline when it is a single simple statement.
    fn branch(&mut self, stmts: &[Stmt]) -> (LinkBody, Vec<NodeId>) {
        match stmts {
            [] => (LinkBody::Nothing, Vec::new()),
            [single] if !matches!(
                single.kind,
                StmtKind::If { .. } | StmtKind::While { .. } | StmtKind::ForEach { .. }
            ) =>
            {
                let item = self.stmt(single);
                let Piece::Line { text, sentence } = item.piece else {
                    unreachable!("simple statements render as one line")
                };
                let text = if sentence { lowercase_first(&text) } else { text };
                (LinkBody::Inline(text), item.ids)
            }
            _ => (LinkBody::Block(self.block(stmts)), Vec::new()),
        }
    }
}

fn place(items: Vec<Item>, depth: usize, lines: &mut Vec<String>, index: &mut BTreeMap<usize, Vec<NodeId>>) {
    let mut number = 0usize;
    let mut emit = |text: String, ids: Vec<NodeId>, lines: &mut Vec<String>, index: &mut BTreeMap<usize, Vec<NodeId>>| {
        let line = if depth == 0 {
            text
        } else {
            number += 1;
            format!("{}{number}. {text}", "\t".repeat(depth))
        };
        lines.push(line);
        index.insert(lines.len(), ids);
    };
    for item in items {
        match item.piece {
            Piece::Line { text, .. } | Piece::Empty(text) => emit(text, item.ids, lines, index),
            Piece::Block { header, body } => {
                emit(header, item.ids, lines, index);
                place(body, depth + 1, lines, index);
            }
            Piece::Chain(links) => {
                for link in links {
                    match link.body {
                        LinkBody::Inline(text) if link.lead == "Otherwise" => {
                            emit(format!("Otherwise {text}"), link.ids, lines, index)
                        }
                        LinkBody::Inline(text) => emit(format!("{} then {text}", link.lead), link.ids, lines, index),
                        LinkBody::Nothing if link.lead == "Otherwise" => {
                            emit("Otherwise do nothing.".into(), link.ids, lines, index)
                        }
                        LinkBody::Nothing => emit(format!("{} then do nothing.", link.lead), link.ids, lines, index),
                        LinkBody::Block(body) => {
                            let header = if link.lead == "Otherwise" {
                                "Otherwise do:".to_string()
                            } else {
                                format!("{} then do:", link.lead)
                            };
                            emit(header, link.ids, lines, index);
                            place(body, depth + 1, lines, index);
                        }
                    }
                }
            }
        }
    }
}

/// Renders one expression as it appears inside an instruction.
pub fn render_expression(expr: &Expr) -> String {
    Renderer { scope: None, visits: 0 }.expr(expr)
}

fn render(program: &Program) -> (InstructionDoc, usize) {
    let mut lines = Vec::new();
    let mut index = BTreeMap::new();
    let mut r = Renderer { scope: None, visits: 0 };
    for g in &program.globals {
        r.visits += 1;
        let mut text = format!("Declare a global variable {} as {}", g.name, spell_type(&g.ty));
        if let Some(init) = &g.init {
            text.push_str(&format!(" with initial value {}", render_literal(init)));
        }
        text.push('.');
        lines.push(text);
        index.insert(lines.len(), vec![g.id]);
    }
    for (i, func) in program.funcs.iter().enumerate() {
        if i > 0 || !program.globals.is_empty() {
            lines.push(String::new());
        }
        r.visits += 1;
        r.scope = Some(typeck::FuncScope::new(program, func));
        let params = if func.params.is_empty() {
            "no parameters".to_string()
        } else {
            let parts: Vec<String> = func
                .params
                .iter()
                .map(|p| format!("{} as {}", p.name, spell_type(&p.ty)))
                .collect();
            format!("as parameters {}", parts.join(", "))
        };
        lines.push(format!(
            "Define a function called {} getting {params} and returns {}.",
            func.name,
            spell_type(&func.return_type)
        ));
        index.insert(lines.len(), vec![func.id]);
        if !func.locals.is_empty() {
            let parts: Vec<String> = func
                .locals
                .iter()
                .map(|b| format!("{} as {}", b.name, spell_type(&b.ty)))
                .collect();
            lines.push(format!("Declare {}.", parts.join(", ")));
            index.insert(lines.len(), vec![func.id]);
        }
        let items = r.block(&func.body);
        place(items, 0, &mut lines, &mut index);
    }
    let doc = InstructionDoc {
        problem_id: String::new(),
        lines,
        construct_index: index,
    };
    (doc, r.visits)
}

/// Renders the whole program: globals, then each function in definition
/// order separated by blank lines.
pub fn render_instructions(program: &Program) -> InstructionDoc {
    render(program).0
}

pub fn render_instructions_with(program: &Program, options: RenderOptions) -> Result<InstructionDoc, RenderError> {
    if options.expand_nested_calls {
        return Err(RenderError::Unsupported("expand_nested_calls"));
    }
    if options.minimize_parens {
        return Err(RenderError::Unsupported("minimize_parens"));
    }
    Ok(render_instructions(program))
}

/// Renders a program and reports how many nodes the single pass visited.
pub fn render_counting_visits(program: &Program) -> (InstructionDoc, usize) {
    render(program)
}

pub fn render_problem(problem: &crate::problem::Problem) -> InstructionDoc {
    let mut doc = render_instructions(&problem.program);
    doc.problem_id = problem.id.clone();
    doc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uast::build::*;

    #[test]
    fn nested_division_assignment() {
        let e = mul(div(var("var0"), call("func0", vec![var("var0"), var("var1")])), var("var1"));
        assert_eq!(render_expression(&e), "(var0 divided by func0(var0, var1)) multiplied by var1");
        assert_eq!(render_expression(&var("var3")), "var3");
    }

    #[test]
    fn ternary_keeps_single_parentheses() {
        let cell = idx(idx(var("var1"), var("var7")), var("var8"));
        let e = ternary(eq(cell, int(87)), int(1), sub(int(0), int(1)));
        assert_eq!(
            render_expression(&e),
            "(1 if array_index(array_index(var1, var7), var8) is equal to 87 else 0 minus 1)"
        );
        let wrapped = sub(e.clone(), int(1));
        assert!(render_expression(&wrapped).starts_with("(1 if"));
        assert!(!render_expression(&wrapped).starts_with("((1 if"));
    }

    #[test]
    fn call_arguments_are_wrapped() {
        let e = call("min", vec![var("var9"), sub(var("var7"), int(1))]);
        assert_eq!(render_expression(&e), "min(var9, (var7 minus 1))");
        assert_eq!(render_expression(&call("array_push", vec![var("var6"), int(-1)])), "array_push(var6, -1)");
    }

    #[test]
    fn return_string_has_no_period() {
        let p = Program::new(
            vec![],
            vec![func("__main__", vec![], TypeTag::String, vec![], vec![ret(string("Equal"))])],
            "__main__",
        );
        let doc = render_instructions(&p);
        assert_eq!(
            doc.lines,
            vec![
                "Define a function called __main__ getting no parameters and returns string.",
                "Return \"Equal\"",
            ]
        );
    }

    #[test]
    fn nested_loops_number_per_level() {
        let body = vec![
            assign(var("var8"), sub(var("var3"), int(1))),
            while_dec(
                ge(var("var8"), int(0)),
                "var8",
                vec![
                    assign(var("var9"), var("var8")),
                    if_(eq(var("var9"), int(0)), vec![cont()]),
                ],
            ),
        ];
        let p = Program::new(
            vec![],
            vec![func(
                "__main__",
                vec![b("var3", TypeTag::Int)],
                TypeTag::Int,
                vec![b("var7", TypeTag::Int), b("var8", TypeTag::Int), b("var9", TypeTag::Int)],
                vec![
                    assign(var("var7"), var("var3")),
                    while_dec(ge(var("var7"), int(0)), "var7", body),
                    ret(var("var7")),
                ],
            )],
            "__main__",
        );
        let doc = render_instructions(&p);
        assert_eq!(
            doc.lines[2..],
            [
                "Assign var3 to var7.",
                "While var7 is greater than or equal to 0 do the following and decrement var7:",
                "\t1. Assign var3 minus 1 to var8.",
                "\t2. While var8 is greater than or equal to 0 do the following and decrement var8:",
                "\t\t1. Assign var8 to var9.",
                "\t\t2. If var9 is equal to 0 then continue to the next iteration.",
                "Return var7.",
            ]
        );
        let (_, visits) = render_counting_visits(&p);
        assert_eq!(visits, p.node_count());
    }

    #[test]
    fn containers_and_multi_statement_branches() {
        let p = Program::new(
            vec![GlobalDecl::new("var9", TypeTag::Int, Some(Literal::Int(0)))],
            vec![func(
                "__main__",
                vec![b("var0", TypeTag::Int)],
                TypeTag::list(TypeTag::Int),
                vec![b("var6", TypeTag::list(TypeTag::Int)), b("var5", TypeTag::list(TypeTag::list(TypeTag::Int)))],
                vec![
                    assign(var("var6"), new_container(vec![])),
                    assign(var("var5"), new_container(vec![var("var0"), add(var("var0"), int(1))])),
                    expr_stmt(call("array_push", vec![var("var6"), int(-1)])),
                    if_else(
                        gt(var("var0"), int(0)),
                        vec![assign(var("var9"), int(1)), assign(var("var9"), int(2))],
                        vec![expr_stmt(call("array_push", vec![var("var6"), int(3)]))],
                    ),
                    ret(var("var6")),
                ],
            )],
            "__main__",
        );
        let doc = render_instructions(&p);
        assert_eq!(
            doc.lines,
            vec![
                "Declare a global variable var9 as integer with initial value 0.",
                "",
                "Define a function called __main__ getting as parameters var0 as integer and returns list of integers.",
                "Declare var6 as list of integers, var5 as list.",
                "Assign a new list of integers to var6.",
                "Assign a new list with dimensions of sizes var0, (var0 plus 1) to var5.",
                "array_push(var6, -1)",
                "If var0 is greater than 0 then do:",
                "\t1. Assign 1 to var9.",
                "\t2. Assign 2 to var9.",
                "Otherwise array_push(var6, 3)",
                "Return var6.",
            ]
        );
        assert_eq!(doc.instruction_count(), 11);
        let (_, visits) = render_counting_visits(&p);
        assert_eq!(visits, p.node_count());
        let covered: std::collections::BTreeSet<NodeId> = doc.construct_index.values().flatten().copied().collect();
        for s in p.statements() {
            assert!(covered.contains(&s.id));
        }
    }

    #[test]
    fn reserved_options_are_rejected() {
        let p = Program::new(vec![], vec![func("__main__", vec![], TypeTag::Int, vec![], vec![ret(int(0))])], "__main__");
        let opts = RenderOptions {
            minimize_parens: true,
            ..RenderOptions::default()
        };
        assert!(render_instructions_with(&p, opts).is_err());
        assert!(render_instructions_with(&p, RenderOptions::default()).is_ok());
    }
}
