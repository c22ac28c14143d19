//! Ground-truth source emission.
//!
//! The shipped `python3` profile keeps characters as one-character strings
//! and converts with `ord`/`chr` only where the program does arithmetic on
//! them or stores across char/int slots. Integer division and remainder go
//! through small truncating helpers so negative operands behave like C.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::uast::typeck::{self, FuncScope};
use crate::uast::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntDivStrategy {
    /// Emit `_idiv`/`_imod` helpers with truncating semantics.
    TruncatingHelper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CharBoundary {
    /// Characters are native one-character strings; code points appear
    /// only at arithmetic and mixed-type sites.
    NativeStrings,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TargetProfile {
    pub language_id: &'static str,
    /// Substituted for the language placeholder in prompts.
    pub language_name: &'static str,
    pub extension: &'static str,
    pub int_div_strategy: IntDivStrategy,
    pub char_boundary: CharBoundary,
}

pub const PYTHON3: TargetProfile = TargetProfile {
    language_id: "python3",
    language_name: "Python",
    extension: "py",
    int_div_strategy: IntDivStrategy::TruncatingHelper,
    char_boundary: CharBoundary::NativeStrings,
};

pub const PROFILES: &[TargetProfile] = &[PYTHON3];

pub fn profile(language_id: &str) -> Option<&'static TargetProfile> {
    PROFILES.iter().find(|p| p.language_id == language_id)
}

/// Source code in some target language, either emitted ground truth or a
/// model's answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceText {
    pub code: String,
    pub entry_name: String,
    pub profile_id: String,
    /// 1-based line number to the node the line was emitted for. Empty for
    /// code that did not come from a program.
    #[serde(default)]
    pub line_map: BTreeMap<usize, NodeId>,
}

impl SourceText {
    pub fn new(code: impl Into<String>, entry_name: impl Into<String>, profile_id: impl Into<String>) -> Self {
        SourceText {
            code: code.into(),
            entry_name: entry_name.into(),
            profile_id: profile_id.into(),
            line_map: BTreeMap::new(),
        }
    }

    pub fn line(&self, number: usize) -> Option<&str> {
        self.code.lines().nth(number.checked_sub(1)?)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodegenError {
    #[error("no target profile named {0}")]
    UnknownProfile(String),
    #[error("internal defect: {0} at node {1}")]
    Unsupported(String, NodeId),
}

/// Python operator precedence, higher binds tighter.
mod prec {
    pub const TERNARY: u8 = 1;
    pub const OR: u8 = 2;
    pub const AND: u8 = 3;
    pub const NOT: u8 = 4;
    pub const CMP: u8 = 5;
    pub const ADD: u8 = 6;
    pub const MUL: u8 = 7;
    pub const UNARY: u8 = 8;
    pub const ATOM: u8 = 9;
}

#[derive(Clone, Debug)]
struct Py {
    text: String,
    prec: u8,
}

impl Py {
    fn atom(text: String) -> Self {
        Py { text, prec: prec::ATOM }
    }

    fn at_least(self, p: u8) -> String {
        if self.prec >= p {
            self.text
        } else {
            format!("({})", self.text)
        }
    }
}

/// A Python string literal for `s`.
pub fn py_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 || c as u32 == 0x7f => {
                let _ = write!(out, "\\x{:02x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn py_real(r: f64) -> String {
    if r.is_nan() {
        "float(\"nan\")".into()
    } else if r.is_infinite() {
        if r > 0.0 { "float(\"inf\")" } else { "-float(\"inf\")" }.into()
    } else {
        format!("{r:?}")
    }
}

fn py_literal(lit: &Literal) -> Py {
    match lit {
        Literal::Int(i) if *i < 0 => Py {
            text: i.to_string(),
            prec: prec::UNARY,
        },
        Literal::Int(i) => Py::atom(i.to_string()),
        Literal::Real(r) if *r < 0.0 || r.is_infinite() => Py {
            text: py_real(*r),
            prec: prec::UNARY,
        },
        Literal::Real(r) => Py::atom(py_real(*r)),
        Literal::Bool(b) => Py::atom(if *b { "True" } else { "False" }.into()),
        Literal::Char(c) => Py::atom(py_str(&char::from_u32(*c).map(String::from).unwrap_or_default())),
        Literal::Str(s) => Py::atom(py_str(s)),
    }
}

fn zero_literal(ty: &TypeTag) -> &'static str {
    match ty {
        TypeTag::Int => "0",
        TypeTag::Real => "0.0",
        TypeTag::Bool => "False",
        TypeTag::Char => "\"\\x00\"",
        TypeTag::String => "\"\"",
        TypeTag::List(_) => "[]",
        TypeTag::Map(..) => "{}",
        TypeTag::Set(_) => "set()",
    }
}

struct Emitter<'p> {
    program: &'p Program,
    lines: Vec<String>,
    line_map: BTreeMap<usize, NodeId>,
    uses_idiv: bool,
    uses_imod: bool,
    uses_math: bool,
}

struct FuncCtx<'a, 'p> {
    scope: &'a FuncScope<'p>,
    /// Innermost-last stack of enclosing loops; `Some` for annotated Whiles.
    loops: Vec<Option<&'p Step>>,
}

impl<'p> Emitter<'p> {
    fn push(&mut self, depth: usize, text: impl AsRef<str>, node: Option<NodeId>) {
        self.lines.push(format!("{}{}", "    ".repeat(depth), text.as_ref()));
        if let Some(n) = node {
            self.line_map.insert(self.lines.len(), n);
        }
    }

    fn ty(&self, ctx: &FuncCtx<'_, 'p>, e: &Expr) -> Result<TypeTag, CodegenError> {
        match typeck::type_of(ctx.scope, e) {
            Ok(Some(t)) => Ok(t),
            _ => Err(CodegenError::Unsupported("untyped expression".into(), e.id)),
        }
    }

    /// `e` as a Python int when it is a char (ord), natural otherwise.
    fn int_ctx(&mut self, ctx: &FuncCtx<'_, 'p>, e: &Expr) -> Result<Py, CodegenError> {
        if self.ty(ctx, e)? == TypeTag::Char {
            if let ExprKind::Const(Literal::Char(c)) = &e.kind {
                return Ok(Py::atom(c.to_string()));
            }
            let inner = self.expr(ctx, e)?;
            return Ok(Py::atom(format!("ord({})", inner.text)));
        }
        self.expr(ctx, e)
    }

    /// `e` converted for a slot of type `to`.
    fn convert(&mut self, ctx: &FuncCtx<'_, 'p>, e: &Expr, to: &TypeTag) -> Result<Py, CodegenError> {
        let from = self.ty(ctx, e)?;
        if from == *to {
            return self.expr(ctx, e);
        }
        Ok(match (&from, to) {
            (TypeTag::Char, TypeTag::Int) => self.int_ctx(ctx, e)?,
            (TypeTag::Int, TypeTag::Char) => Py::atom(format!("chr({})", self.expr(ctx, e)?.text)),
            (TypeTag::Int | TypeTag::Char, TypeTag::Real) => {
                Py::atom(format!("float({})", self.int_ctx(ctx, e)?.text))
            }
            (TypeTag::Real, TypeTag::Int) => Py::atom(format!("int({})", self.expr(ctx, e)?.text)),
            (TypeTag::Real, TypeTag::Char) => Py::atom(format!("chr(int({}))", self.expr(ctx, e)?.text)),
            _ => self.expr(ctx, e)?,
        })
    }

    fn binary(&mut self, ctx: &FuncCtx<'_, 'p>, e: &Expr, op: BinOp, lhs: &Expr, rhs: &Expr) -> Result<Py, CodegenError> {
        let (lt, rt) = (self.ty(ctx, lhs)?, self.ty(ctx, rhs)?);
        if op.is_logical() {
            let (p, word) = if op == BinOp::And { (prec::AND, "and") } else { (prec::OR, "or") };
            let l = self.expr(ctx, lhs)?.at_least(p);
            let r = self.expr(ctx, rhs)?.at_least(p + 1);
            return Ok(Py {
                text: format!("{l} {word} {r}"),
                prec: p,
            });
        }
        if op.is_comparison() {
            let mixed = lt.is_numeric() && rt.is_numeric() && !(lt == TypeTag::Char && rt == TypeTag::Char);
            let (l, r) = if mixed {
                (self.int_ctx(ctx, lhs)?, self.int_ctx(ctx, rhs)?)
            } else {
                (self.expr(ctx, lhs)?, self.expr(ctx, rhs)?)
            };
            let sym = match op {
                BinOp::Eq => "==",
                BinOp::Neq => "!=",
                BinOp::Lt => "<",
                BinOp::Le => "<=",
                BinOp::Gt => ">",
                _ => ">=",
            };
            return Ok(Py {
                text: format!("{} {sym} {}", l.at_least(prec::CMP + 1), r.at_least(prec::CMP + 1)),
                prec: prec::CMP,
            });
        }
        let l = self.int_ctx(ctx, lhs)?;
        let r = self.int_ctx(ctx, rhs)?;
        let integral = lt.is_integral() && rt.is_integral();
        let infix = |sym: &str, p: u8| Py {
            text: format!("{} {sym} {}", l.clone().at_least(p), r.clone().at_least(p + 1)),
            prec: p,
        };
        Ok(match op {
            BinOp::Add => infix("+", prec::ADD),
            BinOp::Sub => infix("-", prec::ADD),
            BinOp::Mul => infix("*", prec::MUL),
            BinOp::Div if integral => {
                self.uses_idiv = true;
                Py::atom(format!("_idiv({}, {})", l.text, r.text))
            }
            BinOp::Div => infix("/", prec::MUL),
            BinOp::Mod if integral => {
                self.uses_imod = true;
                self.uses_idiv = true;
                Py::atom(format!("_imod({}, {})", l.text, r.text))
            }
            BinOp::Mod => {
                self.uses_math = true;
                Py::atom(format!("math.fmod({}, {})", l.text, r.text))
            }
            _ => return Err(CodegenError::Unsupported(format!("operator {}", op.name()), e.id)),
        })
    }

    fn expr(&mut self, ctx: &FuncCtx<'_, 'p>, e: &Expr) -> Result<Py, CodegenError> {
        Ok(match &e.kind {
            ExprKind::Const(lit) => py_literal(lit),
            ExprKind::Var(name) => Py::atom(name.clone()),
            ExprKind::Binary { op, lhs, rhs } => self.binary(ctx, e, *op, lhs, rhs)?,
            ExprKind::Unary { op: UnOp::Neg, operand } => {
                let inner = self.int_ctx(ctx, operand)?.at_least(prec::UNARY);
                Py {
                    text: format!("-{inner}"),
                    prec: prec::UNARY,
                }
            }
            ExprKind::Unary { op: UnOp::Not, operand } => {
                let inner = self.expr(ctx, operand)?.at_least(prec::NOT);
                Py {
                    text: format!("not {inner}"),
                    prec: prec::NOT,
                }
            }
            ExprKind::Ternary {
                cond,
                then,
                otherwise,
            } => {
                let joined = self.ty(ctx, e)?;
                let t = self.convert(ctx, then, &joined)?.at_least(prec::TERNARY + 1);
                let c = self.expr(ctx, cond)?.at_least(prec::TERNARY + 1);
                let o = self.convert(ctx, otherwise, &joined)?.at_least(prec::TERNARY);
                Py {
                    text: format!("{t} if {c} else {o}"),
                    prec: prec::TERNARY,
                }
            }
            ExprKind::Call { callee, args } => self.call(ctx, e, callee, args)?,
        })
    }

    fn call(&mut self, ctx: &FuncCtx<'_, 'p>, e: &Expr, callee: &Callee, args: &[Expr]) -> Result<Py, CodegenError> {
        let builtin = match callee {
            Callee::User(name) => {
                let f = self
                    .program
                    .func(name)
                    .ok_or_else(|| CodegenError::Unsupported(format!("unknown function {name}"), e.id))?;
                let mut parts = Vec::new();
                for (a, p) in args.iter().zip(&f.params) {
                    parts.push(self.convert(ctx, a, &p.ty)?.text);
                }
                return Ok(Py::atom(format!("{name}({})", parts.join(", "))));
            }
            Callee::Builtin(b) => *b,
        };
        let primary = |p: Py| p.at_least(prec::ATOM);
        Ok(match builtin {
            Builtin::Len => Py::atom(format!("len({})", self.expr(ctx, &args[0])?.text)),
            Builtin::Min | Builtin::Max => {
                let joined = self.ty(ctx, e)?;
                let a = self.convert(ctx, &args[0], &joined)?.text;
                let b = self.convert(ctx, &args[1], &joined)?.text;
                Py::atom(format!("{}({a}, {b})", builtin.name()))
            }
            Builtin::Abs => Py::atom(format!("abs({})", self.int_ctx(ctx, &args[0])?.text)),
            Builtin::ArrayIndex => {
                let c = primary(self.expr(ctx, &args[0])?);
                let i = self.int_ctx(ctx, &args[1])?.text;
                Py::atom(format!("{c}[{i}]"))
            }
            Builtin::ConcatString => {
                let a = self.expr(ctx, &args[0])?.at_least(prec::ADD);
                let b = self.expr(ctx, &args[1])?.at_least(prec::ADD + 1);
                Py {
                    text: format!("{a} + {b}"),
                    prec: prec::ADD,
                }
            }
            Builtin::StringSplit => Py::atom(format!("{}.split()", primary(self.expr(ctx, &args[0])?))),
            Builtin::Substring => {
                let s = primary(self.expr(ctx, &args[0])?);
                let a = self.int_ctx(ctx, &args[1])?.text;
                let b = self.int_ctx(ctx, &args[2])?.text;
                Py::atom(format!("{s}[{a}:{b}]"))
            }
            Builtin::MapGet => {
                let m = primary(self.expr(ctx, &args[0])?);
                let k = self.expr(ctx, &args[1])?.text;
                Py::atom(format!("{m}[{k}]"))
            }
            Builtin::SetContains => {
                let x = self.expr(ctx, &args[1])?.at_least(prec::CMP + 1);
                let s = self.expr(ctx, &args[0])?.at_least(prec::CMP + 1);
                Py {
                    text: format!("{x} in {s}"),
                    prec: prec::CMP,
                }
            }
            Builtin::ArrayPush => {
                let l = primary(self.expr(ctx, &args[0])?);
                let elem = self.ty(ctx, &args[0])?.list_element(1).cloned().unwrap_or(TypeTag::Int);
                let v = self.convert(ctx, &args[1], &elem)?.text;
                Py::atom(format!("{l}.append({v})"))
            }
            Builtin::MapPut => {
                let m = primary(self.expr(ctx, &args[0])?);
                let val_ty = match self.ty(ctx, &args[0])? {
                    TypeTag::Map(_, v) => *v,
                    _ => TypeTag::Int,
                };
                let k = self.expr(ctx, &args[1])?.text;
                let v = self.convert(ctx, &args[2], &val_ty)?.text;
                Py::atom(format!("{m}[{k}] = {v}"))
            }
            Builtin::SetAdd => {
                let s = primary(self.expr(ctx, &args[0])?);
                let x = self.expr(ctx, &args[1])?.text;
                Py::atom(format!("{s}.add({x})"))
            }
            Builtin::Sort => Py::atom(format!("{}.sort()", primary(self.expr(ctx, &args[0])?))),
            Builtin::ArrayInitializer => {
                return Err(CodegenError::Unsupported("array_initializer outside an assignment".into(), e.id))
            }
        })
    }

    fn initializer(&mut self, ctx: &FuncCtx<'_, 'p>, ty: &TypeTag, dims: &[Expr]) -> Result<String, CodegenError> {
        match dims.split_first() {
            None => Ok(zero_literal(ty).to_string()),
            Some((d, rest)) => {
                let elem = ty.list_element(1).cloned().unwrap_or(TypeTag::Int);
                let inner = self.initializer(ctx, &elem, rest)?;
                let n = self.int_ctx(ctx, d)?.text;
                Ok(format!("[{inner} for _ in range({n})]"))
            }
        }
    }

    fn step_line(step: &Step) -> Option<String> {
        match step {
            Step::None => None,
            Step::Increment(v) => Some(format!("{v} += 1")),
            Step::Decrement(v) => Some(format!("{v} -= 1")),
        }
    }

    fn block(&mut self, ctx: &mut FuncCtx<'_, 'p>, stmts: &'p [Stmt], depth: usize) -> Result<(), CodegenError> {
        let before = self.lines.len();
        for s in stmts {
            self.stmt(ctx, s, depth)?;
        }
        if self.lines.len() == before {
            self.push(depth, "pass", None);
        }
        Ok(())
    }

    fn stmt(&mut self, ctx: &mut FuncCtx<'_, 'p>, s: &'p Stmt, depth: usize) -> Result<(), CodegenError> {
        let id = Some(s.id);
        match &s.kind {
            StmtKind::Declare(_) => {}
            StmtKind::Assign { target, value } => {
                let slot = typeck::lvalue_type(ctx.scope, target)
                    .map_err(|e| CodegenError::Unsupported(e.message, e.node))?;
                let rhs = match value.as_builtin_call(Builtin::ArrayInitializer) {
                    Some(dims) => self.initializer(ctx, &slot, dims)?,
                    None => self.convert(ctx, value, &slot)?.text,
                };
                let lhs = self.expr(ctx, target)?.text;
                self.push(depth, format!("{lhs} = {rhs}"), id);
            }
            StmtKind::If { .. } => {
                let mut current = s;
                let mut keyword = "if";
                loop {
                    let StmtKind::If {
                        cond,
                        then,
                        otherwise,
                    } = &current.kind
                    else {
                        unreachable!("chains only contain Ifs")
                    };
                    let c = self.expr(ctx, cond)?.text;
                    self.push(depth, format!("{keyword} {c}:"), Some(current.id));
                    self.block(ctx, then, depth + 1)?;
                    match otherwise {
                        None => break,
                        Some(o) if o.len() == 1 && matches!(o[0].kind, StmtKind::If { .. }) => {
                            current = &o[0];
                            keyword = "elif";
                        }
                        Some(o) => {
                            self.push(depth, "else:", Some(current.id));
                            self.block(ctx, o, depth + 1)?;
                            break;
                        }
                    }
                }
            }
            StmtKind::While { cond, body, step } => {
                let c = self.expr(ctx, cond)?.text;
                self.push(depth, format!("while {c}:"), id);
                ctx.loops.push(Some(step));
                let before = self.lines.len();
                for st in body {
                    self.stmt(ctx, st, depth + 1)?;
                }
                ctx.loops.pop();
                match Self::step_line(step) {
                    Some(update) => self.push(depth + 1, update, id),
                    None if self.lines.len() == before => self.push(depth + 1, "pass", None),
                    None => {}
                }
            }
            StmtKind::ForEach {
                var,
                iterable,
                body,
            } => {
                let source = self.expr(ctx, iterable)?;
                let text = match self.ty(ctx, iterable)? {
                    TypeTag::Map(..) => format!("list({})", source.text),
                    TypeTag::Set(_) => format!("sorted({})", source.text),
                    _ => source.text,
                };
                self.push(depth, format!("for {var} in {text}:"), id);
                ctx.loops.push(None);
                self.block(ctx, body, depth + 1)?;
                ctx.loops.pop();
            }
            StmtKind::Continue => {
                if let Some(Some(step)) = ctx.loops.last() {
                    if let Some(update) = Self::step_line(step) {
                        self.push(depth, update, id);
                    }
                }
                self.push(depth, "continue", id);
            }
            StmtKind::Break => self.push(depth, "break", id),
            StmtKind::Return(None) => self.push(depth, "return", id),
            StmtKind::Return(Some(e)) => {
                let ret = &ctx.scope.func().return_type;
                let v = self.convert(ctx, e, ret)?.text;
                self.push(depth, format!("return {v}"), id);
            }
            StmtKind::ExprStmt(e) => {
                let text = self.expr(ctx, e)?.text;
                self.push(depth, text, id);
            }
        }
        Ok(())
    }

    fn func(&mut self, func: &'p FuncDef) -> Result<(), CodegenError> {
        let scope = FuncScope::new(self.program, func);
        let params: Vec<&str> = func.params.iter().map(|p| p.name.as_str()).collect();
        self.push(0, format!("def {}({}):", func.name, params.join(", ")), Some(func.id));
        let mut assigned = BTreeSet::new();
        for s in func.statements() {
            let name = match &s.kind {
                StmtKind::Assign { target, .. } => target.as_var(),
                StmtKind::ForEach { var, .. } => Some(var.as_str()),
                StmtKind::While { step, .. } => step.var(),
                _ => None,
            };
            if let Some(n) = name.filter(|n| scope.is_global(n)) {
                assigned.insert(n);
            }
        }
        if !assigned.is_empty() {
            let names: Vec<&str> = assigned.into_iter().collect();
            self.push(1, format!("global {}", names.join(", ")), Some(func.id));
        }
        let mut ctx = FuncCtx {
            scope: &scope,
            loops: Vec::new(),
        };
        self.block(&mut ctx, &func.body, 1)
    }
}

const IDIV_HELPER: &str = "def _idiv(a, b):
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q";

const IMOD_HELPER: &str = "def _imod(a, b):
    return a - b * _idiv(a, b)";

/// Emits runnable source for `program` in `profile`.
pub fn emit_ground_truth(program: &Program, profile: &TargetProfile) -> Result<SourceText, CodegenError> {
    if profile.language_id != PYTHON3.language_id {
        return Err(CodegenError::UnknownProfile(profile.language_id.to_string()));
    }
    let mut body = Emitter {
        program,
        lines: Vec::new(),
        line_map: BTreeMap::new(),
        uses_idiv: false,
        uses_imod: false,
        uses_math: false,
    };
    for g in &program.globals {
        let init = match &g.init {
            Some(lit) => {
                let from = lit.type_tag();
                match (&from, &g.ty) {
                    (TypeTag::Int, TypeTag::Real) => py_real(match lit {
                        Literal::Int(i) => *i as f64,
                        _ => 0.0,
                    }),
                    (TypeTag::Char, TypeTag::Int) => match lit {
                        Literal::Char(c) => c.to_string(),
                        _ => "0".into(),
                    },
                    (TypeTag::Int, TypeTag::Char) => match lit {
                        Literal::Int(i) => format!("chr({i})"),
                        _ => zero_literal(&g.ty).into(),
                    },
                    _ => py_literal(lit).text,
                }
            }
            None => zero_literal(&g.ty).to_string(),
        };
        body.push(0, format!("{} = {init}", g.name), Some(g.id));
    }
    for (i, f) in program.funcs.iter().enumerate() {
        if i > 0 || !program.globals.is_empty() {
            body.lines.push(String::new());
            body.lines.push(String::new());
        }
        body.func(f)?;
    }

    let mut prelude: Vec<String> = Vec::new();
    if body.uses_math {
        prelude.push("import math".into());
    }
    let mut helpers = Vec::new();
    if body.uses_idiv {
        helpers.push(IDIV_HELPER);
    }
    if body.uses_imod {
        helpers.push(IMOD_HELPER);
    }
    for h in helpers {
        if !prelude.is_empty() {
            prelude.push(String::new());
            prelude.push(String::new());
        }
        prelude.extend(h.lines().map(String::from));
    }
    if !prelude.is_empty() {
        prelude.push(String::new());
        prelude.push(String::new());
    }
    let offset = prelude.len();
    let mut lines = prelude;
    lines.extend(body.lines);
    let mut code = lines.join("\n");
    code.push('\n');
    Ok(SourceText {
        code,
        entry_name: program.entry.clone(),
        profile_id: profile.language_id.to_string(),
        line_map: body.line_map.into_iter().map(|(l, n)| (l + offset, n)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uast::build::*;

    fn single(ret_ty: TypeTag, params: Vec<Binding>, locals: Vec<Binding>, body: Block) -> Program {
        Program::new(vec![], vec![func("__main__", params, ret_ty, locals, body)], "__main__")
    }

    #[test]
    fn returns_string_literal() {
        let p = single(TypeTag::String, vec![], vec![], vec![ret(string("Equal"))]);
        let src = emit_ground_truth(&p, &PYTHON3).unwrap();
        assert_eq!(src.code, "def __main__():\n    return \"Equal\"\n");
        assert_eq!(src.entry_name, "__main__");
    }

    #[test]
    fn integer_division_uses_helpers() {
        let p = single(TypeTag::Int, vec![], vec![], vec![ret(div(int(-7), int(2)))]);
        let src = emit_ground_truth(&p, &PYTHON3).unwrap();
        assert!(src.code.contains("return _idiv(-7, 2)"), "{}", src.code);
        assert!(src.code.starts_with("def _idiv(a, b):"));
        assert!(!src.code.contains("_imod"));
    }

    #[test]
    fn continue_is_preceded_by_the_update() {
        let p = single(
            TypeTag::Int,
            vec![b("var0", TypeTag::Int)],
            vec![b("var1", TypeTag::Int)],
            vec![
                assign(var("var1"), int(0)),
                while_inc(
                    lt(var("var1"), var("var0")),
                    "var1",
                    vec![if_(eq(var("var1"), int(2)), vec![cont()])],
                ),
                ret(var("var1")),
            ],
        );
        let src = emit_ground_truth(&p, &PYTHON3).unwrap();
        assert_eq!(
            src.code,
            "def __main__(var0):
    var1 = 0
    while var1 < var0:
        if var1 == 2:
            var1 += 1
            continue
        var1 += 1
    return var1
"
        );
        let cont_id = p.statements().iter().find(|s| matches!(s.kind, StmtKind::Continue)).unwrap().id;
        assert_eq!(src.line_map[&5], cont_id);
        assert_eq!(src.line_map[&6], cont_id);
    }

    #[test]
    fn chars_convert_at_arithmetic_sites() {
        let p = single(
            TypeTag::Char,
            vec![b("var0", TypeTag::Char)],
            vec![],
            vec![ret(ternary(
                and(ge(var("var0"), int(48)), le(var("var0"), int(57))),
                sub(var("var0"), int(48)),
                var("var0"),
            ))],
        );
        let src = emit_ground_truth(&p, &PYTHON3).unwrap();
        assert!(
            src.code.contains("return chr(ord(var0) - 48 if ord(var0) >= 48 and ord(var0) <= 57 else ord(var0))"),
            "{}",
            src.code
        );
    }

    #[test]
    fn precedence_is_minimal_but_sound() {
        let e = mul(add(var("var0"), int(1)), sub(var("var0"), sub(int(2), var("var0"))));
        let p = single(TypeTag::Int, vec![b("var0", TypeTag::Int)], vec![], vec![ret(e)]);
        let src = emit_ground_truth(&p, &PYTHON3).unwrap();
        assert!(src.code.contains("return (var0 + 1) * (var0 - (2 - var0))"), "{}", src.code);
    }

    #[test]
    fn python_string_literals() {
        assert_eq!(py_str("a\"b\\c\n"), "\"a\\\"b\\\\c\\n\"");
        assert_eq!(py_str("\u{1}"), "\"\\x01\"");
    }

    #[test]
    fn globals_get_declared_where_assigned() {
        let p = Program::new(
            vec![GlobalDecl::new("var9", TypeTag::Int, Some(Literal::Int(5)))],
            vec![func(
                "__main__",
                vec![],
                TypeTag::Int,
                vec![],
                vec![assign(var("var9"), add(var("var9"), int(1))), ret(var("var9"))],
            )],
            "__main__",
        );
        let src = emit_ground_truth(&p, &PYTHON3).unwrap();
        assert_eq!(
            src.code,
            "var9 = 5\n\n\ndef __main__():\n    global var9\n    var9 = var9 + 1\n    return var9\n"
        );
    }
}
