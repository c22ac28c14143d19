//! The universal-AST intermediate representation.
//!
//! Every statement, expression, global and function carries a [`NodeId`]
//! equal to its pre-order index in the program. Ids are assigned by
//! [`Program::renumber`], which every constructor path calls, so they are a
//! pure function of the tree shape.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Pre-order index of a node within its [`Program`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeTag {
    Int,
    Real,
    Bool,
    /// An integer code point.
    Char,
    String,
    List(Box<TypeTag>),
    Map(Box<TypeTag>, Box<TypeTag>),
    Set(Box<TypeTag>),
}

impl TypeTag {
    pub fn list(elem: TypeTag) -> Self {
        TypeTag::List(Box::new(elem))
    }

    pub fn map(key: TypeTag, value: TypeTag) -> Self {
        TypeTag::Map(Box::new(key), Box::new(value))
    }

    pub fn set(elem: TypeTag) -> Self {
        TypeTag::Set(Box::new(elem))
    }

    /// int, char or real.
    pub fn is_numeric(&self) -> bool {
        matches!(self, TypeTag::Int | TypeTag::Char | TypeTag::Real)
    }

    /// int or char, the operand types of truncating integer division.
    pub fn is_integral(&self) -> bool {
        matches!(self, TypeTag::Int | TypeTag::Char)
    }

    pub fn is_container(&self) -> bool {
        matches!(self, TypeTag::List(_) | TypeTag::Map(..) | TypeTag::Set(_))
    }

    /// Number of nested list levels (`list(list(int))` has depth 2).
    pub fn list_depth(&self) -> usize {
        match self {
            TypeTag::List(inner) => 1 + inner.list_depth(),
            _ => 0,
        }
    }

    /// The element type reached after `levels` list indexings.
    pub fn list_element(&self, levels: usize) -> Option<&TypeTag> {
        let mut ty = self;
        for _ in 0..levels {
            match ty {
                TypeTag::List(inner) => ty = inner,
                _ => return None,
            }
        }
        Some(ty)
    }
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeTag::Int => f.write_str("int"),
            TypeTag::Real => f.write_str("real"),
            TypeTag::Bool => f.write_str("bool"),
            TypeTag::Char => f.write_str("char"),
            TypeTag::String => f.write_str("string"),
            TypeTag::List(e) => write!(f, "list({e})"),
            TypeTag::Map(k, v) => write!(f, "map({k}, {v})"),
            TypeTag::Set(e) => write!(f, "set({e})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub const ALL: [BinOp; 13] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Mod,
        BinOp::Eq,
        BinOp::Neq,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::And,
        BinOp::Or,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::Div => "div",
            BinOp::Mod => "mod",
            BinOp::Eq => "eq",
            BinOp::Neq => "neq",
            BinOp::Lt => "lt",
            BinOp::Le => "le",
            BinOp::Gt => "gt",
            BinOp::Ge => "ge",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.name() == name)
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod)
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Neq | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

impl UnOp {
    pub fn name(self) -> &'static str {
        match self {
            UnOp::Neg => "neg",
            UnOp::Not => "not",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "neg" => Some(UnOp::Neg),
            "not" => Some(UnOp::Not),
            _ => None,
        }
    }
}

/// Registered builtin callees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Builtin {
    Len,
    Min,
    Max,
    Abs,
    ArrayIndex,
    ArrayPush,
    ArrayInitializer,
    ConcatString,
    StringSplit,
    Substring,
    MapGet,
    MapPut,
    SetAdd,
    SetContains,
    Sort,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    Exact(usize),
    /// array_initializer takes any number of dimension sizes.
    Variadic,
}

impl Arity {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Arity::Exact(k) => k == n,
            Arity::Variadic => true,
        }
    }
}

impl Builtin {
    pub const ALL: [Builtin; 15] = [
        Builtin::Len,
        Builtin::Min,
        Builtin::Max,
        Builtin::Abs,
        Builtin::ArrayIndex,
        Builtin::ArrayPush,
        Builtin::ArrayInitializer,
        Builtin::ConcatString,
        Builtin::StringSplit,
        Builtin::Substring,
        Builtin::MapGet,
        Builtin::MapPut,
        Builtin::SetAdd,
        Builtin::SetContains,
        Builtin::Sort,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Len => "len",
            Builtin::Min => "min",
            Builtin::Max => "max",
            Builtin::Abs => "abs",
            Builtin::ArrayIndex => "array_index",
            Builtin::ArrayPush => "array_push",
            Builtin::ArrayInitializer => "array_initializer",
            Builtin::ConcatString => "concat_string",
            Builtin::StringSplit => "string_split",
            Builtin::Substring => "substring",
            Builtin::MapGet => "map_get",
            Builtin::MapPut => "map_put",
            Builtin::SetAdd => "set_add",
            Builtin::SetContains => "set_contains",
            Builtin::Sort => "sort",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn arity(self) -> Arity {
        match self {
            Builtin::Len | Builtin::Abs | Builtin::StringSplit | Builtin::Sort => Arity::Exact(1),
            Builtin::Min
            | Builtin::Max
            | Builtin::ArrayIndex
            | Builtin::ArrayPush
            | Builtin::ConcatString
            | Builtin::MapGet
            | Builtin::SetAdd
            | Builtin::SetContains => Arity::Exact(2),
            Builtin::Substring | Builtin::MapPut => Arity::Exact(3),
            Builtin::ArrayInitializer => Arity::Variadic,
        }
    }

    /// Builtins that only make sense as statements (they produce no value).
    pub fn is_void(self) -> bool {
        matches!(
            self,
            Builtin::ArrayPush | Builtin::MapPut | Builtin::SetAdd | Builtin::Sort
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Callee {
    Builtin(Builtin),
    User(String),
}

impl Callee {
    pub fn name(&self) -> &str {
        match self {
            Callee::Builtin(b) => b.name(),
            Callee::User(name) => name,
        }
    }

    pub fn builtin(&self) -> Option<Builtin> {
        match self {
            Callee::Builtin(b) => Some(*b),
            Callee::User(_) => None,
        }
    }
}

/// A scalar constant; its type is implied by the variant.
#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Int(i64),
    Real(f64),
    Bool(bool),
    Char(u32),
    Str(String),
}

impl Literal {
    pub fn type_tag(&self) -> TypeTag {
        match self {
            Literal::Int(_) => TypeTag::Int,
            Literal::Real(_) => TypeTag::Real,
            Literal::Bool(_) => TypeTag::Bool,
            Literal::Char(_) => TypeTag::Char,
            Literal::Str(_) => TypeTag::String,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub id: NodeId,
    pub kind: ExprKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Const(Literal),
    Var(String),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Unary {
        op: UnOp,
        operand: Box<Expr>,
    },
    Ternary {
        cond: Box<Expr>,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
    Call {
        callee: Callee,
        args: Vec<Expr>,
    },
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr {
            id: NodeId::default(),
            kind,
        }
    }

    /// Const, Var and Call render without surrounding parentheses.
    pub fn is_atomic(&self) -> bool {
        matches!(
            self.kind,
            ExprKind::Const(_) | ExprKind::Var(_) | ExprKind::Call { .. }
        )
    }

    pub fn as_var(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Var(name) => Some(name),
            _ => None,
        }
    }

    pub fn as_builtin_call(&self, builtin: Builtin) -> Option<&[Expr]> {
        match &self.kind {
            ExprKind::Call {
                callee: Callee::Builtin(b),
                args,
            } if *b == builtin => Some(args),
            _ => None,
        }
    }

    /// Splits an assignment target into its root variable and index chain,
    /// outermost index last. `None` when the expression is not an lvalue.
    pub fn lvalue_path(&self) -> Option<(&str, Vec<&Expr>)> {
        match &self.kind {
            ExprKind::Var(name) => Some((name, Vec::new())),
            ExprKind::Call {
                callee: Callee::Builtin(Builtin::ArrayIndex),
                args,
            } if args.len() == 2 => {
                let (root, mut indices) = args[0].lvalue_path()?;
                indices.push(&args[1]);
                Some((root, indices))
            }
            _ => None,
        }
    }

    /// Direct sub-expressions in evaluation order.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Const(_) | ExprKind::Var(_) => Vec::new(),
            ExprKind::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            ExprKind::Unary { operand, .. } => vec![operand],
            ExprKind::Ternary {
                cond,
                then,
                otherwise,
            } => vec![cond, then, otherwise],
            ExprKind::Call { args, .. } => args.iter().collect(),
        }
    }

    fn children_mut(&mut self) -> Vec<&mut Expr> {
        match &mut self.kind {
            ExprKind::Const(_) | ExprKind::Var(_) => Vec::new(),
            ExprKind::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            ExprKind::Unary { operand, .. } => vec![operand],
            ExprKind::Ternary {
                cond,
                then,
                otherwise,
            } => vec![cond, then, otherwise],
            ExprKind::Call { args, .. } => args.iter_mut().collect(),
        }
    }

    /// Pre-order walk over this expression and all descendants.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for child in self.children() {
            child.walk(f);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    None,
    Increment(String),
    Decrement(String),
}

impl Step {
    pub fn var(&self) -> Option<&str> {
        match self {
            Step::None => None,
            Step::Increment(v) | Step::Decrement(v) => Some(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Binding {
    pub name: String,
    pub ty: TypeTag,
}

impl Binding {
    pub fn new(name: impl Into<String>, ty: TypeTag) -> Self {
        Binding {
            name: name.into(),
            ty,
        }
    }
}

pub type Block = Vec<Stmt>;

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub id: NodeId,
    pub kind: StmtKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Declare(Vec<Binding>),
    Assign {
        target: Expr,
        value: Expr,
    },
    If {
        cond: Expr,
        then: Block,
        otherwise: Option<Block>,
    },
    While {
        cond: Expr,
        body: Block,
        step: Step,
    },
    ForEach {
        var: String,
        iterable: Expr,
        body: Block,
    },
    Continue,
    Break,
    Return(Option<Expr>),
    ExprStmt(Expr),
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt {
            id: NodeId::default(),
            kind,
        }
    }

    /// Expressions owned directly by this statement, in evaluation order.
    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Declare(_) | StmtKind::Continue | StmtKind::Break => Vec::new(),
            StmtKind::Assign { target, value } => vec![target, value],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::ForEach { iterable, .. } => vec![iterable],
            StmtKind::Return(value) => value.iter().collect(),
            StmtKind::ExprStmt(e) => vec![e],
        }
    }

    /// Nested blocks, in source order.
    pub fn blocks(&self) -> Vec<&Block> {
        match &self.kind {
            StmtKind::If {
                then, otherwise, ..
            } => {
                let mut v = vec![then];
                if let Some(o) = otherwise {
                    v.push(o);
                }
                v
            }
            StmtKind::While { body, .. } | StmtKind::ForEach { body, .. } => vec![body],
            _ => Vec::new(),
        }
    }

    pub fn is_loop(&self) -> bool {
        matches!(self.kind, StmtKind::While { .. } | StmtKind::ForEach { .. })
    }

    /// Pre-order walk over this statement and every nested statement.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        for block in self.blocks() {
            for stmt in block {
                stmt.walk(f);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FuncDef {
    pub id: NodeId,
    pub name: String,
    pub params: Vec<Binding>,
    pub return_type: TypeTag,
    pub locals: Vec<Binding>,
    pub body: Block,
}

impl FuncDef {
    pub fn new(
        name: impl Into<String>,
        params: Vec<Binding>,
        return_type: TypeTag,
        locals: Vec<Binding>,
        body: Block,
    ) -> Self {
        FuncDef {
            id: NodeId::default(),
            name: name.into(),
            params,
            return_type,
            locals,
            body,
        }
    }

    /// Every statement of the body, pre-order.
    pub fn statements(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        for stmt in &self.body {
            stmt.walk(&mut |s| out.push(s));
        }
        out
    }
}

/// A module-level variable. Without an initializer it starts at the zero
/// value of its type (empty for containers).
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalDecl {
    pub id: NodeId,
    pub name: String,
    pub ty: TypeTag,
    pub init: Option<Literal>,
}

impl GlobalDecl {
    pub fn new(name: impl Into<String>, ty: TypeTag, init: Option<Literal>) -> Self {
        GlobalDecl {
            id: NodeId::default(),
            name: name.into(),
            ty,
            init,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub globals: Vec<GlobalDecl>,
    pub funcs: Vec<FuncDef>,
    pub entry: String,
}

impl Program {
    /// Builds a program and assigns pre-order node ids.
    pub fn new(globals: Vec<GlobalDecl>, funcs: Vec<FuncDef>, entry: impl Into<String>) -> Self {
        let mut program = Program {
            globals,
            funcs,
            entry: entry.into(),
        };
        program.renumber();
        program
    }

    pub fn func(&self, name: &str) -> Option<&FuncDef> {
        self.funcs.iter().find(|f| f.name == name)
    }

    pub fn entry_func(&self) -> Option<&FuncDef> {
        self.func(&self.entry)
    }

    pub fn global(&self, name: &str) -> Option<&GlobalDecl> {
        self.globals.iter().find(|g| g.name == name)
    }

    /// Reassigns every node id to its pre-order index: globals, then each
    /// function followed by its statements and their expressions.
    pub fn renumber(&mut self) {
        let mut next = 0u32;
        let mut take = || {
            let id = NodeId(next);
            next += 1;
            id
        };
        for g in &mut self.globals {
            g.id = take();
        }
        for f in &mut self.funcs {
            f.id = take();
            for stmt in &mut f.body {
                renumber_stmt(stmt, &mut take);
            }
        }
    }

    /// Total number of id-carrying nodes.
    pub fn node_count(&self) -> usize {
        let mut n = self.globals.len() + self.funcs.len();
        for f in &self.funcs {
            for stmt in f.statements() {
                n += 1;
                for e in stmt.exprs() {
                    e.walk(&mut |_| n += 1);
                }
            }
        }
        n
    }

    /// Every statement in the program, pre-order.
    pub fn statements(&self) -> Vec<&Stmt> {
        self.funcs.iter().flat_map(|f| f.statements()).collect()
    }

    /// Every expression in the program, pre-order.
    pub fn expressions(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        for stmt in self.statements() {
            for e in stmt.exprs() {
                e.walk(&mut |x| out.push(x));
            }
        }
        out
    }
}

fn renumber_stmt(stmt: &mut Stmt, take: &mut impl FnMut() -> NodeId) {
    stmt.id = take();
    match &mut stmt.kind {
        StmtKind::Declare(_) | StmtKind::Continue | StmtKind::Break => {}
        StmtKind::Assign { target, value } => {
            renumber_expr(target, take);
            renumber_expr(value, take);
        }
        StmtKind::If {
            cond,
            then,
            otherwise,
        } => {
            renumber_expr(cond, take);
            for s in then {
                renumber_stmt(s, take);
            }
            for s in otherwise.iter_mut().flatten() {
                renumber_stmt(s, take);
            }
        }
        StmtKind::While { cond, body, .. } => {
            renumber_expr(cond, take);
            for s in body {
                renumber_stmt(s, take);
            }
        }
        StmtKind::ForEach { iterable, body, .. } => {
            renumber_expr(iterable, take);
            for s in body {
                renumber_stmt(s, take);
            }
        }
        StmtKind::Return(value) => {
            if let Some(e) = value {
                renumber_expr(e, take);
            }
        }
        StmtKind::ExprStmt(e) => renumber_expr(e, take),
    }
}

fn renumber_expr(expr: &mut Expr, take: &mut impl FnMut() -> NodeId) {
    expr.id = take();
    for child in expr.children_mut() {
        renumber_expr(child, take);
    }
}
