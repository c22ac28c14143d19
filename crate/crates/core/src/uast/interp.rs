//! Tree-walking interpreter for validated programs.
//!
//! Integer division truncates toward zero and `mod` takes the dividend's
//! sign unless [`IntDivision`] selects another convention. Containers have
//! reference semantics, like the emitted Python.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::*;
use super::typeck::{self, FuncScope};
use super::value::Value;

pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;
pub const DEFAULT_MAX_DEPTH: usize = 200;
/// Longest string or list a program may build before it faults.
pub const MAX_CONTAINER_LEN: usize = 1_000_000;

/// Budget for one interpretation. A step is one executed statement or one
/// loop-condition check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_steps: u64,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_steps: DEFAULT_MAX_STEPS,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

impl Limits {
    pub fn steps(max_steps: u64) -> Self {
        Limits {
            max_steps,
            ..Limits::default()
        }
    }
}

/// How `div`/`mod` behave on integral operands.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum IntDivision {
    /// C semantics: quotient truncates, remainder follows the dividend.
    #[default]
    Truncate,
    /// Python `//` and `%`.
    Floor,
    /// Python `/` (real quotient) and `%`; reals are not narrowed when
    /// stored into integer slots.
    True,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    IndexOob,
    DivByZero,
    TypeError,
    UnsetValue,
    Overflow,
    RecursionDepth,
}

impl FaultKind {
    pub fn name(self) -> &'static str {
        match self {
            FaultKind::IndexOob => "index-oob",
            FaultKind::DivByZero => "div-by-zero",
            FaultKind::TypeError => "type-error",
            FaultKind::UnsetValue => "unset-value",
            FaultKind::Overflow => "overflow",
            FaultKind::RecursionDepth => "recursion-depth",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{} at node {node}: {message}", kind.name())]
pub struct RuntimeFault {
    pub kind: FaultKind,
    pub node: NodeId,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum InterpError {
    #[error("runtime fault: {0}")]
    Fault(#[from] RuntimeFault),
    #[error("step limit of {limit} exceeded")]
    StepLimitExceeded { limit: u64 },
    #[error("arguments do not match the entry signature: {0}")]
    BadArguments(String),
}

/// Loop events recorded by [`interpret_traced`].
#[derive(Clone, Debug, PartialEq)]
pub enum TraceEvent {
    /// A While condition was evaluated; `step_value` is the annotated
    /// variable's value at that moment.
    Check {
        stmt: NodeId,
        step_value: Option<i64>,
        result: bool,
    },
    /// A While loop finished because its condition failed.
    Exit { stmt: NodeId, step_value: Option<i64> },
}

#[derive(Clone, Debug)]
enum Rv {
    Int(i64),
    Real(f64),
    Bool(bool),
    Char(u32),
    Str(Rc<str>),
    List(Rc<RefCell<Vec<Rv>>>),
    Map(Rc<RefCell<Vec<(Rv, Rv)>>>),
    Set(Rc<RefCell<Vec<Rv>>>),
    Null,
}

fn list(items: Vec<Rv>) -> Rv {
    Rv::List(Rc::new(RefCell::new(items)))
}

impl Rv {
    fn from_value(v: &Value) -> Rv {
        match v {
            Value::Int(i) => Rv::Int(*i),
            Value::Real(r) => Rv::Real(*r),
            Value::Bool(b) => Rv::Bool(*b),
            Value::Char(c) => Rv::Char(*c),
            Value::Str(s) => Rv::Str(s.as_str().into()),
            Value::List(items) => list(items.iter().map(Rv::from_value).collect()),
            Value::Map(entries) => Rv::Map(Rc::new(RefCell::new(
                entries
                    .iter()
                    .map(|(k, v)| (Rv::from_value(k), Rv::from_value(v)))
                    .collect(),
            ))),
            Value::Set(items) => Rv::Set(Rc::new(RefCell::new(items.iter().map(Rv::from_value).collect()))),
            Value::Null => Rv::Null,
        }
    }

    fn to_value(&self) -> Value {
        match self {
            Rv::Int(i) => Value::Int(*i),
            Rv::Real(r) => Value::Real(*r),
            Rv::Bool(b) => Value::Bool(*b),
            Rv::Char(c) => Value::Char(*c),
            Rv::Str(s) => Value::Str(s.to_string()),
            Rv::List(items) => Value::List(items.borrow().iter().map(Rv::to_value).collect()),
            Rv::Map(entries) => Value::Map(
                entries
                    .borrow()
                    .iter()
                    .map(|(k, v)| (k.to_value(), v.to_value()))
                    .collect(),
            ),
            Rv::Set(items) => {
                let mut items = items.borrow().clone();
                items.sort_by(py_cmp);
                Value::Set(items.iter().map(Rv::to_value).collect())
            }
            Rv::Null => Value::Null,
        }
    }

    fn describe(&self) -> &'static str {
        match self {
            Rv::Int(_) => "int",
            Rv::Real(_) => "real",
            Rv::Bool(_) => "bool",
            Rv::Char(_) => "char",
            Rv::Str(_) => "string",
            Rv::List(_) => "list",
            Rv::Map(_) => "map",
            Rv::Set(_) => "set",
            Rv::Null => "null",
        }
    }

    fn integral(&self) -> Option<i64> {
        match self {
            Rv::Int(i) => Some(*i),
            Rv::Char(c) => Some(*c as i64),
            _ => None,
        }
    }

    fn real(&self) -> Option<f64> {
        match self {
            Rv::Real(r) => Some(*r),
            other => other.integral().map(|i| i as f64),
        }
    }
}

fn scalar_str(v: &Rv) -> Option<String> {
    match v {
        Rv::Str(s) => Some(s.to_string()),
        Rv::Char(c) => char::from_u32(*c).map(String::from),
        _ => None,
    }
}

/// Python equality over same-typed values (numbers compare by value).
fn py_eq(a: &Rv, b: &Rv) -> bool {
    match (a, b) {
        (Rv::Char(x), Rv::Char(y)) => x == y,
        (Rv::Int(_) | Rv::Char(_), Rv::Int(_) | Rv::Char(_)) => a.integral() == b.integral(),
        (Rv::Real(_) | Rv::Int(_) | Rv::Char(_), Rv::Real(_) | Rv::Int(_) | Rv::Char(_)) => a.real() == b.real(),
        (Rv::Bool(x), Rv::Bool(y)) => x == y,
        (Rv::Str(x), Rv::Str(y)) => x == y,
        (Rv::List(x), Rv::List(y)) => {
            let (x, y) = (x.borrow(), y.borrow());
            x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| py_eq(p, q))
        }
        (Rv::Set(x), Rv::Set(y)) => {
            let (x, y) = (x.borrow(), y.borrow());
            x.len() == y.len() && x.iter().all(|p| y.iter().any(|q| py_eq(p, q)))
        }
        (Rv::Map(x), Rv::Map(y)) => {
            let (x, y) = (x.borrow(), y.borrow());
            x.len() == y.len()
                && x.iter().all(|(k, v)| y.iter().any(|(k2, v2)| py_eq(k, k2) && py_eq(v, v2)))
        }
        (Rv::Null, Rv::Null) => true,
        _ => false,
    }
}

/// Python ordering for sortable values.
fn py_cmp(a: &Rv, b: &Rv) -> Ordering {
    match (a, b) {
        (Rv::Str(x), Rv::Str(y)) => x.cmp(y),
        (Rv::Bool(x), Rv::Bool(y)) => x.cmp(y),
        (Rv::List(x), Rv::List(y)) => {
            let (x, y) = (x.borrow(), y.borrow());
            for (p, q) in x.iter().zip(y.iter()) {
                let o = py_cmp(p, q);
                if o != Ordering::Equal {
                    return o;
                }
            }
            x.len().cmp(&y.len())
        }
        _ => match (a.integral(), b.integral()) {
            (Some(x), Some(y)) => x.cmp(&y),
            _ => a
                .real()
                .zip(b.real())
                .and_then(|(x, y)| x.partial_cmp(&y))
                .unwrap_or(Ordering::Equal),
        },
    }
}

fn zero_value(ty: &TypeTag) -> Rv {
    match ty {
        TypeTag::Int => Rv::Int(0),
        TypeTag::Real => Rv::Real(0.0),
        TypeTag::Bool => Rv::Bool(false),
        TypeTag::Char => Rv::Char(0),
        TypeTag::String => Rv::Str("".into()),
        TypeTag::List(_) => list(Vec::new()),
        TypeTag::Map(..) => Rv::Map(Rc::new(RefCell::new(Vec::new()))),
        TypeTag::Set(_) => Rv::Set(Rc::new(RefCell::new(Vec::new()))),
    }
}

fn literal(lit: &Literal) -> Rv {
    match lit {
        Literal::Int(i) => Rv::Int(*i),
        Literal::Real(r) => Rv::Real(*r),
        Literal::Bool(b) => Rv::Bool(*b),
        Literal::Char(c) => Rv::Char(*c),
        Literal::Str(s) => Rv::Str(s.as_str().into()),
    }
}

/// Python slice bounds `[start:stop]` over a sequence of `len` items.
fn slice_bounds(len: usize, start: i64, stop: i64) -> (usize, usize) {
    let len = len as i64;
    let clamp = |i: i64| -> i64 {
        let i = if i < 0 { i + len } else { i };
        i.clamp(0, len)
    };
    let (s, e) = (clamp(start), clamp(stop));
    (s as usize, e.max(s) as usize)
}

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Rv),
}

type Eval<T> = Result<T, InterpError>;

struct Machine<'p> {
    program: &'p Program,
    scopes: HashMap<&'p str, FuncScope<'p>>,
    /// Static type of every value-producing expression.
    types: HashMap<NodeId, TypeTag>,
    /// Static type of every assignment target.
    slots: HashMap<NodeId, TypeTag>,
    globals: HashMap<&'p str, Rv>,
    limits: Limits,
    division: IntDivision,
    steps: u64,
    depth: usize,
    trace: Option<Vec<TraceEvent>>,
}

struct Frame<'p> {
    func: &'p FuncDef,
    vars: HashMap<&'p str, Rv>,
}

fn fault(kind: FaultKind, node: NodeId, message: impl Into<String>) -> InterpError {
    InterpError::Fault(RuntimeFault {
        kind,
        node,
        message: message.into(),
    })
}

impl<'p> Machine<'p> {
    fn new(program: &'p Program, limits: Limits, division: IntDivision) -> Self {
        let mut scopes = HashMap::new();
        let mut types = HashMap::new();
        let mut slots = HashMap::new();
        for func in &program.funcs {
            let scope = FuncScope::new(program, func);
            for stmt in func.statements() {
                if let StmtKind::Assign { target, .. } = &stmt.kind {
                    if let Ok(t) = typeck::lvalue_type(&scope, target) {
                        slots.insert(stmt.id, t);
                    }
                }
                for e in stmt.exprs() {
                    e.walk(&mut |x| {
                        if let Ok(Some(t)) = typeck::type_of(&scope, x) {
                            types.insert(x.id, t);
                        }
                    });
                }
            }
            scopes.insert(func.name.as_str(), scope);
        }
        let globals = program
            .globals
            .iter()
            .map(|g| {
                let v = match &g.init {
                    Some(lit) => literal(lit),
                    None => zero_value(&g.ty),
                };
                (g.name.as_str(), v)
            })
            .collect();
        Machine {
            program,
            scopes,
            types,
            slots,
            globals,
            limits,
            division,
            steps: 0,
            depth: 0,
            trace: None,
        }
    }

    fn step(&mut self) -> Eval<()> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(InterpError::StepLimitExceeded {
                limit: self.limits.max_steps,
            });
        }
        Ok(())
    }

    /// Converts `v` for storage in a slot of type `ty`.
    fn convert(&self, v: Rv, ty: &TypeTag, node: NodeId) -> Eval<Rv> {
        Ok(match (ty, v) {
            (TypeTag::Int, Rv::Char(c)) => Rv::Int(c as i64),
            (TypeTag::Int, Rv::Real(r)) if self.division != IntDivision::True => {
                if !r.is_finite() || r.abs() >= 9.2e18 {
                    return Err(fault(FaultKind::Overflow, node, format!("cannot convert {r} to int")));
                }
                Rv::Int(r.trunc() as i64)
            }
            (TypeTag::Char, Rv::Int(i)) => match u32::try_from(i).ok().filter(|c| char::from_u32(*c).is_some()) {
                Some(c) => Rv::Char(c),
                None => return Err(fault(FaultKind::TypeError, node, format!("{i} is not a character code"))),
            },
            (TypeTag::Char, Rv::Real(r)) if self.division != IntDivision::True => {
                let narrowed = self.convert(Rv::Real(r), &TypeTag::Int, node)?;
                return self.convert(narrowed, &TypeTag::Char, node);
            }
            (TypeTag::Real, Rv::Int(i)) => Rv::Real(i as f64),
            (TypeTag::Real, Rv::Char(c)) => Rv::Real(c as f64),
            (_, v) => v,
        })
    }

    fn static_type(&self, e: &Expr) -> Option<&TypeTag> {
        self.types.get(&e.id)
    }

    fn read(&self, frame: &Frame<'p>, name: &str, node: NodeId) -> Eval<Rv> {
        let found = if self.scopes[frame.func.name.as_str()].is_global(name) {
            self.globals.get(name)
        } else {
            frame.vars.get(name)
        };
        found
            .cloned()
            .ok_or_else(|| fault(FaultKind::UnsetValue, node, format!("{name} read before assignment")))
    }

    fn write(&mut self, frame: &mut Frame<'p>, name: &'p str, v: Rv) {
        if self.scopes[frame.func.name.as_str()].is_global(name) {
            self.globals.insert(name, v);
        } else {
            frame.vars.insert(name, v);
        }
    }

    fn call_func(&mut self, func: &'p FuncDef, args: Vec<Rv>, node: NodeId) -> Eval<Rv> {
        if self.depth >= self.limits.max_depth {
            return Err(fault(FaultKind::RecursionDepth, node, "maximum call depth exceeded"));
        }
        let mut frame = Frame {
            func,
            vars: HashMap::new(),
        };
        for (param, arg) in func.params.iter().zip(args) {
            let v = self.convert(arg, &param.ty, node)?;
            frame.vars.insert(param.name.as_str(), v);
        }
        self.depth += 1;
        let flow = self.exec_block(&mut frame, &func.body);
        self.depth -= 1;
        match flow? {
            Flow::Return(v) => self.convert(v, &func.return_type, node),
            _ => Ok(Rv::Null),
        }
    }

    fn exec_block(&mut self, frame: &mut Frame<'p>, block: &'p [Stmt]) -> Eval<Flow> {
        for stmt in block {
            match self.exec(frame, stmt)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn step_value(&self, frame: &Frame<'p>, step: &Step) -> Option<i64> {
        step.var().and_then(|v| self.read(frame, v, NodeId(0)).ok()).and_then(|v| v.integral())
    }

    fn apply_step(&mut self, frame: &mut Frame<'p>, step: &'p Step, node: NodeId) -> Eval<()> {
        let (name, delta) = match step {
            Step::None => return Ok(()),
            Step::Increment(v) => (v.as_str(), 1),
            Step::Decrement(v) => (v.as_str(), -1),
        };
        let current = self.read(frame, name, node)?;
        let next = match current {
            Rv::Int(i) => Rv::Int(
                i.checked_add(delta)
                    .ok_or_else(|| fault(FaultKind::Overflow, node, "integer overflow"))?,
            ),
            Rv::Real(r) => Rv::Real(r + delta as f64),
            other => {
                return Err(fault(
                    FaultKind::TypeError,
                    node,
                    format!("cannot step a {}", other.describe()),
                ))
            }
        };
        self.write(frame, name, next);
        Ok(())
    }

    fn truthy(&mut self, frame: &mut Frame<'p>, cond: &'p Expr) -> Eval<bool> {
        match self.eval(frame, cond)? {
            Rv::Bool(b) => Ok(b),
            other => Err(fault(
                FaultKind::TypeError,
                cond.id,
                format!("condition is a {}", other.describe()),
            )),
        }
    }

    fn exec(&mut self, frame: &mut Frame<'p>, stmt: &'p Stmt) -> Eval<Flow> {
        self.step()?;
        match &stmt.kind {
            StmtKind::Declare(_) => {}
            StmtKind::Assign { target, value } => {
                let v = match value.as_builtin_call(Builtin::ArrayInitializer) {
                    Some(dims) => {
                        let sizes = dims
                            .iter()
                            .map(|d| self.int_arg(frame, d))
                            .collect::<Eval<Vec<_>>>()?;
                        let ty = self.slots.get(&stmt.id).cloned().unwrap_or(TypeTag::list(TypeTag::Int));
                        self.initializer(&ty, &sizes)
                    }
                    None => self.eval(frame, value)?,
                };
                let slot = self.slots.get(&stmt.id).cloned();
                let v = match &slot {
                    Some(ty) => self.convert(v, ty, stmt.id)?,
                    None => v,
                };
                self.assign(frame, target, v)?;
            }
            StmtKind::If {
                cond,
                then,
                otherwise,
            } => {
                if self.truthy(frame, cond)? {
                    return self.exec_block(frame, then);
                } else if let Some(o) = otherwise {
                    return self.exec_block(frame, o);
                }
            }
            StmtKind::While { cond, body, step } => loop {
                self.step()?;
                let ok = self.truthy(frame, cond)?;
                if self.trace.is_some() {
                    let step_value = self.step_value(frame, step);
                    let Some(events) = self.trace.as_mut() else { unreachable!() };
                    events.push(TraceEvent::Check {
                        stmt: stmt.id,
                        step_value,
                        result: ok,
                    });
                    if !ok {
                        events.push(TraceEvent::Exit {
                            stmt: stmt.id,
                            step_value,
                        });
                    }
                }
                if !ok {
                    break;
                }
                match self.exec_block(frame, body)? {
                    Flow::Break => break,
                    Flow::Return(v) => return Ok(Flow::Return(v)),
                    Flow::Normal | Flow::Continue => self.apply_step(frame, step, stmt.id)?,
                }
            },
            StmtKind::ForEach {
                var,
                iterable,
                body,
            } => {
                let elem_ty = self
                    .static_type(iterable)
                    .and_then(typeck::iteration_element);
                let source = self.eval(frame, iterable)?;
                let snapshot: Option<Vec<Rv>> = match &source {
                    Rv::List(_) => None,
                    Rv::Str(s) => Some(s.chars().map(|c| Rv::Char(c as u32)).collect()),
                    Rv::Map(m) => Some(m.borrow().iter().map(|(k, _)| k.clone()).collect()),
                    Rv::Set(s) => {
                        let mut items = s.borrow().clone();
                        items.sort_by(py_cmp);
                        Some(items)
                    }
                    other => {
                        return Err(fault(
                            FaultKind::TypeError,
                            iterable.id,
                            format!("cannot iterate over a {}", other.describe()),
                        ))
                    }
                };
                let mut i = 0usize;
                loop {
                    let item = match (&snapshot, &source) {
                        (Some(items), _) => items.get(i).cloned(),
                        (None, Rv::List(items)) => items.borrow().get(i).cloned(),
                        _ => None,
                    };
                    let Some(item) = item else { break };
                    i += 1;
                    let item = match &elem_ty {
                        Some(t) => self.convert(item, t, stmt.id)?,
                        None => item,
                    };
                    self.write(frame, var.as_str(), item);
                    match self.exec_block(frame, body)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
            }
            StmtKind::Continue => return Ok(Flow::Continue),
            StmtKind::Break => return Ok(Flow::Break),
            StmtKind::Return(value) => {
                let v = match value {
                    Some(e) => self.eval(frame, e)?,
                    None => Rv::Null,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::ExprStmt(e) => {
                self.eval_call(frame, e, true)?;
            }
        }
        Ok(Flow::Normal)
    }

    fn initializer(&self, ty: &TypeTag, sizes: &[i64]) -> Rv {
        match sizes.split_first() {
            None => zero_value(ty),
            Some((n, rest)) => {
                let elem = ty.list_element(1).cloned().unwrap_or(TypeTag::Int);
                let count = (*n).max(0) as usize;
                list((0..count).map(|_| self.initializer(&elem, rest)).collect())
            }
        }
    }

    fn assign(&mut self, frame: &mut Frame<'p>, target: &'p Expr, v: Rv) -> Eval<()> {
        let Some((root, indices)) = target.lvalue_path() else {
            return Err(fault(FaultKind::TypeError, target.id, "invalid assignment target"));
        };
        let Some((last, walk)) = indices.split_last() else {
            let name = match &target.kind {
                ExprKind::Var(n) => n.as_str(),
                _ => unreachable!("lvalue without indices is a variable"),
            };
            self.write(frame, name, v);
            return Ok(());
        };
        let mut container = self.read(frame, root, target.id)?;
        for index in walk {
            let i = self.int_arg(frame, index)?;
            container = self.index(&container, i, index.id)?;
        }
        let i = self.int_arg(frame, last)?;
        match &container {
            Rv::List(items) => {
                let mut items = items.borrow_mut();
                let len = items.len();
                match usize::try_from(i).ok().filter(|i| *i < len) {
                    Some(i) => items[i] = v,
                    None => {
                        return Err(fault(
                            FaultKind::IndexOob,
                            last.id,
                            format!("index {i} out of range for length {len}"),
                        ))
                    }
                }
            }
            other => {
                return Err(fault(
                    FaultKind::TypeError,
                    target.id,
                    format!("cannot assign into a {}", other.describe()),
                ))
            }
        }
        Ok(())
    }

    fn index(&self, container: &Rv, i: i64, node: NodeId) -> Eval<Rv> {
        let oob = |len: usize| fault(FaultKind::IndexOob, node, format!("index {i} out of range for length {len}"));
        match container {
            Rv::List(items) => {
                let items = items.borrow();
                usize::try_from(i)
                    .ok()
                    .and_then(|i| items.get(i).cloned())
                    .ok_or_else(|| oob(items.len()))
            }
            Rv::Str(s) => usize::try_from(i)
                .ok()
                .and_then(|i| s.chars().nth(i))
                .map(|c| Rv::Char(c as u32))
                .ok_or_else(|| oob(s.chars().count())),
            other => Err(fault(FaultKind::TypeError, node, format!("cannot index a {}", other.describe()))),
        }
    }

    fn int_arg(&mut self, frame: &mut Frame<'p>, e: &'p Expr) -> Eval<i64> {
        let v = self.eval(frame, e)?;
        v.integral()
            .ok_or_else(|| fault(FaultKind::TypeError, e.id, format!("expected an integer, got a {}", v.describe())))
    }

    fn eval(&mut self, frame: &mut Frame<'p>, e: &'p Expr) -> Eval<Rv> {
        match &e.kind {
            ExprKind::Const(lit) => Ok(literal(lit)),
            ExprKind::Var(name) => self.read(frame, name, e.id),
            ExprKind::Binary { op, lhs, rhs } => match op {
                BinOp::And | BinOp::Or => {
                    let l = self.truthy(frame, lhs)?;
                    if (*op == BinOp::And) != l {
                        return Ok(Rv::Bool(l));
                    }
                    Ok(Rv::Bool(self.truthy(frame, rhs)?))
                }
                _ => {
                    let l = self.eval(frame, lhs)?;
                    let r = self.eval(frame, rhs)?;
                    self.binary(*op, l, r, e.id)
                }
            },
            ExprKind::Unary { op, operand } => {
                let v = self.eval(frame, operand)?;
                match (op, v) {
                    (UnOp::Not, Rv::Bool(b)) => Ok(Rv::Bool(!b)),
                    (UnOp::Neg, Rv::Real(r)) => Ok(Rv::Real(-r)),
                    (UnOp::Neg, v) if v.integral().is_some() => v
                        .integral()
                        .and_then(i64::checked_neg)
                        .map(Rv::Int)
                        .ok_or_else(|| fault(FaultKind::Overflow, e.id, "integer overflow")),
                    (op, v) => Err(fault(
                        FaultKind::TypeError,
                        e.id,
                        format!("{} of a {}", op.name(), v.describe()),
                    )),
                }
            }
            ExprKind::Ternary {
                cond,
                then,
                otherwise,
            } => {
                let v = if self.truthy(frame, cond)? {
                    self.eval(frame, then)?
                } else {
                    self.eval(frame, otherwise)?
                };
                self.widen(v, e)
            }
            ExprKind::Call { .. } => self.eval_call(frame, e, false),
        }
    }

    /// Widens an integral result to real where the static type is real.
    fn widen(&self, v: Rv, e: &Expr) -> Eval<Rv> {
        match self.static_type(e) {
            Some(TypeTag::Real) => self.convert(v, &TypeTag::Real, e.id),
            _ => Ok(v),
        }
    }

    fn binary(&self, op: BinOp, l: Rv, r: Rv, node: NodeId) -> Eval<Rv> {
        let overflow = || fault(FaultKind::Overflow, node, "integer overflow");
        let div_zero = || fault(FaultKind::DivByZero, node, "division by zero");
        if op.is_comparison() {
            let result = match op {
                BinOp::Eq => py_eq(&l, &r),
                BinOp::Neq => !py_eq(&l, &r),
                _ => {
                    let comparable = matches!((&l, &r), (Rv::Str(_), Rv::Str(_)))
                        || (l.real().is_some() && r.real().is_some());
                    if !comparable {
                        return Err(fault(
                            FaultKind::TypeError,
                            node,
                            format!("cannot order {} and {}", l.describe(), r.describe()),
                        ));
                    }
                    let o = py_cmp(&l, &r);
                    if matches!((l.real(), r.real()), (Some(a), Some(b)) if a.is_nan() || b.is_nan()) {
                        false
                    } else {
                        match op {
                            BinOp::Lt => o == Ordering::Less,
                            BinOp::Le => o != Ordering::Greater,
                            BinOp::Gt => o == Ordering::Greater,
                            _ => o != Ordering::Less,
                        }
                    }
                }
            };
            return Ok(Rv::Bool(result));
        }
        if let (Some(a), Some(b)) = (l.integral(), r.integral()) {
            return Ok(match op {
                BinOp::Add => Rv::Int(a.checked_add(b).ok_or_else(overflow)?),
                BinOp::Sub => Rv::Int(a.checked_sub(b).ok_or_else(overflow)?),
                BinOp::Mul => Rv::Int(a.checked_mul(b).ok_or_else(overflow)?),
                BinOp::Div if b == 0 => return Err(div_zero()),
                BinOp::Mod if b == 0 => return Err(div_zero()),
                BinOp::Div => match self.division {
                    IntDivision::Truncate => Rv::Int(a.checked_div(b).ok_or_else(overflow)?),
                    IntDivision::Floor => {
                        let q = a.checked_div(b).ok_or_else(overflow)?;
                        Rv::Int(if a % b != 0 && ((a < 0) != (b < 0)) { q - 1 } else { q })
                    }
                    IntDivision::True => Rv::Real(a as f64 / b as f64),
                },
                BinOp::Mod => match self.division {
                    IntDivision::Truncate => Rv::Int(a.checked_rem(b).ok_or_else(overflow)?),
                    _ => {
                        let m = a.checked_rem(b).ok_or_else(overflow)?;
                        Rv::Int(if m != 0 && ((m < 0) != (b < 0)) { m + b } else { m })
                    }
                },
                _ => unreachable!("logical operators short-circuit earlier"),
            });
        }
        let (Some(a), Some(b)) = (l.real(), r.real()) else {
            return Err(fault(
                FaultKind::TypeError,
                node,
                format!("{} of {} and {}", op.name(), l.describe(), r.describe()),
            ));
        };
        Ok(Rv::Real(match op {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div if b == 0.0 => return Err(div_zero()),
            BinOp::Mod if b == 0.0 => return Err(div_zero()),
            BinOp::Div => a / b,
            BinOp::Mod => {
                let m = a % b;
                if self.division != IntDivision::Truncate && m != 0.0 && ((m < 0.0) != (b < 0.0)) {
                    m + b
                } else {
                    m
                }
            }
            _ => unreachable!("logical operators short-circuit earlier"),
        }))
    }

    fn eval_call(&mut self, frame: &mut Frame<'p>, e: &'p Expr, as_statement: bool) -> Eval<Rv> {
        let ExprKind::Call { callee, args } = &e.kind else {
            return Err(fault(FaultKind::TypeError, e.id, "expression statement is not a call"));
        };
        let node = e.id;
        let builtin = match callee {
            Callee::User(name) => {
                let func = self
                    .program
                    .func(name)
                    .ok_or_else(|| fault(FaultKind::TypeError, node, format!("unknown function {name}")))?;
                let values = args.iter().map(|a| self.eval(frame, a)).collect::<Eval<Vec<_>>>()?;
                return self.call_func(func, values, node);
            }
            Callee::Builtin(b) => *b,
        };
        if builtin == Builtin::ArrayInitializer {
            return Err(fault(FaultKind::TypeError, node, "array_initializer outside an assignment"));
        }
        let values = args.iter().map(|a| self.eval(frame, a)).collect::<Eval<Vec<_>>>()?;
        let type_err = |what: String| fault(FaultKind::TypeError, node, what);
        let arg_ty = |i: usize| self.static_type(&args[i]).cloned();
        let v = match builtin {
            Builtin::Len => Rv::Int(match &values[0] {
                Rv::Str(s) => s.chars().count(),
                Rv::List(x) | Rv::Set(x) => x.borrow().len(),
                Rv::Map(m) => m.borrow().len(),
                other => return Err(type_err(format!("len of a {}", other.describe()))),
            } as i64),
            Builtin::Min | Builtin::Max => {
                let (a, b) = (values[0].clone(), values[1].clone());
                let joined = self.static_type(e).cloned();
                let (a, b) = match &joined {
                    Some(TypeTag::Real) => (self.convert(a, &TypeTag::Real, node)?, self.convert(b, &TypeTag::Real, node)?),
                    Some(TypeTag::Int) => (self.convert(a, &TypeTag::Int, node)?, self.convert(b, &TypeTag::Int, node)?),
                    _ => (a, b),
                };
                // Python returns the first argument on ties.
                let o = py_cmp(&b, &a);
                let pick_b = if builtin == Builtin::Min { o == Ordering::Less } else { o == Ordering::Greater };
                if pick_b {
                    b
                } else {
                    a
                }
            }
            Builtin::Abs => match &values[0] {
                Rv::Real(r) => Rv::Real(r.abs()),
                v => Rv::Int(
                    v.integral()
                        .ok_or_else(|| type_err(format!("abs of a {}", v.describe())))?
                        .checked_abs()
                        .ok_or_else(|| fault(FaultKind::Overflow, node, "integer overflow"))?,
                ),
            },
            Builtin::ArrayIndex => {
                let i = values[1]
                    .integral()
                    .ok_or_else(|| type_err(format!("index is a {}", values[1].describe())))?;
                self.index(&values[0], i, node)?
            }
            Builtin::ArrayPush => {
                let elem = arg_ty(0).and_then(|t| t.list_element(1).cloned());
                let item = match &elem {
                    Some(t) => self.convert(values[1].clone(), t, node)?,
                    None => values[1].clone(),
                };
                match &values[0] {
                    Rv::List(items) if items.borrow().len() >= MAX_CONTAINER_LEN => {
                        return Err(fault(FaultKind::Overflow, node, "list too long"))
                    }
                    Rv::List(items) => items.borrow_mut().push(item),
                    other => return Err(type_err(format!("array_push onto a {}", other.describe()))),
                }
                Rv::Null
            }
            Builtin::ConcatString => {
                let mut s = String::new();
                for v in &values {
                    s.push_str(&scalar_str(v).ok_or_else(|| type_err(format!("concat_string of a {}", v.describe())))?);
                    if s.len() > MAX_CONTAINER_LEN {
                        return Err(fault(FaultKind::Overflow, node, "string too long"));
                    }
                }
                Rv::Str(s.into())
            }
            Builtin::StringSplit => match &values[0] {
                Rv::Str(s) => list(s.split_whitespace().map(|w| Rv::Str(w.into())).collect()),
                other => return Err(type_err(format!("string_split of a {}", other.describe()))),
            },
            Builtin::Substring => {
                let (Rv::Str(s), Some(a), Some(b)) = (&values[0], values[1].integral(), values[2].integral()) else {
                    return Err(type_err("substring needs a string and two integers".into()));
                };
                let chars: Vec<char> = s.chars().collect();
                let (from, to) = slice_bounds(chars.len(), a, b);
                Rv::Str(chars[from..to].iter().collect::<String>().into())
            }
            Builtin::MapGet => match &values[0] {
                Rv::Map(m) => m
                    .borrow()
                    .iter()
                    .find(|(k, _)| py_eq(k, &values[1]))
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| fault(FaultKind::IndexOob, node, "missing map key"))?,
                other => return Err(type_err(format!("map_get from a {}", other.describe()))),
            },
            Builtin::MapPut => {
                let val_ty = match arg_ty(0) {
                    Some(TypeTag::Map(_, v)) => Some(*v),
                    _ => None,
                };
                let v = match &val_ty {
                    Some(t) => self.convert(values[2].clone(), t, node)?,
                    None => values[2].clone(),
                };
                match &values[0] {
                    Rv::Map(m) => {
                        let mut m = m.borrow_mut();
                        match m.iter_mut().find(|(k, _)| py_eq(k, &values[1])) {
                            Some(entry) => entry.1 = v,
                            None => m.push((values[1].clone(), v)),
                        }
                    }
                    other => return Err(type_err(format!("map_put into a {}", other.describe()))),
                }
                Rv::Null
            }
            Builtin::SetAdd | Builtin::SetContains => match &values[0] {
                Rv::Set(s) => {
                    let present = s.borrow().iter().any(|x| py_eq(x, &values[1]));
                    if builtin == Builtin::SetContains {
                        Rv::Bool(present)
                    } else {
                        if !present {
                            s.borrow_mut().push(values[1].clone());
                        }
                        Rv::Null
                    }
                }
                other => return Err(type_err(format!("{} on a {}", builtin.name(), other.describe()))),
            },
            Builtin::Sort => match &values[0] {
                Rv::List(items) => {
                    items.borrow_mut().sort_by(py_cmp);
                    Rv::Null
                }
                other => return Err(type_err(format!("sort of a {}", other.describe()))),
            },
            Builtin::ArrayInitializer => unreachable!("handled above"),
        };
        if builtin.is_void() && !as_statement {
            return Err(type_err(format!("{} produces no value", builtin.name())));
        }
        Ok(v)
    }
}

fn run(
    program: &Program,
    args: &[Value],
    limits: Limits,
    division: IntDivision,
    trace: bool,
) -> (Result<Value, InterpError>, Vec<TraceEvent>) {
    let Some(entry) = program.entry_func() else {
        return (
            Err(InterpError::BadArguments(format!("no entry function {}", program.entry))),
            Vec::new(),
        );
    };
    if entry.params.len() != args.len() {
        return (
            Err(InterpError::BadArguments(format!(
                "{} takes {} arguments, got {}",
                entry.name,
                entry.params.len(),
                args.len()
            ))),
            Vec::new(),
        );
    }
    for (param, arg) in entry.params.iter().zip(args) {
        if !arg.has_type(&param.ty) {
            return (
                Err(InterpError::BadArguments(format!("{} expects {}, got {arg}", param.name, param.ty))),
                Vec::new(),
            );
        }
    }
    let mut machine = Machine::new(program, limits, division);
    if trace {
        machine.trace = Some(Vec::new());
    }
    let result = machine
        .call_func(entry, args.iter().map(Rv::from_value).collect(), entry.id)
        .map(|v| v.to_value());
    (result, machine.trace.unwrap_or_default())
}

/// Runs the entry function on `args` under the default (truncating)
/// division semantics.
pub fn interpret(program: &Program, args: &[Value], limits: Limits) -> Result<Value, InterpError> {
    run(program, args, limits, IntDivision::Truncate, false).0
}

/// Runs the entry function with an alternative integer-division convention.
pub fn interpret_with(
    program: &Program,
    args: &[Value],
    limits: Limits,
    division: IntDivision,
) -> Result<Value, InterpError> {
    run(program, args, limits, division, false).0
}

/// Like [`interpret`], also returning every While condition check.
pub fn interpret_traced(
    program: &Program,
    args: &[Value],
    limits: Limits,
) -> (Result<Value, InterpError>, Vec<TraceEvent>) {
    run(program, args, limits, IntDivision::Truncate, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uast::build::*;

    fn main(params: Vec<Binding>, ret_ty: TypeTag, locals: Vec<Binding>, body: Block) -> Program {
        Program::new(vec![], vec![func("__main__", params, ret_ty, locals, body)], "__main__")
    }

    fn ints(xs: &[i64]) -> Vec<Value> {
        xs.iter().map(|x| Value::Int(*x)).collect()
    }

    #[test]
    fn adds_two_ints() {
        let p = main(
            vec![b("var0", TypeTag::Int), b("var1", TypeTag::Int)],
            TypeTag::Int,
            vec![],
            vec![ret(add(var("var0"), var("var1")))],
        );
        assert_eq!(interpret(&p, &ints(&[2, 3]), Limits::default()), Ok(Value::Int(5)));
    }

    #[test]
    fn decrementing_sum_matches_hand_trace() {
        // var1 = 0; while var0 > 0 (decrement var0): var1 = var1 + var0
        // trace for var0=3: var1 = 3, 5, 6; loop exits with var0 = 0.
        let p = main(
            vec![b("var0", TypeTag::Int)],
            TypeTag::Int,
            vec![b("var1", TypeTag::Int)],
            vec![
                assign(var("var1"), int(0)),
                while_dec(gt(var("var0"), int(0)), "var0", vec![assign(var("var1"), add(var("var1"), var("var0")))]),
                ret(var("var1")),
            ],
        );
        assert_eq!(interpret(&p, &ints(&[3]), Limits::default()), Ok(Value::Int(6)));
    }

    #[test]
    fn missing_update_hits_step_limit() {
        let p = main(
            vec![b("var0", TypeTag::Int)],
            TypeTag::Int,
            vec![],
            vec![while_(gt(var("var0"), int(0)), vec![]), ret(var("var0"))],
        );
        assert_eq!(
            interpret(&p, &ints(&[1]), Limits::steps(1_000_000)),
            Err(InterpError::StepLimitExceeded { limit: 1_000_000 })
        );
    }

    #[test]
    fn division_conventions() {
        let p = main(
            vec![b("var0", TypeTag::Int), b("var1", TypeTag::Int)],
            TypeTag::list(TypeTag::Int),
            vec![b("var2", TypeTag::list(TypeTag::Int))],
            vec![
                assign(var("var2"), new_container(vec![])),
                expr_stmt(call("array_push", vec![var("var2"), div(var("var0"), var("var1"))])),
                expr_stmt(call("array_push", vec![var("var2"), rem(var("var0"), var("var1"))])),
                ret(var("var2")),
            ],
        );
        let run = |d| interpret_with(&p, &ints(&[-7, 2]), Limits::default(), d);
        assert_eq!(run(IntDivision::Truncate), Ok(Value::List(ints(&[-3, -1]))));
        assert_eq!(run(IntDivision::Floor), Ok(Value::List(ints(&[-4, 1]))));
        assert_eq!(
            run(IntDivision::True),
            Ok(Value::List(vec![Value::Real(-3.5), Value::Int(1)]))
        );
        let zero = interpret(&p, &ints(&[1, 0]), Limits::default()).unwrap_err();
        assert!(matches!(zero, InterpError::Fault(RuntimeFault { kind: FaultKind::DivByZero, .. })));
    }

    #[test]
    fn continue_applies_the_step_first() {
        // count odd numbers below var0 using continue on even values
        let p = main(
            vec![b("var0", TypeTag::Int)],
            TypeTag::Int,
            vec![b("var1", TypeTag::Int), b("var2", TypeTag::Int)],
            vec![
                assign(var("var1"), int(0)),
                assign(var("var2"), int(0)),
                while_inc(
                    lt(var("var2"), var("var0")),
                    "var2",
                    vec![
                        if_(eq(rem(var("var2"), int(2)), int(0)), vec![cont()]),
                        assign(var("var1"), add(var("var1"), int(1))),
                    ],
                ),
                ret(var("var1")),
            ],
        );
        assert_eq!(interpret(&p, &ints(&[7]), Limits::default()), Ok(Value::Int(3)));
    }

    #[test]
    fn unset_and_oob_faults() {
        let p = main(vec![], TypeTag::Int, vec![b("var0", TypeTag::Int)], vec![ret(var("var0"))]);
        let e = interpret(&p, &[], Limits::default()).unwrap_err();
        assert!(matches!(e, InterpError::Fault(RuntimeFault { kind: FaultKind::UnsetValue, .. })));
        let p = main(
            vec![b("var0", TypeTag::list(TypeTag::Int))],
            TypeTag::Int,
            vec![],
            vec![ret(idx(var("var0"), int(2)))],
        );
        let e = interpret(&p, &[Value::List(ints(&[1]))], Limits::default()).unwrap_err();
        assert!(matches!(e, InterpError::Fault(RuntimeFault { kind: FaultKind::IndexOob, .. })));
    }

    #[test]
    fn chars_behave_as_code_points() {
        let p = main(
            vec![b("var0", TypeTag::String)],
            TypeTag::Int,
            vec![b("var1", TypeTag::Int)],
            vec![
                assign(var("var1"), sub(idx(var("var0"), int(0)), int(48))),
                ret(var("var1")),
            ],
        );
        assert_eq!(interpret(&p, &[Value::str("7x")], Limits::default()), Ok(Value::Int(7)));
    }

    #[test]
    fn substring_follows_slice_rules() {
        let p = main(
            vec![b("var0", TypeTag::String), b("var1", TypeTag::Int), b("var2", TypeTag::Int)],
            TypeTag::String,
            vec![],
            vec![ret(call("substring", vec![var("var0"), var("var1"), var("var2")]))],
        );
        let run = |a, b| interpret(&p, &[Value::str("hello"), Value::Int(a), Value::Int(b)], Limits::default());
        assert_eq!(run(1, 3), Ok(Value::str("el")));
        assert_eq!(run(-3, 10), Ok(Value::str("llo")));
        assert_eq!(run(4, 2), Ok(Value::str("")));
    }

    #[test]
    fn wrong_arguments_are_rejected() {
        let p = main(vec![b("var0", TypeTag::Int)], TypeTag::Int, vec![], vec![ret(var("var0"))]);
        assert!(matches!(interpret(&p, &[], Limits::default()), Err(InterpError::BadArguments(_))));
        assert!(matches!(
            interpret(&p, &[Value::str("x")], Limits::default()),
            Err(InterpError::BadArguments(_))
        ));
    }
}
