//! Static typing of expressions.
//!
//! Codegen needs it to place code-point conversions, astats needs it to
//! recognise char/int mixing, and validation reports its failures.

use std::collections::HashMap;

use super::ast::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Param,
    Local,
    Global,
}

/// Variables visible inside one function: parameters, locals, names bound by
/// `Declare` statements anywhere in the body, then module-level globals.
#[derive(Clone, Debug)]
pub struct FuncScope<'p> {
    program: &'p Program,
    func: &'p FuncDef,
    vars: HashMap<&'p str, (&'p TypeTag, VarKind)>,
}

impl<'p> FuncScope<'p> {
    pub fn new(program: &'p Program, func: &'p FuncDef) -> Self {
        let mut vars = HashMap::new();
        for g in &program.globals {
            vars.insert(g.name.as_str(), (&g.ty, VarKind::Global));
        }
        for stmt in func.statements() {
            if let StmtKind::Declare(bindings) = &stmt.kind {
                for binding in bindings {
                    vars.insert(binding.name.as_str(), (&binding.ty, VarKind::Local));
                }
            }
        }
        for binding in &func.locals {
            vars.insert(binding.name.as_str(), (&binding.ty, VarKind::Local));
        }
        for binding in &func.params {
            vars.insert(binding.name.as_str(), (&binding.ty, VarKind::Param));
        }
        FuncScope {
            program,
            func,
            vars,
        }
    }

    pub fn program(&self) -> &'p Program {
        self.program
    }

    pub fn func(&self) -> &'p FuncDef {
        self.func
    }

    pub fn lookup(&self, name: &str) -> Option<&'p TypeTag> {
        self.vars.get(name).map(|(ty, _)| *ty)
    }

    pub fn kind(&self, name: &str) -> Option<VarKind> {
        self.vars.get(name).map(|(_, k)| *k)
    }

    pub fn is_global(&self, name: &str) -> bool {
        self.kind(name) == Some(VarKind::Global)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeError {
    pub node: NodeId,
    pub rule: &'static str,
    pub message: String,
}

impl TypeError {
    fn new(node: NodeId, rule: &'static str, message: impl Into<String>) -> Self {
        TypeError {
            node,
            rule,
            message: message.into(),
        }
    }
}

/// Result type of arithmetic over two numeric operands: real if either is
/// real, int otherwise (chars promote to int).
pub fn arithmetic_join(a: &TypeTag, b: &TypeTag) -> TypeTag {
    if *a == TypeTag::Real || *b == TypeTag::Real {
        TypeTag::Real
    } else {
        TypeTag::Int
    }
}

/// Common type of two selectable values (ternary branches, min/max).
pub fn select_join(a: &TypeTag, b: &TypeTag) -> Option<TypeTag> {
    if a == b {
        Some(a.clone())
    } else if a.is_numeric() && b.is_numeric() {
        Some(arithmetic_join(a, b))
    } else {
        None
    }
}

/// Whether a value of type `from` may be stored into a slot of type `to`,
/// with an implicit numeric conversion when both are numeric.
pub fn assignable(from: &TypeTag, to: &TypeTag) -> bool {
    from == to || (from.is_numeric() && to.is_numeric())
}

/// Element type produced by iterating over a value of type `ty`.
pub fn iteration_element(ty: &TypeTag) -> Option<TypeTag> {
    match ty {
        TypeTag::List(e) | TypeTag::Set(e) => Some((**e).clone()),
        TypeTag::Map(k, _) => Some((**k).clone()),
        TypeTag::String => Some(TypeTag::Char),
        _ => None,
    }
}

fn sortable(ty: &TypeTag) -> bool {
    match ty {
        TypeTag::Int | TypeTag::Real | TypeTag::Char | TypeTag::String | TypeTag::Bool => true,
        TypeTag::List(e) => sortable(e),
        _ => false,
    }
}

/// Static type of `expr`; `Ok(None)` for calls that produce no value.
pub fn type_of(scope: &FuncScope<'_>, expr: &Expr) -> Result<Option<TypeTag>, TypeError> {
    let id = expr.id;
    let value = |e: &Expr| -> Result<TypeTag, TypeError> {
        type_of(scope, e)?.ok_or_else(|| {
            TypeError::new(e.id, "void-in-expression", "call produces no value")
        })
    };
    let ty = match &expr.kind {
        ExprKind::Const(lit) => lit.type_tag(),
        ExprKind::Var(name) => scope
            .lookup(name)
            .cloned()
            .ok_or_else(|| TypeError::new(id, "unresolved-var", format!("unresolved variable {name}")))?,
        ExprKind::Binary { op, lhs, rhs } => {
            let (l, r) = (value(lhs)?, value(rhs)?);
            if op.is_arithmetic() {
                if !l.is_numeric() || !r.is_numeric() {
                    return Err(TypeError::new(
                        id,
                        "type-mismatch",
                        format!("{} needs numeric operands, got {l} and {r}", op.name()),
                    ));
                }
                arithmetic_join(&l, &r)
            } else if op.is_logical() {
                if l != TypeTag::Bool || r != TypeTag::Bool {
                    return Err(TypeError::new(
                        id,
                        "type-mismatch",
                        format!("{} needs bool operands, got {l} and {r}", op.name()),
                    ));
                }
                TypeTag::Bool
            } else {
                let ok = match op {
                    BinOp::Eq | BinOp::Neq => l == r || (l.is_numeric() && r.is_numeric()),
                    _ => {
                        (l.is_numeric() && r.is_numeric())
                            || (l == TypeTag::String && r == TypeTag::String)
                    }
                };
                if !ok {
                    return Err(TypeError::new(
                        id,
                        "type-mismatch",
                        format!("cannot compare {l} with {r}"),
                    ));
                }
                TypeTag::Bool
            }
        }
        ExprKind::Unary { op, operand } => {
            let t = value(operand)?;
            match op {
                UnOp::Neg if t.is_numeric() => arithmetic_join(&t, &TypeTag::Int),
                UnOp::Not if t == TypeTag::Bool => TypeTag::Bool,
                _ => {
                    return Err(TypeError::new(
                        id,
                        "type-mismatch",
                        format!("{} not applicable to {t}", op.name()),
                    ))
                }
            }
        }
        ExprKind::Ternary {
            cond,
            then,
            otherwise,
        } => {
            let c = value(cond)?;
            if c != TypeTag::Bool {
                return Err(TypeError::new(cond.id, "type-mismatch", format!("condition has type {c}")));
            }
            let (t, o) = (value(then)?, value(otherwise)?);
            select_join(&t, &o).ok_or_else(|| {
                TypeError::new(id, "type-mismatch", format!("ternary branches {t} and {o} differ"))
            })?
        }
        ExprKind::Call { callee, args } => return call_type(scope, expr, callee, args),
    };
    Ok(Some(ty))
}

fn call_type(
    scope: &FuncScope<'_>,
    expr: &Expr,
    callee: &Callee,
    args: &[Expr],
) -> Result<Option<TypeTag>, TypeError> {
    let id = expr.id;
    let mismatch = |msg: String| TypeError::new(id, "type-mismatch", msg);
    let value = |e: &Expr| -> Result<TypeTag, TypeError> {
        type_of(scope, e)?.ok_or_else(|| {
            TypeError::new(e.id, "void-in-expression", "call produces no value")
        })
    };
    let builtin = match callee {
        Callee::User(name) => {
            let f = scope.program().func(name).ok_or_else(|| {
                TypeError::new(id, "unknown-callee", format!("unknown function {name}"))
            })?;
            if f.params.len() != args.len() {
                return Err(TypeError::new(
                    id,
                    "arity-mismatch",
                    format!("{name} takes {} arguments, got {}", f.params.len(), args.len()),
                ));
            }
            for (arg, param) in args.iter().zip(&f.params) {
                let t = value(arg)?;
                if !assignable(&t, &param.ty) {
                    return Err(mismatch(format!(
                        "argument {} of {name} expects {}, got {t}",
                        param.name, param.ty
                    )));
                }
            }
            return Ok(Some(f.return_type.clone()));
        }
        Callee::Builtin(b) => *b,
    };
    if !builtin.arity().accepts(args.len()) {
        return Err(TypeError::new(
            id,
            "arity-mismatch",
            format!("{} called with {} arguments", builtin.name(), args.len()),
        ));
    }
    let integral = |e: &Expr| -> Result<(), TypeError> {
        let t = value(e)?;
        if t.is_integral() {
            Ok(())
        } else {
            Err(TypeError::new(e.id, "type-mismatch", format!("expected an integer, got {t}")))
        }
    };
    let ty = match builtin {
        Builtin::Len => match value(&args[0])? {
            TypeTag::String | TypeTag::List(_) | TypeTag::Map(..) | TypeTag::Set(_) => TypeTag::Int,
            t => return Err(mismatch(format!("len of {t}"))),
        },
        Builtin::Min | Builtin::Max => {
            let (a, b) = (value(&args[0])?, value(&args[1])?);
            let joined = select_join(&a, &b).ok_or_else(|| mismatch(format!("{} of {a} and {b}", builtin.name())))?;
            if !(joined.is_numeric() || joined == TypeTag::String) {
                return Err(mismatch(format!("{} of {joined}", builtin.name())));
            }
            joined
        }
        Builtin::Abs => {
            let t = value(&args[0])?;
            if !t.is_numeric() {
                return Err(mismatch(format!("abs of {t}")));
            }
            arithmetic_join(&t, &TypeTag::Int)
        }
        Builtin::ArrayIndex => {
            integral(&args[1])?;
            match value(&args[0])? {
                TypeTag::List(e) => *e,
                TypeTag::String => TypeTag::Char,
                t => return Err(mismatch(format!("array_index of {t}"))),
            }
        }
        Builtin::ArrayPush => {
            let (list, item) = (value(&args[0])?, value(&args[1])?);
            match list {
                TypeTag::List(e) if assignable(&item, &e) => return Ok(None),
                t => return Err(mismatch(format!("array_push of {item} onto {t}"))),
            }
        }
        Builtin::ArrayInitializer => {
            return Err(TypeError::new(
                id,
                "initializer-context",
                "array_initializer may only be the value of an assignment",
            ))
        }
        Builtin::ConcatString => {
            for a in args {
                let t = value(a)?;
                if !matches!(t, TypeTag::String | TypeTag::Char) {
                    return Err(mismatch(format!("concat_string of {t}")));
                }
            }
            TypeTag::String
        }
        Builtin::StringSplit => match value(&args[0])? {
            TypeTag::String => TypeTag::list(TypeTag::String),
            t => return Err(mismatch(format!("string_split of {t}"))),
        },
        Builtin::Substring => {
            integral(&args[1])?;
            integral(&args[2])?;
            match value(&args[0])? {
                TypeTag::String => TypeTag::String,
                t => return Err(mismatch(format!("substring of {t}"))),
            }
        }
        Builtin::MapGet => {
            let (m, k) = (value(&args[0])?, value(&args[1])?);
            match m {
                TypeTag::Map(key, val) if *key == k => *val,
                t => return Err(mismatch(format!("map_get of {k} from {t}"))),
            }
        }
        Builtin::MapPut => {
            let (m, k, v) = (value(&args[0])?, value(&args[1])?, value(&args[2])?);
            match m {
                TypeTag::Map(key, val) if *key == k && assignable(&v, &val) => return Ok(None),
                t => return Err(mismatch(format!("map_put of {k}, {v} into {t}"))),
            }
        }
        Builtin::SetAdd | Builtin::SetContains => {
            let (s, x) = (value(&args[0])?, value(&args[1])?);
            match s {
                TypeTag::Set(e) if *e == x => {
                    if builtin == Builtin::SetAdd {
                        return Ok(None);
                    }
                    TypeTag::Bool
                }
                t => return Err(mismatch(format!("{} of {x} with {t}", builtin.name()))),
            }
        }
        Builtin::Sort => match value(&args[0])? {
            TypeTag::List(e) if sortable(&e) => return Ok(None),
            t => return Err(mismatch(format!("sort of {t}"))),
        },
    };
    Ok(Some(ty))
}

/// Type of an assignment target, which must be a variable or an
/// `array_index` chain over list-typed containers.
pub fn lvalue_type(scope: &FuncScope<'_>, target: &Expr) -> Result<TypeTag, TypeError> {
    let (root, indices) = target.lvalue_path().ok_or_else(|| {
        TypeError::new(target.id, "invalid-lvalue", "assignment target is not a variable or index chain")
    })?;
    let mut ty = scope
        .lookup(root)
        .cloned()
        .ok_or_else(|| TypeError::new(target.id, "unresolved-var", format!("unresolved variable {root}")))?;
    for index in indices {
        let it = type_of(scope, index)?.unwrap_or(TypeTag::Bool);
        if !it.is_integral() {
            return Err(TypeError::new(index.id, "type-mismatch", format!("index has type {it}")));
        }
        ty = match ty {
            TypeTag::List(e) => *e,
            other => {
                return Err(TypeError::new(
                    target.id,
                    "invalid-lvalue",
                    format!("cannot assign into an element of {other}"),
                ))
            }
        };
    }
    Ok(ty)
}
