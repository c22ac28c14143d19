//! Terse constructors for hand-built programs (fixtures, tests, generator).

use super::ast::*;

pub fn int(v: i64) -> Expr {
    Expr::new(ExprKind::Const(Literal::Int(v)))
}

pub fn real(v: f64) -> Expr {
    Expr::new(ExprKind::Const(Literal::Real(v)))
}

pub fn boolean(v: bool) -> Expr {
    Expr::new(ExprKind::Const(Literal::Bool(v)))
}

pub fn ch(c: char) -> Expr {
    Expr::new(ExprKind::Const(Literal::Char(c as u32)))
}

pub fn string(s: &str) -> Expr {
    Expr::new(ExprKind::Const(Literal::Str(s.to_string())))
}

pub fn var(name: &str) -> Expr {
    Expr::new(ExprKind::Var(name.to_string()))
}

pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    Expr::new(ExprKind::Binary {
        op,
        lhs: Box::new(lhs),
        rhs: Box::new(rhs),
    })
}

pub fn add(l: Expr, r: Expr) -> Expr {
    bin(BinOp::Add, l, r)
}
pub fn sub(l: Expr, r: Expr) -> Expr {
    bin(BinOp::Sub, l, r)
}
pub fn mul(l: Expr, r: Expr) -> Expr {
    bin(BinOp::Mul, l, r)
}
pub fn div(l: Expr, r: Expr) -> Expr {
    bin(BinOp::Div, l, r)
}
pub fn rem(l: Expr, r: Expr) -> Expr {
    bin(BinOp::Mod, l, r)
}
pub fn eq(l: Expr, r: Expr) -> Expr {
    bin(BinOp::Eq, l, r)
}
pub fn neq(l: Expr, r: Expr) -> Expr {
    bin(BinOp::Neq, l, r)
}
pub fn lt(l: Expr, r: Expr) -> Expr {
    bin(BinOp::Lt, l, r)
}
pub fn le(l: Expr, r: Expr) -> Expr {
    bin(BinOp::Le, l, r)
}
pub fn gt(l: Expr, r: Expr) -> Expr {
    bin(BinOp::Gt, l, r)
}
pub fn ge(l: Expr, r: Expr) -> Expr {
    bin(BinOp::Ge, l, r)
}
pub fn and(l: Expr, r: Expr) -> Expr {
    bin(BinOp::And, l, r)
}
pub fn or(l: Expr, r: Expr) -> Expr {
    bin(BinOp::Or, l, r)
}

pub fn neg(e: Expr) -> Expr {
    Expr::new(ExprKind::Unary {
        op: UnOp::Neg,
        operand: Box::new(e),
    })
}

pub fn not(e: Expr) -> Expr {
    Expr::new(ExprKind::Unary {
        op: UnOp::Not,
        operand: Box::new(e),
    })
}

pub fn ternary(cond: Expr, then: Expr, otherwise: Expr) -> Expr {
    Expr::new(ExprKind::Ternary {
        cond: Box::new(cond),
        then: Box::new(then),
        otherwise: Box::new(otherwise),
    })
}

/// Calls a builtin when `name` is registered, a user function otherwise.
pub fn call(name: &str, args: Vec<Expr>) -> Expr {
    let callee = match Builtin::from_name(name) {
        Some(b) => Callee::Builtin(b),
        None => Callee::User(name.to_string()),
    };
    Expr::new(ExprKind::Call { callee, args })
}

pub fn idx(container: Expr, index: Expr) -> Expr {
    call("array_index", vec![container, index])
}

pub fn len(e: Expr) -> Expr {
    call("len", vec![e])
}

pub fn new_container(dims: Vec<Expr>) -> Expr {
    call("array_initializer", dims)
}

pub fn assign(target: Expr, value: Expr) -> Stmt {
    Stmt::new(StmtKind::Assign { target, value })
}

pub fn if_(cond: Expr, then: Block) -> Stmt {
    Stmt::new(StmtKind::If {
        cond,
        then,
        otherwise: None,
    })
}

pub fn if_else(cond: Expr, then: Block, otherwise: Block) -> Stmt {
    Stmt::new(StmtKind::If {
        cond,
        then,
        otherwise: Some(otherwise),
    })
}

pub fn while_(cond: Expr, body: Block) -> Stmt {
    Stmt::new(StmtKind::While {
        cond,
        body,
        step: Step::None,
    })
}

pub fn while_inc(cond: Expr, var: &str, body: Block) -> Stmt {
    Stmt::new(StmtKind::While {
        cond,
        body,
        step: Step::Increment(var.to_string()),
    })
}

pub fn while_dec(cond: Expr, var: &str, body: Block) -> Stmt {
    Stmt::new(StmtKind::While {
        cond,
        body,
        step: Step::Decrement(var.to_string()),
    })
}

pub fn for_each(var: &str, iterable: Expr, body: Block) -> Stmt {
    Stmt::new(StmtKind::ForEach {
        var: var.to_string(),
        iterable,
        body,
    })
}

pub fn cont() -> Stmt {
    Stmt::new(StmtKind::Continue)
}

pub fn brk() -> Stmt {
    Stmt::new(StmtKind::Break)
}

pub fn ret(e: Expr) -> Stmt {
    Stmt::new(StmtKind::Return(Some(e)))
}

pub fn ret_none() -> Stmt {
    Stmt::new(StmtKind::Return(None))
}

pub fn expr_stmt(e: Expr) -> Stmt {
    Stmt::new(StmtKind::ExprStmt(e))
}

pub fn declare(bindings: Vec<Binding>) -> Stmt {
    Stmt::new(StmtKind::Declare(bindings))
}

pub fn b(name: &str, ty: TypeTag) -> Binding {
    Binding::new(name, ty)
}

pub fn func(
    name: &str,
    params: Vec<Binding>,
    return_type: TypeTag,
    locals: Vec<Binding>,
    body: Block,
) -> FuncDef {
    FuncDef::new(name, params, return_type, locals, body)
}
