//! JSON encoding of programs (the `uast` field of a problem file).
//!
//! Every node is an object with a `kind` field. Expressions:
//!
//! ```text
//! {"kind": "const", "type": "int", "value": 61}
//! {"kind": "var", "name": "var0"}
//! {"kind": "binary", "op": "add", "lhs": E, "rhs": E}
//! {"kind": "unary", "op": "neg", "operand": E}
//! {"kind": "ternary", "cond": E, "then": E, "otherwise": E}
//! {"kind": "call", "callee": "len", "args": [E]}
//! ```
//!
//! Statements use kinds `declare`, `assign`, `if`, `while`, `foreach`,
//! `continue`, `break`, `return` and `expr`. See `schema/problem.schema.json`
//! for the complete field list.

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use super::ast::*;
use super::value::Value;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("malformed document at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("malformed node at {path}: {message}")]
    Malformed { path: String, message: String },
    #[error("unknown node kind {kind:?} at {path}")]
    UnknownKind { path: String, kind: String },
    #[error("unknown builtin {name} at {path}")]
    UnknownBuiltin { path: String, name: String },
    #[error("arity mismatch at {path}: {callee} takes {expected}, got {got}")]
    Arity {
        path: String,
        callee: String,
        expected: String,
        got: usize,
    },
    #[error("unresolved variable {name} at node {node}")]
    Unresolved { name: String, node: NodeId },
}

impl From<serde_json::Error> for ParseError {
    fn from(e: serde_json::Error) -> Self {
        ParseError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

type Result<T> = std::result::Result<T, ParseError>;

struct Node<'a> {
    path: String,
    obj: &'a Map<String, Json>,
}

fn malformed(path: &str, message: impl Into<String>) -> ParseError {
    ParseError::Malformed {
        path: path.to_string(),
        message: message.into(),
    }
}

fn node<'a>(value: &'a Json, path: String) -> Result<Node<'a>> {
    match value.as_object() {
        Some(obj) => Ok(Node { path, obj }),
        None => Err(malformed(&path, "expected an object")),
    }
}

impl<'a> Node<'a> {
    fn field(&self, name: &str) -> Result<&'a Json> {
        self.obj
            .get(name)
            .ok_or_else(|| malformed(&self.path, format!("missing field {name:?}")))
    }

    fn sub_path(&self, name: &str) -> String {
        format!("{}.{name}", self.path)
    }

    fn str(&self, name: &str) -> Result<&'a str> {
        self.field(name)?
            .as_str()
            .ok_or_else(|| malformed(&self.sub_path(name), "expected a string"))
    }

    fn kind(&self) -> Result<&'a str> {
        self.str("kind")
    }

    fn array(&self, name: &str) -> Result<&'a Vec<Json>> {
        self.field(name)?
            .as_array()
            .ok_or_else(|| malformed(&self.sub_path(name), "expected an array"))
    }

    fn opt(&self, name: &str) -> Option<&'a Json> {
        self.obj.get(name).filter(|v| !v.is_null())
    }

    fn type_tag(&self, name: &str) -> Result<TypeTag> {
        parse_type(self.field(name)?, &self.sub_path(name))
    }
}

fn parse_type(value: &Json, path: &str) -> Result<TypeTag> {
    serde_json::from_value(value.clone())
        .map_err(|e| malformed(path, format!("invalid type: {e}")))
}

fn parse_bindings(values: &[Json], path: &str) -> Result<Vec<Binding>> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let n = node(v, format!("{path}[{i}]"))?;
            Ok(Binding::new(n.str("name")?, n.type_tag("type")?))
        })
        .collect()
}

fn parse_literal(ty: &TypeTag, value: &Json, path: &str) -> Result<Literal> {
    let bad = || malformed(path, format!("value does not fit type {ty}"));
    Ok(match ty {
        TypeTag::Int => Literal::Int(value.as_i64().ok_or_else(bad)?),
        TypeTag::Real => Literal::Real(value.as_f64().ok_or_else(bad)?),
        TypeTag::Bool => Literal::Bool(value.as_bool().ok_or_else(bad)?),
        TypeTag::Char => {
            let code = value.as_u64().ok_or_else(bad)?;
            let code = u32::try_from(code).ok().filter(|c| char::from_u32(*c).is_some());
            Literal::Char(code.ok_or_else(bad)?)
        }
        TypeTag::String => Literal::Str(value.as_str().ok_or_else(bad)?.to_string()),
        _ => return Err(malformed(path, "constants must have a scalar type")),
    })
}

fn literal_json(lit: &Literal) -> (TypeTag, Json) {
    let value = match lit {
        Literal::Int(i) => json!(i),
        Literal::Real(r) => json!(r),
        Literal::Bool(b) => json!(b),
        Literal::Char(c) => json!(c),
        Literal::Str(s) => json!(s),
    };
    (lit.type_tag(), value)
}

struct Parser<'a> {
    /// (name, parameter count) of every function in the document.
    funcs: Vec<(&'a str, usize)>,
}

impl<'a> Parser<'a> {
    fn expr(&self, value: &'a Json, path: String) -> Result<Expr> {
        let n = node(value, path)?;
        let kind = match n.kind()? {
            "const" => {
                let ty = n.type_tag("type")?;
                ExprKind::Const(parse_literal(&ty, n.field("value")?, &n.sub_path("value"))?)
            }
            "var" => ExprKind::Var(n.str("name")?.to_string()),
            "binary" => {
                let op = n.str("op")?;
                ExprKind::Binary {
                    op: BinOp::from_name(op)
                        .ok_or_else(|| malformed(&n.sub_path("op"), format!("unknown operator {op}")))?,
                    lhs: Box::new(self.expr(n.field("lhs")?, n.sub_path("lhs"))?),
                    rhs: Box::new(self.expr(n.field("rhs")?, n.sub_path("rhs"))?),
                }
            }
            "unary" => {
                let op = n.str("op")?;
                ExprKind::Unary {
                    op: UnOp::from_name(op)
                        .ok_or_else(|| malformed(&n.sub_path("op"), format!("unknown operator {op}")))?,
                    operand: Box::new(self.expr(n.field("operand")?, n.sub_path("operand"))?),
                }
            }
            "ternary" => ExprKind::Ternary {
                cond: Box::new(self.expr(n.field("cond")?, n.sub_path("cond"))?),
                then: Box::new(self.expr(n.field("then")?, n.sub_path("then"))?),
                otherwise: Box::new(self.expr(n.field("otherwise")?, n.sub_path("otherwise"))?),
            },
            "call" => {
                let name = n.str("callee")?;
                let args_path = n.sub_path("args");
                let args = n
                    .array("args")?
                    .iter()
                    .enumerate()
                    .map(|(i, a)| self.expr(a, format!("{args_path}[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let (callee, arity) = if let Some(b) = Builtin::from_name(name) {
                    (Callee::Builtin(b), b.arity())
                } else if let Some((_, count)) = self.funcs.iter().find(|(f, _)| *f == name) {
                    (Callee::User(name.to_string()), Arity::Exact(*count))
                } else {
                    return Err(ParseError::UnknownBuiltin {
                        path: n.path,
                        name: name.to_string(),
                    });
                };
                if !arity.accepts(args.len()) {
                    let expected = match arity {
                        Arity::Exact(k) => k.to_string(),
                        Arity::Variadic => "any".to_string(),
                    };
                    return Err(ParseError::Arity {
                        path: n.path,
                        callee: name.to_string(),
                        expected,
                        got: args.len(),
                    });
                }
                ExprKind::Call { callee, args }
            }
            other => {
                return Err(ParseError::UnknownKind {
                    path: n.path,
                    kind: other.to_string(),
                })
            }
        };
        Ok(Expr::new(kind))
    }

    fn block(&self, values: &'a [Json], path: &str) -> Result<Block> {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| self.stmt(v, format!("{path}[{i}]")))
            .collect()
    }

    fn stmt(&self, value: &'a Json, path: String) -> Result<Stmt> {
        let n = node(value, path)?;
        let block = |name: &str| -> Result<Block> { self.block(n.array(name)?, &n.sub_path(name)) };
        let kind = match n.kind()? {
            "declare" => StmtKind::Declare(parse_bindings(n.array("bindings")?, &n.sub_path("bindings"))?),
            "assign" => StmtKind::Assign {
                target: self.expr(n.field("target")?, n.sub_path("target"))?,
                value: self.expr(n.field("value")?, n.sub_path("value"))?,
            },
            "if" => StmtKind::If {
                cond: self.expr(n.field("cond")?, n.sub_path("cond"))?,
                then: block("then")?,
                otherwise: match n.opt("otherwise") {
                    Some(_) => Some(block("otherwise")?),
                    None => None,
                },
            },
            "while" => {
                let step = match n.opt("step") {
                    None => Step::None,
                    Some(s) => serde_json::from_value(s.clone()).map_err(|e| {
                        malformed(&n.sub_path("step"), format!("invalid step annotation: {e}"))
                    })?,
                };
                StmtKind::While {
                    cond: self.expr(n.field("cond")?, n.sub_path("cond"))?,
                    body: block("body")?,
                    step,
                }
            }
            "foreach" => StmtKind::ForEach {
                var: n.str("var")?.to_string(),
                iterable: self.expr(n.field("iterable")?, n.sub_path("iterable"))?,
                body: block("body")?,
            },
            "continue" => StmtKind::Continue,
            "break" => StmtKind::Break,
            "return" => StmtKind::Return(match n.opt("value") {
                Some(v) => Some(self.expr(v, n.sub_path("value"))?),
                None => None,
            }),
            "expr" => StmtKind::ExprStmt(self.expr(n.field("call")?, n.sub_path("call"))?),
            other => {
                return Err(ParseError::UnknownKind {
                    path: n.path,
                    kind: other.to_string(),
                })
            }
        };
        Ok(Stmt::new(kind))
    }
}

/// Decodes a program node tree. `path` prefixes JSON paths in errors.
pub fn program_from_json(value: &Json, path: &str) -> Result<Program> {
    let root = node(value, path.to_string())?;
    match root.kind()? {
        "program" => {}
        other => {
            return Err(ParseError::UnknownKind {
                path: root.path,
                kind: other.to_string(),
            })
        }
    }
    let funcs_json = root.array("funcs")?;
    let funcs_path = root.sub_path("funcs");
    let mut names = Vec::new();
    for (i, f) in funcs_json.iter().enumerate() {
        let n = node(f, format!("{funcs_path}[{i}]"))?;
        names.push((n.str("name")?, n.array("params")?.len()));
    }
    let parser = Parser { funcs: names };

    let mut globals = Vec::new();
    if let Some(gs) = root.opt("globals") {
        let gs_path = root.sub_path("globals");
        let items = gs.as_array().ok_or_else(|| malformed(&gs_path, "expected an array"))?;
        for (i, g) in items.iter().enumerate() {
            let n = node(g, format!("{gs_path}[{i}]"))?;
            match n.kind()? {
                "global" => {}
                other => {
                    return Err(ParseError::UnknownKind {
                        path: n.path,
                        kind: other.to_string(),
                    })
                }
            }
            let ty = n.type_tag("type")?;
            let init = match n.opt("init") {
                Some(v) => Some(parse_literal(&ty, v, &n.sub_path("init"))?),
                None => None,
            };
            globals.push(GlobalDecl::new(n.str("name")?, ty, init));
        }
    }

    let mut funcs = Vec::new();
    for (i, f) in funcs_json.iter().enumerate() {
        let n = node(f, format!("{funcs_path}[{i}]"))?;
        match n.kind()? {
            "func" => {}
            other => {
                return Err(ParseError::UnknownKind {
                    path: n.path,
                    kind: other.to_string(),
                })
            }
        }
        let locals = match n.opt("locals") {
            Some(l) => {
                let items = l
                    .as_array()
                    .ok_or_else(|| malformed(&n.sub_path("locals"), "expected an array"))?;
                parse_bindings(items, &n.sub_path("locals"))?
            }
            None => Vec::new(),
        };
        funcs.push(FuncDef::new(
            n.str("name")?,
            parse_bindings(n.array("params")?, &n.sub_path("params"))?,
            n.type_tag("return_type")?,
            locals,
            parser.block(n.array("body")?, &n.sub_path("body"))?,
        ));
    }

    let program = Program::new(globals, funcs, root.str("entry")?);
    if let Some((name, node)) = super::validate::unresolved_vars(&program).into_iter().next() {
        return Err(ParseError::Unresolved { name, node });
    }
    Ok(program)
}

/// Parses a standalone program document.
pub fn parse_uast(text: &str) -> Result<Program> {
    let value: Json = serde_json::from_str(text)?;
    program_from_json(&value, "$")
}

fn type_json(ty: &TypeTag) -> Json {
    serde_json::to_value(ty).expect("type tags always serialize")
}

fn bindings_json(bindings: &[Binding]) -> Json {
    Json::Array(
        bindings
            .iter()
            .map(|b| json!({"name": b.name, "type": type_json(&b.ty)}))
            .collect(),
    )
}

fn expr_json(e: &Expr) -> Json {
    match &e.kind {
        ExprKind::Const(lit) => {
            let (ty, value) = literal_json(lit);
            json!({"kind": "const", "type": type_json(&ty), "value": value})
        }
        ExprKind::Var(name) => json!({"kind": "var", "name": name}),
        ExprKind::Binary { op, lhs, rhs } => {
            json!({"kind": "binary", "op": op.name(), "lhs": expr_json(lhs), "rhs": expr_json(rhs)})
        }
        ExprKind::Unary { op, operand } => {
            json!({"kind": "unary", "op": op.name(), "operand": expr_json(operand)})
        }
        ExprKind::Ternary {
            cond,
            then,
            otherwise,
        } => json!({
            "kind": "ternary",
            "cond": expr_json(cond),
            "then": expr_json(then),
            "otherwise": expr_json(otherwise),
        }),
        ExprKind::Call { callee, args } => json!({
            "kind": "call",
            "callee": callee.name(),
            "args": args.iter().map(expr_json).collect::<Vec<_>>(),
        }),
    }
}

fn block_json(block: &Block) -> Json {
    Json::Array(block.iter().map(stmt_json).collect())
}

fn stmt_json(s: &Stmt) -> Json {
    match &s.kind {
        StmtKind::Declare(bindings) => json!({"kind": "declare", "bindings": bindings_json(bindings)}),
        StmtKind::Assign { target, value } => {
            json!({"kind": "assign", "target": expr_json(target), "value": expr_json(value)})
        }
        StmtKind::If {
            cond,
            then,
            otherwise,
        } => {
            let mut v = json!({"kind": "if", "cond": expr_json(cond), "then": block_json(then)});
            if let Some(o) = otherwise {
                v["otherwise"] = block_json(o);
            }
            v
        }
        StmtKind::While { cond, body, step } => {
            let mut v = json!({"kind": "while", "cond": expr_json(cond), "body": block_json(body)});
            if *step != Step::None {
                v["step"] = serde_json::to_value(step).expect("steps always serialize");
            }
            v
        }
        StmtKind::ForEach {
            var,
            iterable,
            body,
        } => json!({
            "kind": "foreach",
            "var": var,
            "iterable": expr_json(iterable),
            "body": block_json(body),
        }),
        StmtKind::Continue => json!({"kind": "continue"}),
        StmtKind::Break => json!({"kind": "break"}),
        StmtKind::Return(value) => match value {
            Some(e) => json!({"kind": "return", "value": expr_json(e)}),
            None => json!({"kind": "return"}),
        },
        StmtKind::ExprStmt(e) => json!({"kind": "expr", "call": expr_json(e)}),
    }
}

/// Canonical node tree for `program`.
pub fn program_to_json(program: &Program) -> Json {
    let globals: Vec<Json> = program
        .globals
        .iter()
        .map(|g| {
            let mut v = json!({"kind": "global", "name": g.name, "type": type_json(&g.ty)});
            if let Some(init) = &g.init {
                v["init"] = literal_json(init).1;
            }
            v
        })
        .collect();
    let funcs: Vec<Json> = program
        .funcs
        .iter()
        .map(|f| {
            json!({
                "kind": "func",
                "name": f.name,
                "params": bindings_json(&f.params),
                "return_type": type_json(&f.return_type),
                "locals": bindings_json(&f.locals),
                "body": block_json(&f.body),
            })
        })
        .collect();
    json!({"kind": "program", "entry": program.entry, "globals": globals, "funcs": funcs})
}

/// Canonical text form: pretty JSON with sorted keys.
pub fn serialize_uast(program: &Program) -> String {
    let mut text = serde_json::to_string_pretty(&program_to_json(program))
        .expect("program JSON always serializes");
    text.push('\n');
    text
}

/// Decodes a list of typed literals, reporting the index of a bad element.
pub fn values_from_json(value: &Json, path: &str) -> Result<Vec<Value>> {
    let items = value.as_array().ok_or_else(|| malformed(path, "expected an array"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, v)| value_from_json(v, &format!("{path}[{i}]")))
        .collect()
}

pub fn value_from_json(value: &Json, path: &str) -> Result<Value> {
    serde_json::from_value(value.clone()).map_err(|e| malformed(path, format!("invalid value: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uast::build::*;

    fn fig2_fragment() -> Program {
        let f0 = func(
            "func0",
            vec![b("var0", TypeTag::Int), b("var1", TypeTag::Int)],
            TypeTag::Int,
            vec![],
            vec![ret(var("var0"))],
        );
        let main = func(
            "__main__",
            vec![b("var0", TypeTag::Int), b("var1", TypeTag::Int)],
            TypeTag::Int,
            vec![b("var2", TypeTag::Int)],
            vec![
                assign(
                    var("var2"),
                    mul(div(var("var0"), call("func0", vec![var("var0"), var("var1")])), var("var1")),
                ),
                ret(var("var2")),
            ],
        );
        Program::new(vec![], vec![main, f0], "__main__")
    }

    #[test]
    fn round_trip_is_a_fixed_point() {
        let p = fig2_fragment();
        let text = serialize_uast(&p);
        let back = parse_uast(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(serialize_uast(&back), text);
    }

    #[test]
    fn nested_call_survives_parsing() {
        let p = parse_uast(&serialize_uast(&fig2_fragment())).unwrap();
        let StmtKind::Assign { value, .. } = &p.funcs[0].body[0].kind else {
            panic!("expected assign")
        };
        let ExprKind::Binary { op: BinOp::Mul, lhs, .. } = &value.kind else {
            panic!("expected mul")
        };
        let ExprKind::Binary { op: BinOp::Div, rhs, .. } = &lhs.kind else {
            panic!("expected div")
        };
        assert!(matches!(&rhs.kind, ExprKind::Call { callee: Callee::User(n), args } if n == "func0" && args.len() == 2));
    }

    #[test]
    fn minimal_program() {
        let text = r#"{"kind":"program","entry":"__main__","funcs":[
            {"kind":"func","name":"__main__","params":[],"return_type":"int","body":[
              {"kind":"return","value":{"kind":"const","type":"int","value":0}}]}]}"#;
        let p = parse_uast(text).unwrap();
        assert_eq!(p.funcs.len(), 1);
        assert!(crate::uast::validate(&p).is_empty());
    }

    #[test]
    fn errors_are_located() {
        let unresolved = r#"{"kind":"program","entry":"__main__","funcs":[
            {"kind":"func","name":"__main__","params":[],"return_type":"int","body":[
              {"kind":"return","value":{"kind":"var","name":"var9"}}]}]}"#;
        assert_eq!(
            parse_uast(unresolved).unwrap_err().to_string(),
            "unresolved variable var9 at node 2"
        );
        let bad_kind = unresolved.replace(r#""kind":"return""#, r#""kind":"goto""#);
        assert!(matches!(
            parse_uast(&bad_kind).unwrap_err(),
            ParseError::UnknownKind { path, .. } if path == "$.funcs[0].body[0]"
        ));
        let bad_call = unresolved.replace(
            r#"{"kind":"var","name":"var9"}"#,
            r#"{"kind":"call","callee":"strlen","args":[]}"#,
        );
        assert!(matches!(parse_uast(&bad_call).unwrap_err(), ParseError::UnknownBuiltin { name, .. } if name == "strlen"));
        let arity = unresolved.replace(
            r#"{"kind":"var","name":"var9"}"#,
            r#"{"kind":"call","callee":"len","args":[]}"#,
        );
        assert!(matches!(parse_uast(&arity).unwrap_err(), ParseError::Arity { got: 0, .. }));
        assert!(matches!(parse_uast("{\"kind\":").unwrap_err(), ParseError::Syntax { line: 1, .. }));
    }
}
