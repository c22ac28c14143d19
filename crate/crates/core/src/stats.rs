//! Per-problem construct counts.
//!
//! Matching rules, one per key:
//!
//! * `if_plain` / `if_else`: one per if-chain. A chain is an If together with
//!   every If that sits alone in an `otherwise` block below it. Chains with
//!   any otherwise branch count as `if_else`, the rest as `if_plain`.
//! * `ternary`, `while_loop`, `foreach_loop`: one per node.
//! * `loop_with_continue` / `loop_with_break`: loops with at least one
//!   Continue/Break that belongs to them (not to an inner loop).
//! * `max_loop_nesting`: deepest loop-inside-loop depth, 0 without loops.
//! * `list_ops`: calls to array_index, array_push, array_initializer, sort,
//!   and len on a list.
//! * `map_ops`: map_get, map_put, and len on a map.
//! * `set_ops`: set_add, set_contains, and len on a set.
//! * `string_split_ops`: string_split calls.
//! * `ascii_ops`: Binary nodes with one char operand and one int operand,
//!   plus arithmetic on two chars.
//! * `int_division_ops`: div/mod Binary nodes whose operands are both
//!   integral (int or char).
//! * `instruction_count`: non-blank lines of the rendered instructions.
//! * `max_paren_depth`: deepest parenthesis nesting in those lines.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::instruct::render_instructions;
use crate::uast::typeck::{self, FuncScope};
use crate::uast::*;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructStats {
    pub problem_id: String,
    pub if_plain: u32,
    pub if_else: u32,
    pub ternary: u32,
    pub while_loop: u32,
    pub foreach_loop: u32,
    pub loop_with_continue: u32,
    pub loop_with_break: u32,
    pub max_loop_nesting: u32,
    pub list_ops: u32,
    pub map_ops: u32,
    pub set_ops: u32,
    pub string_split_ops: u32,
    pub ascii_ops: u32,
    pub int_division_ops: u32,
    pub instruction_count: u32,
    pub max_paren_depth: u32,
}

/// Keys of the count fields, in declaration order.
pub const STAT_KEYS: &[&str] = &[
    "if_plain",
    "if_else",
    "ternary",
    "while_loop",
    "foreach_loop",
    "loop_with_continue",
    "loop_with_break",
    "max_loop_nesting",
    "list_ops",
    "map_ops",
    "set_ops",
    "string_split_ops",
    "ascii_ops",
    "int_division_ops",
    "instruction_count",
    "max_paren_depth",
];

impl ConstructStats {
    pub fn get(&self, key: &str) -> Option<u32> {
        Some(match key {
            "if_plain" => self.if_plain,
            "if_else" => self.if_else,
            "ternary" => self.ternary,
            "while_loop" => self.while_loop,
            "foreach_loop" => self.foreach_loop,
            "loop_with_continue" => self.loop_with_continue,
            "loop_with_break" => self.loop_with_break,
            "max_loop_nesting" => self.max_loop_nesting,
            "list_ops" => self.list_ops,
            "map_ops" => self.map_ops,
            "set_ops" => self.set_ops,
            "string_split_ops" => self.string_split_ops,
            "ascii_ops" => self.ascii_ops,
            "int_division_ops" => self.int_division_ops,
            "instruction_count" => self.instruction_count,
            "max_paren_depth" => self.max_paren_depth,
            _ => return None,
        })
    }

    pub fn as_map(&self) -> BTreeMap<&'static str, u32> {
        STAT_KEYS.iter().map(|k| (*k, self.get(k).unwrap_or(0))).collect()
    }
}

/// Deepest parenthesis nesting over `lines`, ignoring quoted strings.
pub fn paren_depth<S: AsRef<str>>(lines: &[S]) -> u32 {
    let mut max = 0u32;
    for line in lines {
        let mut depth = 0u32;
        let mut quote = false;
        for c in line.as_ref().chars() {
            match c {
                '"' => quote = !quote,
                '(' if !quote => {
                    depth += 1;
                    max = max.max(depth);
                }
                ')' if !quote => depth = depth.saturating_sub(1),
                _ => {}
            }
        }
    }
    max
}

struct Collector<'a, 'p> {
    scope: FuncScope<'p>,
    stats: &'a mut ConstructStats,
}

impl<'a, 'p> Collector<'a, 'p> {
    fn ty(&self, e: &Expr) -> Option<TypeTag> {
        typeck::type_of(&self.scope, e).ok().flatten()
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Ternary { .. } => self.stats.ternary += 1,
            ExprKind::Binary { op, lhs, rhs } => {
                let (l, r) = (self.ty(lhs), self.ty(rhs));
                let pair = (l.as_ref(), r.as_ref());
                let mixed = matches!(
                    pair,
                    (Some(TypeTag::Char), Some(TypeTag::Int)) | (Some(TypeTag::Int), Some(TypeTag::Char))
                );
                let char_arith = op.is_arithmetic() && pair == (Some(&TypeTag::Char), Some(&TypeTag::Char));
                if mixed || char_arith {
                    self.stats.ascii_ops += 1;
                }
                let integral = l.is_some_and(|t| t.is_integral()) && r.is_some_and(|t| t.is_integral());
                if matches!(op, BinOp::Div | BinOp::Mod) && integral {
                    self.stats.int_division_ops += 1;
                }
            }
            ExprKind::Call {
                callee: Callee::Builtin(b),
                args,
            } => match b {
                Builtin::ArrayIndex | Builtin::ArrayPush | Builtin::ArrayInitializer | Builtin::Sort => {
                    self.stats.list_ops += 1
                }
                Builtin::MapGet | Builtin::MapPut => self.stats.map_ops += 1,
                Builtin::SetAdd | Builtin::SetContains => self.stats.set_ops += 1,
                Builtin::StringSplit => self.stats.string_split_ops += 1,
                Builtin::Len => match args.first().and_then(|a| self.ty(a)) {
                    Some(TypeTag::List(_)) => self.stats.list_ops += 1,
                    Some(TypeTag::Map(..)) => self.stats.map_ops += 1,
                    Some(TypeTag::Set(_)) => self.stats.set_ops += 1,
                    _ => {}
                },
                _ => {}
            },
            _ => {}
        }
        for c in e.children() {
            self.expr(c);
        }
    }

    /// Returns whether the block contains a Continue / Break that belongs to
    /// the nearest enclosing loop.
    fn block(&mut self, stmts: &[Stmt], loop_depth: u32) -> (bool, bool) {
        let mut flags = (false, false);
        for s in stmts {
            let (c, b) = self.stmt(s, loop_depth, false);
            flags.0 |= c;
            flags.1 |= b;
        }
        flags
    }

    fn stmt(&mut self, s: &Stmt, loop_depth: u32, chained: bool) -> (bool, bool) {
        for e in s.exprs() {
            self.expr(e);
        }
        match &s.kind {
            StmtKind::Continue => (true, false),
            StmtKind::Break => (false, true),
            StmtKind::If { then, otherwise, .. } => {
                if !chained {
                    if otherwise.is_some() {
                        self.stats.if_else += 1;
                    } else {
                        self.stats.if_plain += 1;
                    }
                }
                let (mut c, mut b) = self.block(then, loop_depth);
                match otherwise {
                    Some(o) if o.len() == 1 && matches!(o[0].kind, StmtKind::If { .. }) => {
                        let (c2, b2) = self.stmt(&o[0], loop_depth, true);
                        c |= c2;
                        b |= b2;
                    }
                    Some(o) => {
                        let (c2, b2) = self.block(o, loop_depth);
                        c |= c2;
                        b |= b2;
                    }
                    None => {}
                }
                (c, b)
            }
            StmtKind::While { body, .. } | StmtKind::ForEach { body, .. } => {
                if matches!(s.kind, StmtKind::While { .. }) {
                    self.stats.while_loop += 1;
                } else {
                    self.stats.foreach_loop += 1;
                }
                let depth = loop_depth + 1;
                self.stats.max_loop_nesting = self.stats.max_loop_nesting.max(depth);
                let (c, b) = self.block(body, depth);
                self.stats.loop_with_continue += c as u32;
                self.stats.loop_with_break += b as u32;
                (false, false)
            }
            _ => (false, false),
        }
    }
}

/// Counts constructs in `program`; `problem_id` is copied into the record.
pub fn collect_stats(problem_id: &str, program: &Program) -> ConstructStats {
    let mut stats = ConstructStats {
        problem_id: problem_id.to_string(),
        ..ConstructStats::default()
    };
    for f in &program.funcs {
        let mut c = Collector {
            scope: FuncScope::new(program, f),
            stats: &mut stats,
        };
        c.block(&f.body, 0);
    }
    let doc = render_instructions(program);
    stats.instruction_count = doc.instruction_count() as u32;
    stats.max_paren_depth = paren_depth(&doc.lines);
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uast::build::*;

    #[test]
    fn empty_function_has_only_the_header() {
        let p = Program::new(vec![], vec![func("__main__", vec![], TypeTag::Int, vec![], vec![])], "__main__");
        let s = collect_stats("e", &p);
        let mut zero = s.as_map();
        assert_eq!(zero.remove("instruction_count"), Some(1));
        assert!(zero.values().all(|v| *v == 0), "{zero:?}");
    }

    #[test]
    fn continue_belongs_to_the_innermost_loop() {
        let inner = while_inc(lt(var("var1"), int(3)), "var1", vec![cont()]);
        let outer = while_inc(lt(var("var0"), int(3)), "var0", vec![assign(var("var1"), int(0)), inner, brk()]);
        let p = Program::new(
            vec![],
            vec![func(
                "__main__",
                vec![],
                TypeTag::Int,
                vec![b("var0", TypeTag::Int), b("var1", TypeTag::Int)],
                vec![assign(var("var0"), int(0)), outer, ret(var("var0"))],
            )],
            "__main__",
        );
        let s = collect_stats("n", &p);
        assert_eq!((s.while_loop, s.max_loop_nesting), (2, 2));
        assert_eq!((s.loop_with_continue, s.loop_with_break), (1, 1));
    }

    #[test]
    fn paren_depth_skips_strings() {
        assert_eq!(paren_depth(&["a ((b) c)", "return \"((((\""]), 2);
        assert_eq!(paren_depth::<&str>(&[]), 0);
    }
}
