//! Second construct counter: walks the JSON encoding of a program with its
//! own type inference, sharing nothing with the AST visitor.

use std::collections::HashMap;

use astbench_core::fixtures::bundle_profiles;
use astbench_core::instruct::render_instructions;
use astbench_core::stats::ConstructStats;
use astbench_core::uast::doc::program_to_json;
use astbench_core::uast::gen::{gen_random_program, SizeProfile};
use astbench_core::uast::{validate, Program};
use serde_json::Value as Json;

#[derive(Clone, Debug, PartialEq)]
enum Ty {
    Int,
    Real,
    Bool,
    Char,
    Str,
    List(Box<Ty>),
    Map(Box<Ty>),
    Set(Box<Ty>),
    Void,
}

fn ty(j: &Json) -> Ty {
    match j {
        Json::String(s) => match s.as_str() {
            "int" => Ty::Int,
            "real" => Ty::Real,
            "bool" => Ty::Bool,
            "char" => Ty::Char,
            "string" => Ty::Str,
            other => panic!("type {other}"),
        },
        Json::Object(o) => {
            let (k, v) = o.iter().next().expect("one key");
            match k.as_str() {
                "list" => Ty::List(Box::new(ty(v))),
                "set" => Ty::Set(Box::new(ty(v))),
                "map" => Ty::Map(Box::new(ty(&v[1]))),
                other => panic!("type {other}"),
            }
        }
        other => panic!("type {other}"),
    }
}

fn widen(a: &Ty, b: &Ty) -> Ty {
    if *a == Ty::Real || *b == Ty::Real {
        Ty::Real
    } else {
        Ty::Int
    }
}

#[derive(Default)]
struct Counts {
    if_plain: u32,
    if_else: u32,
    ternary: u32,
    while_loop: u32,
    foreach_loop: u32,
    loop_with_continue: u32,
    loop_with_break: u32,
    max_loop_nesting: u32,
    list_ops: u32,
    map_ops: u32,
    set_ops: u32,
    string_split_ops: u32,
    ascii_ops: u32,
    int_division_ops: u32,
}

struct Walker<'a> {
    vars: HashMap<String, Ty>,
    returns: &'a HashMap<String, Ty>,
    c: Counts,
}

impl Walker<'_> {
    /// Type of an expression node, counting what it contains on the way.
    fn expr(&mut self, e: &Json) -> Ty {
        match e["kind"].as_str().unwrap() {
            "const" => ty(&e["type"]),
            "var" => self.vars[e["name"].as_str().unwrap()].clone(),
            "unary" => {
                let t = self.expr(&e["operand"]);
                if e["op"] == "not" {
                    Ty::Bool
                } else {
                    widen(&t, &Ty::Int)
                }
            }
            "ternary" => {
                self.c.ternary += 1;
                self.expr(&e["cond"]);
                let (a, b) = (self.expr(&e["then"]), self.expr(&e["otherwise"]));
                if a == b {
                    a
                } else {
                    widen(&a, &b)
                }
            }
            "binary" => {
                let (l, r) = (self.expr(&e["lhs"]), self.expr(&e["rhs"]));
                let op = e["op"].as_str().unwrap();
                let arith = ["add", "sub", "mul", "div", "mod"].contains(&op);
                let pair = (&l, &r);
                if matches!(pair, (Ty::Char, Ty::Int) | (Ty::Int, Ty::Char)) || (arith && pair == (&Ty::Char, &Ty::Char)) {
                    self.c.ascii_ops += 1;
                }
                let integral = |t: &Ty| matches!(t, Ty::Int | Ty::Char);
                if (op == "div" || op == "mod") && integral(&l) && integral(&r) {
                    self.c.int_division_ops += 1;
                }
                if arith {
                    widen(&l, &r)
                } else {
                    Ty::Bool
                }
            }
            "call" => {
                let args: Vec<Ty> = e["args"].as_array().unwrap().iter().map(|a| self.expr(a)).collect();
                let callee = e["callee"].as_str().unwrap();
                match callee {
                    "array_index" => {
                        self.c.list_ops += 1;
                        match &args[0] {
                            Ty::List(t) => (**t).clone(),
                            _ => Ty::Char,
                        }
                    }
                    "array_push" => {
                        self.c.list_ops += 1;
                        Ty::Void
                    }
                    "array_initializer" => {
                        self.c.list_ops += 1;
                        Ty::Void
                    }
                    "sort" => {
                        self.c.list_ops += 1;
                        Ty::Void
                    }
                    "len" => {
                        match args[0] {
                            Ty::List(_) => self.c.list_ops += 1,
                            Ty::Map(_) => self.c.map_ops += 1,
                            Ty::Set(_) => self.c.set_ops += 1,
                            _ => {}
                        }
                        Ty::Int
                    }
                    "map_get" => {
                        self.c.map_ops += 1;
                        match &args[0] {
                            Ty::Map(v) => (**v).clone(),
                            _ => Ty::Void,
                        }
                    }
                    "map_put" => {
                        self.c.map_ops += 1;
                        Ty::Void
                    }
                    "set_add" => {
                        self.c.set_ops += 1;
                        Ty::Void
                    }
                    "set_contains" => {
                        self.c.set_ops += 1;
                        Ty::Bool
                    }
                    "string_split" => {
                        self.c.string_split_ops += 1;
                        Ty::List(Box::new(Ty::Str))
                    }
                    "concat_string" | "substring" => Ty::Str,
                    "abs" => widen(&args[0], &Ty::Int),
                    "min" | "max" => {
                        if args[0] == args[1] {
                            args[0].clone()
                        } else {
                            widen(&args[0], &args[1])
                        }
                    }
                    user => self.returns[user].clone(),
                }
            }
            other => panic!("expression kind {other}"),
        }
    }

    fn stmt_exprs(&mut self, s: &Json) {
        for key in ["target", "value", "cond", "iterable", "call"] {
            if let Some(e) = s.get(key) {
                self.expr(e);
            }
        }
    }

    /// Walks a block at loop depth `depth`; reports (continue, break) that
    /// bind to the innermost enclosing loop.
    fn block(&mut self, b: &Json, depth: u32) -> (bool, bool) {
        let mut out = (false, false);
        for s in b.as_array().unwrap() {
            let (c, k) = self.stmt(s, depth, false);
            out = (out.0 || c, out.1 || k);
        }
        out
    }

    fn stmt(&mut self, s: &Json, depth: u32, chained: bool) -> (bool, bool) {
        self.stmt_exprs(s);
        match s["kind"].as_str().unwrap() {
            "continue" => (true, false),
            "break" => (false, true),
            "if" => {
                let otherwise = s.get("otherwise");
                if !chained {
                    if otherwise.is_some() {
                        self.c.if_else += 1;
                    } else {
                        self.c.if_plain += 1;
                    }
                }
                let mut out = self.block(&s["then"], depth);
                if let Some(o) = otherwise {
                    let items = o.as_array().unwrap();
                    let r = if items.len() == 1 && items[0]["kind"] == "if" {
                        self.stmt(&items[0], depth, true)
                    } else {
                        self.block(o, depth)
                    };
                    out = (out.0 || r.0, out.1 || r.1);
                }
                out
            }
            kind @ ("while" | "foreach") => {
                if kind == "while" {
                    self.c.while_loop += 1;
                } else {
                    self.c.foreach_loop += 1;
                }
                self.c.max_loop_nesting = self.c.max_loop_nesting.max(depth + 1);
                let (c, k) = self.block(&s["body"], depth + 1);
                self.c.loop_with_continue += c as u32;
                self.c.loop_with_break += k as u32;
                (false, false)
            }
            _ => (false, false),
        }
    }
}

fn declared(block: &Json, vars: &mut HashMap<String, Ty>) {
    for s in block.as_array().unwrap() {
        if s["kind"] == "declare" {
            for b in s["bindings"].as_array().unwrap() {
                vars.insert(b["name"].as_str().unwrap().into(), ty(&b["type"]));
            }
        }
        for key in ["then", "otherwise", "body"] {
            if let Some(inner) = s.get(key) {
                declared(inner, vars);
            }
        }
    }
}

fn paren_depth(text: &str) -> u32 {
    let (mut depth, mut best, mut quoted) = (0i64, 0i64, false);
    for ch in text.chars() {
        match ch {
            '"' => quoted = !quoted,
            '\n' => (depth, quoted) = (0, false),
            '(' if !quoted => {
                depth += 1;
                best = best.max(depth);
            }
            ')' if !quoted => depth -= 1,
            _ => {}
        }
    }
    best as u32
}

pub fn oracle(id: &str, program: &Program) -> ConstructStats {
    let doc = program_to_json(program);
    let funcs = doc["funcs"].as_array().unwrap();
    let returns: HashMap<String, Ty> = funcs
        .iter()
        .map(|f| (f["name"].as_str().unwrap().to_string(), ty(&f["return_type"])))
        .collect();
    let mut total = Counts::default();
    for f in funcs {
        let mut vars = HashMap::new();
        for g in doc["globals"].as_array().unwrap() {
            vars.insert(g["name"].as_str().unwrap().to_string(), ty(&g["type"]));
        }
        declared(&f["body"], &mut vars);
        for key in ["locals", "params"] {
            for b in f[key].as_array().unwrap() {
                vars.insert(b["name"].as_str().unwrap().to_string(), ty(&b["type"]));
            }
        }
        let mut w = Walker {
            vars,
            returns: &returns,
            c: Counts::default(),
        };
        w.block(&f["body"], 0);
        let c = w.c;
        total.if_plain += c.if_plain;
        total.if_else += c.if_else;
        total.ternary += c.ternary;
        total.while_loop += c.while_loop;
        total.foreach_loop += c.foreach_loop;
        total.loop_with_continue += c.loop_with_continue;
        total.loop_with_break += c.loop_with_break;
        total.max_loop_nesting = total.max_loop_nesting.max(c.max_loop_nesting);
        total.list_ops += c.list_ops;
        total.map_ops += c.map_ops;
        total.set_ops += c.set_ops;
        total.string_split_ops += c.string_split_ops;
        total.ascii_ops += c.ascii_ops;
        total.int_division_ops += c.int_division_ops;
    }
    let text = render_instructions(program).text();
    ConstructStats {
        problem_id: id.to_string(),
        if_plain: total.if_plain,
        if_else: total.if_else,
        ternary: total.ternary,
        while_loop: total.while_loop,
        foreach_loop: total.foreach_loop,
        loop_with_continue: total.loop_with_continue,
        loop_with_break: total.loop_with_break,
        max_loop_nesting: total.max_loop_nesting,
        list_ops: total.list_ops,
        map_ops: total.map_ops,
        set_ops: total.set_ops,
        string_split_ops: total.string_split_ops,
        ascii_ops: total.ascii_ops,
        int_division_ops: total.int_division_ops,
        instruction_count: text.lines().filter(|l| !l.trim().is_empty()).count() as u32,
        max_paren_depth: paren_depth(&text),
    }
}

/// `n` valid random programs spread over the bundle profiles.
pub fn random_programs(n: usize) -> Vec<(String, Program)> {
    let mut profiles = bundle_profiles();
    profiles.push(SizeProfile::default());
    let mut out = Vec::new();
    let mut seed = 90_000u64;
    while out.len() < n {
        let p = gen_random_program(seed, &profiles[out.len() % profiles.len()]);
        if validate::errors(&p).is_empty() {
            out.push((format!("r{seed}"), p));
        }
        seed += 1;
    }
    out
}

