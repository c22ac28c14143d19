//! Seeded random programs for fixtures and property tests.
//!
//! Programs are assembled from small templates over a typed variable
//! environment. Every While is a counting loop with a step annotation and
//! its bound frozen for the duration of the body; ForEach never iterates a
//! container its body can mutate. Indexing only happens through a loop
//! counter known to be in range, and map lookups only through keys taken
//! from the map itself. Programs can still fault at runtime (overflow, a
//! zero divisor from arithmetic), which [`gen_problem`] rejects.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ast::*;
use super::build::*;
use super::interp::Limits;
use super::validate;
use super::value::Value;
use crate::problem::{derive_tests, Problem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construct {
    If,
    IfElse,
    IfChain,
    Ternary,
    While,
    ForEach,
    Continue,
    Break,
    Lists,
    Grids,
    Maps,
    Sets,
    Strings,
    Split,
    Ascii,
    Division,
    Reals,
    Globals,
    Calls,
}

impl Construct {
    pub const ALL: &'static [Construct] = &[
        Construct::If,
        Construct::IfElse,
        Construct::IfChain,
        Construct::Ternary,
        Construct::While,
        Construct::ForEach,
        Construct::Continue,
        Construct::Break,
        Construct::Lists,
        Construct::Grids,
        Construct::Maps,
        Construct::Sets,
        Construct::Strings,
        Construct::Split,
        Construct::Ascii,
        Construct::Division,
        Construct::Reals,
        Construct::Globals,
        Construct::Calls,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Construct::If => "if",
            Construct::IfElse => "if-else",
            Construct::IfChain => "if-chain",
            Construct::Ternary => "ternary",
            Construct::While => "while",
            Construct::ForEach => "foreach",
            Construct::Continue => "continue",
            Construct::Break => "break",
            Construct::Lists => "lists",
            Construct::Grids => "grids",
            Construct::Maps => "maps",
            Construct::Sets => "sets",
            Construct::Strings => "strings",
            Construct::Split => "split",
            Construct::Ascii => "ascii",
            Construct::Division => "division",
            Construct::Reals => "reals",
            Construct::Globals => "globals",
            Construct::Calls => "calls",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Construct::ALL.iter().copied().find(|c| c.name() == name)
    }
}

/// Size bounds and enabled constructs for [`gen_random_program`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeProfile {
    /// Upper bound on generated statements, templates included.
    pub max_stmts: usize,
    /// Deepest loop-inside-loop nesting.
    pub max_nesting: usize,
    pub constructs: BTreeSet<Construct>,
}

impl SizeProfile {
    /// All constructs enabled.
    pub fn new(max_stmts: usize, max_nesting: usize) -> Self {
        SizeProfile {
            max_stmts,
            max_nesting,
            constructs: Construct::ALL.iter().copied().collect(),
        }
    }

    pub fn only(max_stmts: usize, max_nesting: usize, constructs: &[Construct]) -> Self {
        SizeProfile {
            max_stmts,
            max_nesting,
            constructs: constructs.iter().copied().collect(),
        }
    }

    pub fn enabled(&self, c: Construct) -> bool {
        self.constructs.contains(&c)
    }
}

impl Default for SizeProfile {
    fn default() -> Self {
        SizeProfile::new(14, 2)
    }
}

#[derive(Clone, Debug)]
struct Slot {
    name: String,
    ty: TypeTag,
    readonly: bool,
}

/// Variables visible in the current block plus the facts that make
/// indexing safe there.
#[derive(Clone, Debug, Default)]
struct Scope {
    vars: Vec<Slot>,
    frozen: BTreeSet<String>,
    /// `(container, counter)`: the counter is a valid index into the
    /// container for the whole block.
    index_pairs: Vec<(Expr, String)>,
    /// `(map, key)`: the key is present in the map.
    key_pairs: Vec<(String, String)>,
    loop_depth: usize,
    if_depth: usize,
    in_loop: bool,
}

impl Scope {
    fn readable(&self, ty: &TypeTag) -> Vec<&Slot> {
        self.vars.iter().filter(|s| &s.ty == ty).collect()
    }

    fn writable(&self, ty: &TypeTag) -> Vec<&Slot> {
        self.vars
            .iter()
            .filter(|s| &s.ty == ty && !s.readonly && !self.frozen.contains(&s.name))
            .collect()
    }

    fn mutable_where(&self, pred: impl Fn(&TypeTag) -> bool) -> Vec<&Slot> {
        self.vars
            .iter()
            .filter(|s| pred(&s.ty) && !self.frozen.contains(&s.name))
            .collect()
    }

    fn add(&mut self, name: &str, ty: TypeTag, readonly: bool) {
        self.vars.push(Slot {
            name: name.to_string(),
            ty,
            readonly,
        });
    }
}

fn lengthy_names(sc: &Scope) -> Vec<String> {
    sc.vars
        .iter()
        .filter(|s| matches!(s.ty, TypeTag::List(_) | TypeTag::String | TypeTag::Map(..) | TypeTag::Set(_)))
        .map(|s| s.name.clone())
        .collect()
}

struct Helper {
    name: String,
    params: Vec<TypeTag>,
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    profile: &'a SizeProfile,
    next_var: usize,
    budget: usize,
    locals: Vec<Binding>,
    helpers: Vec<Helper>,
    globals: Vec<GlobalDecl>,
    result: Option<String>,
    ret_ty: TypeTag,
}

const WORDS: &[&str] = &["a", "ab", "hello", "x y", "q1", "", "zz", "cat"];

fn pick<'v, T>(rng: &mut ChaCha8Rng, items: &'v [T]) -> Option<&'v T> {
    if items.is_empty() {
        None
    } else {
        Some(&items[rng.random_range(0..items.len())])
    }
}

/// Chooses an index by weight; zero weights are never chosen.
fn weighted(rng: &mut ChaCha8Rng, weights: &[u32]) -> usize {
    let total: u32 = weights.iter().sum();
    let mut roll = rng.random_range(0..total.max(1));
    for (i, w) in weights.iter().enumerate() {
        if roll < *w {
            return i;
        }
        roll -= w;
    }
    0
}

impl<'a> Gen<'a> {
    fn on(&self, c: Construct) -> bool {
        self.profile.enabled(c)
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    fn fresh_name(&mut self) -> String {
        let name = format!("var{}", self.next_var);
        self.next_var += 1;
        name
    }

    fn fresh_local(&mut self, sc: &mut Scope, ty: TypeTag, readonly: bool) -> String {
        let name = self.fresh_name();
        self.locals.push(Binding::new(&name, ty.clone()));
        sc.add(&name, ty, readonly);
        name
    }

    fn small_int(&mut self) -> Expr {
        int(self.rng.random_range(-5..=12))
    }

    fn divisor(&mut self, sc: &Scope) -> Expr {
        match self.rng.random_range(0..4) {
            0 => {
                let d = *pick(&mut self.rng, &[-3i64, -2, 2, 3, 4, 5, 7]).unwrap();
                int(d)
            }
            1 => add(call("abs", vec![self.int_leaf(sc)]), int(1)),
            2 => match pick(&mut self.rng, &lengthy_names(sc)).cloned() {
                Some(name) => add(len(var(&name)), int(1)),
                None => int(3),
            },
            _ => int(*pick(&mut self.rng, &[2i64, 3, 10]).unwrap()),
        }
    }

    fn lengthy(&self, sc: &Scope) -> Vec<String> {
        lengthy_names(sc)
    }

    fn int_leaf(&mut self, sc: &Scope) -> Expr {
        let vars: Vec<String> = sc.readable(&TypeTag::Int).iter().map(|s| s.name.clone()).collect();
        if !vars.is_empty() && self.chance(0.7) {
            var(pick(&mut self.rng, &vars).unwrap())
        } else {
            self.small_int()
        }
    }

    fn char_vars(&self, sc: &Scope) -> Vec<String> {
        sc.readable(&TypeTag::Char).iter().map(|s| s.name.clone()).collect()
    }

    fn gen_int(&mut self, sc: &Scope, depth: usize) -> Expr {
        if depth == 0 {
            return self.int_leaf(sc);
        }
        let lengthy = self.lengthy(sc);
        let chars = self.char_vars(sc);
        let int_pairs: Vec<(Expr, String)> = sc
            .index_pairs
            .iter()
            .filter(|(c, _)| self.container_elem(sc, c) == Some(TypeTag::Int))
            .cloned()
            .collect();
        let int_maps: Vec<(String, String)> = sc
            .key_pairs
            .iter()
            .filter(|(m, _)| matches!(sc.vars.iter().find(|s| &s.name == m).map(|s| &s.ty), Some(TypeTag::Map(_, v)) if **v == TypeTag::Int))
            .cloned()
            .collect();
        let calls = !self.helpers.is_empty();
        let weights = [
            4,                                                   // leaf
            4,                                                   // add/sub
            2,                                                   // mul
            if lengthy.is_empty() { 0 } else { 2 },              // len
            if self.on(Construct::Division) { 3 } else { 0 },    // div/mod
            if self.on(Construct::Ternary) { 1 } else { 0 },     // ternary
            if self.on(Construct::Ascii) && !chars.is_empty() { 3 } else { 0 },
            if int_pairs.is_empty() { 0 } else { 4 },            // index
            if int_maps.is_empty() { 0 } else { 3 },             // map_get
            if calls { 2 } else { 0 },                           // helper call
            1,                                                   // min/max/abs
        ];
        match weighted(&mut self.rng, &weights) {
            0 => self.int_leaf(sc),
            1 => {
                let (l, r) = (self.gen_int(sc, depth - 1), self.gen_int(sc, depth - 1));
                if self.chance(0.5) {
                    add(l, r)
                } else {
                    sub(l, r)
                }
            }
            2 => {
                let l = self.gen_int(sc, depth - 1);
                mul(l, int(self.rng.random_range(-2..=4)))
            }
            3 => len(var(pick(&mut self.rng, &lengthy).unwrap())),
            4 => {
                let l = self.gen_int(sc, depth - 1);
                let d = self.divisor(sc);
                if self.chance(0.65) {
                    div(l, d)
                } else {
                    rem(l, d)
                }
            }
            5 => {
                let c = self.gen_bool(sc, depth - 1);
                let (t, o) = (self.gen_int(sc, depth - 1), self.gen_int(sc, depth - 1));
                ternary(c, t, o)
            }
            6 => {
                let c = var(pick(&mut self.rng, &chars).unwrap());
                match self.rng.random_range(0..3) {
                    0 => sub(c, int(48)),
                    1 => sub(c, ch('a')),
                    _ => add(c, int(self.rng.random_range(0..=3))),
                }
            }
            7 => {
                let (c, i) = pick(&mut self.rng, &int_pairs).unwrap().clone();
                idx(c, var(&i))
            }
            8 => {
                let (m, k) = pick(&mut self.rng, &int_maps).unwrap().clone();
                call("map_get", vec![var(&m), var(&k)])
            }
            9 => {
                let h = self.rng.random_range(0..self.helpers.len());
                let params = self.helpers[h].params.clone();
                let name = self.helpers[h].name.clone();
                let args = params.iter().map(|_| self.gen_int(sc, depth - 1)).collect();
                call(&name, args)
            }
            _ => {
                let a = self.gen_int(sc, depth - 1);
                match self.rng.random_range(0..3) {
                    0 => call("abs", vec![a]),
                    1 => call("min", vec![a, self.int_leaf(sc)]),
                    _ => call("max", vec![a, self.int_leaf(sc)]),
                }
            }
        }
    }

    fn container_elem(&self, sc: &Scope, container: &Expr) -> Option<TypeTag> {
        let (root, indices) = container.lvalue_path()?;
        let ty = &sc.vars.iter().find(|s| s.name == root)?.ty;
        let ty = if indices.is_empty() {
            ty.clone()
        } else {
            ty.list_element(indices.len())?.clone()
        };
        match ty {
            TypeTag::List(e) => Some(*e),
            TypeTag::String => Some(TypeTag::Char),
            _ => None,
        }
    }

    fn gen_bool(&mut self, sc: &Scope, depth: usize) -> Expr {
        let chars = self.char_vars(sc);
        let strings: Vec<String> = sc.readable(&TypeTag::String).iter().map(|s| s.name.clone()).collect();
        let sets: Vec<String> = sc.readable(&TypeTag::set(TypeTag::Int)).iter().map(|s| s.name.clone()).collect();
        let reals: Vec<String> = sc.readable(&TypeTag::Real).iter().map(|s| s.name.clone()).collect();
        let weights = [
            6,
            if self.on(Construct::Ascii) && !chars.is_empty() { 4 } else { 0 },
            if strings.is_empty() { 0 } else { 1 },
            if sets.is_empty() { 0 } else { 3 },
            if depth > 0 { 2 } else { 0 },
            if depth > 0 { 1 } else { 0 },
            if reals.is_empty() { 0 } else { 1 },
        ];
        let cmp = |rng: &mut ChaCha8Rng, l: Expr, r: Expr| match rng.random_range(0..6) {
            0 => lt(l, r),
            1 => le(l, r),
            2 => gt(l, r),
            3 => ge(l, r),
            4 => eq(l, r),
            _ => neq(l, r),
        };
        match weighted(&mut self.rng, &weights) {
            0 => {
                let l = self.gen_int(sc, depth.saturating_sub(1));
                let r = self.int_leaf(sc);
                cmp(&mut self.rng, l, r)
            }
            1 => {
                let c = var(pick(&mut self.rng, &chars).unwrap());
                match self.rng.random_range(0..5) {
                    0 => ge(c, int(48)),
                    1 => le(c, int(57)),
                    2 => neq(c, int(61)),
                    3 => eq(c, ch(*pick(&mut self.rng, &['a', ' ', '+', '1']).unwrap())),
                    _ => and(ge(c.clone(), int(97)), le(c, int(122))),
                }
            }
            2 => {
                let s = var(pick(&mut self.rng, &strings).unwrap());
                let w = *pick(&mut self.rng, WORDS).unwrap();
                if self.chance(0.5) {
                    eq(s, string(w))
                } else {
                    lt(s, string(w))
                }
            }
            3 => {
                let s = var(pick(&mut self.rng, &sets).unwrap());
                call("set_contains", vec![s, self.int_leaf(sc)])
            }
            4 => {
                let (l, r) = (self.gen_bool(sc, depth - 1), self.gen_bool(sc, depth - 1));
                if self.chance(0.5) {
                    and(l, r)
                } else {
                    or(l, r)
                }
            }
            5 => not(self.gen_bool(sc, depth - 1)),
            _ => {
                let r = var(pick(&mut self.rng, &reals).unwrap());
                let l = self.gen_real(sc, 0);
                cmp(&mut self.rng, r, l)
            }
        }
    }

    fn real_const(&mut self) -> Expr {
        real(self.rng.random_range(-12..=20) as f64 / 4.0)
    }

    fn gen_real(&mut self, sc: &Scope, depth: usize) -> Expr {
        let reals: Vec<String> = sc.readable(&TypeTag::Real).iter().map(|s| s.name.clone()).collect();
        let leaf = |g: &mut Self| {
            if !reals.is_empty() && g.chance(0.7) {
                var(pick(&mut g.rng, &reals).unwrap())
            } else {
                g.real_const()
            }
        };
        if depth == 0 {
            return leaf(self);
        }
        match self.rng.random_range(0..5) {
            0 => leaf(self),
            1 => {
                let l = self.gen_real(sc, depth - 1);
                let r = self.gen_int(sc, 0);
                add(l, r)
            }
            2 => {
                let l = self.gen_real(sc, depth - 1);
                mul(l, self.real_const())
            }
            3 => {
                let l = self.gen_real(sc, depth - 1);
                let d = self.divisor(sc);
                div(l, d)
            }
            _ => {
                let (l, r) = (self.gen_real(sc, depth - 1), self.gen_real(sc, depth - 1));
                sub(l, r)
            }
        }
    }

    fn gen_char(&mut self, sc: &Scope) -> Expr {
        let chars = self.char_vars(sc);
        let string_pairs: Vec<(Expr, String)> = sc
            .index_pairs
            .iter()
            .filter(|(c, _)| self.container_elem(sc, c) == Some(TypeTag::Char))
            .cloned()
            .collect();
        match self.rng.random_range(0..3) {
            0 if !chars.is_empty() => var(pick(&mut self.rng, &chars).unwrap()),
            1 if !string_pairs.is_empty() => {
                let (c, i) = pick(&mut self.rng, &string_pairs).unwrap().clone();
                idx(c, var(&i))
            }
            _ => ch(*pick(&mut self.rng, &['a', 'b', 'z', '0', '7', '=', ' ']).unwrap()),
        }
    }

    fn gen_string(&mut self, sc: &Scope, depth: usize) -> Expr {
        let strings: Vec<String> = sc.readable(&TypeTag::String).iter().map(|s| s.name.clone()).collect();
        let leaf = |g: &mut Self| {
            if !strings.is_empty() && g.chance(0.7) {
                var(pick(&mut g.rng, &strings).unwrap())
            } else {
                string(pick(&mut g.rng, WORDS).unwrap())
            }
        };
        if depth == 0 {
            return leaf(self);
        }
        match self.rng.random_range(0..4) {
            0 => leaf(self),
            1 => {
                let l = self.gen_string(sc, depth - 1);
                let c = self.gen_char(sc);
                call("concat_string", vec![l, c])
            }
            2 => {
                let (l, r) = (self.gen_string(sc, depth - 1), leaf(self));
                call("concat_string", vec![l, r])
            }
            _ => {
                let s = leaf(self);
                let from = int(self.rng.random_range(0..=2));
                let to = int(self.rng.random_range(1..=5));
                call("substring", vec![s, from, to])
            }
        }
    }

    fn gen_of(&mut self, sc: &Scope, ty: &TypeTag) -> Expr {
        match ty {
            TypeTag::Int => self.gen_int(sc, 2),
            TypeTag::Real => self.gen_real(sc, 2),
            TypeTag::Char => self.gen_char(sc),
            TypeTag::String => self.gen_string(sc, 2),
            TypeTag::Bool => self.gen_bool(sc, 1),
            _ => new_container(vec![]),
        }
    }

    fn take_budget(&mut self, n: usize) -> bool {
        if self.budget >= n {
            self.budget -= n;
            true
        } else {
            false
        }
    }

    fn gen_block(&mut self, sc: &Scope, min: usize, max: usize) -> Block {
        let mut sc = sc.clone();
        let mut out = Vec::new();
        let n = self.rng.random_range(min..=max.max(min));
        for _ in 0..n {
            if self.budget == 0 {
                break;
            }
            out.extend(self.gen_stmt(&mut sc));
        }
        if out.is_empty() && min > 0 {
            out.extend(self.assign_stmt(&sc));
        }
        out
    }

    /// Assignment to a writable scalar, biased toward the result variable.
    fn assign_stmt(&mut self, sc: &Scope) -> Vec<Stmt> {
        let mut targets: Vec<Slot> = Vec::new();
        for ty in [TypeTag::Int, TypeTag::Real, TypeTag::Char, TypeTag::String] {
            targets.extend(sc.writable(&ty).into_iter().cloned());
        }
        let result = self.result.clone().and_then(|r| targets.iter().find(|t| t.name == r).cloned());
        let target = match result {
            Some(r) if self.chance(0.45) => r,
            _ => match pick(&mut self.rng, &targets) {
                Some(t) => t.clone(),
                None => return Vec::new(),
            },
        };
        let value = match &target.ty {
            TypeTag::Int if self.chance(0.5) => {
                let rhs = self.gen_int(sc, 2);
                if self.chance(0.5) {
                    add(var(&target.name), rhs)
                } else {
                    sub(var(&target.name), rhs)
                }
            }
            TypeTag::String if self.chance(0.6) => {
                let c = if self.chance(0.5) { self.gen_char(sc) } else { self.gen_string(sc, 0) };
                call("concat_string", vec![var(&target.name), c])
            }
            TypeTag::Char if self.on(Construct::Ascii) && self.chance(0.5) => {
                let c = self.gen_char(sc);
                add(c, int(self.rng.random_range(0..=3)))
            }
            TypeTag::Real if self.chance(0.3) => self.gen_int(sc, 1),
            ty => self.gen_of(sc, ty),
        };
        vec![assign(var(&target.name), value)]
    }

    fn gen_stmt(&mut self, sc: &mut Scope) -> Vec<Stmt> {
        if !self.take_budget(1) {
            return Vec::new();
        }
        let can_loop = sc.loop_depth < self.profile.max_nesting && self.budget >= 2;
        let can_if = sc.if_depth < 3 && self.budget >= 1;
        let lists: Vec<String> = sc
            .mutable_where(|t| *t == TypeTag::list(TypeTag::Int))
            .iter()
            .map(|s| s.name.clone())
            .collect();
        let maps: Vec<Slot> = sc.mutable_where(|t| matches!(t, TypeTag::Map(..))).into_iter().cloned().collect();
        let sets: Vec<String> = sc
            .mutable_where(|t| matches!(t, TypeTag::Set(_)))
            .iter()
            .map(|s| s.name.clone())
            .collect();
        let iterables: Vec<Slot> = sc
            .vars
            .iter()
            .filter(|s| s.ty.is_container() || s.ty == TypeTag::String)
            .filter(|s| s.ty.list_depth() <= 1)
            .cloned()
            .collect();
        let strings: Vec<String> = sc.readable(&TypeTag::String).iter().map(|s| s.name.clone()).collect();
        let globals: Vec<String> = self
            .globals
            .iter()
            .filter(|g| g.ty == TypeTag::Int && !sc.frozen.contains(&g.name))
            .map(|g| g.name.clone())
            .collect();
        let weights = [
            8,                                                                                   // assign
            if can_if && self.on(Construct::If) { 3 } else { 0 },                                // if
            if can_if && self.on(Construct::IfElse) { 3 } else { 0 },                            // if-else
            if can_if && self.on(Construct::IfChain) { 2 } else { 0 },                           // chain
            if can_loop && self.on(Construct::While) { 4 } else { 0 },                           // while
            if can_loop && self.on(Construct::ForEach) && !iterables.is_empty() { 3 } else { 0 }, // foreach
            if lists.is_empty() { 0 } else { 3 },                                                // push / sort
            if maps.is_empty() { 0 } else { 2 },                                                 // map_put
            if sets.is_empty() { 0 } else { 2 },                                                 // set_add
            if self.on(Construct::Split) && !strings.is_empty() { 2 } else { 0 },                // split
            if globals.is_empty() { 0 } else { 3 },                                              // global update
            if can_loop && sc.loop_depth + 2 <= self.profile.max_nesting && self.on(Construct::Grids) && self.budget >= 3 {
                1
            } else {
                0
            },
            if sc.if_depth > 0 && !sc.in_loop { 1 } else { 0 }, // early return
        ];
        match weighted(&mut self.rng, &weights) {
            0 => self.assign_stmt(sc),
            1 => {
                let c = self.gen_bool(sc, 1);
                let inner = self.nested_if(sc);
                let then = self.gen_block(&inner, 1, 2);
                vec![if_(c, then)]
            }
            2 => {
                let c = self.gen_bool(sc, 1);
                let inner = self.nested_if(sc);
                let then = self.gen_block(&inner, 1, 2);
                let otherwise = self.gen_block(&inner, 1, 2);
                vec![if_else(c, then, otherwise)]
            }
            3 => {
                let inner = self.nested_if(sc);
                let links = self.rng.random_range(2..=3);
                let mut tail = if self.chance(0.8) { Some(self.gen_block(&inner, 1, 1)) } else { None };
                for _ in 0..links {
                    let c = self.gen_bool(sc, 1);
                    let then = self.gen_block(&inner, 1, 1);
                    let node = match tail.take() {
                        Some(o) => if_else(c, then, o),
                        None => if_(c, then),
                    };
                    tail = Some(vec![node]);
                }
                tail.unwrap_or_default()
            }
            4 => self.while_stmt(sc),
            5 => {
                let it = pick(&mut self.rng, &iterables).unwrap().clone();
                self.foreach_stmt(sc, &it)
            }
            6 => {
                let l = pick(&mut self.rng, &lists).unwrap().clone();
                if self.chance(0.8) {
                    let v = self.gen_int(sc, 1);
                    vec![expr_stmt(call("array_push", vec![var(&l), v]))]
                } else {
                    vec![expr_stmt(call("sort", vec![var(&l)]))]
                }
            }
            7 => {
                let m = pick(&mut self.rng, &maps).unwrap().clone();
                let TypeTag::Map(k, v) = &m.ty else { unreachable!() };
                let key = self.gen_of(sc, k);
                let val = self.gen_of(sc, v);
                vec![expr_stmt(call("map_put", vec![var(&m.name), key, val]))]
            }
            8 => {
                let s = pick(&mut self.rng, &sets).unwrap().clone();
                let x = self.gen_int(sc, 1);
                vec![expr_stmt(call("set_add", vec![var(&s), x]))]
            }
            9 => {
                let s = pick(&mut self.rng, &strings).unwrap().clone();
                let words = self.fresh_local(sc, TypeTag::list(TypeTag::String), false);
                let mut out = vec![assign(var(&words), call("string_split", vec![var(&s)]))];
                if can_loop && self.on(Construct::ForEach) && self.chance(0.7) {
                    let slot = sc.vars.iter().find(|v| v.name == words).unwrap().clone();
                    out.extend(self.foreach_stmt(sc, &slot));
                }
                out
            }
            10 => {
                let g = pick(&mut self.rng, &globals).unwrap().clone();
                let v = self.gen_int(sc, 1);
                vec![assign(var(&g), add(var(&g), v))]
            }
            11 => self.grid_stmts(sc),
            _ => {
                let v = self.return_value(sc);
                vec![ret(v)]
            }
        }
    }

    fn return_value(&mut self, sc: &Scope) -> Expr {
        let ty = self.ret_ty.clone();
        match (&ty, &self.result) {
            (TypeTag::List(_), Some(r)) => var(r),
            _ => self.gen_of(sc, &ty),
        }
    }

    fn nested_if(&self, sc: &Scope) -> Scope {
        let mut inner = sc.clone();
        inner.if_depth += 1;
        inner
    }

    fn loop_body(&mut self, inner: &Scope) -> Block {
        let mut body = self.gen_block(inner, 1, 3);
        let mut jumps = Vec::new();
        if self.on(Construct::Continue) && self.chance(0.35) {
            jumps.push(cont());
        }
        if self.on(Construct::Break) && self.chance(0.25) {
            jumps.push(brk());
        }
        for j in jumps {
            let c = self.gen_bool(inner, 1);
            let at = self.rng.random_range(0..=body.len());
            body.insert(at, if_(c, vec![j]));
        }
        body
    }

    fn while_stmt(&mut self, sc: &mut Scope) -> Vec<Stmt> {
        let bounded: Vec<Slot> = sc
            .vars
            .iter()
            .filter(|s| matches!(s.ty, TypeTag::List(_) | TypeTag::String))
            .cloned()
            .collect();
        let counter = self.fresh_name();
        self.locals.push(Binding::new(&counter, TypeTag::Int));
        let mut inner = sc.clone();
        inner.loop_depth += 1;
        inner.in_loop = true;
        inner.add(&counter, TypeTag::Int, true);
        let over = if !bounded.is_empty() && self.chance(0.6) {
            pick(&mut self.rng, &bounded).cloned()
        } else {
            None
        };
        let decrement = self.chance(0.3);
        let (init, cond) = match (&over, decrement) {
            (Some(c), false) => (int(0), lt(var(&counter), len(var(&c.name)))),
            (Some(c), true) => (sub(len(var(&c.name)), int(1)), ge(var(&counter), int(0))),
            (None, false) => {
                let bound = match sc.readable(&TypeTag::Int).first() {
                    Some(p) if self.chance(0.4) => call("min", vec![var(&p.name), int(8)]),
                    _ => int(self.rng.random_range(1..=6)),
                };
                (int(0), lt(var(&counter), bound))
            }
            (None, true) => (int(self.rng.random_range(1..=6)), gt(var(&counter), int(0))),
        };
        if let Some(c) = &over {
            inner.frozen.insert(c.name.clone());
            inner.index_pairs.push((var(&c.name), counter.clone()));
        }
        let body = self.loop_body(&inner);
        sc.add(&counter, TypeTag::Int, false);
        let stmt = if decrement {
            while_dec(cond, &counter, body)
        } else {
            while_inc(cond, &counter, body)
        };
        vec![assign(var(&counter), init), stmt]
    }

    fn foreach_stmt(&mut self, sc: &Scope, it: &Slot) -> Vec<Stmt> {
        let elem = match &it.ty {
            TypeTag::List(e) => (**e).clone(),
            TypeTag::Set(e) => (**e).clone(),
            TypeTag::Map(k, _) => (**k).clone(),
            _ => TypeTag::Char,
        };
        let mut inner = sc.clone();
        inner.loop_depth += 1;
        inner.in_loop = true;
        inner.frozen.insert(it.name.clone());
        let v = self.fresh_local(&mut inner, elem, true);
        if matches!(it.ty, TypeTag::Map(..)) {
            inner.key_pairs.push((it.name.clone(), v.clone()));
        }
        let body = self.loop_body(&inner);
        vec![for_each(&v, var(&it.name), body)]
    }

    /// Builds a two-dimensional list and fills it with nested counting loops.
    fn grid_stmts(&mut self, sc: &mut Scope) -> Vec<Stmt> {
        let ty = TypeTag::list(TypeTag::list(TypeTag::Int));
        let grid = self.fresh_local(sc, ty, false);
        let (rows, cols) = (self.rng.random_range(1..=3), self.rng.random_range(1..=4));
        let i = self.fresh_name();
        let j = self.fresh_name();
        self.locals.push(Binding::new(&i, TypeTag::Int));
        self.locals.push(Binding::new(&j, TypeTag::Int));
        let mut inner = sc.clone();
        inner.frozen.insert(grid.clone());
        inner.loop_depth += 2;
        inner.in_loop = true;
        inner.add(&i, TypeTag::Int, true);
        inner.add(&j, TypeTag::Int, true);
        inner.index_pairs.push((var(&grid), i.clone()));
        let value = self.gen_int(&inner, 1);
        let fill = assign(idx(idx(var(&grid), var(&i)), var(&j)), add(value, mul(var(&i), var(&j))));
        let row_loop = while_inc(lt(var(&j), len(idx(var(&grid), var(&i)))), &j, vec![fill]);
        let outer = while_inc(
            lt(var(&i), len(var(&grid))),
            &i,
            vec![assign(var(&j), int(0)), row_loop],
        );
        let mut out = vec![
            assign(var(&grid), new_container(vec![int(rows), int(cols)])),
            assign(var(&i), int(0)),
            outer,
        ];
        if let Some(r) = self.result.clone().filter(|_| self.ret_ty == TypeTag::Int) {
            let k = self.fresh_name();
            self.locals.push(Binding::new(&k, TypeTag::Int));
            out.push(assign(var(&k), int(0)));
            out.push(while_inc(
                lt(var(&k), len(var(&grid))),
                &k,
                vec![assign(var(&r), add(var(&r), idx(idx(var(&grid), var(&k)), int(0))))],
            ));
        }
        sc.add(&i, TypeTag::Int, false);
        out
    }

    fn helper(&mut self, name: &str) -> FuncDef {
        let mut sc = Scope::default();
        let nparams = self.rng.random_range(1..=2);
        let mut params = Vec::new();
        for _ in 0..nparams {
            let p = self.fresh_name();
            sc.add(&p, TypeTag::Int, false);
            params.push(Binding::new(&p, TypeTag::Int));
        }
        for g in &self.globals {
            sc.add(&g.name, g.ty.clone(), false);
        }
        self.locals.clear();
        let saved_ret = std::mem::replace(&mut self.ret_ty, TypeTag::Int);
        let r = self.fresh_local(&mut sc, TypeTag::Int, false);
        let saved_result = self.result.replace(r.clone());
        let saved_budget = std::mem::replace(&mut self.budget, 3);
        let init = self.gen_int(&sc, 1);
        let mut body = vec![assign(var(&r), init)];
        body.extend(self.gen_block(&sc, 1, 3));
        body.push(ret(var(&r)));
        self.budget = saved_budget;
        self.result = saved_result;
        self.ret_ty = saved_ret;
        let locals = std::mem::take(&mut self.locals);
        func(name, params, TypeTag::Int, locals, body)
    }

    fn program(&mut self) -> Program {
        if self.on(Construct::Globals) && self.chance(0.6) {
            let name = self.fresh_name();
            let init = self.rng.random_range(-3..=10);
            self.globals.push(GlobalDecl::new(name, TypeTag::Int, Some(Literal::Int(init))));
        }
        let mut funcs = Vec::new();
        if self.on(Construct::Calls) && self.chance(0.5) {
            let h = self.helper("func0");
            self.helpers.push(Helper {
                name: h.name.clone(),
                params: h.params.iter().map(|p| p.ty.clone()).collect(),
            });
            funcs.push(h);
        }

        let mut sc = Scope::default();
        for g in &self.globals {
            sc.add(&g.name, g.ty.clone(), false);
        }
        let mut params = Vec::new();
        let mut extra: Vec<TypeTag> = Vec::new();
        if self.on(Construct::Strings) || self.on(Construct::Split) {
            extra.push(TypeTag::String);
        }
        if self.on(Construct::Ascii) {
            extra.push(TypeTag::Char);
        }
        if self.on(Construct::Lists) {
            extra.push(TypeTag::list(TypeTag::Int));
        }
        if self.on(Construct::Reals) {
            extra.push(TypeTag::Real);
        }
        let mut param_types = vec![TypeTag::Int];
        for t in extra {
            if self.chance(0.55) && param_types.len() < 3 {
                param_types.push(t);
            }
        }
        for t in param_types {
            let p = self.fresh_name();
            sc.add(&p, t.clone(), false);
            params.push(Binding::new(&p, t));
        }
        self.locals.clear();

        let mut ret_choices = vec![TypeTag::Int, TypeTag::Int];
        if self.on(Construct::Strings) {
            ret_choices.push(TypeTag::String);
        }
        if self.on(Construct::Reals) {
            ret_choices.push(TypeTag::Real);
        }
        if self.on(Construct::Lists) {
            ret_choices.push(TypeTag::list(TypeTag::Int));
        }
        self.ret_ty = pick(&mut self.rng, &ret_choices).unwrap().clone();
        let mut body = Vec::new();
        let r = self.fresh_local(&mut sc, self.ret_ty.clone(), false);
        let init = match self.ret_ty.clone() {
            TypeTag::Int => self.gen_int(&sc, 1),
            TypeTag::Real => self.real_const(),
            TypeTag::String => string(""),
            _ => new_container(vec![]),
        };
        body.push(assign(var(&r), init));
        self.result = Some(r.clone());

        let containers = [
            (Construct::Lists, TypeTag::list(TypeTag::Int)),
            (Construct::Maps, TypeTag::map(TypeTag::Int, TypeTag::Int)),
            (Construct::Maps, TypeTag::map(TypeTag::String, TypeTag::Int)),
            (Construct::Sets, TypeTag::set(TypeTag::Int)),
        ];
        for (c, ty) in containers {
            if self.on(c) && self.chance(0.4) {
                let name = self.fresh_local(&mut sc, ty, false);
                body.push(assign(var(&name), new_container(vec![])));
            }
        }
        if self.on(Construct::Ascii) && sc.readable(&TypeTag::Char).is_empty() && self.chance(0.5) {
            let name = self.fresh_local(&mut sc, TypeTag::Char, false);
            let c = ch(*pick(&mut self.rng, &['a', '0', 'x']).unwrap());
            body.push(assign(var(&name), c));
        }
        if self.on(Construct::Reals) && sc.readable(&TypeTag::Real).is_empty() && self.chance(0.5) {
            let name = self.fresh_local(&mut sc, TypeTag::Real, false);
            body.push(assign(var(&name), self.real_const()));
        }
        if let Some(g) = self.globals.first().map(|g| g.name.clone()) {
            let v = self.gen_int(&sc, 1);
            body.push(assign(var(&g), add(var(&g), v)));
        }
        body.extend(self.gen_block(&sc, 2, self.profile.max_stmts.max(2)));
        if self.ret_ty == TypeTag::Int {
            if let Some(g) = self.globals.first().map(|g| g.name.clone()) {
                body.push(assign(var(&r), add(var(&r), var(&g))));
            }
        }
        body.push(ret(var(&r)));
        let locals = std::mem::take(&mut self.locals);
        funcs.insert(0, func("__main__", params, self.ret_ty.clone(), locals, body));
        Program::new(std::mem::take(&mut self.globals), funcs, "__main__")
    }
}

/// A program drawn deterministically from `seed`. It validates; its loops
/// terminate on every input.
pub fn gen_random_program(seed: u64, profile: &SizeProfile) -> Program {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        profile,
        next_var: 0,
        budget: profile.max_stmts.max(1),
        locals: Vec::new(),
        helpers: Vec::new(),
        globals: Vec::new(),
        result: None,
        ret_ty: TypeTag::Int,
    };
    g.program()
}

fn random_value(rng: &mut ChaCha8Rng, ty: &TypeTag) -> Value {
    match ty {
        TypeTag::Int => Value::Int(rng.random_range(-20..=40)),
        TypeTag::Real => Value::Real(rng.random_range(-40..=40) as f64 / 4.0),
        TypeTag::Bool => Value::Bool(rng.random_bool(0.5)),
        TypeTag::Char => {
            let pool = b"0123456789abcxyzAQ=+ ";
            Value::Char(pool[rng.random_range(0..pool.len())] as u32)
        }
        TypeTag::String => {
            let alphabet = b"abcdexyz0123";
            let mut s = String::new();
            if rng.random_bool(0.15) {
                s.push(' ');
            }
            for w in 0..rng.random_range(0..=4) {
                if w > 0 {
                    s.push_str(if rng.random_bool(0.2) { "  " } else { " " });
                }
                for _ in 0..rng.random_range(1..=5) {
                    s.push(alphabet[rng.random_range(0..alphabet.len())] as char);
                }
            }
            Value::Str(s)
        }
        TypeTag::List(e) => Value::List((0..rng.random_range(0..=6)).map(|_| random_value(rng, e)).collect()),
        TypeTag::Set(e) => {
            let mut items: Vec<Value> = Vec::new();
            for _ in 0..rng.random_range(0..=4) {
                let v = random_value(rng, e);
                if !items.contains(&v) {
                    items.push(v);
                }
            }
            Value::Set(items)
        }
        TypeTag::Map(..) => Value::Map(Vec::new()),
    }
}

/// `count` argument tuples for the program's entry function.
pub fn gen_inputs(program: &Program, seed: u64, count: usize) -> Vec<Vec<Value>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x05ee_d1a9u64);
    let params: Vec<TypeTag> = program
        .entry_func()
        .map(|f| f.params.iter().map(|p| p.ty.clone()).collect())
        .unwrap_or_default();
    (0..count)
        .map(|_| params.iter().map(|t| random_value(&mut rng, t)).collect())
        .collect()
}

/// Step budget used when deriving tests for generated problems; keeps the
/// ground truth fast under the sandbox.
pub const FIXTURE_STEP_LIMIT: u64 = 200_000;

/// Draws programs from `seed` until one validates and evaluates without a
/// fault on all `tests` generated inputs. Deterministic in its arguments.
pub fn gen_problem(id: &str, seed: u64, profile: &SizeProfile, tests: usize) -> Option<Problem> {
    for attempt in 0..500u64 {
        let s = seed.wrapping_add(attempt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let program = gen_random_program(s, profile);
        if !validate::errors(&program).is_empty() {
            continue;
        }
        let inputs = gen_inputs(&program, s, tests);
        let derived = derive_tests(&program, &inputs, Limits::steps(FIXTURE_STEP_LIMIT));
        if let Ok(cases) = derived.into_iter().collect::<Result<Vec<_>, _>>() {
            return Some(Problem {
                id: id.to_string(),
                program,
                tests: cases,
            });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_in_seed() {
        let profile = SizeProfile::new(5, 1);
        assert_eq!(gen_random_program(1, &profile), gen_random_program(1, &profile));
        assert_ne!(gen_random_program(1, &profile), gen_random_program(2, &profile));
    }

    #[test]
    fn generated_programs_validate() {
        for seed in 0..300 {
            let p = gen_random_program(seed, &SizeProfile::default());
            let errors = validate::errors(&p);
            assert!(errors.is_empty(), "seed {seed}: {errors:?}");
        }
    }

    #[test]
    fn problems_are_found_quickly() {
        for seed in 0..40 {
            let p = gen_problem("g", seed, &SizeProfile::default(), 10).expect("problem");
            assert_eq!(p.tests.len(), 10);
        }
    }
}
