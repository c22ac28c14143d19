//! Randomized invariants of the tree, interpreter and renderer.

use std::collections::{BTreeSet, HashMap};

use astbench_core::instruct::{render_counting_visits, render_instructions};
use astbench_core::uast::gen::{gen_inputs, gen_random_program, SizeProfile};
use astbench_core::uast::interp::{interpret_traced, TraceEvent};
use astbench_core::uast::{interpret, parse_uast, serialize_uast, validate, Limits, NodeId, Program, Step, Stmt, StmtKind};
use proptest::prelude::*;

fn program(seed: u64, size: usize) -> Option<Program> {
    let p = gen_random_program(seed, &SizeProfile::new(size, 3));
    validate::errors(&p).is_empty().then_some(p)
}

fn assigns(body: &[Stmt], v: &str) -> bool {
    let mut hit = false;
    for s in body {
        s.walk(&mut |s| match &s.kind {
            StmtKind::Assign { target, .. } => hit |= target.lvalue_path().is_some_and(|(root, _)| root == v),
            StmtKind::ForEach { var, .. } => hit |= var == v,
            StmtKind::While { step, .. } => hit |= step.var() == Some(v),
            _ => {}
        });
    }
    hit
}

fn leaves_early(body: &[Stmt]) -> bool {
    let mut hit = false;
    for s in body {
        s.walk(&mut |s| hit |= matches!(s.kind, StmtKind::Break | StmtKind::Return(_)));
    }
    hit
}

/// Annotated loops whose variable only the annotation changes, with the
/// step each iteration must apply.
fn clean_loops(p: &Program) -> HashMap<NodeId, i64> {
    let mut out = HashMap::new();
    for s in p.statements() {
        if let StmtKind::While { body, step, .. } = &s.kind {
            let delta = match step {
                Step::Increment(_) => 1,
                Step::Decrement(_) => -1,
                Step::None => continue,
            };
            let v = step.var().unwrap_or_default();
            if !assigns(body, v) && !leaves_early(body) {
                out.insert(s.id, delta);
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn serialization_round_trip_is_a_fixed_point(seed in any::<u64>(), size in 4usize..24) {
        let Some(p) = program(seed, size) else { return Ok(()) };
        let text = serialize_uast(&p);
        let back = parse_uast(&text).unwrap();
        prop_assert!(validate::errors(&back).is_empty());
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(serialize_uast(&back), text);
    }

    #[test]
    fn interpretation_is_deterministic(seed in any::<u64>()) {
        let Some(p) = program(seed, 14) else { return Ok(()) };
        for args in gen_inputs(&p, seed, 3) {
            let a = interpret(&p, &args, Limits::default());
            let b = interpret(&p, &args, Limits::default());
            prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
        }
    }

    #[test]
    fn annotated_loops_step_once_per_iteration(seed in any::<u64>()) {
        let Some(p) = program(seed, 16) else { return Ok(()) };
        let loops = clean_loops(&p);
        for args in gen_inputs(&p, seed, 3) {
            let (_, trace) = interpret_traced(&p, &args, Limits::default());
            let mut last: HashMap<NodeId, (Option<i64>, bool)> = HashMap::new();
            for event in trace {
                match event {
                    TraceEvent::Check { stmt, step_value, result } => {
                        if let (Some(delta), Some((Some(prev), true)), Some(now)) =
                            (loops.get(&stmt), last.get(&stmt), step_value)
                        {
                            prop_assert_eq!(now - prev, *delta, "loop {:?}", stmt);
                        }
                        last.insert(stmt, (step_value, result));
                    }
                    TraceEvent::Exit { stmt, step_value } => {
                        prop_assert_eq!(last.remove(&stmt), Some((step_value, false)));
                    }
                }
            }
        }
    }

    #[test]
    fn rendering_is_deterministic_and_complete(seed in any::<u64>(), size in 4usize..24) {
        let Some(p) = program(seed, size) else { return Ok(()) };
        let first = render_instructions(&p);
        prop_assert_eq!(&first, &render_instructions(&p));
        let (_, visits) = render_counting_visits(&p);
        prop_assert_eq!(visits, p.node_count());
        let covered: BTreeSet<NodeId> = first.construct_index.values().flatten().copied().collect();
        let statements: BTreeSet<NodeId> = p.statements().iter().map(|s| s.id).collect();
        let headers: BTreeSet<NodeId> = p.funcs.iter().map(|f| f.id).chain(p.globals.iter().map(|g| g.id)).collect();
        prop_assert_eq!(covered.intersection(&statements).count(), statements.len());
        prop_assert!(covered.difference(&statements).all(|id| headers.contains(id)));
    }
}
