//! Construct counts checked against the JSON walker.

#[path = "common/stats_walk.rs"]
mod stats_walk;

use astbench_core::fixtures::bundled;
use astbench_core::stats::collect_stats;
use astbench_core::uast::gen::{gen_random_program, SizeProfile};
use astbench_core::uast::{validate, Program, Step, Stmt, StmtKind};
use proptest::prelude::*;
use stats_walk::{oracle, random_programs};

#[test]
fn counters_match_the_json_walk() {
    let mut programs = random_programs(200);
    programs.extend(bundled().into_iter().map(|p| (p.id, p.program)));
    let mut seen = std::collections::BTreeMap::new();
    for (id, program) in &programs {
        let stats = collect_stats(id, program);
        assert_eq!(stats, oracle(id, program), "{id}");
        for (k, v) in stats.as_map() {
            *seen.entry(k).or_insert(0) += v;
        }
    }
    let silent: Vec<_> = seen.iter().filter(|(_, v)| **v == 0).collect();
    assert!(silent.is_empty(), "never exercised: {silent:?}");
}

#[test]
fn known_counts_on_bundled_problems() {
    let all = bundled();
    let get = |id: &str| {
        let p = all.iter().find(|p| p.id == id).unwrap();
        collect_stats(id, &p.program)
    };
    let t = get("trains");
    assert_eq!((t.if_else, t.while_loop, t.int_division_ops, t.ternary), (2, 0, 3, 1));
    assert!(get("digit-weights").ascii_ops >= 2);
    let h = get("haar-feature");
    assert!(h.max_loop_nesting >= 4 && h.loop_with_continue >= 1, "{h:?}");
}

fn wrap_in_loop(program: &Program) -> Program {
    use astbench_core::uast::build::{bin, int, var};
    use astbench_core::uast::{BinOp, Binding, TypeTag};
    let mut p = program.clone();
    let entry = p.funcs.iter_mut().find(|f| f.name == p.entry).unwrap();
    let body = std::mem::take(&mut entry.body);
    entry.locals.push(Binding::new("wrap0", TypeTag::Int));
    entry.body = vec![
        Stmt::new(StmtKind::Assign {
            target: var("wrap0"),
            value: int(0),
        }),
        Stmt::new(StmtKind::While {
            cond: bin(BinOp::Lt, var("wrap0"), int(1)),
            body,
            step: Step::Increment("wrap0".into()),
        }),
    ];
    p.renumber();
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn an_extra_loop_adds_one_nesting_level(seed in 0u64..100_000) {
        let program = gen_random_program(seed, &SizeProfile::default());
        prop_assume!(validate::errors(&program).is_empty());
        let (a, b) = (collect_stats("a", &program), collect_stats("b", &wrap_in_loop(&program)));
        prop_assert!(b.max_loop_nesting >= a.max_loop_nesting.max(1));
        prop_assert!(b.max_loop_nesting <= a.max_loop_nesting + 1);
        if program.funcs.len() == 1 {
            prop_assert_eq!(b.max_loop_nesting, a.max_loop_nesting + 1);
        }
        prop_assert_eq!((a.if_plain, a.if_else), (b.if_plain, b.if_else));
        prop_assert_eq!(a.while_loop + 1, b.while_loop);
    }
}
