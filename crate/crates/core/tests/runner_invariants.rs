//! Report invariants over ground truths and deliberately broken solutions.

use std::path::Path;

use astbench_core::codegen::{emit_ground_truth, SourceText, PYTHON3};
use astbench_core::fixtures::hand_built;
use astbench_core::runner::{python_available, run_all, ProblemReport, RunLimits, Runner, TestOutcome};

fn check(r: &ProblemReport) {
    assert_eq!(r.m, r.outcomes.iter().filter(|o| o.is_pass()).count());
    if r.whole {
        assert_eq!(r.partial, 1.0, "{}", r.problem_id);
    }
    if r.inf_flag {
        assert!(r.outcomes.iter().any(TestOutcome::is_timeout), "{}", r.problem_id);
    }
    if r.static_error.is_some() {
        assert!(r.outcomes.is_empty() && r.m == 0 && r.partial == 0.0 && !r.whole);
    } else if r.load_failure.is_none() {
        assert_eq!(r.outcomes.len(), r.n, "{}", r.problem_id);
    }
    assert!((0.0..=1.0).contains(&r.partial));
}

fn variants(gt: &SourceText) -> Vec<(&'static str, SourceText)> {
    let with = |code: String| SourceText { code, ..gt.clone() };
    let body = format!("def {}(*args):\n", gt.entry_name);
    vec![
        ("gt", gt.clone()),
        ("const", with(format!("{body}    return 0\n"))),
        ("raise", with(format!("{body}    return args[99]\n"))),
        ("spin", with(format!("{body}    while True:\n        pass\n"))),
        ("broken", with(format!("{body}    return (1\n"))),
        ("missing", with("def unrelated():\n    return 1\n".into())),
    ]
}

#[test]
fn reports_hold_their_invariants_and_repeat() {
    if !python_available(Path::new("python3")) {
        eprintln!("python3 missing; skipped");
        return;
    }
    let runner = Runner::new(RunLimits {
        per_test_timeout_s: 0.5,
        import_timeout_s: 2.0,
        ..RunLimits::default()
    });
    let mut jobs = Vec::new();
    for p in hand_built().into_iter().take(4) {
        let gt = emit_ground_truth(&p.program, &PYTHON3).unwrap();
        for (tag, src) in variants(&gt) {
            jobs.push((format!("{}-{tag}", p.id), src, p.tests.clone()));
        }
    }
    let first = run_all(&runner, &jobs, 4);
    let second = run_all(&runner, &jobs, 4);
    for ((id, _, _), (a, b)) in jobs.iter().zip(first.iter().zip(&second)) {
        let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
        check(a);
        assert_eq!(a, b, "{id} differs between runs");
        match id.rsplit('-').next().unwrap() {
            "gt" => assert!(a.whole, "{id}"),
            "spin" => {
                assert!(a.inf_flag);
                assert!(a.outcomes.iter().all(|o| *o == TestOutcome::Timeout { limit_s: 0.5 }));
            }
            "broken" => assert!(a.static_error.is_some(), "{id}"),
            "raise" => assert!(matches!(a.outcomes[0], TestOutcome::RuntimeError { .. }), "{id}"),
            _ => assert!(!a.whole, "{id}"),
        }
    }
}
