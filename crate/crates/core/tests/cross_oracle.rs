//! Large generated programs: interpreter results against the emitted Python.

use astbench_core::codegen::{emit_ground_truth, PYTHON3};
use astbench_core::runner::{python_available, Runner, TestOutcome};
use astbench_core::uast::gen::{gen_problem, SizeProfile};
use astbench_core::uast::Comparison;
use std::path::Path;

#[test]
fn interpreter_agrees_with_emitted_python() {
    if !python_available(Path::new("python3")) {
        eprintln!("python3 missing; skipped");
        return;
    }
    let runner = Runner::default();
    let profile = SizeProfile::new(28, 3);
    let mut pairs = 0;
    let mut failures = Vec::new();
    for seed in 500..520u64 {
        let Some(mut p) = gen_problem(&format!("x{seed}"), seed, &profile, 10) else { continue };
        for t in &mut p.tests {
            t.comparison = Comparison::RealTolerance { rel: 1e-9 };
        }
        let src = emit_ground_truth(&p.program, &PYTHON3).unwrap();
        let report = runner.run_problem(&p.id, &src, &p.tests).unwrap();
        assert!(report.static_error.is_none(), "{:?}\n{}", report.static_error, src.code);
        for (t, o) in p.tests.iter().zip(&report.outcomes) {
            pairs += 1;
            if *o != TestOutcome::Pass {
                failures.push(format!("seed {seed}: {:?} expected {:?} got {o:?}\n{}", t.inputs, t.expected, src.code));
            }
        }
    }
    assert!(pairs >= 100, "only {pairs} pairs");
    assert!(failures.is_empty(), "{} of {pairs} differ:\n{}", failures.len(), failures[..failures.len().min(3)].join("\n"));
}
