//! Pass/fail line per benchmark-level requirement. Exits non-zero when any
//! check fails.

#[path = "common/stats_walk.rs"]
mod stats_walk;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use astbench_core::bridge::{build_prompt, PromptSpec};
use astbench_core::codegen::{emit_ground_truth, SourceText, PYTHON3};
use astbench_core::dataset::{generate, Dataset};
use astbench_core::debugdict::{diff_runs, ErrorLabel, RunView};
use astbench_core::faults::{evaluate, injection_pool, FaultClass};
use astbench_core::fixtures::{bundle_profiles, bundled, trains};
use astbench_core::instruct::{render_instructions, render_problem};
use astbench_core::problem::TestCase;
use astbench_core::runner::{
    aggregate, python_available, run_all, scan_python, table1_text, ProblemReport, RunLimits, RunMeta, Runner,
    TestOutcome,
};
use astbench_core::stats::collect_stats;
use astbench_core::uast::gen::gen_problem;
use astbench_core::uast::{Comparison, Step, Stmt, StmtKind, TypeTag, Value};

type Check = Result<String, String>;
type CheckFn = fn() -> Check;

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).clamp(2, 4)
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn meta(model: &str) -> RunMeta {
    RunMeta {
        model_id: model.into(),
        dataset_id: "fixture".into(),
        timestamp: "2024-01-01T00:00:00Z".into(),
        config_digest: "0".into(),
        greedy: true,
    }
}

fn has_annotated_nested_loop(stmts: &[Stmt], depth: usize) -> bool {
    stmts.iter().any(|s| match &s.kind {
        StmtKind::While { body, step, .. } => {
            let d = if *step != Step::None { depth + 1 } else { depth };
            d >= 2 || has_annotated_nested_loop(body, d)
        }
        _ => s.blocks().into_iter().any(|b| has_annotated_nested_loop(b, depth)),
    })
}

fn multi_dim(ty: &TypeTag) -> bool {
    ty.list_depth() >= 2
}

fn self_consistency() -> Check {
    let started = Instant::now();
    let problems = bundled();
    let mut missing = Vec::new();
    let stats: Vec<_> = problems.iter().map(|p| collect_stats(&p.id, &p.program)).collect();
    let any = |f: &dyn Fn(&astbench_core::stats::ConstructStats) -> bool| stats.iter().any(f);
    let coverage: [(&str, bool); 13] = [
        ("nested annotated loops", problems.iter().any(|p| p.program.funcs.iter().any(|f| has_annotated_nested_loop(&f.body, 0)))),
        ("continue", any(&|s| s.loop_with_continue > 0)),
        ("break", any(&|s| s.loop_with_break > 0)),
        ("ternary", any(&|s| s.ternary > 0)),
        ("ascii", any(&|s| s.ascii_ops > 0)),
        ("string_split", any(&|s| s.string_split_ops > 0)),
        ("foreach", any(&|s| s.foreach_loop > 0)),
        ("if-else", any(&|s| s.if_else > 0)),
        ("maps", any(&|s| s.map_ops > 0)),
        ("sets", any(&|s| s.set_ops > 0)),
        ("int division", any(&|s| s.int_division_ops > 0)),
        ("globals", problems.iter().any(|p| !p.program.globals.is_empty())),
        (
            "multi-dim lists",
            problems.iter().any(|p| {
                p.program
                    .funcs
                    .iter()
                    .any(|f| f.params.iter().chain(&f.locals).any(|b| multi_dim(&b.ty)))
            }),
        ),
    ];
    for (name, present) in coverage {
        if !present {
            missing.push(name);
        }
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    generate(&problems, "bundled", dir.path()).map_err(|e| e.to_string())?;
    let dataset = Dataset::load(dir.path()).map_err(|e| e.to_string())?;
    let results = dataset.verify(&Runner::default(), workers());
    let whole = results.iter().filter(|r| matches!(r, Ok(p) if p.whole)).count();
    let elapsed = started.elapsed();
    ensure(
        problems.len() >= 30 && missing.is_empty() && whole == problems.len() && elapsed < Duration::from_secs(120),
        format!(
            "{whole}/{} whole, missing constructs {missing:?}, {:.1}s (limit 120s)",
            problems.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn cross_oracle() -> Check {
    let started = Instant::now();
    let profiles = bundle_profiles();
    let mut jobs = Vec::new();
    let mut pairs = 0;
    let mut seed = 20_000u64;
    while pairs < 1000 {
        let profile = &profiles[jobs.len() % profiles.len()];
        if let Some(mut p) = gen_problem(&format!("x{seed}"), seed, profile, 10) {
            for t in &mut p.tests {
                t.comparison = Comparison::RealTolerance { rel: 1e-9 };
            }
            let src = emit_ground_truth(&p.program, &PYTHON3).map_err(|e| format!("{}: {e}", p.id))?;
            pairs += p.tests.len();
            jobs.push((p.id, src, p.tests));
        }
        seed += 1;
    }
    let reports = run_all(&Runner::default(), &jobs, workers());
    let mut mismatches = Vec::new();
    for ((id, _, _), r) in jobs.iter().zip(&reports) {
        match r {
            Ok(r) => {
                for (i, o) in r.outcomes.iter().enumerate() {
                    if !o.is_pass() {
                        mismatches.push(format!("{id}#{i}: {o:?}"));
                    }
                }
                if r.outcomes.len() != r.n {
                    mismatches.push(format!("{id}: {:?} {:?}", r.static_error, r.load_failure));
                }
            }
            Err(e) => mismatches.push(format!("{id}: {e}")),
        }
    }
    let elapsed = started.elapsed();
    ensure(
        mismatches.is_empty() && elapsed < Duration::from_secs(300),
        format!(
            "{pairs} pairs over {} programs, {} mismatches {:?}, {:.1}s (limit 300s)",
            jobs.len(),
            mismatches.len(),
            mismatches.iter().take(3).collect::<Vec<_>>(),
            elapsed.as_secs_f64()
        ),
    )
}

fn golden_instructions() -> Check {
    let golden = include_str!("golden/trains.instr.txt");
    let text = render_instructions(&trains()).text();
    let head = text.split("\n\n").next().unwrap_or_default();
    let head = format!("{head}\n");
    ensure(
        head == golden,
        format!("{} golden lines, rendered head has {}", golden.lines().count(), head.lines().count()),
    )
}

fn golden_prompt() -> Check {
    let golden = include_str!("golden/prompt_python.txt");
    let problem = &bundled()[0];
    let prompt = build_prompt(&PromptSpec::new("Python", render_problem(problem)));
    let lines: Vec<&str> = prompt.lines().collect();
    let absent: Vec<&str> = golden.lines().filter(|g| !lines.contains(g)).collect();
    ensure(
        golden.lines().count() == 10 && absent.is_empty(),
        format!("{} lines expected, missing {absent:?}", golden.lines().count()),
    )
}

fn outcomes(pass: usize, fail: usize) -> Vec<TestOutcome> {
    let mut v = vec![TestOutcome::Pass; pass];
    v.extend((0..fail).map(|_| TestOutcome::Fail { actual: Value::Int(0) }));
    v
}

fn scoring() -> Check {
    let six_of_eight = ProblemReport::from_outcomes("p", outcomes(6, 2)).partial;
    let fixture = vec![
        ProblemReport::from_outcomes("a", outcomes(4, 0)),
        ProblemReport::from_outcomes("b", outcomes(2, 2)),
        ProblemReport::from_outcomes("c", outcomes(0, 2)),
    ];
    let small = aggregate(fixture, meta("fixture")).map_err(|e| e.to_string())?;
    let big: Vec<ProblemReport> = (0..135)
        .map(|i| ProblemReport::from_outcomes(&format!("p{i:03}"), if i < 126 { outcomes(3, 0) } else { outcomes(2, 1) }))
        .collect();
    let big = aggregate(big, meta("synthetic")).map_err(|e| e.to_string())?;
    let table = table1_text(&[&big]);
    let w_cell = table
        .lines()
        .find(|l| l.starts_with("synthetic"))
        .and_then(|l| l.split('|').nth(1))
        .map(str::trim)
        .unwrap_or_default()
        .to_string();
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    ensure(
        close(six_of_eight, 0.75) && close(small.p_micro, 0.6) && close(small.p_macro, 0.5) && w_cell == "0.93",
        format!(
            "6/8 -> {six_of_eight}, micro {} macro {}, W cell {w_cell:?}",
            small.p_micro, small.p_macro
        ),
    )
}

fn infinite_loop() -> Check {
    let limits = RunLimits {
        per_test_timeout_s: 1.0,
        import_timeout_s: 1.0,
        ..RunLimits::default()
    };
    let runner = Runner::new(limits.clone());
    let spin = SourceText::new(
        "def count_up(n):\n    i = 0\n    while i < n:\n        pass\n    return i\n",
        "count_up",
        "python3",
    );
    let tests: Vec<TestCase> = [2, 5].iter().map(|&n| TestCase::new(vec![Value::Int(n)], Value::Int(n))).collect();
    let started = Instant::now();
    let report = runner.run_problem("spin", &spin, &tests).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed().as_secs_f64();
    let budget = tests.len() as f64 * (limits.per_test_timeout_s + 1.0);

    let reader = SourceText::new("line = input()\n\ndef count_up(n):\n    return n\n", "count_up", "python3");
    let hung = runner.run_problem("reader", &reader, &tests).map_err(|e| e.to_string())?;
    let kind = hung.load_failure.as_ref().map(|f| f.kind.clone());
    ensure(
        report.inf_flag && report.outcomes.iter().all(TestOutcome::is_timeout) && elapsed <= budget && kind.as_deref() == Some("load-timeout") && hung.m == 0,
        format!("inf_flag {}, {elapsed:.2}s of {budget:.0}s, input() -> {kind:?}", report.inf_flag),
    )
}

fn fault_injection() -> Check {
    let started = Instant::now();
    let runner = Runner::new(RunLimits {
        per_test_timeout_s: 0.5,
        import_timeout_s: 2.0,
        ..RunLimits::default()
    });
    let plan: [(FaultClass, usize, usize, f64); 7] = [
        (FaultClass::Unbalanced, 0, 80, 1.0),
        (FaultClass::Indent, 0, 80, 1.0),
        (FaultClass::LoopUpdate, 80, 140, 0.9),
        (FaultClass::Division, 250, 400, 0.9),
        (FaultClass::Global, 80, 120, 0.9),
        (FaultClass::Ascii, 100, 150, 0.7),
        (FaultClass::Split, 400, 400, 0.7),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (class, extra, limit, floor) in plan {
        let pool = injection_pool(class, extra);
        let s = evaluate(&pool, class, &runner, workers(), 2, limit);
        let pass = s.effective >= 50 && s.rate() >= floor && s.with_evidence == s.detected;
        ok &= pass;
        parts.push(format!(
            "{} {}/{} ({:.0}%, {} equivalent){}",
            class.name(),
            s.detected,
            s.effective,
            s.rate() * 100.0,
            s.equivalent,
            if pass { String::new() } else { format!(" misses {:?}", s.misses.iter().take(2).collect::<Vec<_>>()) }
        ));
    }
    let elapsed = started.elapsed();
    ok &= elapsed < Duration::from_secs(600);
    ensure(ok, format!("{}; {:.0}s (limit 600s)", parts.join(", "), elapsed.as_secs_f64()))
}

fn regression_diff() -> Check {
    let unbalanced = || scan_python("def f(:\n    return 1\n").expect("unbalanced source");
    let a_reports: Vec<ProblemReport> = (0..20)
        .map(|i| {
            let id = format!("p{i:02}");
            if i < 11 {
                ProblemReport::static_failure(&id, unbalanced(), 3)
            } else {
                ProblemReport::from_outcomes(&id, outcomes(3, 0))
            }
        })
        .collect();
    let b_reports: Vec<ProblemReport> = (0..20).map(|i| ProblemReport::from_outcomes(&format!("p{i:02}"), outcomes(3, 0))).collect();
    let a = aggregate(a_reports, meta("older")).map_err(|e| e.to_string())?;
    let b = aggregate(b_reports, meta("newer")).map_err(|e| e.to_string())?;
    let a_labels: BTreeMap<String, BTreeSet<ErrorLabel>> =
        (0..11).map(|i| (format!("p{i:02}"), BTreeSet::from([ErrorLabel::Unbalanced]))).collect();
    let b_labels = BTreeMap::new();
    let stats = BTreeMap::new();
    let view_a = RunView { run_id: "a", report: &a, labels: &a_labels };
    let view_b = RunView { run_id: "b", report: &b, labels: &b_labels };
    let d = diff_runs(view_a, view_b, &stats).map_err(|e| e.to_string())?;
    let row = d.labels.iter().find(|l| l.label == ErrorLabel::Unbalanced).map(|l| (l.a, l.b, l.delta));
    let others_zero = d.labels.iter().filter(|l| l.label != ErrorLabel::Unbalanced).all(|l| l.delta == 0);
    let same = diff_runs(view_a, view_a, &stats).map_err(|e| e.to_string())?;
    ensure(
        row == Some((11, 0, -11)) && others_zero && d.fixed.len() == 11 && same.is_zero(),
        format!("unbalanced {row:?}, {} fixed, diff(a, a) zero: {}", d.fixed.len(), same.is_zero()),
    )
}

fn stats_equivalence() -> Check {
    let programs = stats_walk::random_programs(200);
    let differing: Vec<&str> = programs
        .iter()
        .filter(|(id, p)| collect_stats(id, p) != stats_walk::oracle(id, p))
        .map(|(id, _)| id.as_str())
        .collect();
    ensure(
        differing.is_empty(),
        format!("{} programs, differing {differing:?}", programs.len()),
    )
}

fn main() {
    let checks: [(&str, CheckFn); 9] = [
        ("ground-truth self-consistency", self_consistency),
        ("cross-oracle equivalence", cross_oracle),
        ("instruction golden text", golden_instructions),
        ("prompt golden lines", golden_prompt),
        ("scoring arithmetic", scoring),
        ("infinite-loop handling", infinite_loop),
        ("fault-injection classification", fault_injection),
        ("regression diff", regression_diff),
        ("statistics node-walk equivalence", stats_equivalence),
    ];
    let python = python_available(Path::new("python3"));
    let mut failed = 0;
    for (name, check) in checks {
        let result = if python { check() } else { Err("python3 unavailable".into()) };
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

