//! End-to-end runs of the `astbench` binary against loopback stub endpoints.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use astbench_core::bench::ground_truth_answers;
use astbench_core::bridge::stub::{self, chat_response, prompt_of, StubServer};
use astbench_core::dataset::{write_problems_dir, Dataset};
use astbench_core::fixtures::bundled;
use astbench_core::uast::Value;
use serde_json::Value as Json;

const TOKEN_VAR: &str = "ASTBENCH_TEST_TOKEN";
const TOKEN: &str = "tok-4be1c9d07f-secret";

fn astbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_astbench"))
        .args(["--workers", "2"])
        .args(args)
        .env(TOKEN_VAR, TOKEN)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = astbench(args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}\n{}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> Option<i32> {
    astbench(args).status.code()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Six bundled problems turned into a dataset under `root/ds`.
fn small_dataset(root: &Path) -> PathBuf {
    let problems: Vec<_> = bundled().into_iter().take(6).collect();
    let src = root.join("problems");
    write_problems_dir(&src, &problems).unwrap();
    let ds = root.join("ds");
    ok(&["gen", s(&src), "-o", s(&ds), "--dataset-id", "small"]);
    ds
}

fn endpoint_config(root: &Path, name: &str, server: &StubServer) -> PathBuf {
    let path = root.join(format!("{name}.toml"));
    let text = format!(
        "[endpoint]\nbase_url = \"{}\"\nmodel_id = \"{name}\"\nauth_token_env = \"{TOKEN_VAR}\"\n\n[runner]\nper_test_timeout_s = 2.0\nimport_timeout_s = 2.0\nmemory_mb = 512\n",
        server.base_url()
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(files_under(&path));
        } else {
            out.push(path);
        }
    }
    out
}

fn report_json(run: &Path) -> Json {
    let report = files_under(run)
        .into_iter()
        .find(|p| p.extension().is_some_and(|e| e == "report"))
        .expect("report file");
    serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap()
}

#[test]
fn version_names_tool_and_schema() {
    let out = ok(&["--version"]);
    assert!(out.starts_with("astbench 0.1.0 (schema "), "{out}");
}

#[test]
fn gen_verify_stub_run_and_score() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = small_dataset(tmp.path());
    let verified = ok(&["verify", s(&ds)]);
    assert!(verified.contains("6 of 6 problems verified"), "{verified}");

    let run = tmp.path().join("gt-run");
    let table = ok(&["run", s(&ds), "--stub", "ground-truth", "-o", s(&run)]);
    assert!(table.contains("ground-truth | 1.00 | 1.00"), "{table}");
    assert_eq!(report_json(&run)["W"], 1.0);

    let first = ok(&["score", s(&run)]);
    assert_eq!(first, ok(&["score", s(&run)]));
    assert_eq!(first, table);
    let classified = ok(&["classify", s(&run), s(&ds)]);
    assert!(classified.contains("0 annotations written"), "{classified}");
}

#[test]
fn credential_stays_out_of_every_file() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = small_dataset(tmp.path());
    let dataset = Dataset::load(&ds).unwrap();
    let server = StubServer::start(stub::ground_truth(ground_truth_answers(&dataset))).unwrap();
    let config = endpoint_config(tmp.path(), "with-token", &server);
    let run = tmp.path().join("run");
    ok(&["run", s(&ds), "--endpoint-config", s(&config), "-o", s(&run)]);
    let captured = server.requests();
    assert!(!captured.is_empty() && captured.iter().all(|r| r.had_auth));
    for file in files_under(tmp.path()) {
        let bytes = std::fs::read(&file).unwrap();
        assert!(!String::from_utf8_lossy(&bytes).contains(TOKEN), "token in {}", file.display());
    }
    assert_eq!(report_json(&run)["W"], 1.0);
}

#[test]
fn diff_lists_the_seeded_regression() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = small_dataset(tmp.path());
    let dataset = Dataset::load(&ds).unwrap();
    let answers = ground_truth_answers(&dataset);

    let good = StubServer::start(stub::ground_truth(answers.clone())).unwrap();
    let victim = dataset.problems[2].problem.id.clone();
    let victim_doc = dataset.problems[2].instructions.text();
    let fallback = stub::ground_truth(answers);
    let broken = StubServer::start(Box::new(move |req: &Json| {
        if prompt_of(req).contains(&victim_doc) {
            (200, chat_response("```python\ndef broken(:\n    return 1\n```\n"))
        } else {
            fallback(req)
        }
    }))
    .unwrap();

    let (run_a, run_b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["run", s(&ds), "--endpoint-config", s(&endpoint_config(tmp.path(), "good", &good)), "-o", s(&run_a)]);
    ok(&["run", s(&ds), "--endpoint-config", s(&endpoint_config(tmp.path(), "broken", &broken)), "-o", s(&run_b)]);
    ok(&["classify", s(&run_b), s(&ds)]);

    let diff: Json = serde_json::from_str(&ok(&["diff", s(&run_a), s(&run_b), "--json"])).unwrap();
    assert_eq!(diff["regressed"], serde_json::json!([victim]));
    assert_eq!(diff["fixed"], serde_json::json!([]));
    let unbalanced = diff["labels"].as_array().unwrap().iter().find(|l| l["label"] == "unbalanced").unwrap();
    assert_eq!((unbalanced["a"].as_u64(), unbalanced["b"].as_u64()), (Some(0), Some(1)));

    let same: Json = serde_json::from_str(&ok(&["diff", s(&run_a), s(&run_a), "--json"])).unwrap();
    assert_eq!(same["regressed"], serde_json::json!([]));
    let report = ok(&["report", s(&run_a), s(&run_b)]);
    assert!(report.contains("good") && report.contains("broken"), "{report}");
}

#[test]
fn failure_classes_have_distinct_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = small_dataset(tmp.path());
    let out = tmp.path().join("out");

    assert_eq!(code(&["run", s(&ds), "-o", s(&out)]), Some(2));
    assert_eq!(code(&["run", s(&ds), "--endpoint-config", "/nonexistent.toml", "-o", s(&out)]), Some(2));
    assert_eq!(code(&["verify", s(&tmp.path().join("missing"))]), Some(3));

    std::fs::write(ds.join("instructions").join(format!("{}.instr.txt", bundled()[0].id)), "edited\n").unwrap();
    assert_eq!(code(&["verify", s(&ds)]), Some(3));

    let mut problems: Vec<_> = bundled().into_iter().take(2).collect();
    problems[1].tests[0].expected = Value::Str("not the answer".into());
    let src = tmp.path().join("wrong");
    write_problems_dir(&src, &problems).unwrap();
    let wrong = tmp.path().join("wrong-ds");
    ok(&["gen", s(&src), "-o", s(&wrong)]);
    assert_eq!(code(&["verify", s(&wrong)]), Some(4));

    let refusing = StubServer::start(stub::canned("no code here")).unwrap();
    let config = endpoint_config(tmp.path(), "prose", &refusing);
    let unset = Command::new(env!("CARGO_BIN_EXE_astbench"))
        .args(["run", s(&wrong), "--endpoint-config", s(&config), "-o", s(&out)])
        .env_remove(TOKEN_VAR)
        .output()
        .unwrap();
    assert_eq!(unset.status.code(), Some(2));
}
