//! The committed problem files match the bundled set and the JSON schema.

use std::path::{Path, PathBuf};
use std::process::Command;

use astbench_core::dataset::load_problems_dir;
use astbench_core::fixtures::bundled;

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn committed_files_regenerate_byte_for_byte() {
    let dir = repo_root().join("fixtures/problems");
    let problems = bundled();
    let mut files: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert_eq!(files.len(), problems.len());
    for p in &problems {
        let on_disk = std::fs::read_to_string(dir.join(format!("{}.json", p.id))).unwrap();
        assert_eq!(on_disk, p.to_text(), "{}", p.id);
    }
    let loaded = load_problems_dir(&dir).unwrap();
    assert_eq!(loaded.len(), problems.len());
}

#[test]
fn committed_files_satisfy_the_schema() {
    let script = r#"
import json, sys, pathlib, jsonschema
root = pathlib.Path(sys.argv[1])
schema = json.loads((root / "schema/problem.schema.json").read_text())
for f in sorted((root / "fixtures/problems").glob("*.json")):
    jsonschema.validate(json.loads(f.read_text()), schema)
"#;
    let probe = Command::new("python3").args(["-c", "import jsonschema"]).status();
    if !probe.is_ok_and(|s| s.success()) {
        eprintln!("python3 with jsonschema missing; skipped");
        return;
    }
    let out = Command::new("python3").arg("-c").arg(script).arg(repo_root()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
