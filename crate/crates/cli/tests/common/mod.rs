#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Run the binary inside `dir`.
pub fn run(dir: &Path, args: &[&str]) -> Output {
    run_env(dir, args, &[])
}

pub fn run_env(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lieavg"));
    cmd.current_dir(dir).args(args).env_remove("LIEAVG_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// The JSON object a failing command prints on stderr.
pub fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn schema(name: &str) -> jsonschema::Validator {
    let s = read_json(&repo_root().join("schemas").join(format!("{name}.schema.json")));
    jsonschema::validator_for(&s).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn assert_valid(name: &str, doc: &Value) {
    let v = schema(name);
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
}

/// Emit a preset config into `dir` and return its file name.
pub fn preset(dir: &Path, name: &str) -> String {
    let file = format!("{name}.json");
    let out = run(dir, &["preset", "--name", name, "--emit-config", &file]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    file
}

pub fn header(path: &Path) -> Vec<String> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_path(path).unwrap();
    r.headers().unwrap().iter().map(str::to_string).collect()
}
