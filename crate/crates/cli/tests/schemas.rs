mod common;

use std::fs;

use common::{assert_valid, code, preset, read_json, run, schema, stderr_json};
use lieavg_core::presets;
use serde_json::json;
use tempfile::TempDir;

#[test]
fn every_schema_compiles() {
    let dir = common::repo_root().join("schemas");
    let mut names: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter_map(|f| f.strip_suffix(".schema.json").map(str::to_string))
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "assembly",
            "compare_summary",
            "config",
            "design_report",
            "error",
            "figure_spec",
            "sweep_summary",
            "validation_report"
        ]
    );
    for n in names {
        schema(&n);
    }
}

#[test]
fn preset_configs_match_the_config_schema() {
    for name in presets::NAMES {
        let v: serde_json::Value = serde_json::from_str(&presets::build(name).unwrap().config.to_json()).unwrap();
        assert_valid("config", &v);
    }
}

#[test]
fn config_schema_rejects_what_the_parser_rejects() {
    let base: serde_json::Value = serde_json::from_str(&presets::build("example1").unwrap().config.to_json()).unwrap();
    let v = schema("config");
    type Edit = Box<dyn Fn(&mut serde_json::Value)>;
    let cases: Vec<Edit> = vec![
        Box::new(|c| c["extra"] = json!(1)),
        Box::new(|c| c["channels"][0]["k"] = json!("0.5")),
        Box::new(|c| c["channels"][0]["k"] = json!(1)),
        Box::new(|c| c["channels"][0]["waveform"]["phase"] = json!(0)),
        Box::new(|c| c["simulation"].as_object_mut().unwrap().remove("dt").map(drop).unwrap_or(())),
        Box::new(|c| c["domain"][0] = json!([0.0])),
        Box::new(|c| c["state_effort"] = json!("all")),
    ];
    for (i, edit) in cases.iter().enumerate() {
        let mut c = base.clone();
        edit(&mut c);
        assert!(!v.is_valid(&c), "case {i} passes the schema");
        let parsed = lieavg_core::Config::from_json(&c.to_string()).and_then(|cfg| cfg.to_system().map(drop));
        assert!(parsed.is_err(), "case {i} passes the parser");
    }
}

#[test]
fn every_json_output_matches_its_schema() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    for name in ["example1", "example3", "example4"] {
        let cfg = preset(d, name);
        let runs: [(&[&str], &str, &str); 5] = [
            (&["validate", "--out", "v.json"], "v.json", "validation_report"),
            (&["assemble", "--order", "3", "--out", "a.json"], "a.json", "assembly"),
            (&["check", "--order", "4", "--out", "r.json"], "r.json", "design_report"),
            (&["compare", "--order", "2", "--t-final", "2", "--out", "d.csv"], "d.json", "compare_summary"),
            (
                &["sweep", "--order", "2", "--omegas", "100,200,400", "--t-final", "1", "--out", "s.csv"],
                "s.json",
                "sweep_summary",
            ),
        ];
        for (args, file, schema_name) in runs {
            let mut argv = vec![args[0], "--config", &cfg];
            argv.extend_from_slice(&args[1..]);
            let out = run(d, &argv);
            assert_eq!(code(&out), 0, "{name} {argv:?}: {}", String::from_utf8_lossy(&out.stderr));
            let doc = read_json(&d.join(file));
            assert!(doc.get("meta").is_some());
            assert_valid(schema_name, &doc);
        }
    }
}

#[test]
fn failure_reports_match_the_error_schema() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let cfg = preset(d, "example1");
    let mut bad = read_json(&d.join(&cfg));
    bad["channels"][0]["p"] = json!(0.0);
    fs::write(d.join("bad.json"), bad.to_string()).unwrap();
    let mut blow = read_json(&d.join(&cfg));
    blow["drift"] = json!(["x1^2", "0"]);
    blow["simulation"]["x0"] = json!([1.0, 0.0]);
    fs::write(d.join("blow.json"), blow.to_string()).unwrap();
    for args in [
        vec!["validate", "--config", "nope.json"],
        vec!["validate", "--config", "bad.json"],
        vec!["coeffs", "--config", &cfg, "--order", "9", "--out", "c.csv"],
        vec!["simulate", "--config", "blow.json", "--out", "x.csv"],
        vec!["nonsense"],
    ] {
        let out = run(d, &args);
        assert_ne!(code(&out), 0, "{args:?}");
        assert_valid("error", &stderr_json(&out));
    }
}
