use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CONFIG: &str = r#"
seed = 5
output_dir = "out"

[simulate.units]
n_units = 40
layout = { type = "grid", cols = 5, rows = 8 }

[sampler]
warmup = 150
samples = 150

[model]
basis = 4
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_socialpop"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn setup(dir: &Path) -> PathBuf {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    cfg
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    let out = run(&["transmogrify"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(run(&["fit", "--model", "poisson"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--seed", "abc"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--config", "/nonexistent/config.toml"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "seed = 1\n[sampler]\nwarmpu = 3\n").unwrap();
    let out = run(&["simulate", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":3:"));
}

#[test]
fn csv_schema_error_reports_line_and_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    assert_eq!(run(&["simulate", "--config", s(&cfg)]).status.code(), Some(0));
    let obs = dir.path().join("out/world/observations.csv");
    let text = std::fs::read_to_string(&obs).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[3] = "u0000_0,2020-03-03,2,many".into();
    std::fs::write(&obs, lines.join("\n") + "\n").unwrap();
    let out = run(&["impute", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("observations.csv:4:"), "{err}");
}

#[test]
fn missing_upstream_artifacts_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    assert_eq!(run(&["ingest", "--output-dir", out]).status.code(), Some(1));
    assert_eq!(run(&["fit", "--output-dir", out]).status.code(), Some(1));
    assert_eq!(run(&["diagnose", "--output-dir", out]).status.code(), Some(1));
}

#[test]
fn manifest_tracks_input_changes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    for cmd in ["simulate", "impute"] {
        assert_eq!(run(&[cmd, "--config", s(&cfg)]).status.code(), Some(0), "{cmd}");
    }
    let manifest = dir.path().join("out/manifest-ingest.json");
    let ingest = || {
        let o = run(&["ingest", "--config", s(&cfg)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(&manifest).unwrap()
    };
    let first = ingest();
    assert_eq!(first, ingest());
    let attrs = dir.path().join("out/world/unit_attributes.csv");
    let text = std::fs::read_to_string(&attrs).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cols: Vec<String> = lines[1].split(',').map(String::from).collect();
    cols[1] = (cols[1].parse::<u64>().unwrap() + 1).to_string();
    lines[1] = cols.join(",");
    std::fs::write(&attrs, lines.join("\n") + "\n").unwrap();
    let changed = ingest();
    assert_ne!(first, changed);
    let m: serde_json::Value = serde_json::from_slice(&changed).unwrap();
    let inputs = m["inputs"].as_array().unwrap();
    assert!(inputs.iter().any(|f| f["path"] == "world/unit_attributes.csv"));
    assert!(m.get("seed").is_some() && m.get("version").is_some());
}

#[test]
fn pipeline_writes_everything_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, threads) in [(&a, "1"), (&b, "3")] {
        let o = run(&["pipeline", "--config", s(&cfg), "--output-dir", s(out), "--threads", threads]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        // progress only on stdout
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert!(stdout.lines().all(|l| l.contains(':')), "{stdout}");
    }
    for f in [
        "world/truth.json",
        "imputation/imputed_counts.csv",
        "imputation/diagnostics.json",
        "dataset/dataset.csv",
        "fit/bin/draws.csv",
        "fit/betabin/summary.json",
        "fit/full/model.json",
        "evaluation/metrics.csv",
        "evaluation/loo_full.csv",
        "evaluation/loo_comparison.csv",
        "evaluation/predictive_summary.csv",
        "evaluation/predictive_samples.csv",
        "diagnostics/diagnostics.json",
        "manifest-pipeline.json",
    ] {
        assert!(a.join(f).is_file(), "{f} missing");
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let metrics = std::fs::read_to_string(a.join("evaluation/metrics.csv")).unwrap();
    assert!(metrics.starts_with("duc,metric,model,value,value_pct\n"));

    // the spatial model at 16 basis functions per dimension
    let o = run(&["fit", "--config", s(&cfg), "--output-dir", s(&a), "--model", "full", "--basis", "16"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let model: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("fit/full/model.json")).unwrap()).unwrap();
    assert_eq!(model["hsgp"]["n_basis"], 16);
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("fit/full/summary.json")).unwrap()).unwrap();
    let params = summary["parameters"].as_array().unwrap();
    assert_eq!(params.len(), 18 + 256);
    for key in ["mean", "sd", "rhat", "ess"] {
        assert!(params[0].get(key).is_some(), "{key}");
    }
}
