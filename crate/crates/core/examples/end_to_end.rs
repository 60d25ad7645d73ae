//! Runs the whole pipeline through the command-line entry point on a small
//! synthetic region.
//!
//! cargo run --release --example end_to_end -- /tmp/e2e

use socialpop::cli::run_from;

const CONFIG: &str = r#"
seed = 11
output_dir = "out"

[simulate.units]
n_units = 40
layout = { type = "grid", cols = 5, rows = 8 }

[sampler]
warmup = 300
samples = 300

[model]
basis = 8
"#;

fn main() {
    let dir = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "e2e".into()));
    std::fs::create_dir_all(&dir).expect("create output directory");
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, CONFIG).expect("write config");
    let code = run_from(["socialpop", "pipeline", "--config", cfg.to_str().expect("utf-8 path")]);
    if code == 0 {
        let metrics = std::fs::read_to_string(dir.join("out/evaluation/metrics.csv")).expect("metrics written");
        print!("{metrics}");
    }
    std::process::exit(code);
}
