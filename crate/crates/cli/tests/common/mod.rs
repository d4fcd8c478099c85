#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use boldrecal::synth::synthetic;
use boldrecal::{LloParams, PredictionSet};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_boldrecal"));
    c.env_remove("BOLDRECAL_VERBOSITY");
    c
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

pub fn write_set(path: &Path, data: &PredictionSet) {
    let mut s = String::from("x,y\n");
    for (x, y) in data.x().iter().zip(data.y()) {
        writeln!(s, "{x},{y}").unwrap();
    }
    std::fs::write(path, s).unwrap();
}

/// Writes a seeded synthetic dataset into `dir` and returns its path.
pub fn synthetic_csv(
    dir: &Path,
    name: &str,
    n: usize,
    distortion: (f64, f64),
    seed: u64,
) -> PathBuf {
    let path = dir.join(name);
    let d = LloParams::new(distortion.0, distortion.1).unwrap();
    write_set(&path, &synthetic(n, d, seed));
    path
}

pub fn schema(name: &str) -> serde_json::Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn schema_errors(name: &str, doc: &serde_json::Value) -> Vec<String> {
    let s = schema(name);
    let compiled = jsonschema::JSONSchema::compile(&s).expect("schema compiles");
    let result = compiled.validate(doc);
    match result {
        Ok(()) => Vec::new(),
        Err(errs) => errs
            .map(|e| format!("{} at {}", e, e.instance_path))
            .collect(),
    }
}
