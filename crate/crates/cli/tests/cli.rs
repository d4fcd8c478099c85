mod common;

use common::{run, schema_errors, stdout_json, synthetic_csv};
use serde_json::Value;
use tempfile::TempDir;

fn setup() -> (TempDir, String) {
    let dir = TempDir::new().unwrap();
    let path = synthetic_csv(dir.path(), "set.csv", 300, (1.4, 0.7), 5);
    let p = path.to_str().unwrap().to_string();
    (dir, p)
}

fn assert_schema(name: &str, doc: &Value) {
    let errs = schema_errors(name, doc);
    assert!(errs.is_empty(), "{name}: {errs:?}");
}

#[test]
fn every_json_output_matches_its_schema() {
    let (_dir, input) = setup();
    let cases: &[(&str, &[&str])] = &[
        ("assess", &["assess"]),
        ("lrt", &["lrt"]),
        ("mle-recal", &["mle-recal"]),
        ("brcal", &["brcal", "--t", "0.9"]),
        (
            "surface",
            &["surface", "--k", "12", "--contours", "0.5,0.9"],
        ),
        ("surface", &["surface", "--k", "12", "--kind", "boldness"]),
        (
            "lineplot",
            &["lineplot", "--t-levels", "0.9,0.8", "--thin-by", "10"],
        ),
        ("llo", &["llo", "--delta", "2", "--gamma", "0.5"]),
    ];
    for (schema, args) in cases {
        let mut full = args.to_vec();
        full.extend(["--input", &input]);
        let doc = stdout_json(&run(&full));
        assert_schema(schema, &doc);
    }
}

#[test]
fn schemas_reject_a_malformed_document() {
    let doc: Value = serde_json::json!({ "test_stat": -1.0, "pval": 0.5 });
    assert!(!schema_errors("lrt", &doc).is_empty());
}

#[test]
fn infeasible_target_exits_two_with_ceiling() {
    let (_dir, input) = setup();
    let out = run(&["brcal", "--input", &input, "--t", "0.9999"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_schema("error", &err);
    let ceiling = err["error"]["ceiling"].as_f64().unwrap();
    assert!((ceiling - 300.0 / 301.0).abs() < 1e-12);
    assert!(err["error"]["message"].as_str().unwrap().contains("0.9966"));
}

#[test]
fn parse_errors_exit_one_with_row() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "x,y\n0.2,1\n0.4,0\n1.7,1\n").unwrap();
    let out = run(&["assess", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_schema("error", &err);
    assert_eq!(err["error"]["kind"], "parse");
    assert_eq!(err["error"]["row"], 4);

    let out = run(&["assess", "--input", path.to_str().unwrap(), "--x-col", "p"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn event_label_is_remapped() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("games.csv");
    let mut text = String::from("x,winner\n");
    for i in 0..40 {
        let x = 0.2 + 0.015 * i as f64;
        let w = if (i * 7) % 10 < 5 + i / 10 {
            "home"
        } else {
            "away"
        };
        text.push_str(&format!("{x},{w}\n"));
    }
    std::fs::write(&path, text).unwrap();
    let p = path.to_str().unwrap();
    let doc = stdout_json(&run(&[
        "lineplot",
        "--input",
        p,
        "--y-col",
        "winner",
        "--event",
        "home",
        "--no-mle",
        "--t-levels",
        "0.8",
    ]));
    let outcomes: Vec<u64> = doc["rows"]
        .as_array()
        .unwrap()
        .iter()
        .take(40)
        .map(|r| r["outcome"].as_u64().unwrap())
        .collect();
    let expected: Vec<u64> = (0..40)
        .map(|i| u64::from((i * 7) % 10 < 5 + i / 10))
        .collect();
    assert_eq!(outcomes, expected);
}

#[test]
fn identity_llo_echoes_predictions() {
    let (_dir, input) = setup();
    let doc = stdout_json(&run(&[
        "llo", "--input", &input, "--delta", "1", "--gamma", "1",
    ]));
    let text = std::fs::read_to_string(&input).unwrap();
    let raw: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    let echoed: Vec<f64> = doc["probs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(echoed, raw);
}

#[test]
fn verbosity_streams_the_iteration_log() {
    let (_dir, input) = setup();
    let out = common::bin()
        .args(["brcal", "--input", &input, "--t", "0.9"])
        .env("BOLDRECAL_VERBOSITY", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("iteration: 1\n\tx = ("), "{err}");
    assert!(err.contains("\tf(x) = ") && err.contains("\tg(x) = "));
}

#[test]
fn lineplot_table_round_trips_through_csv() {
    let (dir, input) = setup();
    let table = dir.path().join("table.csv");
    let t = table.to_str().unwrap();
    let args = [
        "lineplot",
        "--input",
        &input,
        "--t-levels",
        "0.9",
        "--thin-to",
        "50",
        "--seed",
        "3",
    ];
    let out = run(&[&args[..], &["--format", "csv", "-o", t]].concat());
    assert!(out.status.success());
    let direct = run(&[&args[..], &["--format", "svg"]].concat());
    let reused = run(&["lineplot", "--table", t, "--format", "svg"]);
    assert!(direct.status.success() && reused.status.success());
    assert_eq!(direct.stdout, reused.stdout);
    let svg = String::from_utf8(reused.stdout).unwrap();
    roxmltree::Document::parse(&svg).expect("well-formed SVG");
}

#[test]
fn unsupported_format_is_an_error() {
    let (_dir, input) = setup();
    let out = run(&["assess", "--input", &input, "--format", "svg"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn surface_svg_has_k_squared_cells() {
    let (_dir, input) = setup();
    let out = run(&[
        "surface",
        "--input",
        &input,
        "--k",
        "9",
        "--contours",
        "0.9",
        "--format",
        "svg",
    ]);
    assert!(out.status.success());
    let svg = String::from_utf8(out.stdout).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let cells = doc
        .descendants()
        .filter(|n| n.has_tag_name("rect") && n.attribute("class") == Some("cell"))
        .count();
    assert_eq!(cells, 81);
}
