use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lossy-cgf"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn lossy-cgf")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

struct Files {
    dir: TempDir,
}

impl Files {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let files = Files { dir };
        files.write(
            "abc_source.json",
            r#"{"alphabet": ["a", "b", "c"], "probs": [0.5, 0.3, 0.2]}"#,
        );
        files.write(
            "abc_hamming.json",
            r#"{"source_alphabet": ["a", "b", "c"], "repro_alphabet": ["a", "b", "c"],
                "d": [[0, 1, 1], [1, 0, 1], [1, 1, 0]]}"#,
        );
        files.write(
            "bin_source.json",
            r#"{"alphabet": ["0", "1"], "probs": [0.8, 0.2]}"#,
        );
        files.write(
            "bin_hamming.json",
            r#"{"source_alphabet": ["0", "1"], "repro_alphabet": ["0", "1"], "d": [[0, 1], [1, 0]]}"#,
        );
        files
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let path = self.path(name);
        fs::write(&path, text).unwrap();
        path
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_string()
    }
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn gquantity_running_example() {
    let f = Files::new();
    let (src, dist) = (f.arg("abc_source.json"), f.arg("abc_hamming.json"));
    let out = run(&[
        "gquantity",
        "--source",
        &src,
        "--distortion",
        &dist,
        "--D",
        "0",
        "--epsilon",
        "0.25",
        "--t",
        "1",
    ]);
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), "D,epsilon,t,alpha,G");
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][3], "0.5");
    let g: f64 = rows[0][4].parse().unwrap();
    assert!((g - 0.899968626953).abs() < 1e-11, "{g}");
}

#[test]
fn gquantity_infeasible_and_shannon_limit() {
    let f = Files::new();
    f.write(
        "narrow.json",
        r#"{"source_alphabet": ["a", "b", "c"], "repro_alphabet": ["a"], "d": [[0], [1], [1]]}"#,
    );
    let (src, dist) = (f.arg("abc_source.json"), f.arg("narrow.json"));
    let text = stdout(&run(&[
        "gquantity",
        "--source",
        &src,
        "--distortion",
        &dist,
        "--D",
        "0",
        "--epsilon",
        "0.1,0.5",
        "--t",
        "0",
    ]));
    let rows = csv_rows(&text);
    assert_eq!(rows[0][4], "inf");
    assert_eq!(rows[0][3], "1");
    assert_eq!(rows[1][4], "0");
}

#[test]
fn grid_syntax_expands() {
    let f = Files::new();
    let (src, dist) = (f.arg("abc_source.json"), f.arg("abc_hamming.json"));
    let text = stdout(&run(&[
        "gquantity",
        "--source",
        &src,
        "--distortion",
        &dist,
        "--D",
        "0",
        "--epsilon",
        "0:0.2:0.1",
        "--t",
        "0.5",
        "--t",
        "1,2",
    ]));
    assert_eq!(csv_rows(&text).len(), 9);
}

#[test]
fn build_code_variants() {
    let f = Files::new();
    let (src, dist) = (f.arg("abc_source.json"), f.arg("abc_hamming.json"));
    let export = f.arg("code.json");
    let metrics = |variant: &str| {
        let text = stdout(&run(&[
            "build-code",
            "--source",
            &src,
            "--distortion",
            &dist,
            "--D",
            "0",
            "--epsilon",
            "0.25",
            "--variant",
            variant,
            "--out",
            &export,
        ]));
        assert_eq!(
            text.lines().next().unwrap(),
            "variant,D,epsilon,k_star,t,excess,cgf,mean_length,max_length"
        );
        csv_rows(&text).remove(0)
    };
    let row = metrics("stochastic");
    assert_eq!(row[0], "stochastic");
    assert_eq!(row[5], "0.25");
    let row = metrics("det");
    assert_eq!(row[0], "deterministic");
    assert_eq!(row[5], "0.2");
    let row = metrics("prefix");
    assert_eq!((row[3].as_str(), row[8].as_str()), ("2", "2"));

    let code: Value = serde_json::from_str(&fs::read_to_string(&export).unwrap()).unwrap();
    assert_eq!(code["variant"], "prefix");
    for row in code["encoder"].as_array().unwrap() {
        for branch in row["branches"].as_array().unwrap() {
            assert_eq!(branch["codeword"].as_str().unwrap().len(), 2);
        }
    }
}

#[test]
fn sweep_rows_and_skips() {
    let f = Files::new();
    let (src, dist) = (f.arg("bin_source.json"), f.arg("bin_hamming.json"));
    let text = stdout(&run(&[
        "sweep",
        "--source",
        &src,
        "--distortion",
        &dist,
        "--D",
        "0.1",
        "--epsilon",
        "0.5",
        "--n",
        "1:10:1",
        "--budget",
        "70000",
    ]));
    assert_eq!(
        text.lines().next().unwrap(),
        "n,t,epsilon,D,lower,upper,gaussian,gap,scaled_gap,status"
    );
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 10);
    let skipped: Vec<&str> = rows
        .iter()
        .filter(|r| r[9] == "skipped")
        .map(|r| r[0].as_str())
        .collect();
    assert_eq!(skipped, ["9", "10"]);
    // eps = 0.5: Q^{-1}(0.5) = 0, so the exponential factor is 1
    let (r, v) = (0.7219280948873623 - 0.4689955935892812, 0.64);
    for row in &rows {
        let n: f64 = row[0].parse().unwrap();
        let gaussian: f64 = row[6].parse().unwrap();
        let expected = 0.5 * r - (v / (2.0 * std::f64::consts::PI * n)).sqrt();
        assert!((gaussian - expected).abs() < 1e-9, "{row:?}");
    }
}

#[test]
fn rd_csv_and_json() {
    let f = Files::new();
    let (src, dist) = (f.arg("bin_source.json"), f.arg("bin_hamming.json"));
    let text = stdout(&run(&[
        "rd",
        "--source",
        &src,
        "--distortion",
        &dist,
        "--D",
        "0.1,0.3",
    ]));
    let rows = csv_rows(&text);
    let r: f64 = rows[0][1].parse().unwrap();
    assert!((r - 0.252932501852).abs() < 1e-9);
    assert_eq!(rows[1][1], "0");
    assert_eq!(rows[1][2], "");

    let text = stdout(&run(&[
        "rd",
        "--source",
        &src,
        "--distortion",
        &dist,
        "--D",
        "0.1",
        "--format",
        "json",
    ]));
    let v: Value = serde_json::from_str(&text).unwrap();
    for key in [
        "distortion",
        "rate",
        "kernel",
        "output_marginal",
        "lambda_star",
        "tilted_info",
        "dispersion",
    ] {
        assert!(v[0].get(key).is_some(), "missing {key}");
    }
}

#[test]
fn outputs_are_reproducible() {
    let f = Files::new();
    let (src, dist) = (f.arg("abc_source.json"), f.arg("abc_hamming.json"));
    let args = [
        "gquantity",
        "--source",
        &src,
        "--distortion",
        &dist,
        "--D",
        "0:1:0.5",
        "--epsilon",
        "0,0.1",
        "--t",
        "0:2:0.5",
    ];
    let a = stdout(&run(&args));
    let b = stdout(&bin().args(args).args(["--workers", "1"]).output().unwrap());
    assert_eq!(a, b);
}

fn passing_config(f: &Files) -> PathBuf {
    let config = format!(
        r#"{{"seed": 7, "t_grid": [0.5, 1, 2],
            "families": [
              {{"kind": "file", "source": {:?}, "distortion": {:?}, "levels": [0], "epsilons": [0, 0.25]}},
              {{"kind": "binary", "p": 0.3, "levels": [0.05], "epsilons": [0]}}]}}"#,
        f.arg("abc_source.json"),
        f.arg("abc_hamming.json"),
    );
    f.write("suite.json", &config)
}

fn last_line(path: &Path) -> Value {
    let text = fs::read_to_string(path).unwrap();
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn verify_passing_config_exits_zero() {
    let f = Files::new();
    let config = passing_config(&f);
    let report = f.path("report.jsonl");
    let out = run(&[
        "verify",
        "--config",
        config.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = last_line(&report);
    assert_eq!(summary["summary"], true);
    assert_eq!(summary["failed"], 0);
    let text = fs::read_to_string(&report).unwrap();
    for line in text.lines() {
        serde_json::from_str::<Value>(line).unwrap();
    }
}

#[test]
fn verify_is_reproducible() {
    let f = Files::new();
    let config = passing_config(&f);
    let a = stdout(&run(&["verify", "--config", config.to_str().unwrap()]));
    let b = stdout(&run(&[
        "--workers",
        "1",
        "verify",
        "--config",
        config.to_str().unwrap(),
    ]));
    assert_eq!(a, b);
}

#[test]
fn verify_negative_control_exits_one() {
    let f = Files::new();
    let config = passing_config(&f);
    let out = run(&[
        "verify",
        "--config",
        config.to_str().unwrap(),
        "--negative-control",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("achievability (negative control)"),
        "{stderr}"
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let summary: Value = serde_json::from_str(stdout.lines().last().unwrap()).unwrap();
    let claims: Vec<&str> = summary["failing_claims"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap())
        .collect();
    assert!(
        claims.iter().all(|c| c.ends_with("(negative control)")),
        "{claims:?}"
    );
}

#[test]
fn verify_malformed_config_exits_two() {
    let f = Files::new();
    let bad = f.write("bad.json", "{\"seed\": 1,\n \"t_grid\": [1,]\n}");
    let out = run(&["verify", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let unknown = f.write(
        "unknown.json",
        r#"{"seed": 1, "families": [{"kind": "nope"}]}"#,
    );
    assert_eq!(
        run(&["verify", "--config", unknown.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn bad_inputs_exit_two() {
    let f = Files::new();
    let bad = f.write(
        "bad_source.json",
        r#"{"alphabet": ["a", "b"], "probs": [0.5, 0.6]}"#,
    );
    let dist = f.arg("bin_hamming.json");
    let out = run(&[
        "rd",
        "--source",
        bad.to_str().unwrap(),
        "--distortion",
        &dist,
        "--D",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let src = f.arg("bin_source.json");
    let out = run(&[
        "gquantity",
        "--source",
        &src,
        "--distortion",
        &dist,
        "--D",
        "0",
        "--epsilon",
        "0",
        "--t",
        "1:0:1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--t"));
    assert_eq!(run(&["gquantity"]).status.code(), Some(2));
}

#[test]
fn verify_default_suite_exits_zero() {
    let out = run(&["verify"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let summary: Value = serde_json::from_str(stdout.lines().last().unwrap()).unwrap();
    assert_eq!(out.status.code(), Some(0), "{summary}");
}
