use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const DATA: &str = "x1,x2,y\n0.5,0,1\n0.3,0.2,-1\n-0.2,0.4,0\n0.1,-0.3,2.5\n";
const REF: &str = "x1,x2\n-1,-1\n-0.5,0.25\n0,0.5\n0.5,-0.75\n1,1\n";
/// Sharp settings under which the sinusoid has closed-form answers.
const SHARP: [&str; 12] = [
    "--eta",
    "1e-3",
    "--nu",
    "1e-3",
    "--kappa",
    "0.1",
    "--a0",
    "1",
    "--b0",
    "5",
    "--grad-std",
    "1e-4",
];

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("d.csv"), DATA).unwrap();
        fs::write(dir.path().join("ref.csv"), REF).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_gpa"))
            .current_dir(self.dir.path())
            .args(args)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&fs::read_to_string(self.path(name)).unwrap()).unwrap()
    }
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn with<'a>(base: &[&'a str], extra: &[&'a str]) -> Vec<&'a str> {
    base.iter().chain(extra).copied().collect()
}

#[test]
fn detect_top_one() {
    let f = Fixture::new();
    let out = f.ok(&[
        "detect",
        "--data",
        "d.csv",
        "--model",
        "sinusoidal2d",
        "--standardize",
        "none",
        "--noise-var",
        "1",
        "--top",
        "1",
    ]);
    // |f - y| is largest at row 1: f(0.3, 0.2) ~ 0.95 against -1
    assert!(out.contains("top: 1\n"), "{out}");
    assert_eq!(fs::read_to_string(f.path("gpa-out/top.txt")).unwrap(), "1\n");
    let doc = f.json("gpa-out/anomaly.json");
    assert_eq!(doc["anomaly_scores"].as_array().unwrap().len(), 4);
    assert_eq!(doc["noise_variance_source"], "user_supplied");
}

#[test]
fn detect_top_three_ranks_descending() {
    let f = Fixture::new();
    f.ok(&[
        "detect",
        "--data",
        "d.csv",
        "--model",
        "sinusoidal2d",
        "--noise-var",
        "1",
        "--top",
        "3",
    ]);
    let doc = f.json("gpa-out/anomaly.json");
    assert_eq!(doc["top"].as_array().unwrap().len(), 3);
    let scores: Vec<f64> = doc["anomaly_scores"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["value"].as_f64().unwrap())
        .collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn detect_empty_dataset_is_config_error() {
    let f = Fixture::new();
    fs::write(f.path("empty.csv"), "x1,x2,y\n").unwrap();
    let out = f.run(&[
        "detect",
        "--data",
        "empty.csv",
        "--model",
        "sinusoidal2d",
        "--noise-var",
        "1",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn explain_gpa_reports_delta_star() {
    let f = Fixture::new();
    let args = with(
        &[
            "explain",
            "--data",
            "d.csv",
            "--model",
            "sinusoidal2d",
            "--standardize",
            "none",
            "--point-index",
            "0",
        ],
        &SHARP,
    );
    f.ok(&args);
    let doc = f.json("gpa-out/explain_0.json");
    let delta = doc["diagnostics"]["gpa"]["delta_star"].as_array().unwrap();
    assert!((delta[0].as_f64().unwrap() + 1.0 / 6.0).abs() < 1e-3);
    assert!(delta[1].as_f64().unwrap().abs() < 1e-3);
    assert!(f.path("gpa-out/litmus_0.svg").exists());
}

#[test]
fn explain_six_methods_share_one_plot() {
    let f = Fixture::new();
    let args = with(
        &[
            "explain",
            "--data",
            "d.csv",
            "--model",
            "sinusoidal2d",
            "--standardize",
            "none",
            "--point-index",
            "0",
            "--methods",
            "gpa,lc,lime,ig,eig,sv",
            "--baseline",
            "0,0",
            "--ref",
            "ref.csv",
        ],
        &SHARP,
    );
    f.ok(&args);
    let doc = f.json("gpa-out/explain_0.json");
    let order: Vec<&str> = doc["method_order"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m.as_str().unwrap())
        .collect();
    assert_eq!(order, ["gpa", "lc", "lime", "ig", "eig", "sv"]);
    let svg = fs::read_to_string(f.path("gpa-out/litmus_0.svg")).unwrap();
    for m in order {
        assert!(svg.contains(&format!(">{m}<")), "missing row {m}");
    }
}

#[test]
fn explain_names_the_method_missing_an_input() {
    let f = Fixture::new();
    let out = f.run(&[
        "explain",
        "--data",
        "d.csv",
        "--model",
        "sinusoidal2d",
        "--methods",
        "gpa,ig",
    ]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ig") && err.contains("--baseline"), "{err}");
}

#[test]
fn explain_collective_shares_one_perturbation() {
    let f = Fixture::new();
    f.ok(&[
        "explain",
        "--data",
        "d.csv",
        "--model",
        "sinusoidal2d",
        "--collective",
        "--indices",
        "0,1,3",
        "--kappa",
        "0.003",
        "--grad-std",
        "0.01",
    ]);
    let doc = f.json("gpa-out/explain_collective.json");
    assert_eq!(doc["diagnostics"]["gpa"]["delta_star"].as_array().unwrap().len(), 2);
    assert_eq!(doc["diagnostics"]["gpa"]["rates"].as_array().unwrap().len(), 3);
    assert_eq!(doc["diagnostics"]["samples"].as_array().unwrap().len(), 3);
}

#[test]
fn explain_collective_rejects_baselines() {
    let f = Fixture::new();
    let out = f.run(&[
        "explain",
        "--data",
        "d.csv",
        "--model",
        "sinusoidal2d",
        "--collective",
        "--indices",
        "0,1",
        "--methods",
        "gpa,lime",
    ]);
    assert_eq!(code(&out), 2);
}

fn grid_len(doc: &Value) -> usize {
    doc["methods"]["gpa"]["distribution"]["grid"].as_array().unwrap().len()
}

#[test]
fn dist_grid_points_sets_grid_length() {
    let f = Fixture::new();
    let base = with(
        &[
            "dist",
            "--data",
            "d.csv",
            "--model",
            "sinusoidal2d",
            "--standardize",
            "none",
        ],
        &SHARP,
    );
    f.ok(&with(&base, &["--out", "a"]));
    f.ok(&with(&base, &["--out", "b", "--grid-points", "200"]));
    let (a, b) = (f.json("a/dist_0.json"), f.json("b/dist_0.json"));
    assert_eq!(grid_len(&a), 100);
    assert_eq!(grid_len(&b), 200);
    // point A: q1 peaks near -1/6
    let mode = a["diagnostics"]["modes"][0].as_f64().unwrap();
    assert!((mode + 1.0 / 6.0).abs() < 0.01, "{mode}");
    assert!(f.path("a/dist_0.svg").exists());
}

#[test]
fn dist_accepts_escalated_settings() {
    let f = Fixture::new();
    f.ok(&[
        "dist",
        "--data",
        "d.csv",
        "--model",
        "sinusoidal2d",
        "--point-index",
        "1",
        "--cb",
        "1",
        "--eta",
        "1",
    ]);
    let doc = f.json("gpa-out/dist_1.json");
    let gpa = &doc["config"]["command"]["dist"]["gpa"];
    assert_eq!(gpa["c_b"].as_f64(), Some(1.0));
    assert_eq!(gpa["eta"].as_f64(), Some(1.0));
    for row in doc["methods"]["gpa"]["distribution"]["probs"].as_array().unwrap() {
        let total: f64 = row.as_array().unwrap().iter().map(|p| p.as_f64().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }
}

#[test]
fn compare_gpa_and_lc_agree_on_first_point() {
    let f = Fixture::new();
    let args = with(
        &[
            "compare",
            "--data",
            "d.csv",
            "--model",
            "sinusoidal2d",
            "--standardize",
            "none",
            "--indices",
            "0",
            "--methods",
            "lc",
        ],
        &SHARP,
    );
    f.ok(&args);
    let doc = f.json("gpa-out/compare.json");
    let r = &doc["points"][0]["reports"]["lc"];
    for key in ["kendall_tau", "spearman_rho", "smr", "hit25"] {
        assert_eq!(r[key].as_f64(), Some(1.0), "{key}");
    }
}

#[test]
fn compare_against_zero_reference_leaves_ranks_undefined() {
    let f = Fixture::new();
    fs::write(f.path("c.csv"), "x1,x2,y\n0.5,0,0\n").unwrap();
    // f(0.5, 0) = 0 = y, so GPA with a wide l1 dead zone returns exactly zero
    f.ok(&[
        "compare",
        "--data",
        "c.csv",
        "--model",
        "sinusoidal2d",
        "--standardize",
        "none",
        "--methods",
        "lime",
        "--eta",
        "0.1",
        "--nu",
        "0.5",
        "--kappa",
        "0.01",
        "--a0",
        "1",
        "--b0",
        "5",
        "--grad-std",
        "1e-4",
    ]);
    let doc = f.json("gpa-out/compare.json");
    let p = &doc["points"][0];
    assert!(p["scores"]["gpa"]
        .as_array()
        .unwrap()
        .iter()
        .all(|v| v.as_f64() == Some(0.0)));
    let r = &p["reports"]["lime"];
    assert_eq!(r["smr"].as_f64(), Some(1.0));
    assert!(r["kendall_tau"].is_null() && r["spearman_rho"].is_null());
    assert_eq!(doc["summary"]["lime"]["undefined_rank_points"], 1);
}

#[test]
fn compare_needs_two_methods() {
    let f = Fixture::new();
    let out = f.run(&[
        "compare",
        "--data",
        "d.csv",
        "--model",
        "sinusoidal2d",
        "--methods",
        "gpa",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn oracle_prints_closed_forms() {
    let f = Fixture::new();
    let doc: Value = serde_json::from_str(&f.ok(&["oracle", "gpa", "--x", "0.5,0", "--y", "1"])).unwrap();
    assert!((doc["scores"][0].as_f64().unwrap() + 1.0 / 6.0).abs() < 1e-12);
    let doc: Value = serde_json::from_str(&f.ok(&["oracle", "ig", "--x", "0.5,0", "--x0", "0,1"])).unwrap();
    assert!((doc["scores"][0].as_f64().unwrap() + 2.0 / 3.0).abs() < 1e-12);
    assert!((doc["scores"][1].as_f64().unwrap() - 8.0 / 3.0).abs() < 1e-12);
}

#[test]
fn oracle_singular_path_is_config_error() {
    let f = Fixture::new();
    let out = f.run(&["oracle", "ig", "--x", "0.5,0", "--x0", "0,-0.5"]);
    assert_eq!(code(&out), 2);
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn same_seed_gives_identical_bytes() {
    let f = Fixture::new();
    let args = [
        "--seed",
        "42",
        "explain",
        "--data",
        "d.csv",
        "--model",
        "sinusoidal2d",
        "--point-index",
        "2",
        "--methods",
        "gpa,lc,lime,baylime,sv,zscore",
        "--ref",
        "ref.csv",
        "--sv-configs",
        "20",
    ];
    f.ok(&args);
    let first = read_all(&f.path("gpa-out"));
    f.ok(&args);
    assert_eq!(first, read_all(&f.path("gpa-out")));
    assert_eq!(first.len(), 2);
}

#[test]
fn unreachable_model_server_is_transport_error() {
    let f = Fixture::new();
    let out = f.run(&[
        "detect",
        "--data",
        "d.csv",
        "--model-url",
        "http://127.0.0.1:9",
        "--timeout-ms",
        "2000",
        "--noise-var",
        "1",
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn failing_model_command_is_transport_error() {
    let f = Fixture::new();
    let out = f.run(&["detect", "--data", "d.csv", "--model-cmd", "exit 1", "--noise-var", "1"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_method_is_config_error() {
    let f = Fixture::new();
    let out = f.run(&[
        "explain",
        "--data",
        "d.csv",
        "--model",
        "sinusoidal2d",
        "--methods",
        "gpa,shap",
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("shap"));
}

#[test]
fn model_dimension_must_match_data() {
    let f = Fixture::new();
    let out = f.run(&[
        "detect",
        "--data",
        "d.csv",
        "--model",
        "linear:1,2,3",
        "--noise-var",
        "1",
    ]);
    assert_eq!(code(&out), 2);
}
