use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_span-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn lab_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_span-lab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(2)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn phase_writes_one_row_per_density() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab_in(
        dir.path(),
        &[
            "phase",
            "--deltas",
            "0.2,0.4,0.6,0.8,1.0",
            "--nmax",
            "60",
            "--target-shift",
            "0.5",
            "--out",
            "phase.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("phase.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with(&format!("# {} command=phase config={{", span_lab::VERSION)));
    assert!(header.contains("\"cutoff\":1e-12"), "{header}");
    assert_eq!(
        lines.next().unwrap(),
        "delta,n_max,residual_sq,retained_rank,cutoff,clip"
    );
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.len() == 6));
    assert!(!text.contains('\r'));
}

#[test]
fn indicator_reproduces_the_diagonal_target() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab_in(
        dir.path(),
        &[
            "indicator",
            "--delta",
            "0.5",
            "--theta",
            "pi/4",
            "--window",
            "20:40",
            "--out",
            "ind.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = data_rows(&std::fs::read_to_string(dir.path().join("ind.csv")).unwrap());
    assert_eq!(rows.len(), 1);
    let h_hat: f64 = rows[0][3].parse().unwrap();
    let target: f64 = rows[0][4].parse().unwrap();
    assert!((target - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    assert!((h_hat - target).abs() < 0.05 * target, "{h_hat}");
}

#[test]
fn conv_check_reports_both_constants() {
    let o = lab(&["conv-check", "--a", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines().skip(1);
    let cols: Vec<&str> = lines.next().unwrap().split(',').collect();
    for c in ["paper_constant", "oracle_constant", "relative_deviation"] {
        assert!(cols.contains(&c), "{c}");
    }
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((row[2] - 0.5).abs() < 1e-15);
    assert!((row[4] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
}

#[test]
fn missing_fields_are_named() {
    let o = lab(&["phase"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("deltas"));
    let o = lab(&["indicator", "--delta", "0.5", "--theta", "pi/4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("window"));
}

#[test]
fn bad_values_are_validation_errors() {
    assert_eq!(
        lab(&[
            "indicator",
            "--delta",
            "0.5",
            "--theta",
            "tau/4",
            "--window",
            "20:40"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        lab(&[
            "indicator",
            "--delta",
            "0.5",
            "--theta",
            "pi/4",
            "--window",
            "40:20"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(lab(&["curve", "--delta", "-1"]).status.code(), Some(2));
    assert_eq!(lab(&["nonsense"]).status.code(), Some(2));
    let o = lab(&[
        "indicator",
        "--delta",
        "0.5",
        "--theta",
        "pi/4",
        "--window",
        "20:40",
        "--n",
        "100",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("truncation"), "{}", stderr(&o));
}

#[test]
fn config_files_merge_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"deltas": [0.3, 0.9], "nmax": 20, "cutoff": 1e-10}"#,
    )
    .unwrap();
    let o = lab_in(dir.path(), &["phase", "--config", "c.json", "--nmax", "30"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let header = text.lines().next().unwrap();
    assert!(
        header.contains("\"nmax\":30") && header.contains("\"cutoff\":1e-10"),
        "{header}"
    );
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][1], "30");

    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"deltas": [0.3], "nmx": 20}"#,
    )
    .unwrap();
    let o = lab_in(dir.path(), &["phase", "--config", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nmx"));
    assert_eq!(
        lab_in(dir.path(), &["phase", "--config", "missing.json"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn json_output_carries_config_and_result() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab_in(
        dir.path(),
        &[
            "phase", "--deltas", "0.5", "--nmax", "20", "--json", "p.json", "--out", "p.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("p.json")).unwrap()).unwrap();
    assert_eq!(v["command"], "phase");
    assert_eq!(v["version"], span_lab::VERSION);
    assert_eq!(v["config"]["nmax"], 20);
    assert_eq!(
        v["result"]["rows"][0]["curve"]["schedule"],
        serde_json::json!([10, 20])
    );
}

#[test]
fn selftest_exit_codes() {
    let o = lab(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = lab(&["selftest", "--tol", "1e-16"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("selftest failure"));
    let o = lab(&["selftest", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["checks"].as_array().unwrap().len(), 4);
}

#[test]
fn thread_cap_does_not_change_output() {
    let args = ["phase", "--deltas", "0.4,0.8", "--nmax", "30"];
    let one = Command::new(env!("CARGO_BIN_EXE_span-lab"))
        .env("LAB_THREADS", "1")
        .args(args)
        .output()
        .unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_span-lab"))
        .env("LAB_THREADS", "4")
        .args(args)
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_span-lab"))
        .env("LAB_THREADS", "0")
        .args(args)
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn every_subcommand_runs_with_minimal_flags() {
    for args in [
        &["density", "--delta", "0.5"][..],
        &["sums", "--delta", "1"],
        &["gram", "--delta", "0.5", "--n", "5"],
        &["project", "--delta", "0.8"],
        &["curve", "--delta", "0.8", "--a", "2"],
        &["probe", "--deltas", "0.25", "--radii", "2,4,6"],
        &["bargmann-check", "--mu", "0.5"],
        &["envelope", "--source", "hermite"],
    ] {
        let o = lab(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(
            text.starts_with(&format!("# {} command={}", span_lab::VERSION, args[0])),
            "{args:?}"
        );
        assert!(!data_rows(&text).is_empty());
    }
}
