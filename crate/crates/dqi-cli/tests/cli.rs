//! End-to-end CLI behavior: exit codes, output targets, format
//! equivalence, profile-source validation.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const DATA_FILE: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../data/partial_win_synthetic.load_decode"
);

fn dqi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqi"))
        .args(args)
        .output()
        .expect("spawn dqi")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("dqi-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn report_prints_csv_and_headline() {
    let out = dqi(&[
        "report",
        "--parametric",
        "--m",
        "50000",
        "--ell",
        "6350",
        "--q",
        "2",
        "--d",
        "0",
    ]);
    assert!(out.status.success());
    let body = stdout(&out);
    let mut lines = body.lines();
    assert!(lines.next().unwrap().starts_with("ell,mu,eps,"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("6350,0.127,"));
    assert!(row.ends_with("BothValid"));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("regime=BothValid"), "headline missing: {err}");
}

#[test]
fn missing_shot_file_exits_2() {
    let out = dqi(&[
        "report",
        "--m",
        "100",
        "--ell",
        "10",
        "--shots",
        "/definitely/not/here.load_decode",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_shot_file_exits_1() {
    let path = tmp("malformed.load_decode");
    std::fs::write(&path, "12: 0.9 (30)\nnot a record\n").unwrap();
    let out = dqi(&[
        "report",
        "--m",
        "100",
        "--ell",
        "10",
        "--shots",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "missing line number: {err}");
}

#[test]
fn conflicting_sources_exit_1() {
    let out = dqi(&[
        "report",
        "--m",
        "100",
        "--ell",
        "10",
        "--parametric",
        "--zero",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reversed_grid_exits_1() {
    let out = dqi(&["blindspot", "--m", "5000", "--ell", "667:610", "--zero"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn out_file_holds_table_stdout_holds_headline() {
    let path = tmp("blindspot.csv");
    let out = dqi(&[
        "blindspot",
        "--shots",
        DATA_FILE,
        "--k-cap",
        "667",
        "--m",
        "5000",
        "--ell",
        "640:645",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("blind spot: ell in [642, 645]"));
    let csv = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().count(), 7); // header + 6 rows
}

#[test]
fn csv_and_json_carry_identical_numbers() {
    let args_base = [
        "blindspot",
        "--shots",
        DATA_FILE,
        "--k-cap",
        "667",
        "--m",
        "5000",
        "--ell",
        "640:650",
    ];
    let csv_out = dqi(&args_base);
    assert!(csv_out.status.success());
    let json_out = dqi(&[&args_base[..], &["--format", "json"]].concat());
    assert!(json_out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&json_out)).unwrap();
    let rows = doc["rows"].as_array().unwrap();

    let csv_text = stdout(&csv_out);
    let mut csv_lines = csv_text.lines();
    let header: Vec<&str> = csv_lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();

    let sig6 = |x: f64| format!("{:.5e}", x);
    for (line, row) in csv_lines.zip(rows) {
        let fields: Vec<&str> = line.split(',').collect();
        let csv_master: f64 = fields[col("master")].parse().unwrap();
        let json_master = row["report"]["sm_master"].as_f64().unwrap();
        assert_eq!(
            sig6(csv_master),
            sig6(json_master),
            "master mismatch on {line}"
        );
        let csv_eps: f64 = fields[col("eps")].parse().unwrap();
        let json_eps = row["report"]["rates"]["eps_max"].as_f64().unwrap();
        assert_eq!(sig6(csv_eps), sig6(json_eps), "eps mismatch on {line}");
        assert_eq!(
            fields[col("regime")],
            row["report"]["regime"].as_str().unwrap()
        );
    }
}

#[test]
fn wilson_flag_inflates_rates() {
    let run = |wilson: bool| -> f64 {
        let mut args = vec![
            "report", "--m", "5000", "--ell", "650", "--shots", DATA_FILE, "--k-cap", "667",
            "--format", "json",
        ];
        if wilson {
            args.push("--wilson");
        }
        let out = dqi(&args);
        assert!(out.status.success());
        let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        doc["rates"]["eps_bar"].as_f64().unwrap()
    };
    let raw = run(false);
    let wilson = run(true);
    assert!(
        wilson > raw,
        "wilson eps_bar {wilson} should exceed raw {raw}"
    );
}

#[test]
fn verify_eig_reports_zero_failures() {
    let out = dqi(&["verify-eig", "--format", "json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["summary"]["failures"], 0);
    assert_eq!(doc["summary"]["points"], 48);
}

#[test]
fn phase_csv_covers_grid_without_gaps() {
    let out = dqi(&[
        "phase",
        "--m",
        "5000",
        "--q",
        "2",
        "--mu",
        "0.1:0.2:0.05",
        "--eps",
        "0:0.6:0.2",
    ]);
    assert!(out.status.success());
    let body = stdout(&out);
    // 3 mu values x 4 eps values + header
    assert_eq!(body.lines().count(), 13);
    assert!(body.contains("BlindSpot"));
}

#[test]
fn profile_export_roundtrip_from_shots() {
    // the parser tolerates the exact text the data file ships with
    let text = std::fs::read_to_string(Path::new(DATA_FILE)).unwrap();
    let log = dqi_core::profile::parse_shot_log(&text).unwrap();
    assert!(log.warnings.is_empty());
    assert!(log.records.len() >= 20);
    // shot counts stay in the plausible experimental range
    assert!(log.records.iter().all(|r| (30..=396).contains(&r.n)));
}
