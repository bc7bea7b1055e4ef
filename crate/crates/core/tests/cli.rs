use std::path::Path;
use std::process::{Command, Output};

use varosc::harness::{ExperimentReport, CSV_HEADER};

fn varosc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varosc"))
        .args(args)
        .current_dir(cwd)
        .env("VAROSC_WORKERS", "2")
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn sweep_writes_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = varosc(
        &[
            "sweep",
            "--beta",
            "2.0",
            "--count",
            "30",
            "--grid",
            "100000",
            "--refine",
            "40",
            "--out",
            "sweep.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["theta", "total", "I1", "I2", "k0", "tail_bound"]);
    let totals: Vec<f64> = rdr
        .records()
        .map(|r| r.unwrap()[1].parse().unwrap())
        .collect();
    assert!(totals.len() >= 100_000);

    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("sweep.summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary, stdout_json(&out));
    let sup = summary["sup_estimate"].as_f64().unwrap();
    assert_eq!(totals.iter().copied().fold(0.0, f64::max), sup);
    assert!((sup - 2.4265724696564788).abs() < 1e-9);
}

#[test]
fn identity_variation_prints_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = varosc(
        &[
            "variation",
            "--op",
            "identity",
            "--dim",
            "3",
            "--seq",
            "geometric:2:20",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["max_ratio"].as_f64(), Some(0.0));
}

#[test]
fn lacunarity_threshold_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let fail = varosc(
        &[
            "variation",
            "--seq",
            "1,2,3,4",
            "--require-lacunary",
            "--min-beta",
            "1.5",
        ],
        dir.path(),
    );
    assert_eq!(fail.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&fail.stderr).contains("1.5"));

    let pass = varosc(
        &[
            "variation",
            "--seq",
            "1,2,4,8",
            "--require-lacunary",
            "--min-beta",
            "1.5",
        ],
        dir.path(),
    );
    assert_eq!(pass.status.code(), Some(0));
}

#[test]
fn argument_and_resource_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], i32); 5] = [
        (&["sweep", "--bogus"], 2),
        (&["frobnicate"], 2),
        (&["variation", "--seq", "4,2,1"], 2),
        (&["diverge", "--n-max", "5"], 2),
        (
            &[
                "variation",
                "--seq",
                "geometric:2:40",
                "--dim",
                "64",
                "--budget",
                "1000",
            ],
            3,
        ),
    ];
    for (args, code) in cases {
        let out = varosc(args, dir.path());
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn reports_reload_with_integrity() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "oscillation",
        "--seq",
        "geometric:2:12",
        "--m-seq",
        "geometric:3:8",
        "--dim",
        "2,3",
        "--trials",
        "6",
        "--seed",
        "4",
    ];
    let mut csv_args = base.to_vec();
    csv_args.extend(["--out", "r.csv"]);
    let mut json_args = base.to_vec();
    json_args.extend(["--out", "r.json", "--format", "json"]);
    assert_eq!(varosc(&csv_args, dir.path()).status.code(), Some(0));
    assert_eq!(varosc(&json_args, dir.path()).status.code(), Some(0));

    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    let rows = ExperimentReport::read_csv_rows(dir.path().join("r.csv")).unwrap();
    let report =
        ExperimentReport::from_json(&std::fs::read_to_string(dir.path().join("r.json")).unwrap())
            .unwrap();
    assert_eq!(rows, report.rows);
    let max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    assert_eq!(report.summary.max_ratio, max);

    let mut tampered: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    tampered["summary"]["max_ratio"] = serde_json::json!(max * 2.0);
    assert!(ExperimentReport::from_json(&tampered.to_string()).is_err());
}

#[test]
fn dilate_passes_for_strict_contractions() {
    let dir = tempfile::tempdir().unwrap();
    let out = varosc(
        &[
            "dilate",
            "--dim",
            "3",
            "--trials",
            "3",
            "--steps",
            "8",
            "--samples",
            "4",
            "--op",
            "random-contraction:0.8",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let batch = stdout_json(&out);
    assert_eq!(batch["all_passed"], serde_json::json!(true));
    assert_eq!(batch["reports"].as_array().unwrap().len(), 3);
}

#[test]
fn diverge_marks_powers_of_ten() {
    let dir = tempfile::tempdir().unwrap();
    let out = varosc(
        &["diverge", "--n-max", "1000", "--out", "d.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(dir.path().join("d.csv")).unwrap();
    let marks: Vec<u64> = rdr
        .records()
        .map(|r| r.unwrap()[0].parse().unwrap())
        .collect();
    assert_eq!(marks, [10, 100, 1000]);
}
