use std::path::{Path, PathBuf};
use std::process::Command;

use ospgr::format::{decode_preferences, decode_session, encode_preferences, encode_session, Mode};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn fixture(name: &str) -> String {
    fixtures().join(name).display().to_string()
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(fixtures().join("golden").join(name)).unwrap()
}

/// Runs the CLI in-process and returns (exit code, stdout, stderr).
fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("ospgr").chain(args.iter().copied());
    let code = ospgr::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn ok(args: &[&str]) -> String {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "{args:?}: {err}");
    out
}

#[test]
fn fixtures_roundtrip_byte_for_byte() {
    for entry in std::fs::read_dir(fixtures()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        if path.is_dir() {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        if name.ends_with(".ospgr.json") {
            let log = decode_session(&text, Mode::Strict).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(encode_session(&log), text, "{name}");
        } else {
            let prefs = decode_preferences(&text, Mode::Strict).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(encode_preferences(&prefs), text, "{name}");
        }
    }
}

#[test]
fn worked_example_outcome_tables() {
    let case1 = ok(&[
        "analyze",
        &fixture("example-n3-case1.ospgr.json"),
        "--format",
        "csv",
        "--table",
        "outcomes",
    ]);
    assert_eq!(case1, golden("case1-outcomes.csv"));
    let lines: Vec<&str> = case1.lines().collect();
    assert_eq!(lines[1], "example-n3-case1,1,Player 1,1,A,A,A,rdm_r");
    assert_eq!(lines[2], "example-n3-case1,1,Player 2,3,B,Nothing,C,risk");
    assert_eq!(lines[3], "example-n3-case1,1,Player 3,2,B,B,B,rdm_r");

    let case2 = ok(&[
        "analyze",
        &fixture("example-n3-case2.ospgr.json"),
        "--format",
        "csv",
        "--table",
        "outcomes",
    ]);
    assert_eq!(case2, golden("case2-outcomes.csv"));
    assert!(case2.contains("Player 2,3,C,C,C,rdm_r"));
    assert!(case2.contains("Player 3,2,A,Nothing,B,safe"));
}

#[test]
fn golden_outputs() {
    let a = fixture("lab-n5-a.ospgr.json");
    let b = fixture("lab-n5-b.ospgr.json");
    assert_eq!(ok(&["analyze", &a, &b]), golden("lab-report.json"));
    let report = fixtures().join("golden").join("lab-report.json").display().to_string();
    assert_eq!(
        ok(&["report", &report, "--table", "priority"]),
        golden("lab-priority.csv")
    );
    assert_eq!(
        ok(&["enumerate", "--n", "5", "--tau-bound", "2"]),
        golden("enumerate-n5-b2.csv")
    );
    assert_eq!(
        ok(&["enumerate", "--n", "5", "--tau-bound", "2", "--format", "json"]),
        golden("enumerate-n5-b2.json")
    );
    assert_eq!(
        ok(&["form-groups", "-i", &fixture("candidates.json"), "--seed", "1"]),
        golden("groups-seed1.json")
    );
    assert_eq!(
        ok(&[
            "simulate",
            "-i",
            &fixture("group-n5.json"),
            "--seed",
            "11",
            "--session-id",
            "lab-n5-a"
        ]),
        golden("simulate-seed11.json")
    );
    assert_eq!(ok(&["reform", &a]), golden("reform-lab-n5-a.csv"));
}

#[test]
fn uniform_at_bound_zero() {
    assert_eq!(
        ok(&["enumerate", "--n", "5", "--tau-bound", "0"]),
        "object,rdm_r\n1,0.2\n2,0.2\n3,0.2\n4,0.2\n5,0.2\n"
    );
}

#[test]
fn formed_groups_respect_the_limit() {
    let out: serde_json::Value = serde_json::from_str(&ok(&[
        "form-groups",
        "-i",
        &fixture("candidates.json"),
        "--seed",
        "4",
        "--max-tau",
        "2",
    ]))
    .unwrap();
    for g in out["groups"].as_array().unwrap() {
        if g["accepted"].as_bool().unwrap() {
            assert!(g["taus"].as_array().unwrap().iter().all(|t| t.as_u64().unwrap() < 2));
        }
    }
}

#[test]
fn exit_codes_and_error_lines() {
    let (code, _, err) = run(&["enumerate", "--n", "5"]);
    assert_eq!(code, 2);
    let last: serde_json::Value = serde_json::from_str(err.lines().last().unwrap()).unwrap();
    assert_eq!(last["error"], "usage");

    let (code, _, err) = run(&["analyze", "/definitely/missing.json"]);
    assert_eq!(code, 1);
    let line: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(line["error"], "io");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ospgr.json");
    let text = std::fs::read_to_string(fixtures().join("example-n3-case1.ospgr.json")).unwrap();
    std::fs::write(
        &bad,
        text.replace(
            "\"A\",\n    \"B\",\n    \"C\"\n  ],\n  \"rounds\"",
            "\"B\",\n    \"A\",\n    \"C\"\n  ],\n  \"rounds\"",
        ),
    )
    .unwrap();
    let (code, _, err) = run(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("Borda"), "{err}");

    let (code, _, err) = run(&["simulate", "--n", "1", "--seed", "1"]);
    assert_eq!(code, 2, "{err}");
    let (code, _, _) = run(&["simulate", "--n", "3"]);
    assert_eq!(code, 2);
}

#[test]
fn every_subcommand_has_help() {
    for sub in [
        "simulate",
        "enumerate",
        "analyze",
        "form-groups",
        "reform",
        "serve",
        "report",
    ] {
        let (code, out, _) = run(&[sub, "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("Usage: ospgr"), "{sub}: {out}");
        assert!(out.contains("--"), "{sub}: {out}");
    }
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let (code, out, _) = run(&[
        "enumerate",
        "--n",
        "4",
        "--tau-bound",
        "1",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!((code, out.as_str()), (0, ""));
    assert_eq!(
        std::fs::read_to_string(path).unwrap(),
        ok(&["enumerate", "--n", "4", "--tau-bound", "1"])
    );
}

#[test]
fn binary_matches_library_entry_point() {
    let out = Command::new(env!("CARGO_BIN_EXE_ospgr"))
        .args(["enumerate", "--n", "5", "--tau-bound", "1", "--threads", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        ok(&["enumerate", "--n", "5", "--tau-bound", "1"])
    );

    let out = Command::new(env!("CARGO_BIN_EXE_ospgr"))
        .args(["report"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
