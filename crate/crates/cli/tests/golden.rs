use std::fs;
use std::process::{Command, Output};

fn urboot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_urboot"))
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .args(args)
        .output()
        .expect("binary spawns")
}

fn golden(name: &str) -> Vec<u8> {
    let path = format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"));
    fs::read(path).expect("golden file present")
}

#[test]
fn adf_run_reproduces_the_committed_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("out.json");
    let out = urboot(&[
        "adf",
        "tests/fixtures/single.csv",
        "--col",
        "Y",
        "--boot",
        "SB",
        "--dc",
        "trend",
        "--detr",
        "OLS,QD",
        "-B",
        "199",
        "--seed",
        "155776",
        "--json",
        json.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.contains("detrend =")).count(), 2);
    assert_eq!(fs::read(&json).unwrap(), golden("adf.json"));
}

#[test]
fn unbalanced_iadf_matches_golden_and_warns_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("out.json");
    let out = urboot(&[
        "iadf",
        "tests/fixtures/unbalanced.csv",
        "--boot",
        "MBB",
        "-B",
        "199",
        "--seed",
        "42",
        "--json",
        json.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("independent bootstrap per series"), "{stderr}");
    assert_eq!(fs::read(&json).unwrap(), golden("iadf.json"));
}

#[test]
fn orders_run_matches_golden_and_writes_figures() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("out.json");
    let svg = dir.path().join("orders.svg");
    let csv = dir.path().join("diff.csv");
    let out = urboot(&[
        "orders",
        "tests/fixtures/trio.csv",
        "-B",
        "99",
        "--seed",
        "5",
        "--json",
        json.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(fs::read(&json).unwrap(), golden("orders.json"));
    let figure = fs::read_to_string(&svg).unwrap();
    assert!(figure.starts_with("<?xml"));
    assert!(figure.contains("</svg>"));
    let diff = fs::read_to_string(&csv).unwrap();
    assert!(diff.starts_with("P,Q,R\n"));
    assert!(diff.lines().nth(1).unwrap().contains("NA"));
}

#[test]
fn worker_count_changes_nothing_but_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.json");
    let two = dir.path().join("two.json");
    for (path, workers) in [(&one, "1"), (&two, "2")] {
        let out = urboot(&[
            "union",
            "tests/fixtures/single.csv",
            "--col",
            "Y",
            "-B",
            "99",
            "--workers",
            workers,
            "--json",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let parse = |p: &std::path::Path| -> serde_json::Value {
        serde_json::from_slice(&fs::read(p).unwrap()).unwrap()
    };
    assert_eq!(parse(&one)["results"], parse(&two)["results"]);
}

#[test]
fn usage_problems_exit_with_code_64() {
    let unknown_flag = urboot(&["adf", "tests/fixtures/single.csv", "--frobnicate"]);
    assert_eq!(unknown_flag.status.code(), Some(64));
    let unknown_cmd = urboot(&["transmogrify"]);
    assert_eq!(unknown_cmd.status.code(), Some(64));
    let help = urboot(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8(help.stdout).unwrap().contains("urboot"));
}

#[test]
fn validation_problems_exit_with_code_2() {
    let missing_file = urboot(&["adf", "tests/fixtures/nonexistent.csv"]);
    assert_eq!(missing_file.status.code(), Some(2));
    let joint_unbalanced = urboot(&[
        "panel",
        "tests/fixtures/unbalanced.csv",
        "--boot",
        "MBB",
        "-B",
        "99",
    ]);
    assert_eq!(joint_unbalanced.status.code(), Some(2));
    let stderr = String::from_utf8(joint_unbalanced.stderr).unwrap();
    assert!(stderr.contains("error:"), "{stderr}");
    let bad_level = urboot(&["union", "tests/fixtures/single.csv", "--level", "high"]);
    assert_eq!(bad_level.status.code(), Some(2));
}

#[test]
fn degenerate_input_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.csv");
    let rows: String = (0..50).map(|_| "1.0\n").collect();
    fs::write(&path, format!("FLAT\n{rows}")).unwrap();
    let out = urboot(&["adf", path.to_str().unwrap(), "-B", "49"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn check_reports_the_observation_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("check.json");
    let svg = dir.path().join("pattern.svg");
    let out = urboot(&[
        "check",
        "tests/fixtures/unbalanced.csv",
        "--json",
        json.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("balanced: no"));
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(&json).unwrap()).unwrap();
    assert_eq!(doc["results"][0]["first"], 8);
    assert_eq!(doc["results"][1]["first"], 1);
    assert_eq!(doc["results"][0]["internal_gaps"], 0);
    assert!(fs::read_to_string(&svg).unwrap().contains("</svg>"));
}
