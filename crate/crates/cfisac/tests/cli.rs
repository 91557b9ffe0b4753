use std::path::Path;
use std::process::{Command, Output};

use cfisac::ResultTable;

fn cfisac(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfisac")).args(args).current_dir(cwd).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_writes_a_table_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "h.toml", "name = \"hardening\"\ntrials = 200\n[sweep]\nparameter = \"L\"\nvalues = [2]\n");
    let out = cfisac(&["run", &spec, "--seed", "12", "--trials", "300"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let t = ResultTable::load(&dir.path().join("hardening.csv")).unwrap();
    assert_eq!(t.metadata.seed, 12);
    assert_eq!(t.metadata.spec.trials, 300);
    assert_eq!(t.rows.len(), 1);
}

#[test]
fn json_output_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "h.toml", "name = \"beampattern_heatmap\"\n[params]\nbeams = \"steered\"\n");
    let out = cfisac(&["run", &spec, "--out", "bp.json"], dir.path());
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("bp.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["metadata"]["experiment"], "beampattern_heatmap");
}

#[test]
fn bad_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "name = \"hardening\"\ntopologies = 0\n");
    let cases: [Vec<&str>; 4] = [
        vec!["run", &bad],
        vec!["run", "missing.toml"],
        vec!["run", &bad, "--topologies", "1", "--threads", "0"],
        vec!["run", &bad, "--topologies", "1", "--out", "/nonexistent/dir/x.csv"],
    ];
    for args in cases {
        let out = cfisac(&args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    }
}

#[test]
fn all_infeasible_exits_with_two_after_writing() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "o.toml",
        "name = \"opt_sweep\"\ntopologies = 1\n[sweep]\nparameter = \"gamma_dbm\"\nvalues = [60]\n[params]\nap_counts = [4]\n",
    );
    let out = cfisac(&["run", &spec, "--out", "o.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let t = ResultTable::load(&dir.path().join("o.csv")).unwrap();
    assert!(t.infeasible_everywhere());
}

#[test]
fn usage_errors_come_from_the_parser() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["run"][..], &["run", "x.toml", "--bogus"], &["frobnicate"]] {
        assert_eq!(cfisac(args, dir.path()).status.code(), Some(1), "{args:?}");
    }
    assert!(cfisac(&["--help"], dir.path()).status.success());
}
