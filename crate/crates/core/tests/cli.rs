mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::{THREE_GATES, THREE_GATE_JOINTREE, TWO_GATES};

fn ssdiag(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssdiag"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn check_agrees_on_two_gates() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gates.ssd", TWO_GATES);
    write(dir.path(), "cd.obs", "C D\n");
    let out = ssdiag(
        dir.path(),
        &["check", "gates.ssd", "--obs", "cd.obs", "--cost", "card"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(!stdout(&out).contains("FAIL"));
}

#[test]
fn diagnose_and_oracle_print_sorted_answers() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gates.ssd", TWO_GATES);
    write(dir.path(), "cd.obs", "C D\n");
    let out = ssdiag(dir.path(), &["diagnose", "gates.ssd", "--obs", "cd.obs"]);
    assert_eq!(stdout(&out), "cost 1\n!okX okY\nokX !okY\n");
    let out = ssdiag(dir.path(), &["oracle", "gates.ssd", "--obs", "cd.obs"]);
    assert_eq!(stdout(&out), "!okX !okY\n!okX okY\nokX !okY\n");
    let out = ssdiag(
        dir.path(),
        &["oracle", "gates.ssd", "--obs", "cd.obs", "--cost", "card"],
    );
    assert_eq!(stdout(&out), "cost 1\n!okX okY\nokX !okY\n");
}

#[test]
fn kappa_costs_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gates.ssd", TWO_GATES);
    write(dir.path(), "cd.obs", "C D\n");
    write(dir.path(), "ranks", "!okX 3\n!okY 1\n");
    let out = ssdiag(
        dir.path(),
        &[
            "diagnose",
            "gates.ssd",
            "--obs",
            "cd.obs",
            "--cost",
            "kappa:ranks",
        ],
    );
    assert_eq!(stdout(&out), "cost 1\nokX !okY\n");
    let out = ssdiag(
        dir.path(),
        &[
            "check",
            "gates.ssd",
            "--obs",
            "cd.obs",
            "--cost",
            "kappa:ranks",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn generated_adder_has_eight_diagnoses_of_cost_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = ssdiag(
        dir.path(),
        &[
            "gen", "adder", "-n", "3", "--phi", "phi2", "--prefix", "add",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let out = ssdiag(
        dir.path(),
        &["diagnose", "add.ssd", "--obs", "add.obs", "-o", "add.diag"],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("add.diag")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("cost 3"));
    assert_eq!(lines.count(), 8);
}

#[test]
fn chain_stats() {
    let dir = tempfile::tempdir().unwrap();
    ssdiag(
        dir.path(),
        &["gen", "chain-inverters", "-n", "8", "--prefix", "chain"],
    );
    let out = ssdiag(dir.path(), &["stats", "chain.ssd"]);
    assert!(stdout(&out).starts_with("width 1\n"), "{}", stdout(&out));
}

#[test]
fn compile_writes_a_parsable_graph() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "three.ssd", THREE_GATES);
    write(dir.path(), "ae.obs", "A E\n");
    write(dir.path(), "three.jt", THREE_GATE_JOINTREE);
    let args = [
        "compile",
        "three.ssd",
        "--obs",
        "ae.obs",
        "--jointree",
        "three.jt",
        "--pivot",
        "1",
        "-o",
        "out.nnf",
    ];
    let out = ssdiag(dir.path(), &args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stats = stdout(&out);
    assert!(stats.starts_with("nodes "));
    assert_eq!(stats.lines().filter(|l| l.starts_with("edge ")).count(), 3);
    let nnf = fs::read_to_string(dir.path().join("out.nnf")).unwrap();
    let ssd = ssdiag::ssd::Ssd::parse(THREE_GATES).unwrap();
    let g = ssdiag::nnf::NnfGraph::parse(&nnf, ssd.vocab()).unwrap();
    assert!(g.is_decomposable());
    // identical runs give identical bytes
    ssdiag(dir.path(), &[&args[..9], &["again.nnf"]].concat());
    assert_eq!(
        fs::read(dir.path().join("again.nnf")).unwrap(),
        nnf.into_bytes()
    );
}

#[test]
fn random_generation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    ssdiag(
        dir.path(),
        &["gen", "random", "--seed", "7", "--prefix", "a"],
    );
    ssdiag(
        dir.path(),
        &["gen", "random", "--seed", "7", "--prefix", "b"],
    );
    for ext in ["ssd", "obs"] {
        let a = fs::read(dir.path().join(format!("a.{ext}"))).unwrap();
        let b = fs::read(dir.path().join(format!("b.{ext}"))).unwrap();
        assert_eq!(a, b);
    }
    let out = ssdiag(dir.path(), &["check", "a.ssd", "--obs", "a.obs"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gates.ssd", TWO_GATES);
    write(dir.path(), "bad.ssd", "var A\ncomponent A : Q\n");
    write(dir.path(), "shared.ssd", common::SHARED_PWR);
    assert_eq!(
        ssdiag(dir.path(), &["validate", "gates.ssd"]).status.code(),
        Some(0)
    );
    let shared = ssdiag(dir.path(), &["validate", "shared.ssd"]);
    assert_eq!(shared.status.code(), Some(1));
    assert!(stdout(&shared).contains("Pwr"));
    let bad = ssdiag(dir.path(), &["validate", "bad.ssd"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2"));
    assert_eq!(ssdiag(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        ssdiag(dir.path(), &["diagnose", "gates.ssd", "--cost", "cheap"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        ssdiag(
            dir.path(),
            &["diagnose", "gates.ssd", "--cut-arcs", "--pivot", "0"]
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        ssdiag(dir.path(), &["oracle", "gates.ssd", "--cap", "2"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn failed_runs_leave_no_output() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "gates.ssd", TWO_GATES);
    write(dir.path(), "bad.obs", "C !C\n");
    let out = ssdiag(
        dir.path(),
        &[
            "diagnose",
            "gates.ssd",
            "--obs",
            "bad.obs",
            "-o",
            "out.diag",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let left: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("out"))
        .collect();
    assert!(left.is_empty(), "{left:?}");
}
