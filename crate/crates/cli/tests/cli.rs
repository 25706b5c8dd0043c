//! Command-line behaviour and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

use gseq::specfile::parse_spec;
use gseq::validator::{check_machine, CheckOptions};

fn machines(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/machines").join(name)
}

fn gseq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gseq")).args(args).env_remove("GSEQ_BUDGET").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &std::path::Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn validate_reports_summary_or_records() {
    let ok = gseq(&["validate", p(&machines("copy.gseq"))]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).starts_with("ok\tkappa=w\tflavor=gseqa"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.gseq");
    std::fs::write(&bad, "kappa: w\nsignature { in: relation 2 membership; In: relation 1 in; }\ntau { In(x): In@0(x); }\n").unwrap();
    let out = gseq(&["validate", p(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).starts_with("missing-distinguished\t"));

    std::fs::write(&bad, "kappa: w\nsignature { in: relation 2 membership; In: relation 1 in; Out: relation 1 out; }\ntau { In(x): In@0(x) &; Out(x): Out@0(x); }\n").unwrap();
    let out = gseq(&["validate", p(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn compiled_tm_runs_and_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("even.gseq");
    let trace = dir.path().join("trace.txt");
    let t = gseq(&["transform", "compile-tm", p(&machines("even_code.tm")), "-o", p(&spec)]);
    assert_eq!(t.status.code(), Some(0));
    let out = gseq(&["run", p(&spec), "--input", "{4}", "--trace", p(&trace)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "output\t{4}\nlength\t7\nshort\ttrue\n");
    let records = std::fs::read_to_string(&trace).unwrap();
    assert!(records.lines().next().unwrap().starts_with("kind=run "));
    assert!(records.lines().any(|l| l.starts_with("kind=event ")));
}

#[test]
fn budget_and_shortness_exit_codes() {
    let flip = gseq(&["run", p(&machines("bit_flip.gseq")), "--input", "{0}", "--limit-jumps", "2"]);
    assert_eq!(flip.status.code(), Some(2));
    assert!(stdout(&flip).starts_with("out-of-budget"));
    let count = p(&machines("count_to_omega.gseq")).to_string();
    let full = gseq(&["run", &count, "--input", "{2}"]);
    assert_eq!(stdout(&full), "output\t{2}\nlength\tw+2\nshort\tfalse\n");
    let short = gseq(&["run", &count, "--input", "{2}", "--mode", "short"]);
    assert_eq!(short.status.code(), Some(1));
    assert!(stdout(&short).starts_with("not-short"));
    let dir = tempfile::tempdir().unwrap();
    let even = dir.path().join("even.gseq");
    gseq(&["transform", "compile-tm", p(&machines("even_code.tm")), "-o", p(&even)]);
    let env = Command::new(env!("CARGO_BIN_EXE_gseq"))
        .args(["run", p(&even), "--input", "{4}"])
        .env("GSEQ_BUDGET", "3")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(2), "seven steps do not fit a budget of three");
}

#[test]
fn transforms_write_valid_round_tripping_specs() {
    let dir = tempfile::tempdir().unwrap();
    let copy = p(&machines("copy.gseq")).to_string();
    let inc = dir.path().join("inc.gseq");
    gseq(&["transform", "compile-tm", p(&machines("increment.tm")), "-o", p(&inc)]);
    let jobs: Vec<(&str, Vec<String>)> = vec![
        ("compose", vec!["compose".into(), p(&inc).into(), copy.clone()]),
        ("flip", vec!["flip".into(), copy.clone()]),
        ("dovetail", vec!["dovetail".into(), p(&inc).into()]),
        ("alpha", vec!["alpha".into(), p(&machines("mark_param.alpha")).into()]),
        ("lift", vec!["lift".into(), copy.clone(), "--kappa".into(), "w*2".into()]),
    ];
    for (name, args) in jobs {
        let file = dir.path().join(format!("{name}.gseq"));
        let mut full = vec!["transform".to_string()];
        full.extend(args);
        full.extend(["-o".into(), p(&file).into()]);
        let out = Command::new(env!("CARGO_BIN_EXE_gseq")).args(&full).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let text = std::fs::read_to_string(&file).unwrap();
        let spec = parse_spec(&text).unwrap();
        assert_eq!(gseq::specfile::print_spec(&spec), text, "{name}");
        if name != "lift" {
            check_machine(&spec, &CheckOptions::default()).unwrap_or_else(|v| panic!("{name}: {v:?}"));
            assert_eq!(gseq(&["validate", p(&file)]).status.code(), Some(0), "{name}");
        }
    }
}

#[test]
fn transform_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let small = dir.path().join("small.gseq");
    let text = std::fs::read_to_string(machines("copy.gseq")).unwrap().replace("kappa: w", "kappa: finite:6");
    std::fs::write(&small, text).unwrap();
    let out = gseq(&["transform", "compose", p(&machines("copy.gseq")), p(&small)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("base sets differ"));
    let lifted = dir.path().join("lifted.gseq");
    let out = gseq(&["transform", "lift", p(&small), "--kappa", "finite:12", "-o", p(&lifted)]);
    assert_eq!(out.status.code(), Some(0));
    let run = gseq(&["--allow-finite-kappa", "run", p(&lifted), "--input", "{1,4}"]);
    assert_eq!(stdout(&run).lines().next(), Some("output\t{1,4}"));
    let down = gseq(&["transform", "lift", p(&lifted), "--kappa", "finite:12"]);
    assert_eq!(down.status.code(), Some(1));
}

#[test]
fn crosscheck_exit_codes() {
    let parity = p(&machines("parity.alpha")).to_string();
    let ok = gseq(&["crosscheck", &parity, "--inputs", "0..=12"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout(&ok).lines().count(), 14);
    let empty = gseq(&["crosscheck", &parity, "--inputs", "3..3"]);
    assert_eq!(empty.status.code(), Some(0));
    assert_eq!(stdout(&empty).lines().count(), 1);

    // A simulation of a different program stands in for a corrupted one.
    let dir = tempfile::tempdir().unwrap();
    let wrong = dir.path().join("wrong.gseq");
    gseq(&["transform", "alpha", p(&machines("oracle_member.alpha")), "-o", p(&wrong)]);
    let bad = gseq(&["crosscheck", &parity, "--inputs", "0..4", "--sim", p(&wrong)]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("disagreement on input {0}"));
}
