//! Loading, stepping, limit stages and whole runs on small hand-written
//! machines.

use std::collections::BTreeMap;

use gseq::ordinal::{OrdinalNotation as O, OrdinalSet};
use gseq::runtime::{
    certify_reduction, check_trace, classify_tail, cycle_classes, limit_state, load, run, step, unload, Budget,
    Cell, Certificate, Outcome, RunMode, TailClass,
};
use gseq::specfile::parse_spec;
use gseq::validator::{check_machine, CheckOptions, ValidatedMachine};

fn machine(name: &str) -> ValidatedMachine {
    let path = format!("{}/tests/machines/{name}.gseq", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap();
    check_machine(&parse_spec(&text).unwrap(), &CheckOptions::default()).unwrap()
}

fn set(xs: &[u64]) -> OrdinalSet {
    OrdinalSet::finite(xs.iter().map(|&x| O::nat(x)))
}

#[test]
fn load_and_unload() {
    let m = machine("count_to_omega");
    for a in [set(&[]), set(&[3]), OrdinalSet::cofinite([O::nat(2)])] {
        let s = load(&m, &a).unwrap();
        assert_eq!(s.set("In"), Some(&a));
        assert_eq!(unload(&m, &s), OrdinalSet::empty());
        assert_eq!(s.nat_constant("c"), Some(0));
        assert_eq!(s.nat_constant("d"), Some(0));
    }
}

#[test]
fn bit_flip_step() {
    let m = machine("bit_flip");
    let s = load(&m, &set(&[0])).unwrap();
    let t = step(&m, &s).unwrap();
    assert_eq!(t.set("In"), Some(&OrdinalSet::cofinite([O::nat(0)])));
    assert_eq!(t.set("Out"), Some(&OrdinalSet::full()));
    assert_eq!(step(&m, &t).unwrap(), s);
}

#[test]
fn bit_flip_never_terminates() {
    let m = machine("bit_flip");
    let budget = Budget {
        max_limit_jumps: 4,
        ..Budget::default()
    };
    let trace = run(&m, &set(&[1, 5]), &budget, RunMode::Full).unwrap();
    assert_eq!(trace.outcome, Outcome::OutOfBudget);
    assert_eq!(trace.limits.len(), 4);
    assert!(trace.limits.iter().all(|l| l.verified));
    // Every limit state is the pointwise minimum of the 2-cycle: both tapes empty.
    for (t, s) in trace.snapshots.iter().skip(1) {
        assert!(t.is_limit());
        assert_eq!(s.set("In"), Some(&OrdinalSet::empty()));
        assert_eq!(s.set("Out"), Some(&OrdinalSet::empty()));
    }
    assert!(!trace.warnings.is_empty());
}

#[test]
fn copy_machine_certifies_reflexivity() {
    let m = machine("copy");
    let b = set(&[1, 4]);
    match certify_reduction(&m, &b, &b, &Budget::default()).unwrap() {
        Certificate::Certified { short, trace } => {
            assert!(short);
            check_trace(&m, &trace).unwrap();
        }
        other => panic!("{other:?}"),
    }
    match certify_reduction(&m, &b, &set(&[1]), &Budget::default()).unwrap() {
        Certificate::Refused { actual, .. } => assert_eq!(actual, Some(b)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn erase_keeps_output_empty() {
    let m = machine("erase_input");
    let trace = run(&m, &set(&[2, 3]), &Budget::default(), RunMode::Short).unwrap();
    assert_eq!(trace.output(), Some(&OrdinalSet::empty()));
}

#[test]
fn counter_reaches_omega_plus_one() {
    let m = machine("count_to_omega");
    let budget = Budget {
        max_steps_per_segment: 500,
        ..Budget::default()
    };
    let trace = run(&m, &set(&[2, 7]), &budget, RunMode::Full).unwrap();
    let Outcome::Terminated { length, output, .. } = &trace.outcome else {
        panic!("{:?}", trace.outcome);
    };
    assert_eq!(*length, O::omega().add_nat(2).unwrap());
    assert_eq!(*output, set(&[2, 7]));
    let lim = &trace.limits[0];
    assert!(!lim.verified);
    assert!(lim.cells.contains(&(Cell::Const("c".into()), TailClass::Unbounded)));
    check_trace(&m, &trace).unwrap();
    // Short mode refuses the same run.
    let short = run(&m, &set(&[2, 7]), &budget, RunMode::Short).unwrap();
    assert!(matches!(short.outcome, Outcome::Failed(_)));
}

#[test]
fn runs_are_deterministic() {
    let m = machine("count_to_omega");
    let budget = Budget {
        max_steps_per_segment: 200,
        ..Budget::default()
    };
    let a = run(&m, &set(&[4]), &budget, RunMode::Full).unwrap();
    let b = run(&m, &set(&[4]), &budget, RunMode::Full).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.dump(), b.dump());
}

#[test]
fn tail_classes() {
    assert_eq!(classify_tail(&[1, 2, 1, 2, 1, 2], false), TailClass::Periodic(1));
    assert_eq!(classify_tail(&[0, 1, 2, 3, 4], false), TailClass::Unbounded);
    assert_eq!(classify_tail(&[3, 7], false), TailClass::Stable(7));
    assert_eq!(classify_tail(&[7], false), TailClass::Stable(7));
    assert_eq!(classify_tail(&[5, 1, 9, 4], false), TailClass::Unknown);
    assert_eq!(classify_tail(&[5, 1, 9, 4], true), TailClass::Stable(4));
    assert_eq!(TailClass::Unbounded.limit_value(), Some(0));
    assert_eq!(TailClass::Unknown.limit_value(), None);
}

#[test]
fn limit_state_from_classes() {
    let m = machine("count_to_omega");
    let base = load(&m, &set(&[1])).unwrap();
    let mut classes = BTreeMap::new();
    classes.insert(Cell::Const("c".into()), TailClass::Unbounded);
    classes.insert(Cell::Const("d".into()), TailClass::Stable(1));
    classes.insert(Cell::Member("Out".into(), 9), TailClass::Periodic(1));
    classes.insert(Cell::Tail("In".into()), TailClass::Periodic(0));
    let s = limit_state(&base, &m.spec.sigma, &classes).unwrap();
    assert_eq!(s.nat_constant("c"), Some(0));
    assert_eq!(s.nat_constant("d"), Some(1));
    assert_eq!(s.set("Out"), Some(&set(&[9])));
    assert_eq!(s.set("In"), Some(&set(&[1])));
    classes.insert(Cell::Const("d".into()), TailClass::Unknown);
    assert_eq!(limit_state(&base, &m.spec.sigma, &classes), Err(Cell::Const("d".into())));
}

#[test]
fn cycle_minimum_matches_unrolled_liminf() {
    let m = machine("bit_flip");
    let s0 = load(&m, &set(&[3])).unwrap();
    let s1 = step(&m, &s0).unwrap();
    let classes = cycle_classes(&[s0.clone(), s1.clone()], &m.spec.sigma);
    let lim = limit_state(&s0, &m.spec.sigma, &classes).unwrap();
    // Brute force over the period replayed three times.
    let replay = [&s0, &s1, &s0, &s1, &s0, &s1];
    for x in 0..10 {
        let x = O::nat(x);
        let inf = replay.iter().all(|s| s.set("In").unwrap().contains(&x));
        assert_eq!(lim.set("In").unwrap().contains(&x), inf);
    }
}

#[test]
fn coherence_check_passes() {
    let m = machine("count_to_omega");
    let budget = Budget {
        max_steps_per_segment: 100,
        check_coherence: true,
        ..Budget::default()
    };
    let trace = run(&m, &set(&[0, 3]), &budget, RunMode::Full).unwrap();
    assert!(matches!(trace.outcome, Outcome::Terminated { .. }));
}
