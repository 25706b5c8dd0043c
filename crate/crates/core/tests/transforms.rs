//! Behaviour of the machine constructions against direct oracles.

use std::collections::BTreeSet;

use gseq::ordinal::{OrdinalNotation as O, OrdinalSet};
use gseq::runtime::{run, Budget, Outcome, RunMode};
use gseq::specfile::{parse_spec, print_spec};
use gseq::transforms::{compile_tm, compose, flip, lift, Move, TmOutcome, TmSpec, TransformError};
use gseq::validator::{check_machine, CheckOptions, MachineSpec, ValidatedMachine};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn validated(spec: &MachineSpec) -> ValidatedMachine {
    let opts = CheckOptions {
        allow_finite_kappa: true,
        ..CheckOptions::default()
    };
    match check_machine(spec, &opts) {
        Ok(m) => m,
        Err(v) => panic!("{}\n{}", v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\n"), print_spec(spec)),
    }
}

fn set(xs: &[u64]) -> OrdinalSet {
    OrdinalSet::finite(xs.iter().map(|&x| O::nat(x)))
}

fn naturals(s: &OrdinalSet) -> BTreeSet<u64> {
    s.support.iter().map(|o| o.as_nat().unwrap()).collect()
}

fn machine(name: &str) -> MachineSpec {
    let path = format!("{}/tests/machines/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_spec(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn tm(name: &str) -> TmSpec {
    let path = format!("{}/tests/machines/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap().parse().unwrap()
}

/// Random machines that stop quickly on every singleton below 16.
fn halting_tms(count: usize) -> Vec<TmSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut out = Vec::new();
    while out.len() < count {
        let states = 2 + out.len() % 3;
        let t = TmSpec::random(&mut rng, states);
        let halts = (0..16).all(|k| matches!(t.simulate(&BTreeSet::from([k]), 200), TmOutcome::Halted { .. }));
        if halts {
            out.push(t);
        }
    }
    out
}

#[test]
fn tm_text_round_trips_and_rejects_partial_tables() {
    let t = tm("even_code.tm");
    assert_eq!(t.to_string().parse::<TmSpec>().unwrap(), t);
    let partial = "states: 2\n(0, 0) -> (1, 1, R)\n";
    assert!(matches!(partial.parse::<TmSpec>(), Err(TransformError::BadTm(_))));
    assert!(matches!("states: 2\n(0, 0) -> 1".parse::<TmSpec>(), Err(TransformError::TmSyntax { line: 2, .. })));
    let one = TmSpec::new(1, []).unwrap();
    assert_eq!(one.simulate(&BTreeSet::from([4]), 10), TmOutcome::Halted { tape: BTreeSet::from([4]), steps: 0 });
    let left = TmSpec::new(2, [((0, 0), (1, 1, Move::Left)), ((0, 1), (1, 0, Move::Left))]).unwrap();
    assert_eq!(left.simulate(&BTreeSet::new(), 10).tape(), Some(&BTreeSet::from([0])));
}

#[test]
fn compiled_tm_keeps_input_and_one_state_machine_copies() {
    let spec = compile_tm(&TmSpec::new(1, []).unwrap());
    assert_eq!(spec.tau["In"].body.to_string(), "In@0(x)");
    let m = validated(&spec);
    let tr = run(&m, &set(&[2, 5]), &Budget::default(), RunMode::Full).unwrap();
    match tr.outcome {
        Outcome::Terminated { output, length, .. } => {
            assert_eq!(output, set(&[2, 5]));
            assert_eq!(length, O::nat(2));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn compiled_tms_match_direct_simulation() {
    for t in halting_tms(5) {
        let m = validated(&compile_tm(&t));
        for k in 0..16 {
            let want = t.simulate(&BTreeSet::from([k]), 10_000);
            let tr = run(&m, &set(&[k]), &Budget::default(), RunMode::Short).unwrap();
            assert!(tr.is_short(&O::omega()), "{t}\ninput {k}: {:?}", tr.outcome);
            assert_eq!(tr.output().map(naturals).as_ref(), want.tape(), "{t}\ninput {k}");
            if let TmOutcome::Halted { steps, .. } = want {
                assert_eq!(tr.successor_steps, steps + 1);
            }
        }
    }
}

#[test]
fn transform_outputs_validate_and_round_trip() {
    let inc = compile_tm(&tm("increment.tm"));
    let copy = machine("copy.gseq");
    let built = [
        compose(&inc, &copy).unwrap(),
        flip(&copy),
        flip(&flip(&inc)),
        lift(&inc, &O::omega().add_nat(0).unwrap().next_limit().unwrap()).unwrap(),
        gseq::transforms::dovetail(&compile_tm(&tm("even_code.tm"))),
    ];
    for (i, spec) in built.iter().enumerate() {
        let text = print_spec(spec);
        let back = parse_spec(&text).unwrap_or_else(|e| panic!("#{i}: {e}\n{text}"));
        assert_eq!(&back, spec, "#{i}");
        if spec.kappa == O::omega() {
            validated(spec);
        }
    }
}

#[test]
fn compose_runs_second_machine_on_first_output() {
    let inc = compile_tm(&tm("increment.tm"));
    let copy = machine("copy.gseq");
    let flip_copy = flip(&copy);
    let pairs = [(inc.clone(), inc.clone()), (inc.clone(), flip_copy.clone()), (copy.clone(), inc.clone())];
    let budget = Budget::default();
    for (a, b) in &pairs {
        let (ma, mb, mab) = (validated(a), validated(b), validated(&compose(a, b).unwrap()));
        for bits in 0..16u64 {
            let input: Vec<u64> = (0..4).filter(|i| bits >> i & 1 == 1).collect();
            let mid = run(&ma, &set(&input), &budget, RunMode::Full).unwrap();
            let want = run(&mb, mid.output().unwrap(), &budget, RunMode::Full).unwrap();
            let got = run(&mab, &set(&input), &budget, RunMode::Full).unwrap();
            assert_eq!(got.output(), want.output(), "input {input:?}");
            assert_eq!(got.is_short(&O::omega()), mid.is_short(&O::omega()) && want.is_short(&O::omega()));
        }
    }
}

#[test]
fn compose_checks_base_sets() {
    let copy = machine("copy.gseq");
    let mut small = copy.clone();
    small.kappa = O::nat(6);
    assert!(matches!(compose(&copy, &small), Err(TransformError::KappaMismatch { .. })));
    let id = validated(&compose(&copy, &copy).unwrap());
    let tr = run(&id, &set(&[1, 4]), &Budget::default(), RunMode::Full).unwrap();
    assert_eq!(tr.output(), Some(&set(&[1, 4])));
}

#[test]
fn flip_complements_and_flip_twice_is_identity() {
    let copy = machine("copy.gseq");
    let (m, f, ff) = (validated(&copy), validated(&flip(&copy)), validated(&flip(&flip(&copy))));
    let budget = Budget::default();
    let out = run(&f, &set(&[1]), &budget, RunMode::Full).unwrap();
    assert_eq!(out.output(), Some(&OrdinalSet::cofinite([O::nat(1)])));
    for bits in 0..16u64 {
        let input: Vec<u64> = (0..8).filter(|i| (bits * 37) >> i & 1 == 1).collect();
        let base = run(&m, &set(&input), &budget, RunMode::Full).unwrap();
        let once = run(&f, &set(&input), &budget, RunMode::Full).unwrap();
        let twice = run(&ff, &set(&input), &budget, RunMode::Full).unwrap();
        assert_eq!(once.output().cloned(), base.output().map(|b| b.complement()));
        assert_eq!(twice.output(), base.output());
    }
}

#[test]
fn lift_keeps_outputs_below_the_old_base_set() {
    let mut inc = compile_tm(&tm("increment.tm"));
    inc.kappa = O::nat(6);
    assert!(matches!(lift(&inc, &O::nat(6)), Err(TransformError::BadLift { .. })));
    let lifted = lift(&inc, &O::nat(12)).unwrap();
    let (small, big) = (validated(&inc), validated(&lifted));
    let budget = Budget::default();
    let mut overheads = BTreeSet::new();
    for bits in 0..64u64 {
        let input: Vec<u64> = (0..6).filter(|i| bits >> i & 1 == 1).collect();
        let a = run(&small, &set(&input), &budget, RunMode::Full).unwrap();
        let b = run(&big, &set(&input), &budget, RunMode::Full).unwrap();
        let (oa, ob) = (a.output().unwrap(), b.output().unwrap());
        assert_eq!(naturals(oa), naturals(ob), "input {input:?}");
        assert!(naturals(ob).iter().all(|&x| x < 6));
        overheads.insert(b.successor_steps - a.successor_steps);
    }
    assert_eq!(overheads.len(), 1);
    assert!(*overheads.iter().next().unwrap() < 10);
}

#[test]
fn compiled_tms_match_on_every_input_below_ten() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let inputs: Vec<BTreeSet<u64>> = (0..1024u64).map(|bits| (0..10).filter(|i| bits >> i & 1 == 1).collect()).collect();
    let mut found = 0;
    while found < 5 {
        let t = TmSpec::random(&mut rng, 2 + found % 3);
        if !inputs.iter().all(|a| matches!(t.simulate(a, 200), TmOutcome::Halted { .. })) {
            continue;
        }
        found += 1;
        let m = validated(&compile_tm(&t));
        for a in &inputs {
            let input = OrdinalSet::finite(a.iter().map(|&x| O::nat(x)));
            let tr = run(&m, &input, &Budget::default(), RunMode::Short).unwrap();
            assert_eq!(tr.output().map(naturals).as_ref(), t.simulate(a, 10_000).tape(), "{t}\ninput {a:?}");
        }
    }
}
