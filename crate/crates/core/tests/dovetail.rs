//! The dovetailer over a machine that stops exactly on even β.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use gseq::ordinal::{OrdinalNotation as O, OrdinalSet};
use gseq::runtime::{run, Budget, Cell, Outcome, RunMode, TailClass};
use gseq::transforms::{code_pair, compile_tm, dovetail, DovetailSymbols, TmOutcome, TmSpec};
use gseq::validator::{check_machine, CheckOptions};

#[test]
fn dovetail_has_length_omega_plus_two() {
    let path = format!("{}/tests/machines/even_code.tm", env!("CARGO_MANIFEST_DIR"));
    let t: TmSpec = std::fs::read_to_string(path).unwrap().parse().unwrap();
    let inner = compile_tm(&t);
    let spec = dovetail(&inner);
    let names = DovetailSymbols::for_machine(&inner);
    let m = check_machine(&spec, &CheckOptions::default()).unwrap();
    let budget = Budget {
        max_steps_per_segment: 200_000,
        watch: Some(BTreeSet::from([names.c0.clone(), names.d.clone()])),
        ..Budget::default()
    };
    let a = BTreeSet::from([1u64]);
    let started = Instant::now();
    let tr = run(&m, &OrdinalSet::finite(a.iter().map(|&x| O::nat(x))), &budget, RunMode::Full).unwrap();
    eprintln!("{} steps in {:?}", tr.successor_steps, started.elapsed());
    let Outcome::Terminated { output, length, .. } = &tr.outcome else { panic!("{:?}", tr.outcome) };
    assert_eq!(*length, O::omega().add_nat(2).unwrap());
    let oracle: BTreeSet<u64> = (0..32)
        .filter(|&b| matches!(t.simulate(&code_pair(&BTreeSet::from([b]), &a), 10_000), TmOutcome::Halted { .. }))
        .collect();
    let got: BTreeSet<u64> = (0..32).filter(|&b| output.contains(&O::nat(b))).collect();
    assert_eq!(got, oracle);

    // Replay the control constants: the start state is the only one with d = 0.
    let mut vals: BTreeMap<&str, u64> = BTreeMap::from([(names.c0.as_str(), 0), (names.d.as_str(), 0)]);
    let mut stamp = O::zero();
    for e in &tr.events {
        if e.stamp != stamp {
            assert!(!(vals[names.c0.as_str()] != 0 && vals[names.d.as_str()] == 0), "stuck state at {stamp}");
            stamp = e.stamp.clone();
        }
        if let Cell::Const(c) = &e.cell {
            *vals.get_mut(c.as_str()).unwrap() = e.new;
        }
    }
    let at_omega = &tr.limits[0];
    assert_eq!(at_omega.at, O::omega());
    let c0 = at_omega.cells.iter().find(|(c, _)| *c == Cell::Const(names.c0.clone()));
    assert_eq!(c0.map(|x| x.1), Some(TailClass::Unbounded));
}
