use std::collections::BTreeSet;

use criterion::{criterion_group, criterion_main, Criterion};
use gseq::ordinal::{OrdinalNotation, OrdinalSet};
use gseq::runtime::{run, Budget, RunMode};
use gseq::specfile::parse_spec;
use gseq::transforms::{compile_tm, TmSpec};
use gseq::validator::{check_machine, CheckOptions, ValidatedMachine};
use gseq_bench::machines_dir;

fn load(name: &str) -> String {
    std::fs::read_to_string(machines_dir().join(name)).unwrap()
}

fn validated(spec: &gseq::validator::MachineSpec) -> ValidatedMachine {
    check_machine(spec, &CheckOptions::default()).unwrap()
}

fn runs(c: &mut Criterion) {
    let tm: TmSpec = load("even_code.tm").parse().unwrap();
    let even = validated(&compile_tm(&tm));
    let input = OrdinalSet::finite([OrdinalNotation::nat(12)]);
    c.bench_function("compiled tm, input {12}", |b| {
        b.iter(|| run(&even, &input, &Budget::default(), RunMode::Short).unwrap())
    });

    let counter = validated(&parse_spec(&load("count_to_omega.gseq")).unwrap());
    let small = Budget {
        max_steps_per_segment: 1_000,
        ..Budget::default()
    };
    c.bench_function("count to omega with one limit jump", |b| {
        b.iter(|| run(&counter, &OrdinalSet::finite([OrdinalNotation::nat(3)]), &small, RunMode::Full).unwrap())
    });

    let flip = validated(&parse_spec(&load("bit_flip.gseq")).unwrap());
    let cycle = Budget {
        max_limit_jumps: 4,
        ..Budget::default()
    };
    let many: BTreeSet<u64> = (0..20).collect();
    let many = OrdinalSet::finite(many.into_iter().map(OrdinalNotation::nat));
    c.bench_function("bit flip through four limits", |b| b.iter(|| run(&flip, &many, &cycle, RunMode::Full).unwrap()));
}

criterion_group!(benches, runs);
criterion_main!(benches);
