use criterion::{black_box, criterion_group, criterion_main, Criterion};
use gseq::ordinal::OrdinalNotation;
use gseq::sample::{random_formula, random_state, FormulaShape};
use gseq::satisfaction::{sat, threshold, EvalDomain};
use gseq_bench::mixed_signature;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn evaluation(c: &mut Criterion) {
    let sigma = mixed_signature();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cases: Vec<_> = (0..200)
        .map(|_| {
            let phi = random_formula(&mut rng, &sigma, &[], &FormulaShape::default());
            let s = random_state(&mut rng, &sigma, OrdinalNotation::omega(), 12);
            (phi, s)
        })
        .collect();
    c.bench_function("sat omega x200", |b| {
        b.iter(|| cases.iter().filter(|(phi, s)| sat(s, phi, EvalDomain::Omega).unwrap()).count())
    });
    c.bench_function("sat surrogate at threshold x200", |b| {
        b.iter(|| {
            cases
                .iter()
                .filter(|(phi, s)| sat(s, phi, EvalDomain::SurrogateFinite(black_box(threshold(s, phi)))).unwrap())
                .count()
        })
    });
}

criterion_group!(benches, evaluation);
criterion_main!(benches);
