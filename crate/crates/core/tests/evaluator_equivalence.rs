//! Probe-domain evaluation against exhaustive evaluation on surrogate
//! domains, plus the logical laws every evaluation mode must respect.

use gseq::logic::{double_signature, Formula, Signature, Sym, SymbolDecl};
use gseq::ordinal::OrdinalNotation;
use gseq::sample::{random_formula, random_state, FormulaShape};
use gseq::satisfaction::{defined_set, sat, sat2, sat_exact, threshold, EvalDomain};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sigma() -> Signature {
    Signature::standard()
        .with(SymbolDecl::constant("c"))
        .unwrap()
        .with(SymbolDecl::relation("P", 1))
        .unwrap()
        .with(SymbolDecl::relation("R", 2))
        .unwrap()
        .with(SymbolDecl::function("f", 1))
        .unwrap()
}

fn omega() -> OrdinalNotation {
    OrdinalNotation::omega()
}

#[test]
fn probe_domain_matches_surrogates_single() {
    let sigma = sigma();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let shape = FormulaShape::default();
    for _ in 0..2000 {
        let phi = random_formula(&mut rng, &sigma, &[], &shape);
        let s = random_state(&mut rng, &sigma, omega(), 12);
        let want = sat(&s, &phi, EvalDomain::Omega).unwrap();
        let b = threshold(&s, &phi);
        for n in b..=b + 8 {
            assert_eq!(sat(&s, &phi, EvalDomain::SurrogateFinite(n)).unwrap(), want, "{phi} n={n} {s}");
        }
    }
}

#[test]
fn probe_domain_matches_surrogates_pair() {
    let sigma = sigma();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let shape = FormulaShape {
        doubled: true,
        ..FormulaShape::default()
    };
    for _ in 0..1000 {
        let phi = random_formula(&mut rng, &sigma, &[], &shape);
        let s0 = random_state(&mut rng, &sigma, omega(), 12);
        let s1 = random_state(&mut rng, &sigma, omega(), 12);
        let want = sat2(&s0, &s1, &phi, EvalDomain::Omega).unwrap();
        let b = threshold(&s0, &phi).max(threshold(&s1, &phi));
        for n in b..=b + 8 {
            assert_eq!(sat2(&s0, &s1, &phi, EvalDomain::SurrogateFinite(n)).unwrap(), want, "{phi} n={n}");
        }
    }
}

fn instance(seed: u64, free: &[String]) -> (Formula, gseq::state::State) {
    let sigma = sigma();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = random_formula(&mut rng, &sigma, free, &FormulaShape::default());
    let s = random_state(&mut rng, &sigma, omega(), 12);
    (phi, s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn defined_set_agrees_with_pointwise_truth(seed in any::<u64>()) {
        let (phi, s) = instance(seed, &["x".to_string()]);
        prop_assume!(phi.free_vars() == ["x"]);
        let set = defined_set(&s, &phi, EvalDomain::Omega).unwrap();
        for a in 0..48u64 {
            let inst = phi.substitute("x", &OrdinalNotation::nat(a));
            prop_assert_eq!(set.contains(&OrdinalNotation::nat(a)), sat_exact(&s, &inst).unwrap(), "a={} {}", a, phi);
        }
    }

    #[test]
    fn contradiction_and_double_negation(seed in any::<u64>(), n in 1u64..20) {
        let (phi, s) = instance(seed, &[]);
        for dom in [EvalDomain::Omega, EvalDomain::SurrogateFinite(n)] {
            let v = sat(&s, &phi, dom).unwrap();
            prop_assert!(!sat(&s, &Formula::and(phi.clone(), Formula::not(phi.clone())), dom).unwrap());
            prop_assert_eq!(sat(&s, &Formula::not(Formula::not(phi.clone())), dom).unwrap(), v);
        }
    }

    #[test]
    fn de_morgan(a in any::<u64>(), b in any::<u64>()) {
        let (p, s) = instance(a, &[]);
        let (q, _) = instance(b, &[]);
        let lhs = Formula::not(Formula::and(p.clone(), q.clone()));
        let rhs = Formula::or(Formula::not(p), Formula::not(q));
        prop_assert_eq!(sat(&s, &lhs, EvalDomain::Omega).unwrap(), sat(&s, &rhs, EvalDomain::Omega).unwrap());
        prop_assert_eq!(sat_exact(&s, &lhs).unwrap(), sat_exact(&s, &rhs).unwrap());
    }

    #[test]
    fn exists_introduction(seed in any::<u64>(), a in 0u64..30) {
        let (phi, s) = instance(seed, &["x".to_string()]);
        let inst = phi.substitute("x", &OrdinalNotation::nat(a));
        if sat_exact(&s, &inst).unwrap() {
            prop_assert!(sat_exact(&s, &Formula::exists("x", phi)).unwrap());
        }
    }

    #[test]
    fn pair_evaluation_degenerates(seed in any::<u64>(), other in any::<u64>()) {
        let (phi, s0) = instance(seed, &[]);
        let (_, s1) = instance(other, &[]);
        let tagged = phi.map_symbols(&|s: &Sym| if s.name == "in" { s.clone() } else { Sym::copy(&s.name, 0) });
        prop_assert_eq!(
            sat2(&s0, &s1, &tagged, EvalDomain::Omega).unwrap(),
            sat(&s0, &phi, EvalDomain::Omega).unwrap()
        );
    }

    #[test]
    fn larger_probe_domain_keeps_verdict(seed in any::<u64>(), extra in 1u64..40) {
        let (phi, s) = instance(seed, &[]);
        // Anchored evaluation on a bigger flat domain only adds far points.
        let b = threshold(&s, &phi);
        prop_assert_eq!(
            sat(&s, &phi, EvalDomain::SurrogateFinite(b + 2)).unwrap(),
            sat(&s, &phi, EvalDomain::SurrogateFinite(b + 2 + extra)).unwrap()
        );
    }
}

#[test]
fn doubled_signature_names() {
    assert_eq!(double_signature(&sigma()).len(), 2 * sigma().len());
}
