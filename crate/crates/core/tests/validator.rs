//! Acceptance and rejection of machine descriptions.

use gseq::ordinal::{OrdinalNotation as O, OrdinalSet};
use gseq::runtime::load;
use gseq::specfile::parse_spec;
use gseq::validator::{check_bounded, check_machine, check_simple, diagnose_bep, CheckOptions, ViolationKind};

const HEAD: &str = "kappa: w\nflavor: gseqa\n";
const SIG: &str = "signature { in: relation 2 membership; In: relation 1 in; Out: relation 1 out; }\n";

fn kinds(text: &str, opts: &CheckOptions) -> Vec<ViolationKind> {
    match check_machine(&parse_spec(text).unwrap(), opts) {
        Ok(_) => vec![],
        Err(v) => v.into_iter().map(|v| v.kind).collect(),
    }
}

#[test]
fn flipper_is_bounded_and_next_state_reference_is_not() {
    let ok = format!("{HEAD}{SIG}tau {{ In(x): ~In@0(x); Out(x): ~Out@0(x); }}");
    assert!(check_bounded(&parse_spec(&ok).unwrap()).is_ok());
    let bad = format!("{HEAD}{SIG}tau {{ In(x): ~In@1(x); Out(x): ~Out@0(x); }}");
    let v = check_bounded(&parse_spec(&bad).unwrap()).unwrap_err();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].kind, ViolationKind::NotBounded);
    assert_eq!(v[0].symbol, "In");
}

#[test]
fn defaults_must_be_order_only() {
    let text = format!(
        "{HEAD}signature {{ in: relation 2 membership; In: relation 1 in; Out: relation 1 out; h: constant; }}\n\
         default {{ h(x): In(x); }}\ntau {{ In(x): In@0(x); Out(x): Out@0(x); h(x): x = h@0; }}"
    );
    let v = check_simple(&parse_spec(&text).unwrap()).unwrap_err();
    assert_eq!(v[0].kind, ViolationKind::NotSimple);
    assert_eq!(v[0].symbol, "h");
    let empty = format!("{HEAD}{SIG}tau {{ In(x): In@0(x); Out(x): Out@0(x); }}");
    assert!(check_simple(&parse_spec(&empty).unwrap()).is_ok());
}

#[test]
fn structural_rejections() {
    let opts = CheckOptions::default();
    let no_out = "kappa: w\nsignature { in: relation 2 membership; In: relation 1 in; }\ntau { In(x): In@0(x); }";
    assert_eq!(kinds(no_out, &opts), [ViolationKind::MissingDistinguished]);
    let finite = format!("kappa: finite:6\n{SIG}tau {{ In(x): In@0(x); Out(x): Out@0(x); }}");
    assert_eq!(kinds(&finite, &opts), [ViolationKind::NonLimitKappa]);
    let surrogate = CheckOptions {
        allow_finite_kappa: true,
        ..CheckOptions::default()
    };
    assert!(kinds(&finite, &surrogate).is_empty());
    let arity = format!("{HEAD}{SIG}tau {{ In(x, y): In@0(x); Out(x): Out@0(x); }}");
    assert_eq!(kinds(&arity, &opts), [ViolationKind::ArityMismatch]);
    let missing = format!("{HEAD}{SIG}tau {{ In(x): In@0(x); }}");
    assert_eq!(kinds(&missing, &opts), [ViolationKind::MissingWitness]);
}

#[test]
fn parameters_depend_on_flavor() {
    let body = "signature { in: relation 2 membership; In: relation 1 in; Out: relation 1 out; c: constant; }\n\
                params { c = 5; }\ntau { In(x): In@0(x); Out(x): In@0(x) & x < c@0; c(x): x = c@0; }";
    let opts = CheckOptions::default();
    assert_eq!(kinds(&format!("kappa: w\nflavor: gseqa\n{body}"), &opts), [ViolationKind::BadConstraint]);
    let m = check_machine(&parse_spec(&format!("kappa: w\nflavor: gseqap\n{body}")).unwrap(), &opts).unwrap();
    let s = load(&m, &OrdinalSet::empty()).unwrap();
    assert_eq!(s.nat_constant("c"), Some(5));
    let hidden = "kappa: w\nflavor: gseqap\nsignature { in: relation 2 membership; In: relation 1 in; Out: relation 1 out; R: relation 1; }\n\
                  params { R = {1,3}; }\ntau { In(x): In@0(x); Out(x): R@0(x); R(x): R@0(x); }";
    assert_eq!(kinds(hidden, &opts), [ViolationKind::BadConstraint]);
}

#[test]
fn partial_witness_is_caught_on_samples() {
    let text = format!(
        "{HEAD}signature {{ in: relation 2 membership; In: relation 1 in; Out: relation 1 out; h: constant; }}\n\
         default {{ h(x): x = 0; }}\ntau {{ In(x): In@0(x); Out(x): Out@0(x); h(x): x = h@0 & In@0(x); }}"
    );
    let v = check_machine(&parse_spec(&text).unwrap(), &CheckOptions::default()).unwrap_err();
    assert_eq!(v[0].kind, ViolationKind::NoUniqueSuccessor);
    assert!(v[0].counterexample.is_some());
    assert!(v[0].record().starts_with("no-unique-successor\th\t"));
}

#[test]
fn bounded_exploration_diagnostic() {
    let opts = CheckOptions::default();
    let flip = parse_spec(&format!("{HEAD}{SIG}tau {{ In(x): ~In@0(x); Out(x): ~Out@0(x); }}")).unwrap();
    let flip = check_machine(&flip, &opts).unwrap();
    let erase = parse_spec(&format!("{HEAD}{SIG}tau {{ In(x): x != x; Out(x): Out@0(x); }}")).unwrap();
    let erase = check_machine(&erase, &opts).unwrap();
    let states: Vec<_> = [vec![], vec![1], vec![2, 5]]
        .iter()
        .map(|a| load(&flip, &OrdinalSet::finite(a.iter().map(|&x| O::nat(x)))).unwrap())
        .collect();
    let r = diagnose_bep(&flip, &states, 3).unwrap();
    assert!(r.holds_on_sample());
    let r = diagnose_bep(&erase, &states, 3).unwrap();
    assert!(!r.holds_on_sample());
    assert!(r.terms.is_empty());
    assert!(diagnose_bep(&erase, &[], 3).unwrap().holds_on_sample());
}
