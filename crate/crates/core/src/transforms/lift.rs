use std::collections::BTreeMap;

use super::{cases, fresh_symbol, is, k0, keep, lit, symbol_names, var_terms, witness, witness_vars, zero, Names, TransformError};
use crate::logic::{Distinguished, Formula, Signature, Sym, SymbolDecl, SymbolKind, Term};
use crate::ordinal::OrdinalNotation;
use crate::state::{Flavor, ParamValue};
use crate::validator::{MachineSpec, Witness};

/// Re-hosts `m` on the larger base set `kappa`. A parameter constant pins
/// the old base set; a fresh flag spends the first step installing the
/// old defaults below it. After that every witness of `m` runs with its
/// quantifiers bounded by the old base set, and cells at or above it stay
/// empty or 0. States whose constants or function values escape the old
/// base set are frozen.
pub fn lift(m: &MachineSpec, kappa: &OrdinalNotation) -> Result<MachineSpec, TransformError> {
    if m.kappa >= *kappa {
        return Err(TransformError::BadLift {
            from: m.kappa.clone(),
            to: kappa.clone(),
        });
    }
    let used = symbol_names(m);
    let c = fresh_symbol("c", &used);
    let mut used2 = used.clone();
    used2.insert(c.clone());
    let flag = fresh_symbol("d", &used2);
    let c_decl = SymbolDecl::constant(&c);
    let d_decl = SymbolDecl::constant(&flag);
    let mut names = Names::new([m]);
    let bound = k0(&c);
    let below = |t: Term| Formula::lt(t, bound.clone());

    let mut guard = Vec::new();
    for d in m.sigma.iter() {
        match d.kind {
            SymbolKind::Constant => guard.push(below(k0(&d.name))),
            SymbolKind::Function => {
                let vs: Vec<String> = (0..d.arity).map(|_| names.fresh()).collect();
                let args = var_terms(&vs);
                let inside = Formula::and_all(args.iter().cloned().map(below));
                let value = below(Term::App(Sym::copy(&d.name, 0), args));
                guard.push(Formula::forall_many(&vs, Formula::implies(inside, value)));
            }
            SymbolKind::Relation => {}
        }
    }
    let installing = is(&flag, 0);
    let running = Formula::and(Formula::not(is(&flag, 0)), Formula::and_all(guard));

    let mut tau = BTreeMap::new();
    let mut defaults = BTreeMap::new();
    for d in m.sigma.iter().filter(|d| d.distinguished != Distinguished::Membership) {
        let vars = witness_vars(d);
        let frozen = keep(d, &d.name, &vars);
        if m.params.contains_key(&d.name) {
            tau.insert(d.name.clone(), witness(d, frozen));
            continue;
        }
        let mut pinned = |w: &Witness| -> Formula {
            let phi = names.instantiate(w, &var_terms(&vars), &|s| s.clone()).relativize(&bound);
            let args = var_terms(&vars);
            match d.kind {
                SymbolKind::Relation => Formula::and(Formula::and_all(args.into_iter().map(below)), phi),
                SymbolKind::Constant => Formula::and(below(args[0].clone()), phi),
                SymbolKind::Function => {
                    let (y, xs) = args.split_last().unwrap();
                    let inside = Formula::and_all(xs.iter().cloned().map(below));
                    Formula::or(
                        Formula::and_all([inside.clone(), below(y.clone()), phi]),
                        Formula::and(Formula::not(inside), Formula::eq(y.clone(), lit(0))),
                    )
                }
            }
        };
        let step = pinned(&m.tau[&d.name]);
        let install = match m.defaults.get(&d.name) {
            Some(w) => pinned(w),
            None => pinned(&Witness {
                vars: vars.clone(),
                body: frozen.clone(),
            }),
        };
        let body = cases(vec![(installing.clone(), install), (running.clone(), step)], frozen);
        tau.insert(d.name.clone(), witness(d, body));
        if m.defaults.contains_key(&d.name) {
            defaults.insert(d.name.clone(), witness(d, zero(d, &vars)));
        }
    }
    let x = || Term::var("x");
    tau.insert(c.clone(), witness(&c_decl, keep(&c_decl, &c, &["x".into()])));
    tau.insert(
        flag.clone(),
        witness(&d_decl, cases(vec![(installing, Formula::eq(x(), lit(1)))], keep(&d_decl, &flag, &["x".into()]))),
    );
    defaults.insert(flag, witness(&d_decl, Formula::eq(x(), lit(0))));
    let mut params = m.params.clone();
    params.insert(c, ParamValue::Ordinal(m.kappa.clone()));
    Ok(MachineSpec {
        kappa: kappa.clone(),
        sigma: Signature::new(m.sigma.iter().cloned().chain([c_decl, d_decl]).collect()).expect("fresh names"),
        flavor: Flavor::GSeqAP,
        params,
        tau,
        defaults,
    })
}
