use std::collections::BTreeMap;

use super::{cases, fresh_symbol, is, keep, lit, r0, stall_sentence, symbol_names, var_terms, witness, witness_vars, Names};
use crate::logic::{Distinguished, Formula, Signature, SymbolDecl, Term};
use crate::validator::MachineSpec;

/// Runs `m` unchanged until it stops changing, then complements the
/// output tape once and raises a fresh flag that freezes everything.
pub fn flip(m: &MachineSpec) -> MachineSpec {
    let flag = fresh_symbol("f", &symbol_names(m));
    let f_decl = SymbolDecl::constant(&flag);
    let mut names = Names::new([m]);
    let stall = stall_sentence(m, &BTreeMap::new(), &mut names);
    let running = Formula::and(is(&flag, 0), Formula::not(stall.clone()));
    let flipping = Formula::and(is(&flag, 0), stall);

    let mut tau = BTreeMap::new();
    for d in m.sigma.iter().filter(|d| d.distinguished != Distinguished::Membership) {
        let vars = witness_vars(d);
        let step = names.instantiate(&m.tau[&d.name], &var_terms(&vars), &|s| s.clone());
        let mut list = vec![(running.clone(), step)];
        if d.distinguished == Distinguished::Out {
            list.push((flipping.clone(), Formula::not(r0(&d.name, var_terms(&vars)))));
        }
        tau.insert(d.name.clone(), witness(d, cases(list, keep(d, &d.name, &vars))));
    }
    let x = || Term::var("x");
    tau.insert(
        flag.clone(),
        witness(&f_decl, cases(vec![(flipping, Formula::eq(x(), lit(1)))], keep(&f_decl, &flag, &["x".into()]))),
    );
    let mut defaults = m.defaults.clone();
    defaults.insert(flag, witness(&f_decl, Formula::eq(x(), lit(0))));
    MachineSpec {
        sigma: Signature::new(m.sigma.iter().cloned().chain([f_decl]).collect()).expect("fresh flag"),
        tau,
        defaults,
        ..m.clone()
    }
}
