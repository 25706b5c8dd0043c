use std::collections::BTreeMap;

use super::{
    cases, fresh_symbol, is, keep, lit, r0, renamer, stall_sentence, var_terms, witness, witness_vars, Names,
    TransformError,
};
use crate::logic::{Distinguished, Formula, Signature, SymbolDecl, Term};
use crate::state::Flavor;
use crate::validator::MachineSpec;

fn rename_apart(m: &MachineSpec, suffix: &str) -> BTreeMap<String, String> {
    m.sigma
        .iter()
        .filter(|d| d.distinguished == Distinguished::None)
        .map(|d| (d.name.clone(), format!("{}{suffix}", d.name)))
        .collect()
}

/// Runs `m1`, and once it stops changing moves its output onto the input
/// tape, clears the output and runs `m2`. Private symbols are renamed
/// apart with `_1` and `_2`; a fresh phase constant is 0 while `m1` runs.
pub fn compose(m1: &MachineSpec, m2: &MachineSpec) -> Result<MachineSpec, TransformError> {
    if m1.kappa != m2.kappa {
        return Err(TransformError::KappaMismatch {
            left: m1.kappa.clone(),
            right: m2.kappa.clone(),
        });
    }
    for m in [m1, m2] {
        let s = &m.sigma;
        if s.input_name() != Some("In") || s.output_name() != Some("Out") {
            return Err(TransformError::MissingSymbol("In/Out"));
        }
    }
    let map1 = rename_apart(m1, "_1");
    let map2 = rename_apart(m2, "_2");
    let used = map1.values().chain(map2.values()).cloned().collect();
    let phase = fresh_symbol("p", &used);
    let mut names = Names::new([m1, m2]);
    let stall1 = stall_sentence(m1, &map1, &mut names);

    let mut decls = Signature::standard().iter().cloned().collect::<Vec<_>>();
    let private = |m: &MachineSpec, map: &BTreeMap<String, String>| {
        m.sigma
            .iter()
            .filter(|d| d.distinguished == Distinguished::None)
            .map(|d| SymbolDecl {
                name: map[&d.name].clone(),
                ..d.clone()
            })
            .collect::<Vec<_>>()
    };
    decls.extend(private(m1, &map1));
    decls.extend(private(m2, &map2));
    let p_decl = SymbolDecl::constant(&phase);
    decls.push(p_decl.clone());
    let sigma = Signature::new(decls).expect("names are renamed apart");

    let first = Formula::and(is(&phase, 0), Formula::not(stall1.clone()));
    let handoff = Formula::and(is(&phase, 0), stall1);
    let second = Formula::not(is(&phase, 0));
    let mut tau = BTreeMap::new();
    let mut defaults = BTreeMap::new();
    for (m, map, active) in [(m1, &map1, &first), (m2, &map2, &second)] {
        let rename = renamer(map);
        for d in m.sigma.iter().filter(|d| d.distinguished == Distinguished::None) {
            let target = &map[&d.name];
            let vars = witness_vars(d);
            let step = names.instantiate(&m.tau[&d.name], &var_terms(&vars), &rename);
            let body = cases(vec![(active.clone(), step)], keep(d, target, &vars));
            tau.insert(target.clone(), witness(d, body));
            if let Some(w) = m.defaults.get(&d.name) {
                let dflt = names.instantiate(w, &var_terms(&vars), &|s| s.clone());
                defaults.insert(target.clone(), witness(d, dflt));
            }
        }
    }
    let x = || Term::var("x");
    for (io, at_handoff) in [("In", r0("Out", vec![x()])), ("Out", Formula::falsity())] {
        let d = m1.sigma.get(io).unwrap();
        let vars = witness_vars(d);
        let s1 = names.instantiate(&m1.tau[io], &var_terms(&vars), &renamer(&map1));
        let s2 = names.instantiate(&m2.tau[io], &var_terms(&vars), &renamer(&map2));
        let body = cases(vec![(first.clone(), s1), (handoff.clone(), at_handoff)], s2);
        tau.insert(io.to_string(), witness(d, body));
    }
    tau.insert(
        phase.clone(),
        witness(&p_decl, cases(vec![(handoff, Formula::eq(x(), lit(1)))], keep(&p_decl, &phase, &["x".into()]))),
    );
    defaults.insert(phase.clone(), witness(&p_decl, Formula::eq(x(), lit(0))));

    let mut params = BTreeMap::new();
    for (m, map) in [(m1, &map1), (m2, &map2)] {
        for (k, v) in &m.params {
            params.insert(map[k].clone(), v.clone());
        }
    }
    let flavor = if m1.flavor == Flavor::GSeqAP || m2.flavor == Flavor::GSeqAP {
        Flavor::GSeqAP
    } else {
        Flavor::GSeqA
    };
    Ok(MachineSpec {
        kappa: m1.kappa.clone(),
        sigma,
        flavor,
        params,
        tau,
        defaults,
    })
}
