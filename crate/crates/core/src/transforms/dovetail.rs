//! Runs a machine on every input `⟨{β}, I⟩` for ever longer stretches and
//! collects the βs on which it stops.
//!
//! Control constants:
//! - `c0` is the round; round K gives every β ≤ K not yet recorded about
//!   K·(K+1) simulated steps, counted by `c1` (inner) and `c2` (outer).
//! - `d` is 0 before the first step, 1 while the prelude builds the coded
//!   input, 2 while dovetailing.
//! - `b` is the current β and `q` holds `b²`, which is where `{b}` lands in
//!   the coding. `s` and `g` drive the multi-step update of `q` when `b`
//!   moves on.
//! - `j` selects the sub-step: 0 choose or prelude, 1 advance `b`,
//!   2 simulate.
//!
//! `P` holds the coded `⟨∅, I⟩` and `R` the βs found to stop. At the limit
//! `c0` falls back to 0, which copies `R` to the output and stops.

use std::collections::{BTreeMap, BTreeSet};

use super::{cases, pair_one, fresh_symbol, is, k0, keep, lit, r0, renamer, stall_sentence, succ_of, var_terms, witness, witness_vars, zero, Names};
use crate::logic::{Distinguished, Formula, Signature, SymbolDecl, Term};
use crate::ordinal::pair_nat;
use crate::state::Flavor;
use crate::validator::MachineSpec;

/// `⟨X, O⟩ = {pair(0, x) : x ∈ X} ∪ {pair(1, o) : o ∈ O}`.
pub fn code_pair(x: &BTreeSet<u64>, o: &BTreeSet<u64>) -> BTreeSet<u64> {
    x.iter().map(|&a| pair_nat(0, a)).chain(o.iter().map(|&a| pair_nat(1, a))).collect()
}

/// Names of the symbols `dovetail` adds, after clash avoidance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DovetailSymbols {
    pub c0: String,
    pub c1: String,
    pub c2: String,
    pub d: String,
    pub b: String,
    pub q: String,
    pub s: String,
    pub g: String,
    pub j: String,
    pub r: String,
    pub p: String,
    /// Source symbol name to its copy inside the dovetailer.
    pub inner: BTreeMap<String, String>,
}

impl DovetailSymbols {
    pub fn for_machine(m: &MachineSpec) -> Self {
        let inner: BTreeMap<String, String> = m
            .sigma
            .iter()
            .filter(|d| d.distinguished != Distinguished::Membership)
            .map(|d| (d.name.clone(), format!("{}_m", d.name)))
            .collect();
        let mut used: BTreeSet<String> = inner.values().cloned().collect();
        used.extend(["in", "In", "Out"].map(String::from));
        let mut take = |base: &str| {
            let n = fresh_symbol(base, &used);
            used.insert(n.clone());
            n
        };
        Self {
            c0: take("c0"),
            c1: take("c1"),
            c2: take("c2"),
            d: take("d"),
            b: take("b"),
            q: take("q"),
            s: take("s"),
            g: take("g"),
            j: take("j"),
            r: take("R"),
            p: take("P"),
            inner,
        }
    }
}

/// The dovetailer for `m`, which must read its input coded by
/// [`code_pair`]. It halts only when `I` is finite; the prelude walks past
/// the last element of `I`.
pub fn dovetail(m: &MachineSpec) -> MachineSpec {
    let n = DovetailSymbols::for_machine(m);
    let mut names = Names::new([m]);
    let stall = stall_sentence(m, &n.inner, &mut names);
    let x = || Term::var("x");
    let set = |v: u64| Formula::eq(x(), lit(v));
    let next = |c: &str| succ_of(x(), k0(c));
    let not = Formula::not;
    let and = Formula::and;

    // Situations in priority order; each symbol lists what it does in
    // some of them and keeps its value in the rest.
    let start = and(is(&n.c0, 0), is(&n.d, 0));
    let stuck = is(&n.d, 0);
    let report = is(&n.c0, 0);
    let prelude = and(is(&n.d, 1), is(&n.j, 0));
    let last = not(Formula::exists(
        "y",
        and(Formula::lt(k0(&n.b), Term::var("y")), r0("In", vec![Term::var("y")])),
    ));
    let advancing = Formula::or(
        and(is(&n.d, 1), not(is(&n.j, 0))),
        and(not(is(&n.d, 1)), is(&n.j, 1)),
    );
    let half_done = Formula::eq(k0(&n.s), k0(&n.b));
    let choosing = is(&n.j, 0);
    let simulating = not(Formula::or(is(&n.j, 0), is(&n.j, 1)));
    let wrap = Formula::eq(k0(&n.c1), k0(&n.c0));
    let sit = [
        /* 0 */ start,
        /* 1 */ stuck,
        /* 2 */ report,
        /* 3 */ and(prelude.clone(), last),
        /* 4 */ prelude,
        /* 5 */ and_all3(advancing.clone(), is(&n.g, 0), half_done.clone()),
        /* 6 */ and(advancing.clone(), is(&n.g, 0)),
        /* 7 */ and(advancing.clone(), half_done),
        /* 8 */ advancing,
        /* 9 */ and(choosing.clone(), Formula::lt(k0(&n.c0), k0(&n.b))),
        /* 10 */ and(choosing.clone(), r0(&n.r, vec![k0(&n.b)])),
        /* 11 */ choosing,
        /* 12 */ and(simulating.clone(), stall),
        /* 13 */ and(simulating.clone(), Formula::eq(k0(&n.c2), k0(&n.c0))),
        /* 14 */ and(simulating, wrap),
    ];
    // Anything else is an ordinary simulated step.
    const START: usize = 0;
    const REPORT: usize = 2;
    const PRE_LAST: usize = 3;
    const PRE_MORE: usize = 4;
    const HALF: usize = 5;
    const CLIMB1: usize = 6;
    const DONE: usize = 7;
    const CLIMB2: usize = 8;
    const ROUND: usize = 9;
    const SKIP: usize = 10;
    const LOAD: usize = 11;
    const HALT: usize = 12;
    const GIVE_UP: usize = 13;
    const WRAP: usize = 14;

    let mut specs: Vec<SymbolPlan> = Vec::new();
    let constant = |name: &str| SymbolDecl::constant(name);
    let b = k0(&n.b);
    let pair_one = pair_one(x(), &n.b, &n.q);
    specs.push((constant(&n.c0), vec![(START, set(1)), (ROUND, next(&n.c0))], None));
    specs.push((constant(&n.d), vec![(START, set(1)), (PRE_LAST, set(2))], None));
    specs.push((constant(&n.b), vec![(PRE_LAST, set(0)), (DONE, next(&n.b)), (ROUND, set(0))], None));
    specs.push((
        constant(&n.q),
        vec![(PRE_LAST, set(0)), (CLIMB1, next(&n.q)), (DONE, next(&n.q)), (CLIMB2, next(&n.q)), (ROUND, set(0))],
        None,
    ));
    let reset = [PRE_MORE, SKIP, HALT, GIVE_UP];
    let mut s_rows: Vec<_> = reset.iter().map(|&i| (i, set(0))).collect();
    s_rows.extend([(HALF, set(0)), (CLIMB1, next(&n.s)), (DONE, set(0)), (CLIMB2, next(&n.s))]);
    specs.push((constant(&n.s), s_rows, None));
    let mut g_rows: Vec<_> = reset.iter().map(|&i| (i, set(0))).collect();
    g_rows.extend([(HALF, set(1)), (DONE, set(0))]);
    specs.push((constant(&n.g), g_rows, None));
    specs.push((
        constant(&n.j),
        vec![(PRE_MORE, set(1)), (DONE, set(0)), (SKIP, set(1)), (LOAD, set(2)), (HALT, set(1)), (GIVE_UP, set(1))],
        None,
    ));
    specs.push((constant(&n.c1), vec![(LOAD, set(0)), (WRAP, set(0))], Some(next(&n.c1))));
    specs.push((constant(&n.c2), vec![(LOAD, set(0)), (WRAP, next(&n.c2))], None));
    let rel = |name: &str| SymbolDecl::relation(name, 1);
    specs.push((
        rel(&n.r),
        vec![(HALT, Formula::or(r0(&n.r, vec![x()]), Formula::eq(x(), b.clone())))],
        None,
    ));
    let grow = Formula::or(r0(&n.p, vec![x()]), and(r0("In", vec![b.clone()]), pair_one));
    specs.push((rel(&n.p), vec![(PRE_LAST, grow.clone()), (PRE_MORE, grow)], None));
    specs.push((SymbolDecl::output("Out"), vec![(REPORT, r0(&n.r, vec![x()]))], None));

    let rename = renamer(&n.inner);
    for d in m.sigma.iter().filter(|d| d.distinguished != Distinguished::Membership) {
        let target = n.inner[&d.name].clone();
        let decl = SymbolDecl {
            name: target,
            distinguished: Distinguished::None,
            ..d.clone()
        };
        let vars = witness_vars(d);
        let step = names.instantiate(&m.tau[&d.name], &var_terms(&vars), &rename);
        let load = match d.distinguished {
            Distinguished::In => Some(Formula::or(r0(&n.p, vec![x()]), Formula::eq(x(), k0(&n.q)))),
            Distinguished::Out => Some(Formula::falsity()),
            _ => m
                .defaults
                .get(&d.name)
                .map(|w| names.instantiate(w, &var_terms(&vars), &|s| s.clone())),
        };
        let mut rows = vec![(WRAP, step.clone())];
        rows.extend(load.map(|f| (LOAD, f)));
        specs.push((decl, rows, Some(step)));
    }

    let params: BTreeMap<_, _> = m.params.iter().map(|(k, v)| (n.inner[k].clone(), v.clone())).collect();
    let mut decls: Vec<SymbolDecl> = Signature::standard().iter().cloned().collect();
    let mut tau = BTreeMap::new();
    let mut defaults = BTreeMap::new();
    for (decl, rows, otherwise) in specs {
        let vars = witness_vars(&decl);
        let stay = keep(&decl, &decl.name, &vars);
        let mut list: Vec<(Formula, Formula)> = Vec::new();
        for (i, guard) in sit.iter().enumerate() {
            let body = rows
                .iter()
                .find(|(k, _)| *k == i)
                .map(|(_, f)| f.clone())
                .unwrap_or_else(|| stay.clone());
            list.push((guard.clone(), body));
        }
        let body = cases(list, otherwise.unwrap_or_else(|| stay.clone()));
        if decl.distinguished == Distinguished::None {
            if !params.contains_key(&decl.name) {
                defaults.insert(decl.name.clone(), witness(&decl, zero(&decl, &vars)));
            }
            decls.push(decl.clone());
        }
        tau.insert(decl.name.clone(), witness(&decl, body));
    }
    tau.insert("In".into(), witness(&SymbolDecl::input("In"), r0("In", vec![x()])));
    MachineSpec {
        kappa: m.kappa.clone(),
        sigma: Signature::new(decls).expect("fresh names"),
        flavor: if params.is_empty() { Flavor::GSeqA } else { Flavor::GSeqAP },
        params,
        tau,
        defaults,
    }
}

/// A symbol, its body in some situations, and its body when no situation
/// applies (kept unchanged when `None`).
type SymbolPlan = (SymbolDecl, Vec<(usize, Formula)>, Option<Formula>);

fn and_all3(a: Formula, b: Formula, c: Formula) -> Formula {
    Formula::and_all([a, b, c])
}
