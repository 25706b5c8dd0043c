//! Machine-to-machine constructions: Turing-machine compilation, sequential
//! composition, lifting to a larger base set, output flip and dovetailing.
//!
//! Every construction assembles per-symbol witnesses as guarded case lists
//! over copy-0 sentences, so the result is bounded by construction.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::logic::{Distinguished, Formula, Sym, SymbolDecl, SymbolKind, Term, MEMBERSHIP};
use crate::ordinal::OrdinalNotation;
use crate::validator::{MachineSpec, Witness};

mod compose;
mod dovetail;
mod flip;
mod lift;
pub mod tm;

pub use compose::compose;
pub use dovetail::{code_pair, dovetail, DovetailSymbols};
pub use flip::flip;
pub use lift::lift;
pub use tm::{compile_tm, Move, TmOutcome, TmSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("base sets differ: {left} vs {right}")]
    KappaMismatch { left: OrdinalNotation, right: OrdinalNotation },
    #[error("cannot lift from {from} to {to}: the target must be strictly larger")]
    BadLift { from: OrdinalNotation, to: OrdinalNotation },
    #[error("line {line}: {msg}")]
    TmSyntax { line: usize, msg: String },
    #[error("bad Turing machine: {0}")]
    BadTm(String),
    #[error("machine has no {0} symbol")]
    MissingSymbol(&'static str),
}

/// Hands out variable names that clash with nothing already in use.
pub(crate) struct Names {
    taken: BTreeSet<String>,
    next: usize,
}

impl Names {
    pub(crate) fn new<'a>(specs: impl IntoIterator<Item = &'a MachineSpec>) -> Self {
        let mut taken = BTreeSet::new();
        for spec in specs {
            for w in spec.tau.values().chain(spec.defaults.values()) {
                taken.extend(w.vars.iter().cloned());
                collect_vars(&w.body, &mut taken);
            }
        }
        Self { taken, next: 0 }
    }

    pub(crate) fn fresh(&mut self) -> String {
        loop {
            let v = format!("v{}_", self.next);
            self.next += 1;
            if self.taken.insert(v.clone()) {
                return v;
            }
        }
    }

    fn freshen(&mut self, f: &Formula) -> Formula {
        match f {
            Formula::Eq(..) | Formula::Rel(..) => f.clone(),
            Formula::Not(g) => Formula::not(self.freshen(g)),
            Formula::And(a, b) => Formula::and(self.freshen(a), self.freshen(b)),
            Formula::Exists(y, g) => {
                let z = self.fresh();
                let g = g.substitute_term(y, &Term::Var(z.clone()));
                Formula::exists(&z, self.freshen(&g))
            }
        }
    }

    /// The body of `w` with symbols mapped through `rename` and its
    /// variables replaced by `args`. Bound variables are renamed apart
    /// first, so `args` may mention any variable.
    pub(crate) fn instantiate(&mut self, w: &Witness, args: &[Term], rename: &impl Fn(&Sym) -> Sym) -> Formula {
        debug_assert_eq!(w.vars.len(), args.len());
        let mut body = self.freshen(&w.body).map_symbols(rename);
        let temps: Vec<String> = w.vars.iter().map(|_| self.fresh()).collect();
        let map: BTreeMap<String, String> = w.vars.iter().cloned().zip(temps.iter().cloned()).collect();
        body = body.rename_vars(&map);
        for (t, a) in temps.iter().zip(args) {
            body = body.substitute_term(t, a);
        }
        body
    }
}

fn collect_vars(f: &Formula, out: &mut BTreeSet<String>) {
    f.visit(&mut |g| {
        if let Formula::Exists(y, _) = g {
            out.insert(y.clone());
        }
    });
    f.visit_terms(&mut |t| {
        if let Term::Var(v) = t {
            out.insert(v.clone());
        }
    });
}

/// Canonical witness variables: `x` for a single one, `x1 .. xn` otherwise.
pub(crate) fn witness_vars(decl: &SymbolDecl) -> Vec<String> {
    match decl.witness_arity() {
        1 => vec!["x".into()],
        n => (1..=n).map(|i| format!("x{i}")).collect(),
    }
}

pub(crate) fn var_terms(vars: &[String]) -> Vec<Term> {
    vars.iter().map(|v| Term::Var(v.clone())).collect()
}

pub(crate) fn k0(name: &str) -> Term {
    Term::konst(name, Some(0))
}

pub(crate) fn lit(n: u64) -> Term {
    Term::lit(n)
}

pub(crate) fn is(name: &str, n: u64) -> Formula {
    Formula::eq(k0(name), lit(n))
}

pub(crate) fn r0(name: &str, args: Vec<Term>) -> Formula {
    Formula::rel(name, Some(0), args)
}

/// Copy-0 tagging for a symbol of a source machine renamed by `map`.
pub(crate) fn renamer(map: &BTreeMap<String, String>) -> impl Fn(&Sym) -> Sym + '_ {
    move |s: &Sym| {
        if s.name == MEMBERSHIP {
            return s.clone();
        }
        Sym {
            name: map.get(&s.name).cloned().unwrap_or_else(|| s.name.clone()),
            copy: s.copy,
        }
    }
}

/// `x` is the successor of `a`.
pub(crate) fn succ_of(x: Term, a: Term) -> Formula {
    let z = Term::var("zz");
    Formula::and(
        Formula::lt(a.clone(), x.clone()),
        Formula::not(Formula::exists(
            "zz",
            Formula::and(Formula::lt(a, z.clone()), Formula::lt(z, x)),
        )),
    )
}

/// `x` is the predecessor of `a`, with the predecessor of 0 taken to be 0.
pub(crate) fn pred_of(x: Term, a: Term) -> Formula {
    let z = Term::var("zz");
    Formula::or(
        Formula::and(Formula::eq(a.clone(), lit(0)), Formula::eq(x.clone(), lit(0))),
        Formula::and(
            Formula::lt(x.clone(), a.clone()),
            Formula::not(Formula::exists(
                "zz",
                Formula::and(Formula::lt(x, z.clone()), Formula::lt(z, a)),
            )),
        ),
    )
}

/// The successor of `a`, or `a` itself when `a` is the last element.
pub(crate) fn succ_or_stay(x: Term, a: Term) -> Formula {
    let z = Term::var("zz");
    Formula::or(
        succ_of(x.clone(), a.clone()),
        Formula::and(
            Formula::eq(x, a.clone()),
            Formula::not(Formula::exists("zz", Formula::lt(a, z))),
        ),
    )
}

/// `x = pair(1, b)` given `q = b²`: 2 for b = 0, 3 for b = 1, else `q + 1`.
pub(crate) fn pair_one(x: Term, b: &str, q: &str) -> Formula {
    Formula::or_all([
        Formula::and(is(b, 0), Formula::eq(x.clone(), lit(2))),
        Formula::and(is(b, 1), Formula::eq(x.clone(), lit(3))),
        Formula::and(Formula::lt(lit(1), k0(b)), succ_of(x, k0(q))),
    ])
}

/// A decision list: the first guard that holds selects its body.
pub(crate) fn cases(list: Vec<(Formula, Formula)>, otherwise: Formula) -> Formula {
    let mut missed: Vec<Formula> = Vec::new();
    let mut arms = Vec::new();
    for (g, body) in list {
        let mut parts = missed.clone();
        parts.push(g.clone());
        parts.push(body);
        arms.push(Formula::and_all(parts));
        missed.push(Formula::not(g));
    }
    missed.push(otherwise);
    arms.push(Formula::and_all(missed));
    Formula::or_all(arms)
}

/// The witness that leaves `decl` (named `name` in the target) unchanged.
pub(crate) fn keep(decl: &SymbolDecl, name: &str, vars: &[String]) -> Formula {
    let args = var_terms(vars);
    match decl.kind {
        SymbolKind::Relation => r0(name, args),
        SymbolKind::Constant => Formula::eq(args[0].clone(), k0(name)),
        SymbolKind::Function => {
            let (last, init) = args.split_last().unwrap();
            Formula::eq(last.clone(), Term::App(Sym::copy(name, 0), init.to_vec()))
        }
    }
}

/// The witness that sets `decl` to empty or 0.
pub(crate) fn zero(decl: &SymbolDecl, vars: &[String]) -> Formula {
    let args = var_terms(vars);
    match decl.kind {
        SymbolKind::Relation => Formula::falsity(),
        SymbolKind::Constant => Formula::eq(args[0].clone(), lit(0)),
        SymbolKind::Function => Formula::eq(args.last().unwrap().clone(), lit(0)),
    }
}

/// Copy-0 sentence saying the machine `m`, with symbols renamed by `map`,
/// would not change under its own transition.
pub(crate) fn stall_sentence(m: &MachineSpec, map: &BTreeMap<String, String>, names: &mut Names) -> Formula {
    let rename = renamer(map);
    let mut parts = Vec::new();
    for decl in m.sigma.iter().filter(|d| d.distinguished != Distinguished::Membership) {
        let w = &m.tau[&decl.name];
        let target = map.get(&decl.name).cloned().unwrap_or_else(|| decl.name.clone());
        let part = match decl.kind {
            SymbolKind::Constant => names.instantiate(w, &[k0(&target)], &rename),
            SymbolKind::Relation => {
                let vs: Vec<String> = (0..decl.arity).map(|_| names.fresh()).collect();
                let args = var_terms(&vs);
                let body = Formula::iff(r0(&target, args.clone()), names.instantiate(w, &args, &rename));
                Formula::forall_many(&vs, body)
            }
            SymbolKind::Function => {
                let vs: Vec<String> = (0..decl.arity).map(|_| names.fresh()).collect();
                let mut args = var_terms(&vs);
                args.push(Term::App(Sym::copy(&target, 0), var_terms(&vs)));
                Formula::forall_many(&vs, names.instantiate(w, &args, &rename))
            }
        };
        parts.push(part);
    }
    Formula::and_all(parts)
}

/// `base`, or `base` with the smallest numeric suffix not in `used`.
pub(crate) fn fresh_symbol(base: &str, used: &BTreeSet<String>) -> String {
    if !used.contains(base) {
        return base.to_string();
    }
    (1..).map(|i| format!("{base}{i}")).find(|n| !used.contains(n)).unwrap()
}

pub(crate) fn symbol_names(m: &MachineSpec) -> BTreeSet<String> {
    m.sigma.iter().map(|d| d.name.clone()).collect()
}

pub(crate) fn witness(decl: &SymbolDecl, body: Formula) -> Witness {
    Witness {
        vars: witness_vars(decl),
        body,
    }
}
