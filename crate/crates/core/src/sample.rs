//! Seeded random formulas and states for differential testing.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::logic::{Formula, Signature, Sym, SymbolKind, Term, MEMBERSHIP};
use crate::ordinal::{OrdinalNotation, OrdinalSet};
use crate::state::{State, Tuple};

#[derive(Debug, Clone)]
pub struct FormulaShape {
    pub max_rank: usize,
    /// Connective depth budget outside quantifiers.
    pub max_depth: usize,
    /// Literals are drawn from `[0, max_literal]`.
    pub max_literal: u64,
    /// Tag non-membership symbols with copy 0 or 1.
    pub doubled: bool,
}

impl Default for FormulaShape {
    fn default() -> Self {
        Self {
            max_rank: 3,
            max_depth: 3,
            max_literal: 11,
            doubled: false,
        }
    }
}

struct Gen<'a, R> {
    rng: &'a mut R,
    sigma: &'a Signature,
    shape: &'a FormulaShape,
    fresh: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn sym(&mut self, name: &str) -> Sym {
        if self.shape.doubled {
            Sym::copy(name, self.rng.gen_range(0..2))
        } else {
            Sym::plain(name)
        }
    }

    fn term(&mut self, vars: &[String], allow_app: bool) -> Term {
        let consts: Vec<String> = self
            .sigma
            .iter()
            .filter(|d| d.kind == SymbolKind::Constant)
            .map(|d| d.name.clone())
            .collect();
        let funcs: Vec<(String, usize)> = self
            .sigma
            .iter()
            .filter(|d| d.kind == SymbolKind::Function)
            .map(|d| (d.name.clone(), d.arity))
            .collect();
        let roll = self.rng.gen_range(0..10);
        if roll < 6 && !vars.is_empty() {
            return Term::Var(vars.choose(self.rng).unwrap().clone());
        }
        if roll < 8 && !consts.is_empty() {
            let c = consts.choose(self.rng).unwrap().clone();
            return Term::Const(self.sym(&c));
        }
        if roll == 8 && allow_app && !funcs.is_empty() {
            let (f, k) = funcs.choose(self.rng).unwrap().clone();
            let args = (0..k).map(|_| self.term(vars, false)).collect();
            return Term::App(self.sym(&f), args);
        }
        Term::lit(self.rng.gen_range(0..=self.shape.max_literal))
    }

    fn atom(&mut self, vars: &[String]) -> Formula {
        let rels: Vec<(String, usize)> = self
            .sigma
            .iter()
            .filter(|d| d.kind == SymbolKind::Relation && d.name != MEMBERSHIP)
            .map(|d| (d.name.clone(), d.arity))
            .collect();
        match self.rng.gen_range(0..3) {
            0 => Formula::Eq(self.term(vars, true), self.term(vars, true)),
            1 => Formula::lt(self.term(vars, true), self.term(vars, true)),
            _ if !rels.is_empty() => {
                let (r, k) = rels.choose(self.rng).unwrap().clone();
                let args = (0..k).map(|_| self.term(vars, true)).collect();
                Formula::Rel(self.sym(&r), args)
            }
            _ => Formula::lt(self.term(vars, true), self.term(vars, true)),
        }
    }

    fn formula(&mut self, vars: &mut Vec<String>, rank: usize, depth: usize) -> Formula {
        if rank == 0 && (depth == 0 || self.rng.gen_bool(0.4)) {
            return self.atom(vars);
        }
        let pick = self.rng.gen_range(0..6);
        if rank > 0 && (pick < 2 || depth == 0) {
            let x = format!("v{}", self.fresh);
            self.fresh += 1;
            vars.push(x.clone());
            let body = self.formula(vars, rank - 1, depth.max(1));
            vars.pop();
            return if self.rng.gen_bool(0.5) {
                Formula::exists(&x, body)
            } else {
                Formula::forall(&x, body)
            };
        }
        match pick {
            2 => Formula::not(self.formula(vars, rank, depth - 1)),
            3 => {
                let a = self.formula(vars, rank, depth - 1);
                let r = self.rng.gen_range(0..=rank);
                let b = self.formula(vars, r, depth - 1);
                Formula::or(a, b)
            }
            _ => {
                let a = self.formula(vars, rank, depth - 1);
                let r = self.rng.gen_range(0..=rank);
                let b = self.formula(vars, r, depth - 1);
                Formula::and(a, b)
            }
        }
    }
}

/// A random formula over `sigma` with the given free variables and
/// quantifier rank at most `shape.max_rank`.
pub fn random_formula<R: Rng>(rng: &mut R, sigma: &Signature, free: &[String], shape: &FormulaShape) -> Formula {
    let rank = rng.gen_range(0..=shape.max_rank);
    let mut g = Gen {
        rng,
        sigma,
        shape,
        fresh: 0,
    };
    let mut vars = free.to_vec();
    g.formula(&mut vars, rank, shape.max_depth)
}

fn random_points<R: Rng>(rng: &mut R, bound: u64, max: usize) -> Vec<OrdinalNotation> {
    let k = rng.gen_range(0..=max);
    (0..k).map(|_| OrdinalNotation::nat(rng.gen_range(0..bound))).collect()
}

/// A random state over `sigma` at `kappa` whose supports and constants lie
/// in `[0, bound)`.
pub fn random_state<R: Rng>(rng: &mut R, sigma: &Signature, kappa: OrdinalNotation, bound: u64) -> State {
    let mut s = State::zero(kappa, sigma);
    for d in sigma.iter() {
        if d.name == MEMBERSHIP {
            continue;
        }
        match (d.kind, d.arity) {
            (SymbolKind::Constant, _) => {
                s.set_constant(&d.name, OrdinalNotation::nat(rng.gen_range(0..bound)))
                    .expect("constant below bound");
            }
            (SymbolKind::Relation, 1) => {
                let pts = random_points(rng, bound, 5);
                let set = if rng.gen_bool(0.3) {
                    OrdinalSet::cofinite(pts)
                } else {
                    OrdinalSet::finite(pts)
                };
                s.set_unary(&d.name, set).expect("unary set");
            }
            (SymbolKind::Function, k) => {
                let mut graph: BTreeSet<Tuple> = BTreeSet::new();
                let mut seen = BTreeSet::new();
                for _ in 0..rng.gen_range(0..4) {
                    let args: Vec<OrdinalNotation> =
                        (0..k).map(|_| OrdinalNotation::nat(rng.gen_range(0..bound))).collect();
                    let v = rng.gen_range(1..bound.max(2));
                    if seen.insert(args.clone()) {
                        let mut t = args;
                        t.push(OrdinalNotation::nat(v));
                        graph.insert(t);
                    }
                }
                s.set_nary(&d.name, graph).expect("function graph");
            }
            (_, k) => {
                let tuples: BTreeSet<Tuple> = (0..rng.gen_range(0..4))
                    .map(|_| (0..k).map(|_| OrdinalNotation::nat(rng.gen_range(0..bound))).collect())
                    .collect();
                s.set_nary(&d.name, tuples).expect("relation");
            }
        }
    }
    s
}
