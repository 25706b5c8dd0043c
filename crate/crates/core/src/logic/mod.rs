//! Signatures and first-order formulas over them.
//!
//! The core connectives are `¬`, `∧` and `∃`; `∨`, `→`, `↔` and `∀` only
//! exist as parser sugar and as constructor helpers.

mod parse;
mod print;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ordinal::OrdinalNotation;

pub use parse::{parse_formula, parse_term};

/// Name of the membership relation. Its interpretation is always the
/// ordinal order, so formulas never attach a copy index to it.
pub const MEMBERSHIP: &str = "in";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{name}` at {pos}")]
    UnknownSymbol { name: String, pos: usize },
    #[error("`{symbol}` expects {expected} argument(s), found {found}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid signature: {0}")]
    BadSignature(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymbolKind {
    Relation,
    Function,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Distinguished {
    Membership,
    In,
    Out,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolDecl {
    pub name: String,
    pub kind: SymbolKind,
    pub arity: usize,
    pub distinguished: Distinguished,
}

impl SymbolDecl {
    pub fn relation(name: &str, arity: usize) -> Self {
        Self {
            name: name.into(),
            kind: SymbolKind::Relation,
            arity,
            distinguished: Distinguished::None,
        }
    }

    pub fn function(name: &str, arity: usize) -> Self {
        Self {
            name: name.into(),
            kind: SymbolKind::Function,
            arity,
            distinguished: Distinguished::None,
        }
    }

    pub fn constant(name: &str) -> Self {
        Self {
            name: name.into(),
            kind: SymbolKind::Constant,
            arity: 0,
            distinguished: Distinguished::None,
        }
    }

    pub fn membership() -> Self {
        Self {
            distinguished: Distinguished::Membership,
            ..Self::relation(MEMBERSHIP, 2)
        }
    }

    pub fn input(name: &str) -> Self {
        Self {
            distinguished: Distinguished::In,
            ..Self::relation(name, 1)
        }
    }

    pub fn output(name: &str) -> Self {
        Self {
            distinguished: Distinguished::Out,
            ..Self::relation(name, 1)
        }
    }

    /// Number of free variables a witness defining this symbol carries:
    /// `n` for an n-ary relation, `n + 1` for an n-ary function, 1 for a
    /// constant.
    pub fn witness_arity(&self) -> usize {
        match self.kind {
            SymbolKind::Relation => self.arity,
            SymbolKind::Function => self.arity + 1,
            SymbolKind::Constant => 1,
        }
    }
}

/// An ordered list of symbol declarations with unique names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Signature {
    symbols: Vec<SymbolDecl>,
}

impl Signature {
    pub fn new(symbols: Vec<SymbolDecl>) -> Result<Self, LogicError> {
        let mut seen = BTreeSet::new();
        for s in &symbols {
            if !seen.insert(s.name.as_str()) {
                return Err(LogicError::BadSignature(format!("duplicate symbol `{}`", s.name)));
            }
            if s.kind == SymbolKind::Constant && s.arity != 0 {
                return Err(LogicError::BadSignature(format!("constant `{}` with arity", s.name)));
            }
            match s.distinguished {
                Distinguished::Membership
                    if s.name != MEMBERSHIP || s.kind != SymbolKind::Relation || s.arity != 2 =>
                {
                    return Err(LogicError::BadSignature(format!(
                        "membership must be the binary relation `{MEMBERSHIP}`"
                    )))
                }
                Distinguished::In | Distinguished::Out
                    if s.kind != SymbolKind::Relation || s.arity != 1 =>
                {
                    return Err(LogicError::BadSignature(format!(
                        "`{}` must be a unary relation",
                        s.name
                    )))
                }
                Distinguished::None if s.name == MEMBERSHIP => {
                    return Err(LogicError::BadSignature(format!(
                        "`{MEMBERSHIP}` is reserved for membership"
                    )))
                }
                _ => {}
            }
            if s.name == "w" || s.name.contains('@') {
                return Err(LogicError::BadSignature(format!("reserved name `{}`", s.name)));
            }
        }
        for d in [Distinguished::Membership, Distinguished::In, Distinguished::Out] {
            if symbols.iter().filter(|s| s.distinguished == d).count() > 1 {
                return Err(LogicError::BadSignature(format!("{d:?} declared twice")));
            }
        }
        Ok(Self { symbols })
    }

    /// `{∈, In, Out}` with the conventional names.
    pub fn standard() -> Self {
        Self::new(vec![
            SymbolDecl::membership(),
            SymbolDecl::input("In"),
            SymbolDecl::output("Out"),
        ])
        .expect("standard signature is valid")
    }

    pub fn with(mut self, decl: SymbolDecl) -> Result<Self, LogicError> {
        self.symbols.push(decl);
        Self::new(self.symbols)
    }

    pub fn get(&self, name: &str) -> Option<&SymbolDecl> {
        self.symbols.iter().find(|s| s.name == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &SymbolDecl> {
        self.symbols.iter()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn distinguished(&self, d: Distinguished) -> Option<&SymbolDecl> {
        self.symbols.iter().find(|s| s.distinguished == d)
    }

    pub fn input_name(&self) -> Option<&str> {
        self.distinguished(Distinguished::In).map(|s| s.name.as_str())
    }

    pub fn output_name(&self) -> Option<&str> {
        self.distinguished(Distinguished::Out).map(|s| s.name.as_str())
    }
}

/// The doubled signature: every `X` becomes `X@0` and `X@1` with the same
/// kind, arity and role.
pub fn double_signature(sigma: &Signature) -> Vec<SymbolDecl> {
    sigma
        .iter()
        .flat_map(|s| {
            (0..2).map(move |i| SymbolDecl {
                name: format!("{}@{i}", s.name),
                ..s.clone()
            })
        })
        .collect()
}

/// A reference to a non-logical symbol, optionally tagged with a copy
/// index in doubled contexts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym {
    pub name: String,
    pub copy: Option<u8>,
}

impl Sym {
    pub fn plain(name: &str) -> Self {
        Self {
            name: name.into(),
            copy: None,
        }
    }

    pub fn copy(name: &str, copy: u8) -> Self {
        Self {
            name: name.into(),
            copy: Some(copy),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(Sym),
    App(Sym, Vec<Term>),
    Lit(OrdinalNotation),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.into())
    }

    pub fn lit(n: u64) -> Self {
        Term::Lit(OrdinalNotation::nat(n))
    }

    pub fn konst(name: &str, copy: Option<u8>) -> Self {
        Term::Const(Sym {
            name: name.into(),
            copy,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Eq(Term, Term),
    Rel(Sym, Vec<Term>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
}

/// Constructors, including the derived connectives.
impl Formula {
    pub fn eq(a: Term, b: Term) -> Self {
        Formula::Eq(a, b)
    }

    pub fn neq(a: Term, b: Term) -> Self {
        Formula::not(Formula::Eq(a, b))
    }

    pub fn lt(a: Term, b: Term) -> Self {
        Formula::Rel(Sym::plain(MEMBERSHIP), vec![a, b])
    }

    pub fn rel(name: &str, copy: Option<u8>, args: Vec<Term>) -> Self {
        Formula::Rel(
            Sym {
                name: name.into(),
                copy,
            },
            args,
        )
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::not(Formula::and(a, Formula::not(b)))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::and(
            Formula::implies(a.clone(), b.clone()),
            Formula::implies(b, a),
        )
    }

    pub fn exists(x: &str, f: Formula) -> Self {
        Formula::Exists(x.into(), Box::new(f))
    }

    pub fn forall(x: &str, f: Formula) -> Self {
        Formula::not(Formula::exists(x, Formula::not(f)))
    }

    pub fn truth() -> Self {
        Formula::Eq(Term::lit(0), Term::lit(0))
    }

    pub fn falsity() -> Self {
        Formula::not(Formula::truth())
    }

    /// Left-nested conjunction in the given order; empty gives `0 = 0`.
    pub fn and_all(items: impl IntoIterator<Item = Formula>) -> Self {
        items
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or_else(Formula::truth)
    }

    /// Left-nested disjunction in the given order; empty gives `0 != 0`.
    pub fn or_all(items: impl IntoIterator<Item = Formula>) -> Self {
        items
            .into_iter()
            .reduce(Formula::or)
            .unwrap_or_else(Formula::falsity)
    }

    pub fn forall_many(vars: &[String], f: Formula) -> Self {
        vars.iter().rev().fold(f, |acc, v| Formula::forall(v, acc))
    }
}

fn term_vars<'a>(t: &'a Term, out: &mut Vec<&'a str>, bound: &[&str]) {
    match t {
        Term::Var(v) => {
            if !bound.contains(&v.as_str()) && !out.contains(&v.as_str()) {
                out.push(v);
            }
        }
        Term::App(_, args) => args.iter().for_each(|a| term_vars(a, out, bound)),
        Term::Const(_) | Term::Lit(_) => {}
    }
}

fn collect_free<'a>(f: &'a Formula, out: &mut Vec<&'a str>, bound: &mut Vec<&'a str>) {
    match f {
        Formula::Eq(a, b) => {
            term_vars(a, out, bound);
            term_vars(b, out, bound);
        }
        Formula::Rel(_, args) => args.iter().for_each(|a| term_vars(a, out, bound)),
        Formula::Not(g) => collect_free(g, out, bound),
        Formula::And(a, b) => {
            collect_free(a, out, bound);
            collect_free(b, out, bound);
        }
        Formula::Exists(x, g) => {
            bound.push(x);
            collect_free(g, out, bound);
            bound.pop();
        }
    }
}

impl Formula {
    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        collect_free(self, &mut out, &mut Vec::new());
        out.into_iter().map(String::from).collect()
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn quantifier_rank(&self) -> usize {
        match self {
            Formula::Eq(..) | Formula::Rel(..) => 0,
            Formula::Not(g) => g.quantifier_rank(),
            Formula::And(a, b) => a.quantifier_rank().max(b.quantifier_rank()),
            Formula::Exists(_, g) => 1 + g.quantifier_rank(),
        }
    }

    /// Every ordinal literal occurring in the formula.
    pub fn support_constants(&self) -> BTreeSet<OrdinalNotation> {
        let mut out = BTreeSet::new();
        self.visit_terms(&mut |t| {
            if let Term::Lit(o) = t {
                out.insert(o.clone());
            }
        });
        out
    }

    /// Every symbol occurrence (relations, functions, constants), including
    /// membership.
    pub fn symbols(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Rel(s, _) = f {
                out.insert(s.clone());
            }
        });
        self.visit_terms(&mut |t| match t {
            Term::Const(s) | Term::App(s, _) => {
                out.insert(s.clone());
            }
            _ => {}
        });
        out
    }

    /// Pre-order traversal of subformulas.
    pub fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Not(g) | Formula::Exists(_, g) => g.visit(f),
            Formula::And(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    /// Visits every term and subterm.
    pub fn visit_terms(&self, f: &mut impl FnMut(&Term)) {
        fn go(t: &Term, f: &mut impl FnMut(&Term)) {
            f(t);
            if let Term::App(_, args) = t {
                args.iter().for_each(|a| go(a, f));
            }
        }
        self.visit(&mut |g| match g {
            Formula::Eq(a, b) => {
                go(a, f);
                go(b, f);
            }
            Formula::Rel(_, args) => args.iter().for_each(|a| go(a, f)),
            _ => {}
        });
    }

    /// Replaces every free occurrence of `x` by the literal `a`.
    pub fn substitute(&self, x: &str, a: &OrdinalNotation) -> Formula {
        self.substitute_term(x, &Term::Lit(a.clone()))
    }

    /// Replaces every free occurrence of `x` by `t`. `t` must not contain
    /// variables bound in `self` (callers substitute closed terms or fresh
    /// variables).
    pub fn substitute_term(&self, x: &str, t: &Term) -> Formula {
        fn term(s: &Term, x: &str, t: &Term) -> Term {
            match s {
                Term::Var(v) if v == x => t.clone(),
                Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| term(a, x, t)).collect()),
                other => other.clone(),
            }
        }
        match self {
            Formula::Eq(a, b) => Formula::Eq(term(a, x, t), term(b, x, t)),
            Formula::Rel(r, args) => Formula::Rel(r.clone(), args.iter().map(|a| term(a, x, t)).collect()),
            Formula::Not(g) => Formula::not(g.substitute_term(x, t)),
            Formula::And(a, b) => Formula::and(a.substitute_term(x, t), b.substitute_term(x, t)),
            Formula::Exists(y, _) if y == x => self.clone(),
            Formula::Exists(y, g) => Formula::exists(y, g.substitute_term(x, t)),
        }
    }

    /// Renames variables simultaneously (free occurrences only).
    pub fn rename_vars(&self, map: &BTreeMap<String, String>) -> Formula {
        let mut f = self.clone();
        // Go through temporaries so that swaps like x<->y are simultaneous.
        let tmp: Vec<(String, String, String)> = map
            .iter()
            .enumerate()
            .map(|(i, (a, b))| (a.clone(), format!("_r{i}"), b.clone()))
            .collect();
        for (a, t, _) in &tmp {
            f = f.substitute_term(a, &Term::Var(t.clone()));
        }
        for (_, t, b) in &tmp {
            f = f.substitute_term(t, &Term::Var(b.clone()));
        }
        f
    }

    /// Maps every symbol reference through `f` (membership included).
    pub fn map_symbols(&self, f: &impl Fn(&Sym) -> Sym) -> Formula {
        fn term(t: &Term, f: &impl Fn(&Sym) -> Sym) -> Term {
            match t {
                Term::Const(s) => Term::Const(f(s)),
                Term::App(s, args) => Term::App(f(s), args.iter().map(|a| term(a, f)).collect()),
                other => other.clone(),
            }
        }
        match self {
            Formula::Eq(a, b) => Formula::Eq(term(a, f), term(b, f)),
            Formula::Rel(r, args) => Formula::Rel(f(r), args.iter().map(|a| term(a, f)).collect()),
            Formula::Not(g) => Formula::not(g.map_symbols(f)),
            Formula::And(a, b) => Formula::and(a.map_symbols(f), b.map_symbols(f)),
            Formula::Exists(y, g) => Formula::exists(y, g.map_symbols(f)),
        }
    }

    /// Bounds every quantifier by `bound`: `∃y φ` becomes `∃y (y < bound ∧ φ)`.
    pub fn relativize(&self, bound: &Term) -> Formula {
        match self {
            Formula::Eq(..) | Formula::Rel(..) => self.clone(),
            Formula::Not(g) => Formula::not(g.relativize(bound)),
            Formula::And(a, b) => Formula::and(a.relativize(bound), b.relativize(bound)),
            Formula::Exists(y, g) => Formula::exists(
                y,
                Formula::and(Formula::lt(Term::var(y), bound.clone()), g.relativize(bound)),
            ),
        }
    }

    /// Rewrites every function application into its graph relation:
    /// an atom `A(.., f(t̄), ..)` becomes `∃z (f(t̄, z) ∧ A(.., z, ..))`, with
    /// `f` now read as an (n+1)-ary relation. Constants are left alone.
    pub fn desugar_functions(&self) -> Formula {
        let mut counter = 0usize;
        self.desugar_with(&mut counter)
    }

    fn desugar_with(&self, counter: &mut usize) -> Formula {
        match self {
            Formula::Eq(..) | Formula::Rel(..) => {
                let (terms, rebuild): (Vec<Term>, Rebuild) = match self {
                    Formula::Eq(a, b) => (
                        vec![a.clone(), b.clone()],
                        Box::new(|v: Vec<Term>| Formula::Eq(v[0].clone(), v[1].clone())),
                    ),
                    Formula::Rel(r, args) => {
                        let r = r.clone();
                        (args.clone(), Box::new(move |v| Formula::Rel(r.clone(), v)))
                    }
                    _ => unreachable!(),
                };
                let mut wraps: Vec<(String, Sym, Vec<Term>)> = Vec::new();
                let flat: Vec<Term> = terms
                    .iter()
                    .map(|t| flatten_term(t, counter, &mut wraps))
                    .collect();
                let mut out = rebuild(flat);
                for (z, f, args) in wraps.into_iter().rev() {
                    let mut graph_args = args;
                    graph_args.push(Term::Var(z.clone()));
                    out = Formula::exists(&z, Formula::and(Formula::Rel(f, graph_args), out));
                }
                out
            }
            Formula::Not(g) => Formula::not(g.desugar_with(counter)),
            Formula::And(a, b) => Formula::and(a.desugar_with(counter), b.desugar_with(counter)),
            Formula::Exists(y, g) => Formula::exists(y, g.desugar_with(counter)),
        }
    }
}

fn flatten_term(t: &Term, counter: &mut usize, wraps: &mut Vec<(String, Sym, Vec<Term>)>) -> Term {
    match t {
        Term::App(f, args) => {
            let args: Vec<Term> = args.iter().map(|a| flatten_term(a, counter, wraps)).collect();
            let z = format!("_g{}", *counter);
            *counter += 1;
            wraps.push((z.clone(), f.clone(), args));
            Term::Var(z)
        }
        other => other.clone(),
    }
}

/// Puts rewritten atom arguments back into the atom they came from.
type Rebuild = Box<dyn Fn(Vec<Term>) -> Formula>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling() {
        let sigma = Signature::new(vec![SymbolDecl::membership(), SymbolDecl::input("In")]).unwrap();
        let names: Vec<String> = double_signature(&sigma).into_iter().map(|s| s.name).collect();
        assert_eq!(names, ["in@0", "in@1", "In@0", "In@1"]);
        assert!(double_signature(&Signature::default()).is_empty());
    }

    #[test]
    fn signature_rules() {
        assert!(Signature::new(vec![SymbolDecl::constant("h"), SymbolDecl::constant("h")]).is_err());
        assert!(Signature::new(vec![SymbolDecl::relation("in", 2)]).is_err());
        assert!(Signature::new(vec![SymbolDecl {
            arity: 2,
            ..SymbolDecl::input("In")
        }])
        .is_err());
    }

    #[test]
    fn substitution_respects_binding() {
        let f = Formula::exists("y", Formula::eq(Term::var("y"), Term::var("x")));
        let g = f.substitute("x", &OrdinalNotation::nat(3));
        assert_eq!(g, Formula::exists("y", Formula::eq(Term::var("y"), Term::lit(3))));
        let bound = Formula::exists("x", Formula::eq(Term::var("x"), Term::var("x")));
        assert_eq!(bound.substitute("x", &OrdinalNotation::nat(3)), bound);
    }

    #[test]
    fn ranks() {
        let atom = Formula::lt(Term::var("x"), Term::var("y"));
        assert_eq!(atom.quantifier_rank(), 0);
        let f = Formula::exists("x", Formula::forall("y", atom));
        assert_eq!(f.quantifier_rank(), 2);
        assert!(f.is_closed());
    }

    #[test]
    fn free_vars_in_order() {
        let f = Formula::and(
            Formula::lt(Term::var("b"), Term::var("a")),
            Formula::exists("c", Formula::eq(Term::var("c"), Term::var("b"))),
        );
        assert_eq!(f.free_vars(), ["b", "a"]);
    }

    #[test]
    fn rename_is_simultaneous() {
        let f = Formula::lt(Term::var("x"), Term::var("y"));
        let map = BTreeMap::from([("x".to_string(), "y".to_string()), ("y".to_string(), "x".to_string())]);
        assert_eq!(f.rename_vars(&map), Formula::lt(Term::var("y"), Term::var("x")));
    }

    #[test]
    fn desugar_introduces_graph() {
        let f = Formula::eq(Term::App(Sym::plain("f"), vec![Term::var("x")]), Term::lit(2));
        let g = f.desugar_functions();
        assert_eq!(
            g,
            Formula::exists(
                "_g0",
                Formula::and(
                    Formula::rel("f", None, vec![Term::var("x"), Term::var("_g0")]),
                    Formula::eq(Term::var("_g0"), Term::lit(2))
                )
            )
        );
    }
}
