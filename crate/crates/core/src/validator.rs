//! Schema and well-formedness checks that turn a parsed machine description
//! into a runnable machine, plus the bounded-exploration diagnostic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::logic::{Distinguished, Formula, Signature, Sym, SymbolDecl, SymbolKind, Term, MEMBERSHIP};
use crate::ordinal::{OrdinalNotation, OrdinalSet};
use crate::runtime::{self, StepError};
use crate::sample::random_state;
use crate::state::{state_delta, Disagreement, Flavor, ParamValue, State, Tci};

/// A formula together with the variables it defines a relation on. For a
/// constant the list has one variable; for an n-ary function it has n + 1,
/// the last one standing for the value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub vars: Vec<String>,
    pub body: Formula,
}

impl Witness {
    pub fn new(vars: &[&str], body: Formula) -> Self {
        Self {
            vars: vars.iter().map(|v| v.to_string()).collect(),
            body,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineSpec {
    pub kappa: OrdinalNotation,
    pub sigma: Signature,
    pub flavor: Flavor,
    pub params: BTreeMap<String, ParamValue>,
    /// Next-state witnesses over copy-0 symbols, one per non-membership symbol.
    pub tau: BTreeMap<String, Witness>,
    /// Initial-value witnesses over membership alone, one per symbol other
    /// than membership, input, output and the parameters.
    pub defaults: BTreeMap<String, Witness>,
}

impl MachineSpec {
    /// Symbols that need a default witness.
    pub fn defaulted_symbols(&self) -> impl Iterator<Item = &SymbolDecl> {
        self.sigma.iter().filter(move |d| {
            d.distinguished == Distinguished::None && !self.params.contains_key(&d.name)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    MissingDistinguished,
    BadConstraint,
    NonLimitKappa,
    NotBounded,
    NotSimple,
    ArityMismatch,
    MissingWitness,
    StrayWitness,
    NoUniqueSuccessor,
    NoUniqueInitialState,
}

impl ViolationKind {
    pub fn code(self) -> &'static str {
        match self {
            ViolationKind::MissingDistinguished => "missing-distinguished",
            ViolationKind::BadConstraint => "bad-constraint",
            ViolationKind::NonLimitKappa => "non-limit-kappa",
            ViolationKind::NotBounded => "not-bounded",
            ViolationKind::NotSimple => "not-simple",
            ViolationKind::ArityMismatch => "arity-mismatch",
            ViolationKind::MissingWitness => "missing-witness",
            ViolationKind::StrayWitness => "stray-witness",
            ViolationKind::NoUniqueSuccessor => "no-unique-successor",
            ViolationKind::NoUniqueInitialState => "no-unique-initial-state",
        }
    }

    /// The well-formedness condition the violation breaks.
    pub fn clause(self) -> &'static str {
        match self {
            ViolationKind::MissingDistinguished => "distinguished symbols",
            ViolationKind::BadConstraint => "constraint schema",
            ViolationKind::NonLimitKappa => "limit base set",
            ViolationKind::NotBounded | ViolationKind::ArityMismatch | ViolationKind::StrayWitness => {
                "bounded transition"
            }
            ViolationKind::NotSimple => "simple default",
            ViolationKind::MissingWitness => "witness coverage",
            ViolationKind::NoUniqueSuccessor => "unique successor",
            ViolationKind::NoUniqueInitialState => "unique initial state",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub symbol: String,
    pub message: String,
    /// Snapshot of the state that exposed a semantic violation.
    pub counterexample: Option<String>,
}

impl Violation {
    fn new(kind: ViolationKind, symbol: &str, message: impl Into<String>) -> Self {
        Self {
            kind,
            symbol: symbol.to_string(),
            message: message.into(),
            counterexample: None,
        }
    }

    /// One machine-readable record: `code<TAB>symbol<TAB>clause<TAB>message[<TAB>state]`.
    pub fn record(&self) -> String {
        let mut out = format!(
            "{}\t{}\t{}\t{}",
            self.kind.code(),
            self.symbol,
            self.kind.clause(),
            self.message
        );
        if let Some(c) = &self.counterexample {
            out.push('\t');
            out.push_str(c);
        }
        out
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}] `{}`: {}", self.kind.code(), self.kind.clause(), self.symbol, self.message)?;
        if let Some(c) = &self.counterexample {
            write!(f, " at {c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedMachine {
    pub spec: MachineSpec,
    /// `⋀ ψ^X` over the doubled signature.
    pub tau_sentence: Formula,
    /// `⋀ ψ^X` for the default witnesses, over the plain signature.
    pub default_sentence: Formula,
    pub tci: Tci,
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// Accept a finite κ as a surrogate base set.
    pub allow_finite_kappa: bool,
    /// Number of random states on which successor existence is checked.
    pub samples: usize,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            allow_finite_kappa: false,
            samples: 64,
            seed: 0x5eed,
        }
    }
}

fn copy_sym(name: &str, copy: Option<u8>) -> Sym {
    Sym {
        name: name.into(),
        copy,
    }
}

/// `∀v̄ (φ(v̄) ↔ X(v̄))` with `X` read at the given copy.
fn defining_clause(d: &SymbolDecl, w: &Witness, copy: Option<u8>) -> Formula {
    let vars: Vec<Term> = w.vars.iter().map(|v| Term::Var(v.clone())).collect();
    let atom = match d.kind {
        SymbolKind::Constant => Formula::Eq(vars[0].clone(), Term::Const(copy_sym(&d.name, copy))),
        SymbolKind::Relation => Formula::Rel(copy_sym(&d.name, copy), vars),
        SymbolKind::Function => {
            let (y, args) = vars.split_last().expect("function witness has a value variable");
            Formula::Eq(Term::App(copy_sym(&d.name, copy), args.to_vec()), y.clone())
        }
    };
    Formula::forall_many(&w.vars, Formula::iff(w.body.clone(), atom))
}

fn shape_violations(d: &SymbolDecl, w: &Witness, out: &mut Vec<Violation>) {
    let want = d.witness_arity();
    if w.vars.len() != want {
        out.push(Violation::new(
            ViolationKind::ArityMismatch,
            &d.name,
            format!("witness has {} variable(s), expected {want}", w.vars.len()),
        ));
        return;
    }
    let distinct: BTreeSet<&String> = w.vars.iter().collect();
    if distinct.len() != w.vars.len() {
        out.push(Violation::new(ViolationKind::ArityMismatch, &d.name, "witness variables repeat"));
    }
    for v in w.body.free_vars() {
        if !w.vars.contains(&v) {
            out.push(Violation::new(
                ViolationKind::ArityMismatch,
                &d.name,
                format!("free variable `{v}` is not a witness variable"),
            ));
        }
    }
}

fn stray(spec_sigma: &Signature, map: &BTreeMap<String, Witness>, skip: impl Fn(&SymbolDecl) -> bool) -> Vec<Violation> {
    map.keys()
        .filter(|k| spec_sigma.get(k).is_none_or(&skip))
        .map(|k| Violation::new(ViolationKind::StrayWitness, k, "witness for a symbol that does not take one"))
        .collect()
}

/// Every non-membership symbol has a witness over copy-0 symbols with the
/// right variables. Returns the assembled transition sentence.
pub fn check_bounded(spec: &MachineSpec) -> Result<Formula, Vec<Violation>> {
    let mut out = stray(&spec.sigma, &spec.tau, |d| d.distinguished == Distinguished::Membership);
    let mut clauses = Vec::new();
    for d in spec.sigma.iter() {
        if d.distinguished == Distinguished::Membership {
            continue;
        }
        let Some(w) = spec.tau.get(&d.name) else {
            out.push(Violation::new(ViolationKind::MissingWitness, &d.name, "no transition witness"));
            continue;
        };
        shape_violations(d, w, &mut out);
        for s in w.body.symbols() {
            let ok = if s.name == MEMBERSHIP {
                s.copy.is_none()
            } else {
                spec.sigma.get(&s.name).is_some() && s.copy == Some(0)
            };
            if !ok {
                let why = match s.copy {
                    Some(1) => format!("mentions next-state symbol `{s}`"),
                    _ if spec.sigma.get(&s.name).is_none() => format!("mentions unknown symbol `{s}`"),
                    _ => format!("mentions `{s}`, which is not a current-state symbol"),
                };
                out.push(Violation::new(ViolationKind::NotBounded, &d.name, why));
            }
        }
        clauses.push(defining_clause(d, w, Some(1)));
    }
    if out.is_empty() {
        Ok(Formula::and_all(clauses))
    } else {
        Err(out)
    }
}

/// Every defaulted symbol has a witness over membership alone. Returns the
/// assembled default sentence.
pub fn check_simple(spec: &MachineSpec) -> Result<Formula, Vec<Violation>> {
    let needed: BTreeSet<String> = spec.defaulted_symbols().map(|d| d.name.clone()).collect();
    let mut out = stray(&spec.sigma, &spec.defaults, |d| !needed.contains(&d.name));
    let mut clauses = Vec::new();
    for d in spec.defaulted_symbols() {
        let Some(w) = spec.defaults.get(&d.name) else {
            out.push(Violation::new(ViolationKind::MissingWitness, &d.name, "no default witness"));
            continue;
        };
        shape_violations(d, w, &mut out);
        for s in w.body.symbols() {
            if s.name != MEMBERSHIP || s.copy.is_some() {
                out.push(Violation::new(
                    ViolationKind::NotSimple,
                    &d.name,
                    format!("default mentions `{s}`; only membership is allowed"),
                ));
            }
        }
        clauses.push(defining_clause(d, w, None));
    }
    if out.is_empty() {
        Ok(Formula::and_all(clauses))
    } else {
        Err(out)
    }
}

fn structural(spec: &MachineSpec, opts: &CheckOptions) -> Vec<Violation> {
    let mut out = Vec::new();
    for (d, name) in [
        (Distinguished::Membership, MEMBERSHIP),
        (Distinguished::In, "In"),
        (Distinguished::Out, "Out"),
    ] {
        if spec.sigma.distinguished(d).is_none() {
            out.push(Violation::new(
                ViolationKind::MissingDistinguished,
                name,
                "signature lacks this distinguished symbol",
            ));
        }
    }
    let k = &spec.kappa;
    let finite_ok = opts.allow_finite_kappa && k.is_finite() && !k.is_zero();
    if !k.is_limit() && !finite_ok {
        let hint = if k.is_finite() { " (finite base sets need the surrogate flag)" } else { "" };
        out.push(Violation::new(
            ViolationKind::NonLimitKappa,
            "",
            format!("{k} is not a limit ordinal{hint}"),
        ));
    }
    for (name, p) in &spec.params {
        match spec.sigma.get(name) {
            Some(d) if d.kind == SymbolKind::Constant || matches!(p, ParamValue::Set(_)) => {}
            _ => out.push(Violation::new(
                ViolationKind::BadConstraint,
                name,
                "parameter names no constant of the signature",
            )),
        }
    }
    let tci = Tci::for_machine(&spec.sigma, &spec.kappa, spec.flavor, &spec.params);
    for (symbol, reason) in tci.schema_violations() {
        out.push(Violation::new(ViolationKind::BadConstraint, &symbol, reason));
    }
    out
}

fn semantic(m: &ValidatedMachine, opts: &CheckOptions) -> Vec<Violation> {
    let spec = &m.spec;
    let bound = spec.kappa.as_nat().unwrap_or(12).min(12);
    if !(spec.kappa == OrdinalNotation::omega() || spec.kappa.is_finite()) {
        // Only ω and surrogate base sets are executable.
        return Vec::new();
    }
    let mut out = Vec::new();
    let stepper = match runtime::Stepper::transition(spec, false) {
        Ok(s) => s,
        Err(e) => return vec![Violation::new(ViolationKind::NoUniqueSuccessor, "", e.to_string())],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let probe = |s: &State, kind: ViolationKind, out: &mut Vec<Violation>| {
        if let Err(e) = stepper.step(s) {
            let symbol = match &e {
                StepError::Unrepresentable { symbol, .. }
                | StepError::NotSingleton { symbol, .. }
                | StepError::NotFunctional { symbol, .. } => symbol.clone(),
                _ => String::new(),
            };
            let mut v = Violation::new(kind, &symbol, e.to_string());
            v.counterexample = Some(s.to_string());
            out.push(v);
        }
    };
    match runtime::load(m, &OrdinalSet::empty()) {
        Ok(s0) => probe(&s0, ViolationKind::NoUniqueSuccessor, &mut out),
        Err(e) => out.push(Violation::new(ViolationKind::NoUniqueInitialState, "", e.to_string())),
    }
    for _ in 0..opts.samples {
        if !out.is_empty() {
            break;
        }
        let mut s = random_state(&mut rng, &spec.sigma, spec.kappa.clone(), bound);
        for (name, p) in &spec.params {
            match p {
                ParamValue::Ordinal(a) => {
                    s.constants.insert(name.clone(), a.clone());
                }
                ParamValue::Set(a) => {
                    s.unary.insert(name.clone(), a.clone());
                }
            }
        }
        probe(&s, ViolationKind::NoUniqueSuccessor, &mut out);
    }
    out
}

/// Full check: distinguished symbols, base set, constraint schema, both
/// witness families, then successor existence on sampled states.
pub fn check_machine(spec: &MachineSpec, opts: &CheckOptions) -> Result<ValidatedMachine, Vec<Violation>> {
    let mut out = structural(spec, opts);
    let tau = check_bounded(spec).map_err(|v| out.extend(v)).ok();
    let def = check_simple(spec).map_err(|v| out.extend(v)).ok();
    if !out.is_empty() {
        return Err(out);
    }
    let m = ValidatedMachine {
        spec: spec.clone(),
        tau_sentence: tau.expect("checked"),
        default_sentence: def.expect("checked"),
        tci: Tci::for_machine(&spec.sigma, &spec.kappa, spec.flavor, &spec.params),
    };
    let sem = semantic(&m, opts);
    if sem.is_empty() {
        Ok(m)
    } else {
        Err(sem)
    }
}

/// Outcome of searching for a finite set of ground terms that determines
/// the per-symbol update on a sample of states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BepReport {
    pub sample_size: usize,
    pub depth: usize,
    /// Ground terms (and atomic facts about them) that were compared.
    pub terms: Vec<String>,
    /// `Some` when every pair of sampled states agreeing on `terms` also
    /// agrees on the update.
    pub separating: Option<Vec<String>>,
    /// Indices of two sampled states that agree on every term but whose
    /// updates differ.
    pub counterexample: Option<(usize, usize)>,
}

impl BepReport {
    pub fn holds_on_sample(&self) -> bool {
        self.counterexample.is_none()
    }
}

fn ground_terms(sigma: &Signature, depth: usize, cap: usize) -> Vec<Term> {
    let mut terms: Vec<Term> = sigma
        .iter()
        .filter(|d| d.kind == SymbolKind::Constant)
        .map(|d| Term::konst(&d.name, None))
        .collect();
    let funcs: Vec<&SymbolDecl> = sigma.iter().filter(|d| d.kind == SymbolKind::Function).collect();
    for _ in 1..depth {
        let mut next = terms.clone();
        for f in &funcs {
            let mut idx = vec![0usize; f.arity];
            if terms.is_empty() {
                break;
            }
            loop {
                let t = Term::App(Sym::plain(&f.name), idx.iter().map(|&i| terms[i].clone()).collect());
                if !next.contains(&t) {
                    next.push(t);
                }
                if next.len() >= cap {
                    break;
                }
                let mut i = 0;
                while i < idx.len() {
                    idx[i] += 1;
                    if idx[i] < terms.len() {
                        break;
                    }
                    idx[i] = 0;
                    i += 1;
                }
                if i == idx.len() {
                    break;
                }
            }
        }
        terms = next;
        if terms.len() >= cap {
            break;
        }
    }
    terms.truncate(cap);
    terms
}

fn eval_ground(s: &State, t: &Term) -> Option<OrdinalNotation> {
    match t {
        Term::Const(c) => s.constants.get(&c.name).cloned(),
        Term::Lit(o) => Some(o.clone()),
        Term::App(f, args) => {
            let vals: Option<Vec<OrdinalNotation>> = args.iter().map(|a| eval_ground(s, a)).collect();
            let vals = vals?;
            let graph = s.nary.get(&f.name)?;
            Some(
                graph
                    .iter()
                    .find(|tup| tup[..tup.len() - 1] == vals[..])
                    .map(|tup| tup[tup.len() - 1].clone())
                    .unwrap_or_else(OrdinalNotation::zero),
            )
        }
        Term::Var(_) => None,
    }
}

/// Compares states by the values of ground terms up to `depth` (and the
/// unary facts about those values) against their one-step updates.
pub fn diagnose_bep(m: &ValidatedMachine, states: &[State], depth: usize) -> Result<BepReport, StepError> {
    let stepper = runtime::Stepper::transition(&m.spec, false)?;
    let terms = ground_terms(&m.spec.sigma, depth.max(1), 256);
    let unary: Vec<&SymbolDecl> = m
        .spec
        .sigma
        .iter()
        .filter(|d| d.kind == SymbolKind::Relation && d.arity == 1)
        .collect();
    let mut labels: Vec<String> = terms.iter().map(|t| t.to_string()).collect();
    for r in &unary {
        for t in &terms {
            labels.push(format!("{}({t})", r.name));
        }
    }
    let mut keys = Vec::with_capacity(states.len());
    let mut deltas: Vec<BTreeMap<String, Disagreement>> = Vec::with_capacity(states.len());
    for s in states {
        let next = stepper.step(s)?;
        let vals: Vec<Option<OrdinalNotation>> = terms.iter().map(|t| eval_ground(s, t)).collect();
        let mut key: Vec<String> = vals.iter().map(|v| format!("{v:?}")).collect();
        for r in &unary {
            for v in &vals {
                let bit = v
                    .as_ref()
                    .zip(s.unary.get(&r.name))
                    .map(|(v, set)| set.contains(v))
                    .unwrap_or(false);
                key.push(bit.to_string());
            }
        }
        keys.push(key);
        deltas.push(state_delta(s, &next).map_err(|e| StepError::Unsupported(e.to_string()))?);
    }
    let mut counterexample = None;
    'outer: for i in 0..states.len() {
        for j in i + 1..states.len() {
            if keys[i] == keys[j] && deltas[i] != deltas[j] {
                counterexample = Some((i, j));
                break 'outer;
            }
        }
    }
    Ok(BepReport {
        sample_size: states.len(),
        depth,
        separating: counterexample.is_none().then(|| labels.clone()),
        terms: labels,
        counterexample,
    })
}
