//! Machine states, constraint schemas, the constraint check and the
//! per-symbol disagreement map between two states.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::logic::{Distinguished, Signature, SymbolKind};
use crate::ordinal::{parse_ordinal_prefix, parse_set_prefix, OrdinalError, OrdinalNotation, OrdinalSet};

pub type Tuple = Vec<OrdinalNotation>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("`{symbol}` is not representable: {reason}")]
    Unrepresentable { symbol: String, reason: String },
    #[error(transparent)]
    Ordinal(#[from] OrdinalError),
    #[error("states do not share base set and signature")]
    Incompatible,
    #[error("snapshot parse error: {0}")]
    Parse(String),
}

/// An expansion of `(κ; ∈)`. Membership is never stored. n-ary function
/// symbols are stored as their graph, listing only points whose value is
/// not 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    pub kappa: OrdinalNotation,
    pub constants: BTreeMap<String, OrdinalNotation>,
    pub unary: BTreeMap<String, OrdinalSet>,
    pub nary: BTreeMap<String, BTreeSet<Tuple>>,
}

impl State {
    pub fn new(kappa: OrdinalNotation) -> Self {
        Self {
            kappa,
            constants: BTreeMap::new(),
            unary: BTreeMap::new(),
            nary: BTreeMap::new(),
        }
    }

    /// A state over `sigma` with every symbol at 0 / empty.
    pub fn zero(kappa: OrdinalNotation, sigma: &Signature) -> Self {
        let mut s = Self::new(kappa);
        for d in sigma.iter() {
            match (d.kind, d.arity) {
                (_, _) if d.distinguished == Distinguished::Membership => {}
                (SymbolKind::Constant, _) => {
                    s.constants.insert(d.name.clone(), OrdinalNotation::zero());
                }
                (SymbolKind::Relation, 1) => {
                    s.unary.insert(d.name.clone(), OrdinalSet::empty());
                }
                _ => {
                    s.nary.insert(d.name.clone(), BTreeSet::new());
                }
            }
        }
        s
    }

    pub fn set_constant(&mut self, name: &str, v: OrdinalNotation) -> Result<(), StateError> {
        if v >= self.kappa {
            return Err(OrdinalError::OutOfDomain {
                element: v,
                kappa: self.kappa.clone(),
            }
            .into());
        }
        self.constants.insert(name.into(), v);
        Ok(())
    }

    /// Stores a unary interpretation; over a finite κ the set is rewritten
    /// into `Finite` form so that equal states compare equal.
    pub fn set_unary(&mut self, name: &str, set: OrdinalSet) -> Result<(), StateError> {
        set.check_bound(&self.kappa)?;
        let set = match self.kappa.as_nat() {
            Some(n) => set.materialize_below(n),
            None => set,
        };
        self.unary.insert(name.into(), set);
        Ok(())
    }

    pub fn set_nary(&mut self, name: &str, tuples: BTreeSet<Tuple>) -> Result<(), StateError> {
        for t in &tuples {
            for a in t {
                if a >= &self.kappa {
                    return Err(OrdinalError::OutOfDomain {
                        element: a.clone(),
                        kappa: self.kappa.clone(),
                    }
                    .into());
                }
            }
        }
        self.nary.insert(name.into(), tuples);
        Ok(())
    }

    pub fn constant(&self, name: &str) -> Option<&OrdinalNotation> {
        self.constants.get(name)
    }

    pub fn nat_constant(&self, name: &str) -> Option<u64> {
        self.constants.get(name).and_then(OrdinalNotation::as_nat)
    }

    pub fn set(&self, name: &str) -> Option<&OrdinalSet> {
        self.unary.get(name)
    }

    /// True when both states interpret the same symbols the same way kind
    /// by kind (values may differ).
    pub fn same_shape(&self, other: &State) -> bool {
        self.kappa == other.kappa
            && self.constants.keys().eq(other.constants.keys())
            && self.unary.keys().eq(other.unary.keys())
            && self.nary.keys().eq(other.nary.keys())
    }
}

fn write_tuple(t: &Tuple, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "(")?;
    for (i, a) in t.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{a}")?;
    }
    write!(f, ")")
}

/// Single-line snapshot:
/// `kappa=w constants{h=0,t=1} unary{In={3},Out=co{}} nary{R={(1,2)}}`.
impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kappa={} constants{{", self.kappa)?;
        for (i, (k, v)) in self.constants.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}={v}")?;
        }
        write!(f, "}} unary{{")?;
        for (i, (k, v)) in self.unary.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}={v}")?;
        }
        write!(f, "}} nary{{")?;
        for (i, (k, v)) in self.nary.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}={{")?;
            for (j, t) in v.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write_tuple(t, f)?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

struct SnapCursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> SnapCursor<'a> {
    fn err(&self, msg: &str) -> StateError {
        StateError::Parse(format!("{msg} at {}", self.pos))
    }

    fn ws(&mut self) {
        let trimmed = self.src[self.pos..].trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.ws();
        if self.src[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), StateError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{tok}`")))
        }
    }

    fn ident(&mut self) -> Result<String, StateError> {
        self.ws();
        let rest = &self.src[self.pos..];
        let n = rest
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
            .count();
        if n == 0 {
            return Err(self.err("expected a name"));
        }
        self.pos += n;
        Ok(rest[..n].to_string())
    }

    fn ordinal(&mut self) -> Result<OrdinalNotation, StateError> {
        self.ws();
        let (o, used) = parse_ordinal_prefix(&self.src[self.pos..], self.pos)?;
        self.pos += used;
        Ok(o)
    }

    /// `name=value` entries up to the closing brace.
    fn entries(&mut self, mut each: impl FnMut(&mut Self, String) -> Result<(), StateError>) -> Result<(), StateError> {
        self.expect("{")?;
        if self.eat("}") {
            return Ok(());
        }
        loop {
            let name = self.ident()?;
            self.expect("=")?;
            each(self, name)?;
            if self.eat("}") {
                return Ok(());
            }
            self.expect(",")?;
        }
    }
}

impl FromStr for State {
    type Err = StateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut c = SnapCursor { src: s, pos: 0 };
        c.expect("kappa=")?;
        let mut state = State::new(c.ordinal()?);
        c.expect("constants")?;
        c.entries(|c, name| {
            let v = c.ordinal()?;
            state.constants.insert(name, v);
            Ok(())
        })?;
        c.expect("unary")?;
        c.entries(|c, name| {
            c.ws();
            let (set, used) = parse_set_prefix(&c.src[c.pos..], c.pos)?;
            c.pos += used;
            state.unary.insert(name, set);
            Ok(())
        })?;
        c.expect("nary")?;
        c.entries(|c, name| {
            let mut tuples = BTreeSet::new();
            c.expect("{")?;
            if !c.eat("}") {
                loop {
                    c.expect("(")?;
                    let mut t = Vec::new();
                    if !c.eat(")") {
                        loop {
                            t.push(c.ordinal()?);
                            if c.eat(")") {
                                break;
                            }
                            c.expect(",")?;
                        }
                    }
                    tuples.insert(t);
                    if c.eat("}") {
                        break;
                    }
                    c.expect(",")?;
                }
            }
            state.nary.insert(name, tuples);
            Ok(())
        })?;
        c.ws();
        if c.pos != s.len() {
            return Err(c.err("trailing input"));
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flavor {
    GSeqA,
    GSeqAP,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::GSeqA => "gseqa",
            Flavor::GSeqAP => "gseqap",
        })
    }
}

/// Fixed interpretation requested for a parameter symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ParamValue {
    Ordinal(OrdinalNotation),
    Set(OrdinalSet),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Ordinal(o) => write!(f, "{o}"),
            ParamValue::Set(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConstraintValue {
    /// The true membership relation.
    Membership,
    /// `κ^n`.
    Power(usize),
    /// `{α}` for a constant.
    Singleton(OrdinalNotation),
    /// A fixed subset of κ for a unary relation.
    Set(OrdinalSet),
}

/// Mode 0 asks for a subset of the value, mode 1 for equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Subset,
    Equal,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub value: ConstraintValue,
    pub mode: Mode,
}

/// A constraint map over the empty theory. The universe constraint is
/// always `(κ, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tci {
    pub sigma: Signature,
    pub kappa: OrdinalNotation,
    pub flavor: Flavor,
    pub per_symbol: BTreeMap<String, Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TciViolation {
    UniverseMismatch,
    MissingSymbol(String),
    OutsideConstraint(String),
    NotEqual(String),
    ParameterMismatch {
        symbol: String,
        expected: OrdinalNotation,
        found: OrdinalNotation,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TciReport {
    pub violations: Vec<TciViolation>,
}

impl TciReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Tci {
    /// The machine schema: membership fixed, every other symbol bounded by
    /// `κ^n`, parameters pinned with mode 1.
    pub fn for_machine(
        sigma: &Signature,
        kappa: &OrdinalNotation,
        flavor: Flavor,
        params: &BTreeMap<String, ParamValue>,
    ) -> Self {
        let per_symbol = sigma
            .iter()
            .map(|d| {
                let c = if d.distinguished == Distinguished::Membership {
                    Constraint {
                        value: ConstraintValue::Membership,
                        mode: Mode::Equal,
                    }
                } else {
                    match params.get(&d.name) {
                        Some(ParamValue::Ordinal(a)) => Constraint {
                            value: ConstraintValue::Singleton(a.clone()),
                            mode: Mode::Equal,
                        },
                        Some(ParamValue::Set(a)) => Constraint {
                            value: ConstraintValue::Set(a.clone()),
                            mode: Mode::Equal,
                        },
                        None => Constraint {
                            value: ConstraintValue::Power(d.witness_arity()),
                            mode: Mode::Subset,
                        },
                    }
                };
                (d.name.clone(), c)
            })
            .collect();
        Self {
            sigma: sigma.clone(),
            kappa: kappa.clone(),
            flavor,
            per_symbol,
        }
    }

    /// Schema-level check of the constraint map against the flavor:
    /// returns the offending symbols with a reason.
    pub fn schema_violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for d in self.sigma.iter() {
            let Some(c) = self.per_symbol.get(&d.name) else {
                out.push((d.name.clone(), "no constraint".into()));
                continue;
            };
            let free = Constraint {
                value: ConstraintValue::Power(d.witness_arity()),
                mode: Mode::Subset,
            };
            let ok = match d.distinguished {
                Distinguished::Membership => c.value == ConstraintValue::Membership && c.mode == Mode::Equal,
                Distinguished::In | Distinguished::Out => *c == free,
                Distinguished::None => {
                    *c == free
                        || (self.flavor == Flavor::GSeqAP
                            && d.kind == SymbolKind::Constant
                            && c.mode == Mode::Equal
                            && matches!(&c.value, ConstraintValue::Singleton(a) if a < &self.kappa))
                }
            };
            if !ok {
                let reason = match (&c.value, self.flavor) {
                    (ConstraintValue::Set(_), _) => "relation pinned to a fixed set".to_string(),
                    (ConstraintValue::Singleton(_), Flavor::GSeqA) => {
                        "parameter constant in a machine without parameters".to_string()
                    }
                    (ConstraintValue::Singleton(a), Flavor::GSeqAP) if a >= &self.kappa => {
                        format!("parameter {a} is not below {}", self.kappa)
                    }
                    _ => "constraint not allowed by the schema".to_string(),
                };
                out.push((d.name.clone(), reason));
            }
        }
        out
    }
}

fn tuples_below(tuples: &BTreeSet<Tuple>, kappa: &OrdinalNotation) -> bool {
    tuples.iter().all(|t| t.iter().all(|a| a < kappa))
}

/// Checks the universe and every per-symbol constraint. Violations are
/// reported, never raised.
pub fn models_tci(s: &State, t: &Tci) -> TciReport {
    let mut violations = Vec::new();
    if s.kappa != t.kappa {
        violations.push(TciViolation::UniverseMismatch);
    }
    for d in t.sigma.iter() {
        if d.distinguished == Distinguished::Membership {
            continue;
        }
        let Some(c) = t.per_symbol.get(&d.name) else {
            continue;
        };
        let name = d.name.clone();
        let holds = match (d.kind, d.arity) {
            (SymbolKind::Constant, _) => {
                let Some(v) = s.constants.get(&d.name) else {
                    violations.push(TciViolation::MissingSymbol(name));
                    continue;
                };
                match &c.value {
                    ConstraintValue::Power(_) => c.mode == Mode::Subset && v < &t.kappa,
                    ConstraintValue::Singleton(a) => {
                        if v != a {
                            violations.push(TciViolation::ParameterMismatch {
                                symbol: name,
                                expected: a.clone(),
                                found: v.clone(),
                            });
                            continue;
                        }
                        true
                    }
                    _ => false,
                }
            }
            (SymbolKind::Relation, 1) => {
                let Some(v) = s.unary.get(&d.name) else {
                    violations.push(TciViolation::MissingSymbol(name));
                    continue;
                };
                let bounded = v.check_bound(&t.kappa).is_ok();
                match (&c.value, c.mode) {
                    (ConstraintValue::Power(_), Mode::Subset) => bounded,
                    (ConstraintValue::Power(_), Mode::Equal) => {
                        if !(bounded && *v == OrdinalSet::full()) {
                            violations.push(TciViolation::NotEqual(name));
                            continue;
                        }
                        true
                    }
                    (ConstraintValue::Set(a), Mode::Subset) => bounded && v.intersection(&a.complement()).is_empty(),
                    (ConstraintValue::Set(a), Mode::Equal) => {
                        if v.symmetric_difference(a).is_empty() {
                            true
                        } else {
                            violations.push(TciViolation::NotEqual(name));
                            continue;
                        }
                    }
                    _ => false,
                }
            }
            _ => {
                let Some(v) = s.nary.get(&d.name) else {
                    violations.push(TciViolation::MissingSymbol(name));
                    continue;
                };
                match (&c.value, c.mode) {
                    (ConstraintValue::Power(_), Mode::Subset) => tuples_below(v, &t.kappa),
                    // A finite tuple set never equals κ^n for n ≥ 1.
                    _ => {
                        violations.push(TciViolation::NotEqual(name));
                        continue;
                    }
                }
            }
        };
        if !holds {
            violations.push(TciViolation::OutsideConstraint(d.name.clone()));
        }
    }
    TciReport { violations }
}

/// Per-symbol disagreement between two states.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Disagreement {
    Set(OrdinalSet),
    Tuples(BTreeSet<Tuple>),
}

impl Disagreement {
    pub fn is_empty(&self) -> bool {
        match self {
            Disagreement::Set(s) => s.is_empty(),
            Disagreement::Tuples(t) => t.is_empty(),
        }
    }
}

/// Relations give their symmetric difference; a constant gives ∅ when both
/// states agree on it and all of κ otherwise.
pub fn state_delta(s0: &State, s1: &State) -> Result<BTreeMap<String, Disagreement>, StateError> {
    if !s0.same_shape(s1) {
        return Err(StateError::Incompatible);
    }
    let mut out = BTreeMap::new();
    for (k, a) in &s0.constants {
        let d = if Some(a) == s1.constants.get(k) {
            OrdinalSet::empty()
        } else {
            OrdinalSet::full()
        };
        out.insert(k.clone(), Disagreement::Set(d));
    }
    for (k, a) in &s0.unary {
        let mut d = a.symmetric_difference(&s1.unary[k]);
        if let Some(n) = s0.kappa.as_nat() {
            d = d.materialize_below(n);
        }
        out.insert(k.clone(), Disagreement::Set(d));
    }
    for (k, a) in &s0.nary {
        out.insert(
            k.clone(),
            Disagreement::Tuples(a.symmetric_difference(&s1.nary[k]).cloned().collect()),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::SymbolDecl;

    fn omega_state() -> State {
        let sigma = Signature::standard().with(SymbolDecl::constant("c")).unwrap();
        State::zero(OrdinalNotation::omega(), &sigma)
    }

    #[test]
    fn subset_constraint_holds_for_finite_in() {
        let sigma = Signature::standard();
        let tci = Tci::for_machine(&sigma, &OrdinalNotation::omega(), Flavor::GSeqA, &BTreeMap::new());
        let mut s = State::zero(OrdinalNotation::omega(), &sigma);
        s.set_unary("In", OrdinalSet::finite([2u64, 5])).unwrap();
        assert!(models_tci(&s, &tci).ok());
    }

    #[test]
    fn parameter_mismatch() {
        let sigma = Signature::standard().with(SymbolDecl::constant("c")).unwrap();
        let params = BTreeMap::from([("c".to_string(), ParamValue::Ordinal(5u64.into()))]);
        let tci = Tci::for_machine(&sigma, &OrdinalNotation::omega(), Flavor::GSeqAP, &params);
        let mut s = omega_state();
        s.set_constant("c", 4u64.into()).unwrap();
        let report = models_tci(&s, &tci);
        assert!(matches!(
            report.violations.as_slice(),
            [TciViolation::ParameterMismatch { symbol, .. }] if symbol == "c"
        ));
        s.set_constant("c", 5u64.into()).unwrap();
        assert!(models_tci(&s, &tci).ok());
    }

    #[test]
    fn hidden_information_rejected_by_schema() {
        let sigma = Signature::standard().with(SymbolDecl::relation("R", 1)).unwrap();
        let params = BTreeMap::from([("R".to_string(), ParamValue::Set(OrdinalSet::finite([1u64, 4])))]);
        for flavor in [Flavor::GSeqA, Flavor::GSeqAP] {
            let tci = Tci::for_machine(&sigma, &OrdinalNotation::omega(), flavor, &params);
            let v = tci.schema_violations();
            assert_eq!(v.len(), 1);
            assert_eq!(v[0].0, "R");
        }
    }

    #[test]
    fn parameter_schema_depends_on_flavor() {
        let sigma = Signature::standard().with(SymbolDecl::constant("c")).unwrap();
        let params = BTreeMap::from([("c".to_string(), ParamValue::Ordinal(5u64.into()))]);
        let a = Tci::for_machine(&sigma, &OrdinalNotation::omega(), Flavor::GSeqA, &params);
        assert_eq!(a.schema_violations().len(), 1);
        let ap = Tci::for_machine(&sigma, &OrdinalNotation::omega(), Flavor::GSeqAP, &params);
        assert!(ap.schema_violations().is_empty());
    }

    #[test]
    fn delta_examples() {
        let s0 = omega_state();
        assert!(state_delta(&s0, &s0).unwrap().values().all(Disagreement::is_empty));

        let mut a = s0.clone();
        a.set_unary("In", OrdinalSet::finite([0u64])).unwrap();
        let mut b = s0.clone();
        b.set_unary("In", OrdinalSet::cofinite([0u64])).unwrap();
        let d = state_delta(&a, &b).unwrap();
        assert_eq!(d["In"], Disagreement::Set(OrdinalSet::full()));

        let mut c = s0.clone();
        c.set_unary("Out", OrdinalSet::finite([5u64])).unwrap();
        assert_eq!(state_delta(&s0, &c).unwrap()["Out"], Disagreement::Set(OrdinalSet::finite([5u64])));

        let mut e = s0.clone();
        e.set_constant("c", 3u64.into()).unwrap();
        assert_eq!(state_delta(&s0, &e).unwrap()["c"], Disagreement::Set(OrdinalSet::full()));
    }

    #[test]
    fn snapshot_round_trip() {
        let mut s = omega_state();
        s.set_unary("Out", OrdinalSet::cofinite([1u64, 7])).unwrap();
        s.set_constant("c", 9u64.into()).unwrap();
        s.set_nary("G", BTreeSet::from([vec![1u64.into(), 2u64.into()]])).unwrap();
        let text = s.to_string();
        assert_eq!(text.parse::<State>().unwrap(), s);
    }

    #[test]
    fn finite_kappa_normalizes() {
        let mut s = State::new(4u64.into());
        s.set_unary("X", OrdinalSet::cofinite([1u64])).unwrap();
        assert_eq!(s.unary["X"], OrdinalSet::finite([0u64, 2, 3]));
        assert!(s.set_constant("c", 4u64.into()).is_err());
    }
}
