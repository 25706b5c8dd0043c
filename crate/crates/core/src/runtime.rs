//! Loading, successor steps, limit stages and whole runs with an ordinal
//! clock.
//!
//! A run is split into segments of successor steps. A segment ends at a
//! limit stage in one of two ways. If a state repeats, the tail is periodic
//! and the limit is the pointwise minimum over one period (exact). If the
//! step budget runs out first, each cell's recent history is classified and
//! the limit is extrapolated; such limits are recorded as unverified.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::logic::{Signature, SymbolKind};
use crate::ordinal::{OrdinalError, OrdinalNotation, OrdinalSet, Polarity};
use crate::satisfaction::engine::{radius, Ctx, Intervals, Layout, Model, Node, Program, Strategy};
use crate::satisfaction::{sat2, sat2_exact, to_ordinal_set, EvalDomain, EvalError, OMEGA_N};
use crate::state::{State, Tuple};
use crate::validator::{MachineSpec, ValidatedMachine, Witness};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("`{symbol}` is not representable: {reason}")]
    Unrepresentable { symbol: String, reason: String },
    #[error("witness for constant `{symbol}` defines {found}, not exactly one value")]
    NotSingleton { symbol: String, found: String },
    #[error("witness for function `{symbol}` defines {found} at {args}")]
    NotFunctional { symbol: String, args: String, found: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl From<OrdinalError> for StepError {
    fn from(e: OrdinalError) -> Self {
        StepError::Unsupported(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ItemKind {
    Const,
    Unary,
    Rel(usize),
    Func(usize),
}

#[derive(Debug, Clone)]
struct Item {
    name: String,
    kind: ItemKind,
    node: Node,
}

/// Compiled witnesses that compute a batch of interpretations from a state.
#[derive(Debug)]
pub struct Stepper {
    kappa: OrdinalNotation,
    finite: Option<u64>,
    prog: Program,
    items: Vec<Item>,
    exhaustive: bool,
}

fn executable_kappa(k: &OrdinalNotation) -> Result<Option<u64>, StepError> {
    if let Some(n) = k.as_nat() {
        return Ok(Some(n));
    }
    if *k == OrdinalNotation::omega() {
        return Ok(None);
    }
    Err(StepError::Unsupported(format!("execution at base set {k}")))
}

fn count_desc(iv: &Intervals, n: u64) -> String {
    let total: u64 = iv.0.iter().map(|&(a, b)| b - a).sum();
    match total {
        0 => "no value".into(),
        _ if iv.0.last().is_some_and(|&(_, b)| b == n) && n == OMEGA_N => "infinitely many values".into(),
        t => {
            let first: Vec<String> = iv.points().take(3).map(|v| v.to_string()).collect();
            format!("{t} values ({}{})", first.join(", "), if t > 3 { ", ..." } else { "" })
        }
    }
}

impl Stepper {
    fn build(
        spec: &MachineSpec,
        template: &State,
        witnesses: &BTreeMap<String, Witness>,
        names: Vec<String>,
        exhaustive: bool,
    ) -> Result<Self, StepError> {
        let finite = executable_kappa(&spec.kappa)?;
        let mut prog = Program::new(Layout::of(template));
        let mut items = Vec::new();
        for name in names {
            let d = spec
                .sigma
                .get(&name)
                .ok_or_else(|| StepError::Unsupported(format!("unknown symbol `{name}`")))?;
            let w = witnesses
                .get(&name)
                .ok_or_else(|| StepError::Unsupported(format!("no witness for `{name}`")))?;
            let kind = match (d.kind, d.arity) {
                (SymbolKind::Constant, _) => ItemKind::Const,
                (SymbolKind::Relation, 1) => ItemKind::Unary,
                (SymbolKind::Relation, k) => ItemKind::Rel(k),
                (SymbolKind::Function, k) => ItemKind::Func(k),
            };
            let node = prog.compile(&w.body, &w.vars)?;
            items.push(Item { name, kind, node });
        }
        Ok(Self {
            kappa: spec.kappa.clone(),
            finite,
            prog,
            items,
            exhaustive,
        })
    }

    /// The next-state witnesses of every non-membership symbol.
    pub fn transition(spec: &MachineSpec, exhaustive: bool) -> Result<Self, StepError> {
        let template = State::zero(spec.kappa.clone(), &spec.sigma);
        let names = spec
            .sigma
            .iter()
            .filter(|d| d.distinguished != crate::logic::Distinguished::Membership)
            .map(|d| d.name.clone())
            .collect();
        Self::build(spec, &template, &spec.tau, names, exhaustive)
    }

    fn defaults(spec: &MachineSpec, exhaustive: bool) -> Result<Self, StepError> {
        let names = spec.defaulted_symbols().map(|d| d.name.clone()).collect();
        Self::build(spec, &State::new(spec.kappa.clone()), &spec.defaults, names, exhaustive)
    }

    /// Largest quantifier rank over all witnesses.
    pub fn max_rank(&self) -> u32 {
        self.prog.max_rank
    }

    pub fn step(&self, s: &State) -> Result<State, StepError> {
        let mut out = State::new(self.kappa.clone());
        self.apply(s, &mut out)?;
        Ok(out)
    }

    fn apply(&self, s: &State, out: &mut State) -> Result<(), StepError> {
        let model = Model::build(s, self.prog.layout())?;
        let m = model.max_point.max(self.prog.max_literal);
        let (n, strategy) = match self.finite {
            Some(n) if self.exhaustive => (n, Strategy::Exhaustive),
            Some(n) => (n, Strategy::Anchored),
            None => (OMEGA_N, Strategy::Unbounded),
        };
        let mut ctx = Ctx::new(&self.prog, [&model, &model], n, strategy);
        let nat = OrdinalNotation::nat;
        for it in &self.items {
            let cut = m.saturating_add(radius(it.node.rank + 1));
            let prefix_hi = match self.finite {
                Some(n) => n,
                None => cut + 2,
            };
            match it.kind {
                ItemKind::Unary => {
                    let iv = ctx.eval_set(&it.node, &mut Vec::new());
                    let set = match self.finite {
                        Some(_) => OrdinalSet::finite(iv.points().map(nat)),
                        None => to_ordinal_set(&iv, cut, OMEGA_N)?,
                    };
                    out.unary.insert(it.name.clone(), set);
                }
                ItemKind::Const => {
                    let iv = ctx.eval_set(&it.node, &mut Vec::new());
                    match iv.0.as_slice() {
                        [(a, b)] if b - a == 1 => {
                            out.constants.insert(it.name.clone(), nat(*a));
                        }
                        _ => {
                            return Err(StepError::NotSingleton {
                                symbol: it.name.clone(),
                                found: count_desc(&iv, n),
                            })
                        }
                    }
                }
                ItemKind::Rel(k) | ItemKind::Func(k) => {
                    let is_func = matches!(it.kind, ItemKind::Func(_));
                    let p = if is_func { k } else { k - 1 };
                    let mut tuples: BTreeSet<Tuple> = BTreeSet::new();
                    let mut env = vec![0u64; p];
                    loop {
                        let iv = ctx.eval_set(&it.node, &mut env);
                        let far = env.iter().any(|&v| v > m);
                        if is_func {
                            let y = match iv.0.as_slice() {
                                [(a, b)] if b - a == 1 => *a,
                                _ => {
                                    return Err(StepError::NotFunctional {
                                        symbol: it.name.clone(),
                                        args: format!("{env:?}"),
                                        found: count_desc(&iv, n),
                                    })
                                }
                            };
                            if y != 0 {
                                if self.finite.is_none() && far {
                                    return Err(StepError::Unrepresentable {
                                        symbol: it.name.clone(),
                                        reason: "non-zero values at infinitely many arguments".into(),
                                    });
                                }
                                let mut t: Tuple = env.iter().map(|&v| nat(v)).collect();
                                t.push(nat(y));
                                tuples.insert(t);
                            }
                        } else if !iv.is_empty() {
                            let tail = iv.0.last().is_some_and(|&(_, hi)| hi > m + 1);
                            if self.finite.is_none() && (far || tail) {
                                return Err(StepError::Unrepresentable {
                                    symbol: it.name.clone(),
                                    reason: "defines an infinite relation".into(),
                                });
                            }
                            for v in iv.points() {
                                let mut t: Tuple = env.iter().map(|&e| nat(e)).collect();
                                t.push(nat(v));
                                tuples.insert(t);
                            }
                        }
                        let mut i = 0;
                        while i < p {
                            env[i] += 1;
                            if env[i] < prefix_hi {
                                break;
                            }
                            env[i] = 0;
                            i += 1;
                        }
                        if i == p {
                            break;
                        }
                    }
                    out.nary.insert(it.name.clone(), tuples);
                }
            }
        }
        Ok(())
    }
}

/// The loaded state: `In = A`, `Out = ∅`, parameters at their values and
/// every other symbol at the value its default witness defines.
pub fn load(m: &ValidatedMachine, input: &OrdinalSet) -> Result<State, StepError> {
    let spec = &m.spec;
    input.check_bound(&spec.kappa)?;
    let mut s = State::zero(spec.kappa.clone(), &spec.sigma);
    if let Some(name) = spec.sigma.input_name() {
        s.set_unary(name, input.clone())
            .map_err(|e| StepError::Unsupported(e.to_string()))?;
    }
    for (name, p) in &spec.params {
        match p {
            crate::state::ParamValue::Ordinal(a) => {
                s.constants.insert(name.clone(), a.clone());
            }
            crate::state::ParamValue::Set(a) => {
                s.unary.insert(name.clone(), a.clone());
            }
        }
    }
    Stepper::defaults(spec, false)?.apply(&State::new(spec.kappa.clone()), &mut s)?;
    Ok(s)
}

/// The output tape of `s`.
pub fn unload(m: &ValidatedMachine, s: &State) -> OrdinalSet {
    m.spec
        .sigma
        .output_name()
        .and_then(|o| s.unary.get(o))
        .cloned()
        .unwrap_or_else(OrdinalSet::empty)
}

/// One successor step of `m`.
pub fn step(m: &ValidatedMachine, s: &State) -> Result<State, StepError> {
    Stepper::transition(&m.spec, false)?.step(s)
}

/// A single storage cell of a state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cell {
    Const(String),
    /// Membership of one element in a unary relation (0 or 1).
    Member(String, u64),
    /// Membership of all elements not tracked individually: 1 when the
    /// relation is cofinite.
    Tail(String),
    /// Membership of a tuple in an n-ary relation (0 or 1).
    Tuple(String, Vec<u64>),
    /// Value of a function at an argument tuple.
    Value(String, Vec<u64>),
}

impl Cell {
    pub fn symbol(&self) -> &str {
        match self {
            Cell::Const(n) | Cell::Member(n, _) | Cell::Tail(n) | Cell::Tuple(n, _) | Cell::Value(n, _) => n,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &Vec<u64>| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            Cell::Const(c) => write!(f, "{c}"),
            Cell::Member(r, e) => write!(f, "{r}[{e}]"),
            Cell::Tail(r) => write!(f, "{r}[tail]"),
            Cell::Tuple(r, t) => write!(f, "{r}({})", list(t)),
            Cell::Value(g, t) => write!(f, "{g}({})", list(t)),
        }
    }
}

fn nat_of(o: &OrdinalNotation) -> u64 {
    o.as_nat().expect("executable states hold natural numbers")
}

/// Every explicitly stored cell of `s` with its value.
pub fn cells_of(s: &State, sigma: &Signature) -> BTreeMap<Cell, u64> {
    let mut out = BTreeMap::new();
    for (c, v) in &s.constants {
        out.insert(Cell::Const(c.clone()), nat_of(v));
    }
    for (r, set) in &s.unary {
        let tail = u64::from(set.polarity == Polarity::Cofinite);
        out.insert(Cell::Tail(r.clone()), tail);
        for e in &set.support {
            out.insert(Cell::Member(r.clone(), nat_of(e)), 1 - tail);
        }
    }
    for (r, ts) in &s.nary {
        let is_func = sigma.get(r).is_some_and(|d| d.kind == SymbolKind::Function);
        for t in ts {
            let t: Vec<u64> = t.iter().map(nat_of).collect();
            if is_func {
                let (y, args) = t.split_last().expect("graph tuples carry a value");
                out.insert(Cell::Value(r.clone(), args.to_vec()), *y);
            } else {
                out.insert(Cell::Tuple(r.clone(), t), 1);
            }
        }
    }
    out
}

/// The value of `cell` in `s`, including cells that are not stored.
fn cell_value(s: &State, cell: &Cell) -> u64 {
    match cell {
        Cell::Const(c) => s.constants.get(c).map(nat_of).unwrap_or(0),
        Cell::Member(r, e) => s.unary.get(r).is_some_and(|set| set.contains(&OrdinalNotation::nat(*e))) as u64,
        Cell::Tail(r) => s.unary.get(r).is_some_and(|set| set.polarity == Polarity::Cofinite) as u64,
        Cell::Tuple(r, t) => {
            let t: Tuple = t.iter().map(|&v| OrdinalNotation::nat(v)).collect();
            s.nary.get(r).is_some_and(|ts| ts.contains(&t)) as u64
        }
        Cell::Value(g, args) => s
            .nary
            .get(g)
            .and_then(|ts| {
                ts.iter()
                    .find(|t| t.len() == args.len() + 1 && t.iter().zip(args).all(|(a, b)| a.as_nat() == Some(*b)))
                    .map(|t| nat_of(&t[args.len()]))
            })
            .unwrap_or(0),
    }
}

/// How a cell behaved on the approach to a limit stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TailClass {
    Stable(u64),
    /// Eventually periodic; carries the least value that keeps recurring.
    Periodic(u64),
    /// Strictly increasing; the lim inf is not below κ = ω.
    Unbounded,
    Unknown,
}

impl TailClass {
    /// The lim inf, when it exists below κ, else 0.
    pub fn limit_value(self) -> Option<u64> {
        match self {
            TailClass::Stable(v) | TailClass::Periodic(v) => Some(v),
            TailClass::Unbounded => Some(0),
            TailClass::Unknown => None,
        }
    }
}

impl fmt::Display for TailClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailClass::Stable(v) => write!(f, "stable({v})"),
            TailClass::Periodic(v) => write!(f, "periodic(min={v})"),
            TailClass::Unbounded => write!(f, "unbounded"),
            TailClass::Unknown => write!(f, "unknown"),
        }
    }
}

/// Classifies the recent history of one cell. `values` starts with the
/// value before the first recorded change; `quiet` says the cell has not
/// changed for a long stretch before the limit.
pub fn classify_tail(values: &[u64], quiet: bool) -> TailClass {
    let events = values.len().saturating_sub(1);
    let last = *values.last().unwrap_or(&0);
    if events == 0 || quiet {
        return TailClass::Stable(last);
    }
    if events >= 3 && values.windows(2).all(|w| w[0] < w[1]) {
        return TailClass::Unbounded;
    }
    let min = *values.iter().min().expect("non-empty");
    if values.iter().filter(|&&v| v == min).count() >= 2 {
        return TailClass::Periodic(min);
    }
    if events == 1 {
        return TailClass::Stable(last);
    }
    TailClass::Unknown
}

/// Rebuilds a state from per-cell limit values. Cells absent from
/// `classes` keep their value in `base`; elements not tracked follow their
/// relation's tail cell.
pub fn limit_state(
    base: &State,
    sigma: &Signature,
    classes: &BTreeMap<Cell, TailClass>,
) -> Result<State, Cell> {
    let value = |c: &Cell| -> Result<u64, Cell> {
        match classes.get(c) {
            Some(cls) => cls.limit_value().ok_or_else(|| c.clone()),
            None => Ok(cell_value(base, c)),
        }
    };
    let mut out = State::new(base.kappa.clone());
    for c in base.constants.keys() {
        out.constants
            .insert(c.clone(), OrdinalNotation::nat(value(&Cell::Const(c.clone()))?));
    }
    let mut members: BTreeMap<&str, BTreeSet<u64>> = BTreeMap::new();
    let mut tuples: BTreeMap<&str, BTreeSet<Tuple>> = BTreeMap::new();
    for (r, set) in &base.unary {
        members.entry(r).or_default().extend(set.support.iter().map(nat_of));
    }
    for c in classes.keys() {
        if let Cell::Member(r, e) = c {
            members.entry(r.as_str()).or_default().insert(*e);
        }
    }
    for (r, elems) in members {
        let tail = value(&Cell::Tail(r.to_string()))?;
        let mut support = Vec::new();
        for e in elems {
            if value(&Cell::Member(r.to_string(), e))? != tail {
                support.push(OrdinalNotation::nat(e));
            }
        }
        let set = if tail == 1 {
            OrdinalSet::cofinite(support)
        } else {
            OrdinalSet::finite(support)
        };
        let set = match base.kappa.as_nat() {
            Some(n) => set.materialize_below(n),
            None => set,
        };
        out.unary.insert(r.to_string(), set);
    }
    let mut candidates: BTreeSet<Cell> = cells_of(base, sigma)
        .into_keys()
        .filter(|c| matches!(c, Cell::Tuple(..) | Cell::Value(..)))
        .collect();
    candidates.extend(classes.keys().filter(|c| matches!(c, Cell::Tuple(..) | Cell::Value(..))).cloned());
    for r in base.nary.keys() {
        tuples.entry(r).or_default();
    }
    for c in &candidates {
        let v = value(c)?;
        let nat = OrdinalNotation::nat;
        match c {
            Cell::Tuple(r, t) if v == 1 => {
                tuples.entry(r).or_default().insert(t.iter().map(|&x| nat(x)).collect());
            }
            Cell::Value(g, args) if v != 0 => {
                let mut t: Tuple = args.iter().map(|&x| nat(x)).collect();
                t.push(nat(v));
                tuples.entry(g).or_default().insert(t);
            }
            _ => {}
        }
    }
    for (r, ts) in tuples {
        out.nary.insert(r.to_string(), ts);
    }
    Ok(out)
}

/// Pointwise minimum over one period of an exactly repeating tail.
pub fn cycle_classes(cycle: &[State], sigma: &Signature) -> BTreeMap<Cell, TailClass> {
    let mut cells: BTreeSet<Cell> = BTreeSet::new();
    for s in cycle {
        cells.extend(cells_of(s, sigma).into_keys());
    }
    cells
        .into_iter()
        .map(|c| {
            let vals: Vec<u64> = cycle.iter().map(|s| cell_value(s, &c)).collect();
            let min = *vals.iter().min().expect("cycle is non-empty");
            let cls = if vals.iter().all(|&v| v == min) {
                TailClass::Stable(min)
            } else {
                TailClass::Periodic(min)
            };
            (c, cls)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotPolicy {
    /// Initial state, every limit state and the final state.
    Sparse,
    EveryStep,
}

#[derive(Debug, Clone)]
pub struct Budget {
    pub max_steps_per_segment: u64,
    pub max_limit_jumps: u64,
    pub snapshots: SnapshotPolicy,
    /// Events per cell kept for tail classification.
    pub window: usize,
    /// Record every cell change in the trace.
    pub record_events: bool,
    /// When set, only changes to these symbols are recorded.
    pub watch: Option<BTreeSet<String>>,
    /// Enumerate the whole base set in every quantifier (finite κ only).
    pub exhaustive: bool,
    /// Re-check each step against the assembled transition sentence.
    pub check_coherence: bool,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_steps_per_segment: 100_000,
            max_limit_jumps: 8,
            snapshots: SnapshotPolicy::Sparse,
            window: 64,
            record_events: true,
            watch: None,
            exhaustive: false,
            check_coherence: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Full,
    /// Fail as soon as the clock reaches κ.
    Short,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub stamp: OrdinalNotation,
    pub cell: Cell,
    pub old: u64,
    pub new: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitRecord {
    pub at: OrdinalNotation,
    /// Cells whose value changed in the segment before the limit.
    pub cells: Vec<(Cell, TailClass)>,
    /// True when the limit came from an exactly repeating state.
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FailReason {
    NotShort,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Terminated {
        final_state: State,
        output: OrdinalSet,
        /// Length of the run: one more than the stamp of the final state.
        length: OrdinalNotation,
    },
    OutOfBudget,
    LimitUnresolved(OrdinalNotation),
    Failed(FailReason),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunTrace {
    pub machine_id: String,
    pub input: OrdinalSet,
    pub events: Vec<Event>,
    pub snapshots: Vec<(OrdinalNotation, State)>,
    pub limits: Vec<LimitRecord>,
    pub outcome: Outcome,
    pub successor_steps: u64,
    pub warnings: Vec<String>,
}

impl RunTrace {
    pub fn output(&self) -> Option<&OrdinalSet> {
        match &self.outcome {
            Outcome::Terminated { output, .. } => Some(output),
            _ => None,
        }
    }

    pub fn is_short(&self, kappa: &OrdinalNotation) -> bool {
        matches!(&self.outcome, Outcome::Terminated { length, .. } if length < kappa)
    }

    /// Newline-delimited records, one per event, snapshot, limit and the
    /// outcome.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("kind=run machine={} input={}\n", self.machine_id, self.input));
        for e in &self.events {
            out.push_str(&format!(
                "kind=event stamp={} cell={} old={} new={}\n",
                e.stamp, e.cell, e.old, e.new
            ));
        }
        for (t, s) in &self.snapshots {
            out.push_str(&format!("kind=snapshot stamp={t} state={s}\n"));
        }
        for l in &self.limits {
            let cls: Vec<String> = l.cells.iter().map(|(c, k)| format!("{c}:{k}")).collect();
            out.push_str(&format!(
                "kind=limit stamp={} verified={} cells={}\n",
                l.at,
                l.verified,
                cls.join(";")
            ));
        }
        for w in &self.warnings {
            out.push_str(&format!("kind=warning msg={w}\n"));
        }
        let outcome = match &self.outcome {
            Outcome::Terminated { output, length, .. } => format!("terminated length={length} output={output}"),
            Outcome::OutOfBudget => "out-of-budget".into(),
            Outcome::LimitUnresolved(g) => format!("limit-unresolved at={g}"),
            Outcome::Failed(FailReason::NotShort) => "failed reason=not-short".into(),
        };
        out.push_str(&format!("kind=outcome {outcome} steps={}\n", self.successor_steps));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("step at {stamp} failed: {source}")]
    Step { stamp: OrdinalNotation, source: StepError },
    #[error("loading failed: {0}")]
    Load(StepError),
    #[error("step at {0} does not satisfy the transition sentence")]
    Incoherent(OrdinalNotation),
    #[error("clock overflow: {0}")]
    Clock(#[from] OrdinalError),
}

struct CellLog {
    window: VecDeque<u64>,
    last_change: u64,
    /// Smallest value taken in the second half of a full segment, and how
    /// often it was taken there.
    late_min: Option<(u64, u32)>,
}

/// Per-cell histories within one segment.
struct Tracker {
    logs: HashMap<Cell, CellLog>,
    tracked: HashMap<String, BTreeSet<u64>>,
    cap: usize,
    half: u64,
}

impl Tracker {
    fn new(cap: usize, half: u64) -> Self {
        Self {
            logs: HashMap::new(),
            tracked: HashMap::new(),
            cap,
            half,
        }
    }

    fn push(&mut self, cell: Cell, old: u64, new: u64, k: u64, seed: Option<&CellLog>) {
        let cap = self.cap;
        let log = self.logs.entry(cell).or_insert_with(|| match seed {
            Some(s) => CellLog {
                window: s.window.clone(),
                last_change: s.last_change,
                late_min: s.late_min,
            },
            None => CellLog {
                window: VecDeque::from([old]),
                last_change: 0,
                late_min: None,
            },
        });
        if k >= self.half {
            log.late_min = match log.late_min {
                Some((m, n)) if m == new => Some((m, n + 1)),
                Some((m, n)) if m < new => Some((m, n)),
                _ => Some((new, 1)),
            };
        }
        log.window.push_back(new);
        while log.window.len() > cap + 1 {
            log.window.pop_front();
        }
        log.last_change = k;
    }

    /// Records the changes from `a` to `b` at segment step `k`.
    fn diff(&mut self, a: &State, b: &State, sigma: &Signature, k: u64, mut sink: impl FnMut(Cell, u64, u64)) {
        for (c, va) in &a.constants {
            let (x, y) = (nat_of(va), b.constants.get(c).map(nat_of).unwrap_or(0));
            if x != y {
                self.push(Cell::Const(c.clone()), x, y, k, None);
                sink(Cell::Const(c.clone()), x, y);
            }
        }
        for (r, sa) in &a.unary {
            let empty = OrdinalSet::empty();
            let sb = b.unary.get(r).unwrap_or(&empty);
            let ta = u64::from(sa.polarity == Polarity::Cofinite);
            let tb = u64::from(sb.polarity == Polarity::Cofinite);
            let tail_cell = Cell::Tail(r.clone());
            // New elements inherit the tail's history before the tail moves.
            let tail_log = self.logs.get(&tail_cell).map(|l| CellLog {
                window: l.window.clone(),
                last_change: l.last_change,
                late_min: l.late_min,
            });
            let tracked = self.tracked.entry(r.clone()).or_default();
            let mut elems: BTreeSet<u64> = tracked.clone();
            elems.extend(sa.support.iter().map(nat_of));
            elems.extend(sb.support.iter().map(nat_of));
            tracked.extend(elems.iter().copied());
            for e in elems {
                let x = sa.contains(&OrdinalNotation::nat(e)) as u64;
                let y = sb.contains(&OrdinalNotation::nat(e)) as u64;
                if x != y {
                    let cell = Cell::Member(r.clone(), e);
                    let seed = if self.logs.contains_key(&cell) { None } else { tail_log.as_ref() };
                    self.push(cell.clone(), x, y, k, seed);
                    sink(cell, x, y);
                }
            }
            if ta != tb {
                self.push(tail_cell.clone(), ta, tb, k, None);
                sink(tail_cell, ta, tb);
            }
        }
        for (r, ta) in &a.nary {
            let empty = BTreeSet::new();
            let tb = b.nary.get(r).unwrap_or(&empty);
            if ta == tb {
                continue;
            }
            let is_func = sigma.get(r).is_some_and(|d| d.kind == SymbolKind::Function);
            let mut cells = BTreeSet::new();
            for t in ta.symmetric_difference(tb) {
                let t: Vec<u64> = t.iter().map(nat_of).collect();
                cells.insert(if is_func {
                    Cell::Value(r.clone(), t[..t.len() - 1].to_vec())
                } else {
                    Cell::Tuple(r.clone(), t)
                });
            }
            for c in cells {
                let (x, y) = (cell_value(a, &c), cell_value(b, &c));
                if x != y {
                    self.push(c.clone(), x, y, k, None);
                    sink(c, x, y);
                }
            }
        }
    }

    fn classify(&self, steps: u64) -> BTreeMap<Cell, TailClass> {
        // A cell silent for the second half of a long segment counts as settled.
        let quiet_after = steps / 2;
        self.logs
            .iter()
            .map(|(c, log)| {
                let values: Vec<u64> = log.window.iter().copied().collect();
                let quiet = steps >= 16 && log.last_change < quiet_after;
                let class = match (classify_tail(&values, quiet), log.late_min) {
                    // The window is too short to see the low point recur, but
                    // the second half of the segment did.
                    (TailClass::Unknown, Some((m, n))) if n >= 2 => TailClass::Periodic(m),
                    (class, _) => class,
                };
                (c.clone(), class)
            })
            .collect()
    }
}

fn state_hash(s: &State) -> u64 {
    let mut h = DefaultHasher::new();
    s.hash(&mut h);
    h.finish()
}

struct Clock {
    base: OrdinalNotation,
    k: u64,
}

impl Clock {
    fn stamp(&self) -> Result<OrdinalNotation, OrdinalError> {
        self.base.add_nat(self.k)
    }
}

/// Runs `m` on `input` until it reaches a fixed point, exhausts the budget
/// or hits a limit it cannot resolve.
pub fn run(m: &ValidatedMachine, input: &OrdinalSet, budget: &Budget, mode: RunMode) -> Result<RunTrace, RunError> {
    let spec = &m.spec;
    let sigma = &spec.sigma;
    let stepper = Stepper::transition(spec, budget.exhaustive).map_err(RunError::Load)?;
    let mut s = load(m, input).map_err(RunError::Load)?;
    let mut trace = RunTrace {
        machine_id: machine_id(spec),
        input: input.clone(),
        events: Vec::new(),
        snapshots: Vec::new(),
        limits: Vec::new(),
        outcome: Outcome::OutOfBudget,
        successor_steps: 0,
        warnings: Vec::new(),
    };
    let mut clock = Clock {
        base: OrdinalNotation::zero(),
        k: 0,
    };
    trace.snapshots.push((clock.stamp()?, s.clone()));
    let mut seen: HashMap<u64, OrdinalNotation> = HashMap::new();
    seen.insert(state_hash(&s), clock.stamp()?);
    let mut warned = false;
    let mut jumps = 0u64;
    let kappa_n = spec.kappa.as_nat();
    loop {
        let mut tracker = Tracker::new(budget.window, budget.max_steps_per_segment / 2);
        let mut hashes: HashMap<u64, u64> = HashMap::new();
        hashes.insert(state_hash(&s), 0);
        let mut seg_steps = 0u64;
        // (segment step where the candidate cycle starts, its state, period, states seen)
        let mut probe: Option<(u64, State, u64, Vec<State>)> = None;
        let classes = loop {
            if seg_steps >= budget.max_steps_per_segment {
                break None;
            }
            let next = stepper.step(&s).map_err(|source| RunError::Step {
                stamp: clock.stamp().unwrap_or_else(|_| clock.base.clone()),
                source,
            })?;
            if budget.check_coherence {
                let ok = match kappa_n {
                    Some(n) => sat2(&s, &next, &m.tau_sentence, EvalDomain::SurrogateFinite(n)),
                    None => sat2_exact(&s, &next, &m.tau_sentence),
                };
                if !ok.unwrap_or(false) {
                    return Err(RunError::Incoherent(clock.stamp()?));
                }
            }
            if next == s {
                let stamp = clock.stamp()?;
                if budget.snapshots == SnapshotPolicy::Sparse && trace.snapshots.last().map(|x| &x.0) != Some(&stamp) {
                    trace.snapshots.push((stamp.clone(), s.clone()));
                }
                trace.outcome = Outcome::Terminated {
                    output: unload(m, &s),
                    final_state: s,
                    length: stamp.successor()?,
                };
                return Ok(trace);
            }
            clock.k += 1;
            seg_steps += 1;
            trace.successor_steps += 1;
            let stamp = clock.stamp()?;
            if mode == RunMode::Short && kappa_n.is_some_and(|n| clock.base.is_zero() && clock.k >= n) {
                trace.outcome = Outcome::Failed(FailReason::NotShort);
                return Ok(trace);
            }
            let record = budget.record_events;
            let watch = budget.watch.as_ref();
            let events = &mut trace.events;
            tracker.diff(&s, &next, sigma, seg_steps, |cell, old, new| {
                if record && watch.is_none_or(|w| w.contains(cell.symbol())) {
                    events.push(Event {
                        stamp: stamp.clone(),
                        cell,
                        old,
                        new,
                    });
                }
            });
            s = next;
            if budget.snapshots == SnapshotPolicy::EveryStep {
                trace.snapshots.push((stamp.clone(), s.clone()));
            }
            let h = state_hash(&s);
            if !warned {
                if let Some(first) = seen.get(&h) {
                    trace
                        .warnings
                        .push(format!("run is not injective: the state at {first} recurs at {stamp}"));
                    warned = true;
                } else {
                    seen.insert(h, stamp.clone());
                }
            }
            if let Some((start, st, p, states)) = probe.as_mut() {
                if seg_steps == *start + *p {
                    if s == *st {
                        break Some(cycle_classes(states, sigma));
                    }
                    probe = None;
                } else {
                    states.push(s.clone());
                }
            }
            match hashes.get(&h) {
                Some(&k0) if probe.is_none() => {
                    probe = Some((seg_steps, s.clone(), seg_steps - k0, vec![s.clone()]));
                }
                Some(_) => {}
                None => {
                    hashes.insert(h, seg_steps);
                }
            }
        };
        let verified = classes.is_some();
        let classes = classes.unwrap_or_else(|| tracker.classify(seg_steps));
        let limit = clock.stamp()?.next_limit()?;
        if jumps >= budget.max_limit_jumps {
            trace.outcome = Outcome::OutOfBudget;
            return Ok(trace);
        }
        if mode == RunMode::Short && limit >= spec.kappa {
            trace.outcome = Outcome::Failed(FailReason::NotShort);
            return Ok(trace);
        }
        let record = LimitRecord {
            at: limit.clone(),
            cells: classes
                .iter()
                .filter(|(c, cls)| !matches!(cls, TailClass::Stable(v) if cell_value(&s, c) == *v))
                .map(|(c, cls)| (c.clone(), *cls))
                .collect(),
            verified,
        };
        trace.limits.push(record);
        match limit_state(&s, sigma, &classes) {
            Ok(next) => s = next,
            Err(_) => {
                trace.outcome = Outcome::LimitUnresolved(limit);
                return Ok(trace);
            }
        }
        jumps += 1;
        clock = Clock { base: limit, k: 0 };
        let stamp = clock.stamp()?;
        trace.snapshots.push((stamp.clone(), s.clone()));
        let h = state_hash(&s);
        if !warned {
            if let Some(first) = seen.get(&h) {
                trace
                    .warnings
                    .push(format!("run is not injective: the state at {first} recurs at {stamp}"));
                warned = true;
            } else {
                seen.insert(h, stamp);
            }
        }
    }
}

/// A short stable name for a machine: a hash of its printed description.
pub fn machine_id(spec: &MachineSpec) -> String {
    let mut h = DefaultHasher::new();
    crate::specfile::print_spec(spec).hash(&mut h);
    format!("{:016x}", h.finish())
}

/// Evidence that `m` computes `b` from `a`, or the reason it does not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate {
    Certified { trace: RunTrace, short: bool },
    Refused { actual: Option<OrdinalSet>, trace: RunTrace },
}

pub fn certify_reduction(
    m: &ValidatedMachine,
    a: &OrdinalSet,
    b: &OrdinalSet,
    budget: &Budget,
) -> Result<Certificate, RunError> {
    let trace = run(m, a, budget, RunMode::Full)?;
    Ok(match trace.output().cloned() {
        Some(out) if out == *b => {
            let short = trace.is_short(&m.spec.kappa);
            Certificate::Certified { trace, short }
        }
        actual => Certificate::Refused { actual, trace },
    })
}

/// Literal checks of a terminated trace: per-cell stamps increase, the
/// final state is a fixed point, snapshots after a successor step differ
/// from their predecessor, and each limit snapshot agrees with the classes
/// recorded for it.
pub fn check_trace(m: &ValidatedMachine, trace: &RunTrace) -> Result<(), String> {
    let mut last: HashMap<&Cell, &OrdinalNotation> = HashMap::new();
    for e in &trace.events {
        if let Some(prev) = last.get(&e.cell) {
            if *prev >= &e.stamp {
                return Err(format!("cell {} has non-increasing stamps at {}", e.cell, e.stamp));
            }
        }
        last.insert(&e.cell, &e.stamp);
    }
    for w in trace.snapshots.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if b.0.is_successor() && a.0.successor().ok().as_ref() == Some(&b.0) && a.1 == b.1 {
            return Err(format!("consecutive states at {} and {} coincide", a.0, b.0));
        }
    }
    for l in &trace.limits {
        let Some((_, s)) = trace.snapshots.iter().find(|(t, _)| *t == l.at) else {
            return Err(format!("no snapshot at limit {}", l.at));
        };
        for (c, cls) in &l.cells {
            if cls.limit_value() != Some(cell_value(s, c)) {
                return Err(format!("cell {c} at {} is {} but classified {cls}", l.at, cell_value(s, c)));
            }
        }
    }
    if let Outcome::Terminated { final_state, .. } = &trace.outcome {
        let next = step(m, final_state).map_err(|e| e.to_string())?;
        if next != *final_state {
            return Err("final state is not a fixed point".into());
        }
    }
    Ok(())
}
