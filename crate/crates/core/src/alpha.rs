//! Reference α-machines with α = ω: a binary tape, an oracle set and
//! finitely many natural parameters. Used as an independent oracle for the
//! sequential machine that simulates them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::logic::{Formula, Signature, SymbolDecl, Term};
use crate::ordinal::{unpair_nat, OrdinalNotation, OrdinalSet};
use crate::runtime::{classify_tail, run, Budget, Outcome, RunError, RunMode, TailClass};
use crate::state::{Flavor, ParamValue};
use crate::transforms::tm::{Move, TmSpec};
use crate::transforms::{cases, is, k0, lit, pair_one, pred_of, r0, succ_of, succ_or_stay, witness};
use crate::validator::{MachineSpec, ValidatedMachine};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaRow {
    Write { state: usize, bit: u8, mv: Move },
    /// Branch on whether the head position is in the oracle.
    Oracle { yes: usize, no: usize },
    /// Branch on whether the head sits on parameter `index`.
    Param { index: usize, yes: usize, no: usize },
}

/// Program over states `0 .. states`; 0 is initial, `states - 1` final.
/// A non-final state has either two write rows (one per bit read) or a
/// single branch row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaMachineSpec {
    pub states: usize,
    pub rows: BTreeMap<(usize, Option<u8>), AlphaRow>,
    pub params: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaConfig {
    pub head: OrdinalNotation,
    pub state: usize,
    pub tape: OrdinalSet,
    pub oracle: OrdinalSet,
    pub clock: OrdinalNotation,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlphaError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("bad program: {0}")]
    BadProgram(String),
    /// The head positions have no lim inf below α.
    #[error("head position runs off the tape at the limit")]
    Crashed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlphaOutcome {
    Halted { output: BTreeSet<u64>, steps: u64 },
    NotHalted { steps: u64 },
}

impl AlphaMachineSpec {
    pub fn new(states: usize, rows: BTreeMap<(usize, Option<u8>), AlphaRow>, params: Vec<u64>) -> Result<Self, AlphaError> {
        let bad = |m: String| Err(AlphaError::BadProgram(m));
        if states == 0 {
            return bad("needs at least one state".into());
        }
        for (&(q, key), row) in &rows {
            if q + 1 >= states {
                return bad(format!("row for state {q}, which is final or out of range"));
            }
            let targets = match *row {
                AlphaRow::Write { state, bit, .. } => {
                    if bit > 1 || key.is_none() {
                        return bad(format!("malformed write row for state {q}"));
                    }
                    vec![state]
                }
                AlphaRow::Oracle { yes, no } => vec![yes, no],
                AlphaRow::Param { index, yes, no } => {
                    if index >= params.len() {
                        return bad(format!("state {q} reads parameter {index}, which is not declared"));
                    }
                    vec![yes, no]
                }
            };
            if targets.iter().any(|&t| t >= states) {
                return bad(format!("row for state {q} jumps out of range"));
            }
        }
        for q in 0..states - 1 {
            let branch = rows.contains_key(&(q, None));
            let writes = (0..2).filter(|b| rows.contains_key(&(q, Some(*b)))).count();
            if !(branch && writes == 0 || !branch && writes == 2) {
                return bad(format!("state {q} needs two write rows or one branch row"));
            }
        }
        Ok(Self { states, rows, params })
    }

    fn row(&self, q: usize, bit: u8) -> AlphaRow {
        self.rows.get(&(q, None)).copied().unwrap_or_else(|| self.rows[&(q, Some(bit))])
    }
}

/// Splits a code `⟨X, O⟩` back into `X` and `O`; codes of other pairs
/// are ignored.
pub fn decode_pair(code: &BTreeSet<u64>) -> (BTreeSet<u64>, BTreeSet<u64>) {
    let (mut x, mut o) = (BTreeSet::new(), BTreeSet::new());
    for &c in code {
        match unpair_nat(c) {
            (0, a) => x.insert(a),
            (1, a) => o.insert(a),
            _ => false,
        };
    }
    (x, o)
}

/// Runs on the coded input `⟨X, O⟩` (tape `X`, oracle `O`) for at most
/// `max_steps` successor steps. At α = ω a run that has not halted by then
/// is reported as not halting; [`limit_config`] covers what would follow.
pub fn run_alpha_machine(spec: &AlphaMachineSpec, input: &BTreeSet<u64>, max_steps: u64) -> AlphaOutcome {
    let (x, o) = decode_pair(input);
    let mut tape = x.clone();
    let (mut q, mut h, mut steps) = (0usize, 0u64, 0u64);
    while q + 1 < spec.states {
        if steps == max_steps {
            return AlphaOutcome::NotHalted { steps };
        }
        let bit = u8::from(tape.contains(&h));
        q = match spec.row(q, bit) {
            AlphaRow::Write { state, bit, mv } => {
                if bit == 1 {
                    tape.insert(h);
                } else {
                    tape.remove(&h);
                }
                h = match mv {
                    Move::Left => h.saturating_sub(1),
                    Move::Right => h + 1,
                };
                state
            }
            AlphaRow::Oracle { yes, no } => {
                if o.contains(&h) {
                    yes
                } else {
                    no
                }
            }
            AlphaRow::Param { index, yes, no } => {
                if spec.params[index] == h {
                    yes
                } else {
                    no
                }
            }
        };
        steps += 1;
    }
    AlphaOutcome::Halted { output: tape, steps }
}

/// The configuration at the limit `at` of the run whose recent history is
/// `history`: head, state and every tape cell take the lim inf of their
/// values. A head that climbs without bound, or whose tail cannot be
/// judged, crashes the machine.
pub fn limit_config(history: &[AlphaConfig], at: OrdinalNotation) -> Result<AlphaConfig, AlphaError> {
    let last = history.last().ok_or(AlphaError::Crashed)?;
    let nat = |o: &OrdinalNotation| o.as_nat().expect("α = ω");
    let tail = |values: Vec<u64>| {
        let mut changes = vec![values[0]];
        changes.extend(values.windows(2).filter(|w| w[0] != w[1]).map(|w| w[1]));
        classify_tail(&changes, false)
    };
    let head = match tail(history.iter().map(|c| nat(&c.head)).collect()) {
        TailClass::Unbounded | TailClass::Unknown => return Err(AlphaError::Crashed),
        c => c.limit_value().expect("bounded"),
    };
    let state = tail(history.iter().map(|c| c.state as u64).collect()).limit_value().unwrap_or(0) as usize;
    let cells: BTreeSet<u64> = history.iter().flat_map(|c| c.tape.support.iter().map(nat)).collect();
    let tape = cells.into_iter().filter(|&cell| {
        let bits = history
            .iter()
            .map(|c| u64::from(c.tape.contains(&OrdinalNotation::nat(cell))))
            .collect();
        tail(bits).limit_value() == Some(1)
    });
    Ok(AlphaConfig {
        head: OrdinalNotation::nat(head),
        state,
        tape: OrdinalSet::finite(tape.map(OrdinalNotation::nat)),
        oracle: last.oracle.clone(),
        clock: at,
    })
}

impl From<&TmSpec> for AlphaMachineSpec {
    /// The same program with no oracle reads and no parameters.
    fn from(tm: &TmSpec) -> Self {
        let rows = tm
            .rows()
            .map(|(&(q, b), &(state, bit, mv))| ((q, Some(b)), AlphaRow::Write { state, bit, mv }))
            .collect();
        Self::new(tm.states(), rows, Vec::new()).expect("Turing machines are total")
    }
}

impl FromStr for AlphaMachineSpec {
    type Err = AlphaError;

    /// The Turing-machine table format plus `params: a, b, ..`, branch rows
    /// `(q) oracle -> (yes, no)` and `(q) param i -> (yes, no)`.
    fn from_str(text: &str) -> Result<Self, AlphaError> {
        let mut states = None;
        let mut params = Vec::new();
        let mut rows = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            let err = |msg: String| AlphaError::Syntax { line: i + 1, msg };
            if line.is_empty() {
                continue;
            }
            let num = |s: &str| s.trim().parse::<usize>().map_err(|_| err(format!("bad number `{}`", s.trim())));
            if let Some(n) = line.strip_prefix("states:") {
                states = Some(num(n)?);
                continue;
            }
            if let Some(list) = line.strip_prefix("params:") {
                params = list
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| num(s).map(|v| v as u64))
                    .collect::<Result<_, _>>()?;
                continue;
            }
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or_else(|| err("expected a row `(...) -> (...)`".into()))?;
            let close = lhs.find(')').ok_or_else(|| err("expected `(`".into()))?;
            let head: Vec<&str> = lhs[..close].trim().trim_start_matches('(').split(',').collect();
            let kind = lhs[close + 1..].trim();
            let out: Vec<&str> = rhs.trim().trim_start_matches('(').trim_end_matches(')').split(',').collect();
            let q = num(head[0])?;
            let (key, row) = match (head.len(), kind.split_whitespace().collect::<Vec<_>>().as_slice()) {
                (2, []) if out.len() == 3 => {
                    let bit = |s: &str| match s.trim() {
                        "0" => Ok(0u8),
                        "1" => Ok(1u8),
                        o => Err(err(format!("bad bit `{o}`"))),
                    };
                    let mv = match out[2].trim() {
                        "L" => Move::Left,
                        "R" => Move::Right,
                        o => return Err(err(format!("bad move `{o}`"))),
                    };
                    let row = AlphaRow::Write {
                        state: num(out[0])?,
                        bit: bit(out[1])?,
                        mv,
                    };
                    ((q, Some(bit(head[1])?)), row)
                }
                (1, ["oracle"]) if out.len() == 2 => (
                    (q, None),
                    AlphaRow::Oracle {
                        yes: num(out[0])?,
                        no: num(out[1])?,
                    },
                ),
                (1, ["param", i]) if out.len() == 2 => (
                    (q, None),
                    AlphaRow::Param {
                        index: num(i)?,
                        yes: num(out[0])?,
                        no: num(out[1])?,
                    },
                ),
                _ => return Err(err("unrecognised row".into())),
            };
            if rows.insert(key, row).is_some() {
                return Err(err(format!("duplicate row for state {q}")));
            }
        }
        let states = states.ok_or(AlphaError::Syntax {
            line: 1,
            msg: "missing `states:` line".into(),
        })?;
        Self::new(states, rows, params)
    }
}

impl fmt::Display for AlphaMachineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "states: {}", self.states)?;
        if !self.params.is_empty() {
            let ps: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
            writeln!(f, "params: {}", ps.join(", "))?;
        }
        for (&(q, key), row) in &self.rows {
            match (*row, key) {
                (AlphaRow::Write { state, bit, mv }, Some(b)) => {
                    let m = if mv == Move::Left { "L" } else { "R" };
                    writeln!(f, "({q}, {b}) -> ({state}, {bit}, {m})")?
                }
                (AlphaRow::Oracle { yes, no }, _) => writeln!(f, "({q}) oracle -> ({yes}, {no})")?,
                (AlphaRow::Param { index, yes, no }, _) => writeln!(f, "({q}) param {index} -> ({yes}, {no})")?,
                _ => unreachable!("write rows carry a bit"),
            }
        }
        Ok(())
    }
}

/// A machine over ω whose input is `⟨X, O⟩` coded by
/// [`crate::transforms::code_pair`]. A prelude walks `b` upward with
/// `q = b²`, copying `X` onto `Out` (the tape) and `O` into the oracle
/// relation until no code is left. Then each step performs one row of the
/// program. Parameters become parameter constants `p0, p1, ..`.
pub fn simulate_alpha_as_gseqap(spec: &AlphaMachineSpec) -> MachineSpec {
    let pnames: Vec<String> = (0..spec.params.len()).map(|i| format!("p{i}")).collect();
    let mut decls: Vec<SymbolDecl> = Signature::standard().iter().cloned().collect();
    for c in ["h", "t", "e", "b", "q", "s", "g"] {
        decls.push(SymbolDecl::constant(c));
    }
    decls.push(SymbolDecl::relation("O", 1));
    decls.extend(pnames.iter().map(|p| SymbolDecl::constant(p)));
    let sigma = Signature::new(decls).expect("distinct names");

    let x = || Term::var("x");
    let set = |v: u64| Formula::eq(x(), lit(v));
    let next = |c: &str| succ_of(x(), k0(c));
    let keep_c = |c: &str| Formula::eq(x(), k0(c));
    let and = Formula::and;
    let not = Formula::not;
    let y = || Term::var("y");
    let z = || Term::var("z");
    // No code above pair(1, b) is left; from b = 1 on, every later code is
    // at least (b + 1)².
    let last = and(
        not(is("b", 0)),
        not(Formula::exists(
            "y",
            Formula::exists("z", Formula::and_all([pair_one(z(), "b", "q"), Formula::lt(z(), y()), r0("In", vec![y()])])),
        )),
    );
    let here = Formula::eq(x(), k0("b"));
    let head_cell = r0("Out", vec![k0("h")]);
    let oracle_bit = Formula::exists("z", and(pair_one(z(), "b", "q"), r0("In", vec![z()])));

    let mut sit: Vec<(Formula, BTreeMap<&str, Formula>)> = vec![
        (
            and(is("e", 0), last),
            BTreeMap::from([
                ("e", set(2)),
                ("Out", Formula::or(r0("Out", vec![x()]), and(here.clone(), r0("In", vec![k0("q")])))),
                ("O", Formula::or(r0("O", vec![x()]), and(here.clone(), oracle_bit.clone()))),
            ]),
        ),
        (
            is("e", 0),
            BTreeMap::from([
                ("e", set(1)),
                ("s", set(0)),
                ("g", set(0)),
                ("Out", Formula::or(r0("Out", vec![x()]), and(here.clone(), r0("In", vec![k0("q")])))),
                ("O", Formula::or(r0("O", vec![x()]), and(here, oracle_bit))),
            ]),
        ),
        (
            Formula::and_all([is("e", 1), is("g", 0), Formula::eq(k0("s"), k0("b"))]),
            BTreeMap::from([("g", set(1)), ("s", set(0))]),
        ),
        (
            and(is("e", 1), is("g", 0)),
            BTreeMap::from([("q", next("q")), ("s", next("s"))]),
        ),
        (
            and(is("e", 1), Formula::eq(k0("s"), k0("b"))),
            BTreeMap::from([("q", next("q")), ("b", next("b")), ("g", set(0)), ("s", set(0)), ("e", set(0))]),
        ),
        (is("e", 1), BTreeMap::from([("q", next("q")), ("s", next("s"))])),
    ];
    for (&(j, key), row) in &spec.rows {
        let at = is("t", j as u64);
        match (*row, key) {
            (AlphaRow::Write { state, bit, mv }, Some(read)) => {
                let reading = if read == 1 { head_cell.clone() } else { not(head_cell.clone()) };
                let write = if bit == 1 { Formula::truth() } else { Formula::falsity() };
                let moved = match mv {
                    Move::Left => pred_of(x(), k0("h")),
                    Move::Right => succ_or_stay(x(), k0("h")),
                };
                let out = Formula::or(
                    and(Formula::neq(x(), k0("h")), r0("Out", vec![x()])),
                    and(Formula::eq(x(), k0("h")), write),
                );
                sit.push((
                    and(at, reading),
                    BTreeMap::from([("t", set(state as u64)), ("h", moved), ("Out", out)]),
                ));
            }
            (AlphaRow::Oracle { yes, no }, _) => {
                sit.push((and(at.clone(), r0("O", vec![k0("h")])), BTreeMap::from([("t", set(yes as u64))])));
                sit.push((at, BTreeMap::from([("t", set(no as u64))])));
            }
            (AlphaRow::Param { index, yes, no }, _) => {
                let on = Formula::eq(k0("h"), k0(&pnames[index]));
                sit.push((and(at.clone(), on), BTreeMap::from([("t", set(yes as u64))])));
                sit.push((at, BTreeMap::from([("t", set(no as u64))])));
            }
            _ => unreachable!("write rows carry a bit"),
        }
    }

    let mut tau = BTreeMap::new();
    let mut defaults = BTreeMap::new();
    for d in sigma.iter() {
        let name = d.name.as_str();
        let stay = match name {
            "in" => continue,
            "In" | "Out" | "O" => r0(name, vec![x()]),
            _ => keep_c(name),
        };
        let list = sit
            .iter()
            .map(|(g, rows)| (g.clone(), rows.get(name).cloned().unwrap_or_else(|| stay.clone())))
            .collect();
        tau.insert(d.name.clone(), witness(d, cases(list, stay.clone())));
        if name != "In" && name != "Out" && !pnames.contains(&d.name) {
            let zero = if name == "O" { Formula::falsity() } else { set(0) };
            defaults.insert(d.name.clone(), witness(d, zero));
        }
    }
    let params: BTreeMap<String, ParamValue> = pnames
        .iter()
        .zip(&spec.params)
        .map(|(n, &v)| (n.clone(), ParamValue::Ordinal(OrdinalNotation::nat(v))))
        .collect();
    MachineSpec {
        kappa: OrdinalNotation::omega(),
        sigma,
        flavor: if params.is_empty() { Flavor::GSeqA } else { Flavor::GSeqAP },
        params,
        tau,
        defaults,
    }
}

/// One input of a cross-check between an α-machine and its simulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossRow {
    /// The coded input `⟨X, O⟩`.
    pub input: BTreeSet<u64>,
    pub reference: AlphaOutcome,
    /// Output of a short terminating run, if the simulation had one.
    pub simulated: Option<BTreeSet<u64>>,
    pub agree: bool,
}

/// Runs `spec` directly and `sim` under the runtime on every input and
/// compares: the reference halts with output `B` exactly when the
/// simulation has a short terminating run with output `B`.
pub fn crosscheck(
    spec: &AlphaMachineSpec,
    sim: &ValidatedMachine,
    inputs: &[BTreeSet<u64>],
    alpha_steps: u64,
    budget: &Budget,
) -> Result<Vec<CrossRow>, RunError> {
    let kappa = OrdinalNotation::omega();
    inputs
        .iter()
        .map(|input| {
            let reference = run_alpha_machine(spec, input, alpha_steps);
            let trace = run(sim, &OrdinalSet::finite(input.iter().map(|&c| OrdinalNotation::nat(c))), budget, RunMode::Short)?;
            let simulated = match (&trace.outcome, trace.is_short(&kappa)) {
                (Outcome::Terminated { output, .. }, true) if output.is_finite() => {
                    Some(output.support.iter().map(|o| o.as_nat().expect("below ω")).collect())
                }
                _ => None,
            };
            let agree = match &reference {
                AlphaOutcome::Halted { output, .. } => simulated.as_ref() == Some(output),
                AlphaOutcome::NotHalted { .. } => simulated.is_none(),
            };
            Ok(CrossRow {
                input: input.clone(),
                reference,
                simulated,
                agree,
            })
        })
        .collect()
}
