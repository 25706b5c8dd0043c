//! Binary Turing machines with an ω-length tape, a direct simulator, and
//! their compilation into sequential machines.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;

use super::{cases, is, k0, lit, pred_of, r0, succ_or_stay, witness, TransformError};
use crate::logic::{Formula, Signature, SymbolDecl, Term};
use crate::ordinal::OrdinalNotation;
use crate::state::Flavor;
use crate::validator::MachineSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Move {
    Left,
    Right,
}

/// States are `0 .. states`; 0 is initial and `states - 1` is the only
/// final state. `delta` is total on the non-final states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmSpec {
    states: usize,
    delta: BTreeMap<(usize, u8), (usize, u8, Move)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TmOutcome {
    Halted { tape: BTreeSet<u64>, steps: u64 },
    Running { steps: u64 },
}

impl TmOutcome {
    pub fn tape(&self) -> Option<&BTreeSet<u64>> {
        match self {
            TmOutcome::Halted { tape, .. } => Some(tape),
            TmOutcome::Running { .. } => None,
        }
    }
}

impl TmSpec {
    pub fn new(states: usize, rows: impl IntoIterator<Item = ((usize, u8), (usize, u8, Move))>) -> Result<Self, TransformError> {
        if states == 0 {
            return Err(TransformError::BadTm("needs at least one state".into()));
        }
        let mut delta = BTreeMap::new();
        for ((q, b), (q2, b2, mv)) in rows {
            if q + 1 >= states {
                return Err(TransformError::BadTm(format!("row for state {q}, which is final or out of range")));
            }
            if q2 >= states || b > 1 || b2 > 1 {
                return Err(TransformError::BadTm(format!("row ({q}, {b}) leaves the state or bit range")));
            }
            if delta.insert((q, b), (q2, b2, mv)).is_some() {
                return Err(TransformError::BadTm(format!("duplicate row ({q}, {b})")));
            }
        }
        for q in 0..states - 1 {
            for b in 0..2 {
                if !delta.contains_key(&(q, b)) {
                    return Err(TransformError::BadTm(format!("no row for ({q}, {b})")));
                }
            }
        }
        Ok(Self { states, delta })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn rows(&self) -> impl Iterator<Item = (&(usize, u8), &(usize, u8, Move))> {
        self.delta.iter()
    }

    /// Runs from state 0 with the head on cell 0. Moving left from cell 0
    /// keeps the head there.
    pub fn simulate(&self, input: &BTreeSet<u64>, max_steps: u64) -> TmOutcome {
        let mut tape = input.clone();
        let (mut q, mut h) = (0usize, 0u64);
        let mut steps = 0;
        while q + 1 < self.states {
            if steps == max_steps {
                return TmOutcome::Running { steps };
            }
            let b = u8::from(tape.contains(&h));
            let (q2, b2, mv) = self.delta[&(q, b)];
            if b2 == 1 {
                tape.insert(h);
            } else {
                tape.remove(&h);
            }
            h = match mv {
                Move::Left => h.saturating_sub(1),
                Move::Right => h + 1,
            };
            q = q2;
            steps += 1;
        }
        TmOutcome::Halted { tape, steps }
    }

    /// A machine with uniformly random rows.
    pub fn random<R: Rng>(rng: &mut R, states: usize) -> Self {
        let rows: Vec<_> = (0..states.saturating_sub(1))
            .flat_map(|q| [(q, 0u8), (q, 1u8)])
            .map(|key| {
                let mv = if rng.gen_bool(0.5) { Move::Left } else { Move::Right };
                (key, (rng.gen_range(0..states), rng.gen_range(0..2u8), mv))
            })
            .collect();
        Self::new(states.max(1), rows).expect("generated rows are total")
    }
}

impl std::str::FromStr for TmSpec {
    type Err = TransformError;

    /// `states: N` followed by rows `(q, b) -> (q', b', L|R)`; `#` starts a
    /// comment.
    fn from_str(text: &str) -> Result<Self, TransformError> {
        let mut states = None;
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            let err = |msg: &str| TransformError::TmSyntax {
                line: i + 1,
                msg: msg.into(),
            };
            if line.is_empty() {
                continue;
            }
            if let Some(n) = line.strip_prefix("states:") {
                states = Some(n.trim().parse::<usize>().map_err(|_| err("bad state count"))?);
                continue;
            }
            let (lhs, rhs) = line.split_once("->").ok_or_else(|| err("expected `(q, b) -> (q', b', L|R)`"))?;
            let fields = |s: &str| -> Vec<String> {
                s.trim()
                    .trim_start_matches('(')
                    .trim_end_matches(')')
                    .split(',')
                    .map(|f| f.trim().to_string())
                    .collect()
            };
            let (l, r) = (fields(lhs), fields(rhs));
            if l.len() != 2 || r.len() != 3 {
                return Err(err("expected `(q, b) -> (q', b', L|R)`"));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| err(&format!("bad number `{s}`")));
            let bit = |s: &str| match s {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                _ => Err(err(&format!("bad bit `{s}`"))),
            };
            let mv = match r[2].as_str() {
                "L" => Move::Left,
                "R" => Move::Right,
                other => return Err(err(&format!("bad move `{other}`"))),
            };
            rows.push(((num(&l[0])?, bit(&l[1])?), (num(&r[0])?, bit(&r[1])?, mv)));
        }
        let states = states.ok_or(TransformError::TmSyntax {
            line: 1,
            msg: "missing `states:` line".into(),
        })?;
        Self::new(states, rows)
    }
}

impl fmt::Display for TmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "states: {}", self.states)?;
        for ((q, b), (q2, b2, mv)) in &self.delta {
            let m = if *mv == Move::Left { "L" } else { "R" };
            writeln!(f, "({q}, {b}) -> ({q2}, {b2}, {m})")?;
        }
        Ok(())
    }
}

/// `h` is the head, `t` the control state and `e` a flag that is 0 only in
/// the loaded state. The first step copies `In` onto `Out`; after that
/// `Out` is the tape. The final state, and any state number out of range,
/// leaves everything unchanged.
pub fn compile_tm(tm: &TmSpec) -> MachineSpec {
    let sigma = Signature::standard()
        .with(SymbolDecl::constant("h"))
        .and_then(|s| s.with(SymbolDecl::constant("t")))
        .and_then(|s| s.with(SymbolDecl::constant("e")))
        .expect("fresh names");
    let x = || Term::var("x");
    let fresh = is("e", 0);
    let reading = |j: usize, b: u8| {
        let cell = r0("Out", vec![k0("h")]);
        let cell = if b == 1 { cell } else { Formula::not(cell) };
        Formula::and(is("t", j as u64), cell)
    };
    let rows: Vec<_> = tm.rows().map(|(&(j, b), &row)| (reading(j, b), row)).collect();

    let mut out_cases = vec![
        (fresh.clone(), r0("In", vec![x()])),
        (Formula::neq(x(), k0("h")), r0("Out", vec![x()])),
    ];
    out_cases.extend(rows.iter().map(|(g, (_, b2, _))| {
        (g.clone(), if *b2 == 1 { Formula::truth() } else { Formula::falsity() })
    }));
    let mut h_cases = vec![(fresh.clone(), Formula::eq(x(), k0("h")))];
    h_cases.extend(rows.iter().map(|(g, (_, _, mv))| {
        let f = match mv {
            Move::Left => pred_of(x(), k0("h")),
            Move::Right => succ_or_stay(x(), k0("h")),
        };
        (g.clone(), f)
    }));
    let mut t_cases = vec![(fresh.clone(), Formula::eq(x(), k0("t")))];
    t_cases.extend(rows.iter().map(|(g, (q2, _, _))| (g.clone(), Formula::eq(x(), lit(*q2 as u64)))));

    let mut tau = BTreeMap::new();
    let mut defaults = BTreeMap::new();
    for d in sigma.iter() {
        let body = match d.name.as_str() {
            "In" => r0("In", vec![x()]),
            "Out" => cases(out_cases.clone(), r0("Out", vec![x()])),
            "h" => cases(h_cases.clone(), Formula::eq(x(), k0("h"))),
            "t" => cases(t_cases.clone(), Formula::eq(x(), k0("t"))),
            "e" => cases(vec![(fresh.clone(), Formula::eq(x(), lit(1)))], Formula::eq(x(), k0("e"))),
            _ => continue,
        };
        tau.insert(d.name.clone(), witness(d, body));
        if matches!(d.name.as_str(), "h" | "t" | "e") {
            defaults.insert(d.name.clone(), witness(d, Formula::eq(x(), lit(0))));
        }
    }
    MachineSpec {
        kappa: OrdinalNotation::omega(),
        sigma,
        flavor: Flavor::GSeqA,
        params: BTreeMap::new(),
        tau,
        defaults,
    }
}
