//! Truth of formulas in states and in pairs of states, and the sets and
//! relations that formulas define.
//!
//! Three evaluation regimes share one compiled engine:
//! - `SurrogateFinite(n)` enumerates `[0, n)` exhaustively.
//! - `Omega` (for `sat`/`sat2`) evaluates over the probe domain
//!   `[0, B] ∪ {B + 1}`, where `B = M + 2^(qr+1) + 1` and `M` is the largest
//!   point mentioned by the state or the formula.
//! - `defined_set`, `defined_relation`, `sat_exact` and the runtime at
//!   `κ = ω` evaluate over all of ω. Quantifiers only visit windows around
//!   anchors, and the gap after the last anchor is unbounded, so the result
//!   is the true ω answer.

pub(crate) mod engine;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::logic::Formula;
use crate::ordinal::{OrdinalNotation, OrdinalSet};
use crate::state::{State, Tuple};
use engine::{Ctx, Intervals, Layout, Model, Program, Strategy};

/// Size of the stand-in for ω. No window ever gets near it.
pub(crate) const OMEGA_N: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalDomain {
    SurrogateFinite(u64),
    Omega,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("formula has free variables: {}", .0.join(", "))]
    NotClosed(Vec<String>),
    #[error("defined set is not constant beyond {threshold}: {detail}")]
    ThresholdViolation { threshold: u64, detail: String },
    #[error("`{symbol}` is not representable: {reason}")]
    Unrepresentable { symbol: String, reason: String },
    #[error("symbol `{0}` is not interpreted by the state")]
    UnknownSymbol(String),
    #[error("expected {expected} free variable(s), found {found}")]
    FreeVariableCount { expected: String, found: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// `B = M + 2^(qr+1) + 1`, the last point of the `Omega` probe domain
/// before the representative.
pub fn threshold(s: &State, phi: &Formula) -> u64 {
    let m = mentioned_max(std::slice::from_ref(s), phi);
    m + (1u64 << (phi.quantifier_rank() + 1).min(62)) + 1
}

fn mentioned_max(states: &[State], phi: &Formula) -> u64 {
    let mut m = 0u64;
    for s in states {
        m = m.max(s.constants.values().filter_map(|o| o.as_nat()).max().unwrap_or(0));
        for set in s.unary.values() {
            m = m.max(set.support.iter().filter_map(|o| o.as_nat()).max().unwrap_or(0));
        }
        for ts in s.nary.values() {
            for t in ts {
                m = m.max(t.iter().filter_map(|o| o.as_nat()).max().unwrap_or(0));
            }
        }
    }
    let lits = phi.support_constants();
    m.max(lits.iter().filter_map(|o| o.as_nat()).max().unwrap_or(0))
}

fn closed(phi: &Formula) -> Result<(), EvalError> {
    let free = phi.free_vars();
    if free.is_empty() {
        Ok(())
    } else {
        Err(EvalError::NotClosed(free))
    }
}

fn prepare(s: &State, phi: &Formula, free: &[String]) -> Result<(Program, engine::Node, Model), EvalError> {
    let layout = Layout::of(s);
    let model = Model::build(s, &layout)?;
    let mut prog = Program::new(layout);
    let node = prog.compile(phi, free)?;
    Ok((prog, node, model))
}

fn surrogate_n(dom: EvalDomain, s: &State, phi: &Formula) -> (u64, Strategy) {
    match dom {
        EvalDomain::SurrogateFinite(n) => (n, Strategy::Exhaustive),
        EvalDomain::Omega => (threshold(s, phi) + 2, Strategy::Anchored),
    }
}

/// `s ⊨ φ` for a closed `φ`. Copy-tagged symbols all read from `s`.
pub fn sat(s: &State, phi: &Formula, dom: EvalDomain) -> Result<bool, EvalError> {
    closed(phi)?;
    let (prog, node, model) = prepare(s, phi, &[])?;
    let (n, strategy) = surrogate_n(dom, s, phi);
    Ok(Ctx::new(&prog, [&model, &model], n, strategy).eval(&node, &mut Vec::new()))
}

/// `(s0, s1) ⊨₂ φ`: copy 1 reads from `s1`, everything else from `s0`.
pub fn sat2(s0: &State, s1: &State, phi: &Formula, dom: EvalDomain) -> Result<bool, EvalError> {
    closed(phi)?;
    if !s0.same_shape(s1) {
        return Err(EvalError::Unsupported("states differ in base set or signature".into()));
    }
    let (prog, node, m0) = prepare(s0, phi, &[])?;
    let m1 = Model::build(s1, prog.layout())?;
    let (n, strategy) = match dom {
        EvalDomain::SurrogateFinite(n) => (n, Strategy::Exhaustive),
        EvalDomain::Omega => {
            let m = mentioned_max(&[s0.clone(), s1.clone()], phi);
            (m + (1u64 << (phi.quantifier_rank() + 1).min(62)) + 3, Strategy::Anchored)
        }
    };
    Ok(Ctx::new(&prog, [&m0, &m1], n, strategy).eval(&node, &mut Vec::new()))
}

/// `(s0, s1) ⊨₂ φ` over all of ω.
pub fn sat2_exact(s0: &State, s1: &State, phi: &Formula) -> Result<bool, EvalError> {
    closed(phi)?;
    if !s0.same_shape(s1) {
        return Err(EvalError::Unsupported("states differ in base set or signature".into()));
    }
    let (prog, node, m0) = prepare(s0, phi, &[])?;
    let m1 = Model::build(s1, prog.layout())?;
    Ok(Ctx::new(&prog, [&m0, &m1], OMEGA_N, Strategy::Unbounded).eval(&node, &mut Vec::new()))
}

/// `s ⊨ φ` over all of ω, ignoring the finite probe domain.
pub fn sat_exact(s: &State, phi: &Formula) -> Result<bool, EvalError> {
    closed(phi)?;
    let (prog, node, model) = prepare(s, phi, &[])?;
    Ok(Ctx::new(&prog, [&model, &model], OMEGA_N, Strategy::Unbounded).eval(&node, &mut Vec::new()))
}

/// Converts the true points of an ω-evaluation into an `OrdinalSet`,
/// checking that nothing changes after `cut`.
pub(crate) fn to_ordinal_set(iv: &Intervals, cut: u64, n: u64) -> Result<OrdinalSet, EvalError> {
    let tail_in = iv.contains(cut + 1);
    let beyond = iv.intersect(&Intervals::range(cut + 1, n, n));
    let uniform = if tail_in {
        beyond.0 == vec![(cut + 1, n)]
    } else {
        beyond.is_empty()
    };
    if !uniform {
        return Err(EvalError::ThresholdViolation {
            threshold: cut,
            detail: format!("membership changes at {:?}", beyond.0.first()),
        });
    }
    let head = iv.intersect(&Intervals::range(0, cut + 1, n));
    Ok(if tail_in {
        let missing = head.complement(cut + 1);
        OrdinalSet::cofinite(missing.points().map(OrdinalNotation::nat))
    } else {
        OrdinalSet::finite(head.points().map(OrdinalNotation::nat))
    })
}

/// `{a : s ⊨ φ[x ↦ a]}` for the single free variable `x` of `φ`.
pub fn defined_set(s: &State, phi: &Formula, dom: EvalDomain) -> Result<OrdinalSet, EvalError> {
    let free = phi.free_vars();
    if free.len() != 1 {
        return Err(EvalError::FreeVariableCount {
            expected: "1".into(),
            found: free.len(),
        });
    }
    let (prog, node, model) = prepare(s, phi, &free)?;
    match dom {
        EvalDomain::SurrogateFinite(n) => {
            let iv = Ctx::new(&prog, [&model, &model], n, Strategy::Exhaustive).eval_set(&node, &mut Vec::new());
            Ok(OrdinalSet::finite(iv.points().map(OrdinalNotation::nat)))
        }
        EvalDomain::Omega => {
            let iv = Ctx::new(&prog, [&model, &model], OMEGA_N, Strategy::Unbounded).eval_set(&node, &mut Vec::new());
            let cut = mentioned_max(std::slice::from_ref(s), phi) + (1u64 << (phi.quantifier_rank() + 1).min(62));
            to_ordinal_set(&iv, cut, OMEGA_N)
        }
    }
}

/// The relation defined by `φ` on its free variables, in first-occurrence
/// order. Under `Omega` the relation must be finite.
pub fn defined_relation(s: &State, phi: &Formula, dom: EvalDomain) -> Result<BTreeSet<Tuple>, EvalError> {
    let free = phi.free_vars();
    if free.is_empty() {
        return Err(EvalError::FreeVariableCount {
            expected: "at least 1".into(),
            found: 0,
        });
    }
    let (prog, node, model) = prepare(s, phi, &free)?;
    let m = mentioned_max(std::slice::from_ref(s), phi);
    let (n, strategy, prefix_hi) = match dom {
        EvalDomain::SurrogateFinite(n) => (n, Strategy::Exhaustive, n),
        // The point after the cut stands for every larger value.
        EvalDomain::Omega => (
            OMEGA_N,
            Strategy::Unbounded,
            m + (1u64 << (phi.quantifier_rank() + 1).min(62)) + 2,
        ),
    };
    let mut ctx = Ctx::new(&prog, [&model, &model], n, strategy);
    let k = free.len();
    let mut out = BTreeSet::new();
    let mut env = vec![0u64; k - 1];
    loop {
        let iv = ctx.eval_set(&node, &mut env);
        if !iv.is_empty() {
            let overflow = env.iter().any(|&v| v > m) || iv.0.last().is_some_and(|&(_, hi)| hi > m + 1);
            if strategy == Strategy::Unbounded && overflow {
                return Err(EvalError::Unrepresentable {
                    symbol: phi.to_string(),
                    reason: "defined relation is infinite".into(),
                });
            }
            for v in iv.points() {
                let mut t: Tuple = env.iter().map(|&e| OrdinalNotation::nat(e)).collect();
                t.push(OrdinalNotation::nat(v));
                out.insert(t);
            }
        }
        // Odometer over the first k - 1 coordinates.
        let mut i = 0;
        while i < k - 1 {
            env[i] += 1;
            if env[i] < prefix_hi {
                break;
            }
            env[i] = 0;
            i += 1;
        }
        if i == k - 1 {
            break;
        }
    }
    Ok(out)
}
