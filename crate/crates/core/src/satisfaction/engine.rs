//! Compiled evaluation over a finite linear order `[0, n)` expanded by
//! constants, finite/cofinite unary relations and finite n-ary relations.
//!
//! Quantifiers either enumerate the whole domain (`exhaustive`) or only the
//! points within `2^r` of an anchor, where `r` is the rank of the quantified
//! subformula and the anchors are 0, `n - 1`, the literals, the values of the
//! mentioned constants, the points of the mentioned relations and the values
//! of the variables free in the subformula. Two points in the same gap
//! between anchors that are at least `2^(r-1)` away from both ends cannot be
//! told apart by the remaining `r - 1` quantifiers, so both strategies agree.

use std::collections::{HashMap, HashSet};

use super::EvalError;
use crate::logic::{Formula, Sym, Term, MEMBERSHIP};
use crate::ordinal::{OrdinalNotation, Polarity};
use crate::state::State;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct NatSet {
    pub cofinite: bool,
    pub support: Vec<u64>,
}

impl NatSet {
    pub fn contains(&self, x: u64) -> bool {
        self.support.binary_search(&x).is_ok() != self.cofinite
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Slot {
    Const(usize),
    Unary(usize),
    Nary(usize),
}

/// Symbol name to storage slot, derived from the shape of a state.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Layout {
    pub slots: HashMap<String, Slot>,
    pub consts: Vec<String>,
    pub unary: Vec<String>,
    pub nary: Vec<String>,
}

impl Layout {
    pub fn of(s: &State) -> Self {
        let mut l = Layout::default();
        for k in s.constants.keys() {
            l.slots.insert(k.clone(), Slot::Const(l.consts.len()));
            l.consts.push(k.clone());
        }
        for k in s.unary.keys() {
            l.slots.insert(k.clone(), Slot::Unary(l.unary.len()));
            l.unary.push(k.clone());
        }
        for k in s.nary.keys() {
            l.slots.insert(k.clone(), Slot::Nary(l.nary.len()));
            l.nary.push(k.clone());
        }
        l
    }
}

fn nat(o: &OrdinalNotation, what: &str) -> Result<u64, EvalError> {
    o.as_nat()
        .ok_or_else(|| EvalError::Unsupported(format!("{what} has infinite value {o}")))
}

/// A state flattened to machine integers.
#[derive(Debug, Clone)]
pub(crate) struct Model {
    pub consts: Vec<u64>,
    pub unary: Vec<NatSet>,
    pub nary: Vec<HashSet<Vec<u64>>>,
    pub funcs: Vec<HashMap<Vec<u64>, u64>>,
    /// Largest point mentioned anywhere (0 if none).
    pub max_point: u64,
}

impl Model {
    pub fn build(s: &State, layout: &Layout) -> Result<Self, EvalError> {
        let mut max_point = 0u64;
        let mut consts = Vec::with_capacity(layout.consts.len());
        for k in &layout.consts {
            let v = s.constants.get(k).ok_or_else(|| EvalError::UnknownSymbol(k.clone()))?;
            let v = nat(v, k)?;
            max_point = max_point.max(v);
            consts.push(v);
        }
        let mut unary = Vec::with_capacity(layout.unary.len());
        for k in &layout.unary {
            let v = s.unary.get(k).ok_or_else(|| EvalError::UnknownSymbol(k.clone()))?;
            let support = v
                .support
                .iter()
                .map(|o| nat(o, k))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(&m) = support.last() {
                max_point = max_point.max(m);
            }
            unary.push(NatSet {
                cofinite: v.polarity == Polarity::Cofinite,
                support,
            });
        }
        let mut nary = Vec::with_capacity(layout.nary.len());
        let mut funcs = Vec::with_capacity(layout.nary.len());
        for k in &layout.nary {
            let v = s.nary.get(k).ok_or_else(|| EvalError::UnknownSymbol(k.clone()))?;
            let mut set = HashSet::new();
            let mut graph = HashMap::new();
            for t in v {
                let t = t.iter().map(|o| nat(o, k)).collect::<Result<Vec<_>, _>>()?;
                if let Some(&m) = t.iter().max() {
                    max_point = max_point.max(m);
                }
                if let Some((last, args)) = t.split_last() {
                    graph.insert(args.to_vec(), *last);
                }
                set.insert(t);
            }
            nary.push(set);
            funcs.push(graph);
        }
        Ok(Self {
            consts,
            unary,
            nary,
            funcs,
            max_point,
        })
    }
}

#[derive(Debug, Clone)]
pub(crate) enum CTerm {
    Var(usize),
    Const(u8, usize),
    App(u8, usize, Vec<CTerm>),
    Lit(u64),
}

#[derive(Debug, Clone)]
pub(crate) enum Kind {
    Eq(CTerm, CTerm),
    Lt(CTerm, CTerm),
    Unary(u8, usize, CTerm),
    Nary(u8, usize, Vec<CTerm>),
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Exists(usize, Box<Node>),
    Memo(usize, Box<Node>),
}

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub kind: Kind,
    /// Bit `l` is set when the variable at level `l` occurs free.
    pub free: u64,
    pub rank: u32,
}

/// Where the anchors of a subformula come from.
#[derive(Debug, Clone, Default)]
pub(crate) struct AnchorSrc {
    consts: Vec<(u8, usize)>,
    unary: Vec<(u8, usize)>,
    nary: Vec<(u8, usize)>,
    lits: Vec<u64>,
}

impl AnchorSrc {
    fn merge(&mut self, other: &AnchorSrc) {
        for (dst, src) in [
            (&mut self.consts, &other.consts),
            (&mut self.unary, &other.unary),
            (&mut self.nary, &other.nary),
        ] {
            for x in src {
                if !dst.contains(x) {
                    dst.push(*x);
                }
            }
        }
        for l in &other.lits {
            if !self.lits.contains(l) {
                self.lits.push(*l);
            }
        }
    }
}

/// Compiled formulas sharing one layout, one quantifier table and one memo
/// namespace for closed quantified subformulas.
#[derive(Debug, Default)]
pub(crate) struct Program {
    layout: Layout,
    quants: Vec<AnchorSrc>,
    memo_ids: HashMap<Formula, usize>,
    /// Largest literal seen by any compiled formula.
    pub max_literal: u64,
    pub max_rank: u32,
}

fn copy_of(s: &Sym) -> u8 {
    s.copy.unwrap_or(0)
}

impl Program {
    pub fn new(layout: Layout) -> Self {
        Self {
            layout,
            ..Default::default()
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Compiles `f` with `free` bound to levels `0..free.len()`.
    pub fn compile(&mut self, f: &Formula, free: &[String]) -> Result<Node, EvalError> {
        let mut env: Vec<String> = free.to_vec();
        let (node, _) = self.node(f, &mut env)?;
        self.max_rank = self.max_rank.max(node.rank);
        Ok(node)
    }

    fn slot(&self, s: &Sym) -> Result<Slot, EvalError> {
        self.layout
            .slots
            .get(&s.name)
            .copied()
            .ok_or_else(|| EvalError::UnknownSymbol(s.name.clone()))
    }

    fn term(&mut self, t: &Term, env: &[String], src: &mut AnchorSrc) -> Result<(CTerm, u64), EvalError> {
        Ok(match t {
            Term::Var(v) => {
                let level = env
                    .iter()
                    .rposition(|e| e == v)
                    .ok_or_else(|| EvalError::NotClosed(vec![v.clone()]))?;
                if level >= 64 {
                    return Err(EvalError::Unsupported("more than 64 nested variables".into()));
                }
                (CTerm::Var(level), 1u64 << level)
            }
            Term::Lit(o) => {
                let v = nat(o, "literal")?;
                self.max_literal = self.max_literal.max(v);
                if !src.lits.contains(&v) {
                    src.lits.push(v);
                }
                (CTerm::Lit(v), 0)
            }
            Term::Const(s) => match self.slot(s)? {
                Slot::Const(i) => {
                    let key = (copy_of(s), i);
                    if !src.consts.contains(&key) {
                        src.consts.push(key);
                    }
                    (CTerm::Const(key.0, i), 0)
                }
                _ => return Err(EvalError::Unsupported(format!("`{}` used as a constant", s.name))),
            },
            Term::App(s, args) => match self.slot(s)? {
                Slot::Nary(i) => {
                    let key = (copy_of(s), i);
                    if !src.nary.contains(&key) {
                        src.nary.push(key);
                    }
                    let mut free = 0;
                    let mut out = Vec::with_capacity(args.len());
                    for a in args {
                        let (c, m) = self.term(a, env, src)?;
                        free |= m;
                        out.push(c);
                    }
                    (CTerm::App(key.0, i, out), free)
                }
                _ => return Err(EvalError::Unsupported(format!("`{}` used as a function", s.name))),
            },
        })
    }

    fn node(&mut self, f: &Formula, env: &mut Vec<String>) -> Result<(Node, AnchorSrc), EvalError> {
        let mut src = AnchorSrc::default();
        let node = match f {
            Formula::Eq(a, b) => {
                let (a, ma) = self.term(a, env, &mut src)?;
                let (b, mb) = self.term(b, env, &mut src)?;
                Node {
                    kind: Kind::Eq(a, b),
                    free: ma | mb,
                    rank: 0,
                }
            }
            Formula::Rel(s, args) if s.name == MEMBERSHIP => {
                if args.len() != 2 {
                    return Err(EvalError::Unsupported("membership takes two arguments".into()));
                }
                let (a, ma) = self.term(&args[0], env, &mut src)?;
                let (b, mb) = self.term(&args[1], env, &mut src)?;
                Node {
                    kind: Kind::Lt(a, b),
                    free: ma | mb,
                    rank: 0,
                }
            }
            Formula::Rel(s, args) => {
                let slot = self.slot(s)?;
                let mut free = 0;
                let mut terms = Vec::with_capacity(args.len());
                for a in args {
                    let (c, m) = self.term(a, env, &mut src)?;
                    free |= m;
                    terms.push(c);
                }
                let key = (copy_of(s), 0usize);
                match slot {
                    Slot::Unary(i) if terms.len() == 1 => {
                        src.unary.push((key.0, i));
                        Node {
                            kind: Kind::Unary(key.0, i, terms.pop().unwrap()),
                            free,
                            rank: 0,
                        }
                    }
                    Slot::Nary(i) => {
                        src.nary.push((key.0, i));
                        Node {
                            kind: Kind::Nary(key.0, i, terms),
                            free,
                            rank: 0,
                        }
                    }
                    _ => return Err(EvalError::Unsupported(format!("`{}` used as a relation", s.name))),
                }
            }
            Formula::Not(g) => {
                let (g, s) = self.node(g, env)?;
                src = s;
                Node {
                    free: g.free,
                    rank: g.rank,
                    kind: Kind::Not(Box::new(g)),
                }
            }
            Formula::And(a, b) => {
                let (a, sa) = self.node(a, env)?;
                let (b, sb) = self.node(b, env)?;
                src = sa;
                src.merge(&sb);
                Node {
                    free: a.free | b.free,
                    rank: a.rank.max(b.rank),
                    kind: Kind::And(Box::new(a), Box::new(b)),
                }
            }
            Formula::Exists(x, g) => {
                env.push(x.clone());
                let level = env.len() - 1;
                let inner = self.node(g, env);
                env.pop();
                let (g, s) = inner?;
                src = s;
                let q = self.quants.len();
                self.quants.push(src.clone());
                let mask = if level < 64 { !(1u64 << level) } else { !0 };
                Node {
                    free: g.free & mask,
                    rank: g.rank + 1,
                    kind: Kind::Exists(q, Box::new(g)),
                }
            }
        };
        if node.free == 0 && node.rank > 0 && !matches!(node.kind, Kind::Memo(..)) {
            let next = self.memo_ids.len();
            let id = *self.memo_ids.entry(f.clone()).or_insert(next);
            return Ok((
                Node {
                    free: 0,
                    rank: node.rank,
                    kind: Kind::Memo(id, Box::new(node)),
                },
                src,
            ));
        }
        Ok((node, src))
    }

    pub fn memo_len(&self) -> usize {
        self.memo_ids.len()
    }
}

/// Sorted, disjoint, half-open intervals inside `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub(crate) struct Intervals(pub Vec<(u64, u64)>);

impl Intervals {
    pub fn full(n: u64) -> Self {
        if n == 0 {
            Self(vec![])
        } else {
            Self(vec![(0, n)])
        }
    }

    pub fn point(v: u64, n: u64) -> Self {
        if v < n {
            Self(vec![(v, v + 1)])
        } else {
            Self(vec![])
        }
    }

    pub fn range(lo: u64, hi: u64, n: u64) -> Self {
        let hi = hi.min(n);
        if lo < hi {
            Self(vec![(lo, hi)])
        } else {
            Self(vec![])
        }
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn complement(&self, n: u64) -> Self {
        let mut out = Vec::new();
        let mut at = 0;
        for &(a, b) in &self.0 {
            if a > at {
                out.push((at, a));
            }
            at = b;
        }
        if at < n {
            out.push((at, n));
        }
        Self(out)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.0.len() && j < other.0.len() {
            let (a0, a1) = self.0[i];
            let (b0, b1) = other.0[j];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if lo < hi {
                out.push((lo, hi));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self(out)
    }

    /// Builds from ascending `(start, end, member)` runs.
    fn push_run(&mut self, lo: u64, hi: u64) {
        if lo >= hi {
            return;
        }
        match self.0.last_mut() {
            Some(last) if last.1 == lo => last.1 = hi,
            _ => self.0.push((lo, hi)),
        }
    }

    pub fn contains(&self, x: u64) -> bool {
        let i = self.0.partition_point(|&(_, b)| b <= x);
        i < self.0.len() && self.0[i].0 <= x
    }

    pub fn points(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().flat_map(|&(a, b)| a..b)
    }
}

/// Merged windows of the given radius around `anchors`, clipped to `[0, n)`.
fn windows(anchors: &mut [u64], radius: u64, n: u64) -> Vec<(u64, u64)> {
    anchors.sort_unstable();
    let mut out: Vec<(u64, u64)> = Vec::new();
    for &a in anchors.iter() {
        if a >= n {
            continue;
        }
        let lo = a.saturating_sub(radius);
        let hi = a.saturating_add(radius).saturating_add(1).min(n);
        match out.last_mut() {
            Some(last) if last.1 >= lo => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

pub(crate) fn radius(rank: u32) -> u64 {
    1u64.checked_shl(rank.min(62)).unwrap_or(u64::MAX)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Strategy {
    /// Every quantifier enumerates `[0, n)`.
    Exhaustive,
    /// Windows around anchors, with `n - 1` as an anchor.
    Anchored,
    /// Windows around anchors and no top element: `n` only bounds arithmetic.
    Unbounded,
}

/// One evaluation over fixed models and a fixed domain size.
pub(crate) struct Ctx<'a> {
    pub models: [&'a Model; 2],
    pub n: u64,
    pub strategy: Strategy,
    exhaustive: bool,
    prog: &'a Program,
    memo: Vec<u8>,
    anchor_cache: Vec<Option<Vec<u64>>>,
}

impl<'a> Ctx<'a> {
    pub fn new(prog: &'a Program, models: [&'a Model; 2], n: u64, strategy: Strategy) -> Self {
        Self {
            models,
            n,
            strategy,
            exhaustive: strategy == Strategy::Exhaustive,
            prog,
            memo: vec![0; prog.memo_len()],
            anchor_cache: vec![None; prog.quants.len()],
        }
    }

    fn term(&self, t: &CTerm, env: &[u64]) -> u64 {
        match t {
            CTerm::Var(l) => env[*l],
            CTerm::Lit(v) => *v,
            CTerm::Const(c, i) => self.models[*c as usize].consts[*i],
            CTerm::App(c, i, args) => {
                let key: Vec<u64> = args.iter().map(|a| self.term(a, env)).collect();
                self.models[*c as usize].funcs[*i].get(&key).copied().unwrap_or(0)
            }
        }
    }

    fn source_points(&self, src: &AnchorSrc, out: &mut Vec<u64>) {
        out.extend(src.lits.iter().copied());
        for &(c, i) in &src.consts {
            out.push(self.models[c as usize].consts[i]);
        }
        for &(c, i) in &src.unary {
            out.extend(self.models[c as usize].unary[i].support.iter().copied());
        }
        for &(c, i) in &src.nary {
            for t in &self.models[c as usize].nary[i] {
                out.extend(t.iter().copied());
            }
        }
        out.push(0);
        if self.n > 0 && self.strategy == Strategy::Anchored {
            out.push(self.n - 1);
        }
    }

    fn static_anchors(&mut self, q: usize) -> &[u64] {
        if self.anchor_cache[q].is_none() {
            let mut pts = Vec::new();
            self.source_points(&self.prog.quants[q], &mut pts);
            pts.sort_unstable();
            pts.dedup();
            self.anchor_cache[q] = Some(pts);
        }
        self.anchor_cache[q].as_deref().unwrap()
    }

    fn env_points(free: u64, env: &[u64], out: &mut Vec<u64>) {
        let mut bits = free;
        while bits != 0 {
            let l = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if l < env.len() {
                out.push(env[l]);
            }
        }
    }

    pub fn eval(&mut self, node: &Node, env: &mut Vec<u64>) -> bool {
        match &node.kind {
            Kind::Eq(a, b) => self.term(a, env) == self.term(b, env),
            Kind::Lt(a, b) => self.term(a, env) < self.term(b, env),
            Kind::Unary(c, i, t) => {
                let v = self.term(t, env);
                v < self.n && self.models[*c as usize].unary[*i].contains(v)
            }
            Kind::Nary(c, i, ts) => {
                let key: Vec<u64> = ts.iter().map(|t| self.term(t, env)).collect();
                self.models[*c as usize].nary[*i].contains(&key)
            }
            Kind::Not(g) => !self.eval(g, env),
            Kind::And(a, b) => self.eval(a, env) && self.eval(b, env),
            Kind::Memo(id, g) => match self.memo[*id] {
                1 => false,
                2 => true,
                _ => {
                    let v = self.eval(g, env);
                    self.memo[*id] = if v { 2 } else { 1 };
                    v
                }
            },
            Kind::Exists(q, body) => {
                if self.exhaustive {
                    for v in 0..self.n {
                        env.push(v);
                        let hit = self.eval(body, env);
                        env.pop();
                        if hit {
                            return true;
                        }
                    }
                    return false;
                }
                let mut anchors = self.static_anchors(*q).to_vec();
                Self::env_points(node.free, env, &mut anchors);
                let wins = windows(&mut anchors, radius(node.rank), self.n);
                for (lo, hi) in wins {
                    for v in lo..hi {
                        env.push(v);
                        let hit = self.eval(body, env);
                        env.pop();
                        if hit {
                            return true;
                        }
                    }
                }
                false
            }
        }
    }

    /// The set of values for the variable at level `env.len()` that satisfy
    /// `node`, with lower levels fixed by `env`.
    pub fn eval_set(&mut self, node: &Node, env: &mut Vec<u64>) -> Intervals {
        let xl = env.len();
        let xbit = if xl < 64 { 1u64 << xl } else { 0 };
        let n = self.n;
        if node.free & xbit == 0 {
            env.push(0);
            let v = self.eval(node, env);
            env.pop();
            return if v { Intervals::full(n) } else { Intervals::default() };
        }
        if !self.exhaustive {
            let is_x = |t: &CTerm| matches!(t, CTerm::Var(l) if *l == xl);
            let no_x = |t: &CTerm| !term_mentions(t, xl);
            match &node.kind {
                Kind::Eq(a, b) if is_x(a) && is_x(b) => return Intervals::full(n),
                Kind::Eq(a, b) if is_x(a) && no_x(b) => return Intervals::point(self.term(b, env), n),
                Kind::Eq(a, b) if is_x(b) && no_x(a) => return Intervals::point(self.term(a, env), n),
                Kind::Lt(a, b) if is_x(a) && is_x(b) => return Intervals::default(),
                Kind::Lt(a, b) if is_x(a) && no_x(b) => return Intervals::range(0, self.term(b, env), n),
                Kind::Lt(a, b) if is_x(b) && no_x(a) => {
                    return Intervals::range(self.term(a, env).saturating_add(1), n, n)
                }
                Kind::Unary(c, i, t) if is_x(t) => {
                    let set = &self.models[*c as usize].unary[*i];
                    let mut pts = Intervals::default();
                    for &p in &set.support {
                        if p < n {
                            pts.push_run(p, p + 1);
                        }
                    }
                    return if set.cofinite { pts.complement(n) } else { pts };
                }
                Kind::Not(g) => return self.eval_set(g, env).complement(n),
                Kind::And(a, b) => {
                    let left = self.eval_set(a, env);
                    if left.is_empty() {
                        return left;
                    }
                    return left.intersect(&self.eval_set(b, env));
                }
                _ => {}
            }
        }
        self.pointwise_set(node, env)
    }

    fn pointwise_set(&mut self, node: &Node, env: &mut Vec<u64>) -> Intervals {
        let n = self.n;
        let mut out = Intervals::default();
        if self.exhaustive {
            for v in 0..n {
                env.push(v);
                if self.eval(node, env) {
                    out.push_run(v, v + 1);
                }
                env.pop();
            }
            return out;
        }
        let mut src = AnchorSrc::default();
        collect_sources(node, self.prog, &mut src);
        let mut anchors = Vec::new();
        self.source_points(&src, &mut anchors);
        Self::env_points(node.free, env, &mut anchors);
        let wins = windows(&mut anchors, radius(node.rank + 1), n);
        let mut at = 0u64;
        let test = |ctx: &mut Self, v: u64, env: &mut Vec<u64>| {
            env.push(v);
            let r = ctx.eval(node, env);
            env.pop();
            r
        };
        for (lo, hi) in wins {
            if at < lo && test(self, at, env) {
                out.push_run(at, lo);
            }
            for v in lo..hi {
                if test(self, v, env) {
                    out.push_run(v, v + 1);
                }
            }
            at = hi;
        }
        if at < n && test(self, at, env) {
            out.push_run(at, n);
        }
        out
    }
}

fn term_mentions(t: &CTerm, level: usize) -> bool {
    match t {
        CTerm::Var(l) => *l == level,
        CTerm::App(_, _, args) => args.iter().any(|a| term_mentions(a, level)),
        _ => false,
    }
}

/// Gathers the anchor sources of an arbitrary compiled subformula.
fn collect_sources(node: &Node, prog: &Program, out: &mut AnchorSrc) {
    fn term(t: &CTerm, out: &mut AnchorSrc) {
        match t {
            CTerm::Lit(v) => {
                if !out.lits.contains(v) {
                    out.lits.push(*v)
                }
            }
            CTerm::Const(c, i) => {
                if !out.consts.contains(&(*c, *i)) {
                    out.consts.push((*c, *i))
                }
            }
            CTerm::App(c, i, args) => {
                if !out.nary.contains(&(*c, *i)) {
                    out.nary.push((*c, *i));
                }
                args.iter().for_each(|a| term(a, out));
            }
            CTerm::Var(_) => {}
        }
    }
    match &node.kind {
        Kind::Eq(a, b) | Kind::Lt(a, b) => {
            term(a, out);
            term(b, out);
        }
        Kind::Unary(c, i, t) => {
            if !out.unary.contains(&(*c, *i)) {
                out.unary.push((*c, *i));
            }
            term(t, out);
        }
        Kind::Nary(c, i, ts) => {
            if !out.nary.contains(&(*c, *i)) {
                out.nary.push((*c, *i));
            }
            ts.iter().for_each(|t| term(t, out));
        }
        Kind::Not(g) | Kind::Memo(_, g) => collect_sources(g, prog, out),
        Kind::And(a, b) => {
            collect_sources(a, prog, out);
            collect_sources(b, prog, out);
        }
        Kind::Exists(q, _) => out.merge(&prog.quants[*q]),
    }
}
