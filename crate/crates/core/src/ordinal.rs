//! Ordinals below ω^ω in Cantor normal form, finite/cofinite sets of them,
//! and the max-then-lexicographic pairing on ω.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrdinalError {
    #[error("ordinal does not fit the representation below w^w")]
    RepresentationOverflow,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{element} is not below {kappa}")]
    OutOfDomain {
        element: OrdinalNotation,
        kappa: OrdinalNotation,
    },
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// An ordinal `Σ ω^e · c` with exponents strictly decreasing and every
/// coefficient at least 1. The empty term list is 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct OrdinalNotation {
    terms: Vec<(u32, u64)>,
}

impl OrdinalNotation {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn nat(n: u64) -> Self {
        if n == 0 {
            Self::zero()
        } else {
            Self { terms: vec![(0, n)] }
        }
    }

    pub fn omega() -> Self {
        Self { terms: vec![(1, 1)] }
    }

    /// Builds a notation from raw `(exponent, coefficient)` pairs, rejecting
    /// anything that is not in normal form.
    pub fn from_terms(terms: Vec<(u32, u64)>) -> Result<Self, OrdinalError> {
        for w in terms.windows(2) {
            if w[0].0 <= w[1].0 {
                return Err(OrdinalError::Unsupported(
                    "exponents must strictly decrease".into(),
                ));
            }
        }
        if terms.iter().any(|&(_, c)| c == 0) {
            return Err(OrdinalError::Unsupported(
                "coefficients must be positive".into(),
            ));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(u32, u64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.terms.iter().all(|&(e, _)| e == 0)
    }

    pub fn as_nat(&self) -> Option<u64> {
        match self.terms.as_slice() {
            [] => Some(0),
            [(0, n)] => Some(*n),
            _ => None,
        }
    }

    pub fn is_limit(&self) -> bool {
        matches!(self.terms.last(), Some(&(e, _)) if e > 0)
    }

    pub fn is_successor(&self) -> bool {
        matches!(self.terms.last(), Some(&(0, _)))
    }

    /// The finite part `n` of `λ + n`.
    pub fn finite_part(&self) -> u64 {
        match self.terms.last() {
            Some(&(0, n)) => n,
            _ => 0,
        }
    }

    /// The limit part `λ` of `λ + n` (0 for finite ordinals).
    pub fn limit_part(&self) -> Self {
        let mut terms = self.terms.clone();
        if matches!(terms.last(), Some(&(0, _))) {
            terms.pop();
        }
        Self { terms }
    }

    pub fn add_nat(&self, n: u64) -> Result<Self, OrdinalError> {
        if n == 0 {
            return Ok(self.clone());
        }
        let mut terms = self.terms.clone();
        match terms.last_mut() {
            Some((0, c)) => *c = c.checked_add(n).ok_or(OrdinalError::RepresentationOverflow)?,
            _ => terms.push((0, n)),
        }
        Ok(Self { terms })
    }

    pub fn successor(&self) -> Result<Self, OrdinalError> {
        self.add_nat(1)
    }

    /// The least limit ordinal strictly above `self`.
    pub fn next_limit(&self) -> Result<Self, OrdinalError> {
        let mut terms = self.limit_part().terms;
        match terms.last_mut() {
            Some((1, c)) => *c = c.checked_add(1).ok_or(OrdinalError::RepresentationOverflow)?,
            _ => terms.push((1, 1)),
        }
        Ok(Self { terms })
    }
}

impl Ord for OrdinalNotation {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.terms.iter().zip(&other.terms) {
            let ord = a.0.cmp(&b.0).then(a.1.cmp(&b.1));
            if ord != Ordering::Equal {
                return ord;
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}

impl PartialOrd for OrdinalNotation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn ord_compare(a: &OrdinalNotation, b: &OrdinalNotation) -> Ordering {
    a.cmp(b)
}

impl From<u64> for OrdinalNotation {
    fn from(n: u64) -> Self {
        Self::nat(n)
    }
}

impl fmt::Display for OrdinalNotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, &(e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            match (e, c) {
                (0, c) => write!(f, "{c}")?,
                (1, 1) => write!(f, "w")?,
                (1, c) => write!(f, "w*{c}")?,
                (e, 1) => write!(f, "w^{e}")?,
                (e, c) => write!(f, "w^{e}*{c}")?,
            }
        }
        Ok(())
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    base: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, msg: impl Into<String>) -> OrdinalError {
        OrdinalError::Parse {
            pos: self.base + self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<u64, OrdinalError> {
        self.skip_ws();
        let digits = self.src[self.pos..]
            .chars()
            .take_while(|c| c.is_ascii_digit())
            .count();
        if digits == 0 {
            return Err(self.err("expected a number"));
        }
        let n = self.src[self.pos..self.pos + digits]
            .parse::<u64>()
            .map_err(|_| self.err("number too large"))?;
        self.pos += digits;
        Ok(n)
    }

    fn ordinal(&mut self) -> Result<OrdinalNotation, OrdinalError> {
        let mut terms: Vec<(u32, u64)> = Vec::new();
        loop {
            let (e, c) = if self.eat('w') {
                let e = if self.eat('^') {
                    u32::try_from(self.number()?).map_err(|_| self.err("exponent too large"))?
                } else {
                    1
                };
                let c = if self.eat('*') { self.number()? } else { 1 };
                (e, c)
            } else {
                (0, self.number()?)
            };
            if c > 0 {
                match terms.last_mut() {
                    Some(last) if last.0 == e => {
                        last.1 = last.1.checked_add(c).ok_or(OrdinalError::RepresentationOverflow)?
                    }
                    Some(last) if last.0 < e => {
                        return Err(self.err("terms must be written with decreasing exponents"))
                    }
                    _ => terms.push((e, c)),
                }
            }
            if !self.eat('+') {
                break;
            }
        }
        Ok(OrdinalNotation { terms })
    }
}

/// Parses an ordinal from text starting at byte `base` of a larger input
/// (used for error positions). Returns the value and bytes consumed.
pub(crate) fn parse_ordinal_prefix(
    src: &str,
    base: usize,
) -> Result<(OrdinalNotation, usize), OrdinalError> {
    let mut cur = Cursor { src, pos: 0, base };
    let o = cur.ordinal()?;
    Ok((o, cur.pos))
}

impl FromStr for OrdinalNotation {
    type Err = OrdinalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut cur = Cursor { src: s, pos: 0, base: 0 };
        let o = cur.ordinal()?;
        cur.skip_ws();
        if cur.pos != s.len() {
            return Err(cur.err("trailing input"));
        }
        Ok(o)
    }
}

/// Index of `(a, b)` in the enumeration of ω×ω ordered by `max(a, b)` and
/// then lexicographically.
pub fn pair_nat(a: u64, b: u64) -> u64 {
    let m = a.max(b);
    if a < m {
        m * m + a
    } else if b < m {
        m * m + m + b
    } else {
        m * m + 2 * m
    }
}

pub fn unpair_nat(c: u64) -> (u64, u64) {
    let m = c.isqrt();
    let r = c - m * m;
    if r < m {
        (r, m)
    } else if r < 2 * m {
        (m, r - m)
    } else {
        (m, m)
    }
}

pub fn godel_pair(
    a: &OrdinalNotation,
    b: &OrdinalNotation,
) -> Result<OrdinalNotation, OrdinalError> {
    let unsupported = || OrdinalError::Unsupported("pairing is defined on finite ordinals only".into());
    let a = a.as_nat().ok_or_else(unsupported)?;
    let b = b.as_nat().ok_or_else(unsupported)?;
    let m = a.max(b);
    if m > u32::MAX as u64 {
        return Err(OrdinalError::RepresentationOverflow);
    }
    Ok(OrdinalNotation::nat(pair_nat(a, b)))
}

pub fn godel_unpair(
    c: &OrdinalNotation,
) -> Result<(OrdinalNotation, OrdinalNotation), OrdinalError> {
    let c = c
        .as_nat()
        .ok_or_else(|| OrdinalError::Unsupported("pairing is defined on finite ordinals only".into()))?;
    let (a, b) = unpair_nat(c);
    Ok((a.into(), b.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Finite,
    Cofinite,
}

/// A subset of some κ: `Finite(S)` is `S`, `Cofinite(S)` is `κ \ S`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrdinalSet {
    pub polarity: Polarity,
    pub support: BTreeSet<OrdinalNotation>,
}

impl OrdinalSet {
    pub fn empty() -> Self {
        Self::finite(std::iter::empty::<OrdinalNotation>())
    }

    pub fn full() -> Self {
        Self::cofinite(std::iter::empty::<OrdinalNotation>())
    }

    pub fn finite<I, T>(items: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<OrdinalNotation>,
    {
        Self {
            polarity: Polarity::Finite,
            support: items.into_iter().map(Into::into).collect(),
        }
    }

    pub fn cofinite<I, T>(items: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<OrdinalNotation>,
    {
        Self {
            polarity: Polarity::Cofinite,
            support: items.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.polarity == Polarity::Finite
    }

    pub fn is_empty(&self) -> bool {
        self.is_finite() && self.support.is_empty()
    }

    pub fn contains(&self, a: &OrdinalNotation) -> bool {
        self.support.contains(a) != (self.polarity == Polarity::Cofinite)
    }

    /// Complement within κ (no bound check; see [`set_complement`]).
    pub fn complement(&self) -> Self {
        Self {
            polarity: match self.polarity {
                Polarity::Finite => Polarity::Cofinite,
                Polarity::Cofinite => Polarity::Finite,
            },
            support: self.support.clone(),
        }
    }

    pub fn max_support(&self) -> Option<&OrdinalNotation> {
        self.support.iter().next_back()
    }

    pub fn check_bound(&self, kappa: &OrdinalNotation) -> Result<(), OrdinalError> {
        match self.max_support() {
            Some(m) if m >= kappa => Err(OrdinalError::OutOfDomain {
                element: m.clone(),
                kappa: kappa.clone(),
            }),
            _ => Ok(()),
        }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        use Polarity::*;
        match (self.polarity, other.polarity) {
            (Finite, Finite) => Self {
                polarity: Finite,
                support: self.support.intersection(&other.support).cloned().collect(),
            },
            (Finite, Cofinite) => Self {
                polarity: Finite,
                support: self.support.difference(&other.support).cloned().collect(),
            },
            (Cofinite, Finite) => other.intersection(self),
            (Cofinite, Cofinite) => Self {
                polarity: Cofinite,
                support: self.support.union(&other.support).cloned().collect(),
            },
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        self.complement()
            .intersection(&other.complement())
            .complement()
    }

    pub fn symmetric_difference(&self, other: &Self) -> Self {
        let support: BTreeSet<_> = self
            .support
            .symmetric_difference(&other.support)
            .cloned()
            .collect();
        let polarity = if self.polarity == other.polarity {
            Polarity::Finite
        } else {
            Polarity::Cofinite
        };
        Self { polarity, support }
    }

    /// Rewrites a set over a finite κ = n into `Finite` form.
    pub fn materialize_below(&self, n: u64) -> Self {
        match self.polarity {
            Polarity::Finite => self.clone(),
            Polarity::Cofinite => Self::finite(
                (0..n)
                    .map(OrdinalNotation::nat)
                    .filter(|a| !self.support.contains(a)),
            ),
        }
    }
}

pub fn set_complement(s: &OrdinalSet, kappa: &OrdinalNotation) -> Result<OrdinalSet, OrdinalError> {
    s.check_bound(kappa)?;
    Ok(s.complement())
}

pub fn set_member(s: &OrdinalSet, a: &OrdinalNotation, kappa: &OrdinalNotation) -> Result<bool, OrdinalError> {
    if a >= kappa {
        return Err(OrdinalError::OutOfDomain {
            element: a.clone(),
            kappa: kappa.clone(),
        });
    }
    Ok(s.contains(a))
}

impl fmt::Display for OrdinalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.polarity == Polarity::Cofinite {
            write!(f, "co")?;
        }
        write!(f, "{{")?;
        for (i, a) in self.support.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

pub(crate) fn parse_set_prefix(src: &str, base: usize) -> Result<(OrdinalSet, usize), OrdinalError> {
    let mut cur = Cursor { src, pos: 0, base };
    cur.skip_ws();
    let polarity = if cur.src[cur.pos..].starts_with("co") {
        cur.pos += 2;
        Polarity::Cofinite
    } else {
        Polarity::Finite
    };
    if !cur.eat('{') {
        return Err(cur.err("expected '{'"));
    }
    let mut support = BTreeSet::new();
    if !cur.eat('}') {
        loop {
            support.insert(cur.ordinal()?);
            if cur.eat('}') {
                break;
            }
            if !cur.eat(',') {
                return Err(cur.err("expected ',' or '}'"));
            }
        }
    }
    Ok((OrdinalSet { polarity, support }, cur.pos))
}

impl FromStr for OrdinalSet {
    type Err = OrdinalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (set, used) = parse_set_prefix(s, 0)?;
        if !s[used..].trim().is_empty() {
            return Err(OrdinalError::Parse {
                pos: used,
                msg: "trailing input".into(),
            });
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(s: &str) -> OrdinalNotation {
        s.parse().unwrap()
    }

    #[test]
    fn compare_examples() {
        assert_eq!(ord_compare(&o("3"), &o("3")), Ordering::Equal);
        assert_eq!(ord_compare(&o("w+3"), &o("w*2")), Ordering::Less);
        assert_eq!(ord_compare(&o("w^2"), &o("w*5+9")), Ordering::Greater);
    }

    #[test]
    fn next_limit_examples() {
        assert_eq!(o("0").next_limit().unwrap(), o("w"));
        assert_eq!(o("5").next_limit().unwrap(), o("w"));
        assert_eq!(o("w").next_limit().unwrap(), o("w*2"));
        assert_eq!(o("w^2+7").next_limit().unwrap(), o("w^2+w"));
        assert_eq!(o("w^3*4+w*2+1").next_limit().unwrap(), o("w^3*4+w*3"));
    }

    #[test]
    fn next_limit_overflow() {
        let big = OrdinalNotation::from_terms(vec![(1, u64::MAX)]).unwrap();
        assert_eq!(big.next_limit(), Err(OrdinalError::RepresentationOverflow));
    }

    #[test]
    fn syntax_round_trip() {
        for s in ["0", "7", "w", "w*2+3", "w^2", "w^3*4+w+1"] {
            assert_eq!(o(s).to_string(), s);
        }
        assert_eq!(o(" w * 2 + 3 "), o("w*2+3"));
        assert!("w+w^2".parse::<OrdinalNotation>().is_err());
        assert!("x".parse::<OrdinalNotation>().is_err());
    }

    #[test]
    fn limit_and_successor_shape() {
        assert!(o("w*2").is_limit());
        assert!(!o("w*2+1").is_limit());
        assert!(o("w*2+1").is_successor());
        assert!(!o("0").is_limit() && !o("0").is_successor());
    }

    #[test]
    fn pairing_examples() {
        let p = |a: u64, b: u64| godel_pair(&a.into(), &b.into()).unwrap();
        assert_eq!(p(0, 0), o("0"));
        assert_eq!(p(1, 1), o("3"));
        assert_eq!(godel_unpair(&p(4, 7)).unwrap(), (o("4"), o("7")));
        assert!(matches!(
            godel_pair(&o("w"), &o("1")),
            Err(OrdinalError::Unsupported(_))
        ));
    }

    /// Independent oracle: list pairs by max then lexicographically.
    #[test]
    fn pairing_matches_enumeration() {
        let mut index = 0u64;
        for m in 0..40u64 {
            let mut block: Vec<(u64, u64)> = (0..=m)
                .flat_map(|a| (0..=m).map(move |b| (a, b)))
                .filter(|&(a, b)| a.max(b) == m)
                .collect();
            block.sort();
            for (a, b) in block {
                assert_eq!(pair_nat(a, b), index, "({a},{b})");
                assert_eq!(unpair_nat(index), (a, b));
                index += 1;
            }
        }
    }

    #[test]
    fn set_examples() {
        let w = OrdinalNotation::omega();
        let s = OrdinalSet::finite([1u64, 3]);
        assert_eq!(set_complement(&s, &w).unwrap(), OrdinalSet::cofinite([1u64, 3]));
        assert!(!set_member(&OrdinalSet::cofinite([0u64]), &o("0"), &w).unwrap());
        assert_eq!(
            set_complement(&set_complement(&s, &w).unwrap(), &w).unwrap(),
            s
        );
        assert!(matches!(
            set_member(&s, &o("9"), &o("5")),
            Err(OrdinalError::OutOfDomain { .. })
        ));
        assert!(set_complement(&OrdinalSet::finite([7u64]), &o("5")).is_err());
    }

    #[test]
    fn set_syntax() {
        for s in ["{}", "{1,3,5}", "co{0,2}", "co{}", "{w+1}"] {
            assert_eq!(s.parse::<OrdinalSet>().unwrap().to_string(), s);
        }
        assert_eq!("{ 3, 1 }".parse::<OrdinalSet>().unwrap().to_string(), "{1,3}");
        assert!("{1,".parse::<OrdinalSet>().is_err());
    }

    #[test]
    fn set_algebra() {
        let a = OrdinalSet::finite([1u64, 2, 3]);
        let b = OrdinalSet::cofinite([2u64, 9]);
        assert_eq!(a.intersection(&b), OrdinalSet::finite([1u64, 3]));
        assert_eq!(a.union(&b), OrdinalSet::cofinite([9u64]));
        assert_eq!(a.symmetric_difference(&b), OrdinalSet::cofinite([1u64, 3, 9]));
        assert_eq!(
            OrdinalSet::cofinite([1u64]).materialize_below(4),
            OrdinalSet::finite([0u64, 2, 3])
        );
    }
}
