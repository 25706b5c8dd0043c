//! Printing that re-sugars `∀`, `∨`, `→` and `≠`. The output parses back to
//! the identical tree because the parser desugars the same patterns.

use std::fmt;

use super::{Formula, Sym, Term, MEMBERSHIP};

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.copy {
            Some(i) => write!(f, "{}@{i}", self.name),
            None => write!(f, "{}", self.name),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(s) => write!(f, "{s}"),
            Term::Lit(o) => write!(f, "{o}"),
            Term::App(s, args) => {
                write!(f, "{s}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

enum View<'a> {
    Atom,
    Neq(&'a Term, &'a Term),
    Not(&'a Formula),
    And(&'a Formula, &'a Formula),
    Or(&'a Formula, &'a Formula),
    Implies(&'a Formula, &'a Formula),
    Exists(&'a str, &'a Formula),
    Forall(&'a str, &'a Formula),
}

fn view(f: &Formula) -> View<'_> {
    match f {
        Formula::Eq(..) | Formula::Rel(..) => View::Atom,
        Formula::And(a, b) => View::And(a, b),
        Formula::Exists(x, g) => View::Exists(x, g),
        Formula::Not(g) => match g.as_ref() {
            Formula::Eq(a, b) => View::Neq(a, b),
            Formula::Exists(x, h) => match h.as_ref() {
                Formula::Not(body) => View::Forall(x, body),
                _ => View::Not(g),
            },
            Formula::And(a, b) => match (a.as_ref(), b.as_ref()) {
                (Formula::Not(na), Formula::Not(nb)) => View::Or(na, nb),
                (_, Formula::Not(nb)) => View::Implies(a, nb),
                _ => View::Not(g),
            },
            _ => View::Not(g),
        },
    }
}

fn tight(f: &Formula) -> bool {
    match view(f) {
        View::Atom | View::Neq(..) => true,
        View::Not(g) => tight(g),
        _ => false,
    }
}

fn operand(f: &Formula, bare: bool, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    if bare || tight(f) {
        write_formula(f, out)
    } else {
        write!(out, "(")?;
        write_formula(f, out)?;
        write!(out, ")")
    }
}

fn write_formula(f: &Formula, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    match view(f) {
        View::Atom => match f {
            Formula::Eq(a, b) => write!(out, "{a} = {b}"),
            Formula::Rel(s, args) if s.name == MEMBERSHIP && args.len() == 2 => {
                write!(out, "{} < {}", args[0], args[1])
            }
            Formula::Rel(s, args) => write!(out, "{}", Term::App(s.clone(), args.clone())),
            _ => unreachable!(),
        },
        View::Neq(a, b) => write!(out, "{a} != {b}"),
        View::Not(g) => {
            write!(out, "~")?;
            operand(g, false, out)
        }
        View::And(a, b) => {
            operand(a, matches!(view(a), View::And(..)), out)?;
            write!(out, " & ")?;
            operand(b, false, out)
        }
        View::Or(a, b) => {
            operand(a, matches!(view(a), View::Or(..)), out)?;
            write!(out, " | ")?;
            operand(b, false, out)
        }
        View::Implies(a, b) => {
            operand(a, false, out)?;
            write!(out, " -> ")?;
            operand(b, matches!(view(b), View::Implies(..)), out)
        }
        View::Exists(x, g) => {
            write!(out, "exists {x}. ")?;
            write_formula(g, out)
        }
        View::Forall(x, g) => {
            write!(out, "forall {x}. ")?;
            write_formula(g, out)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(self, f)
    }
}

#[cfg(test)]
mod tests {
    use crate::logic::{parse_formula, Signature, SymbolDecl};

    #[test]
    fn round_trips() {
        let sigma = Signature::standard()
            .with(SymbolDecl::constant("h"))
            .unwrap()
            .with(SymbolDecl::function("f", 2))
            .unwrap();
        for text in [
            "forall x. (In(x) <-> ~Out(x))",
            "exists x. In(x) & x < h | ~(h = 3)",
            "~~In(0) -> Out(w) -> In(w^2+1)",
            "~In(x) -> Out(x)",
            "f(x, h) != y & (exists z. z < y) & forall q. ~Out(q)",
        ] {
            let f = parse_formula(text, &sigma, false).unwrap();
            let printed = f.to_string();
            assert_eq!(parse_formula(&printed, &sigma, false).unwrap(), f, "{printed}");
        }
    }

    #[test]
    fn sugar_is_visible() {
        let sigma = Signature::standard();
        let f = parse_formula("forall x. In(x) | Out(x)", &sigma, false).unwrap();
        assert_eq!(f.to_string(), "forall x. In(x) | Out(x)");
    }
}
