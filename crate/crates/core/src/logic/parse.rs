use super::{Formula, LogicError, Signature, Sym, SymbolKind, Term, MEMBERSHIP};
use crate::ordinal::parse_ordinal_prefix;

/// Parses the ASCII formula grammar. With `doubled`, every non-membership
/// symbol must carry a copy index `@0` or `@1`; otherwise copy indices are
/// rejected.
pub fn parse_formula(text: &str, sigma: &Signature, doubled: bool) -> Result<Formula, LogicError> {
    let mut p = Parser {
        src: text,
        pos: 0,
        sigma,
        doubled,
    };
    let f = p.iff()?;
    p.ws();
    if p.pos != text.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(f)
}

pub fn parse_term(text: &str, sigma: &Signature, doubled: bool) -> Result<Term, LogicError> {
    let mut p = Parser {
        src: text,
        pos: 0,
        sigma,
        doubled,
    };
    let t = p.term()?;
    p.ws();
    if p.pos != text.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(t)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    sigma: &'a Signature,
    doubled: bool,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl<'a> Parser<'a> {
    fn syntax(&self, msg: impl Into<String>) -> LogicError {
        LogicError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn ws(&mut self) {
        while let Some(c) = self.rest().chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self, tok: &str) -> bool {
        self.ws();
        self.rest().starts_with(tok)
    }

    fn eat(&mut self, tok: &str) -> bool {
        if self.peek(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), LogicError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected `{tok}`")))
        }
    }

    fn peek_ident(&mut self) -> Option<&'a str> {
        self.ws();
        let rest = self.rest();
        let mut chars = rest.char_indices();
        match chars.next() {
            Some((_, c)) if is_ident_start(c) => {}
            _ => return None,
        }
        let end = chars
            .find(|&(_, c)| !is_ident_char(c))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        Some(&rest[..end])
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if self.peek_ident() == Some(kw) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn iff(&mut self) -> Result<Formula, LogicError> {
        let a = self.implies()?;
        if self.eat("<->") {
            let b = self.iff()?;
            return Ok(Formula::iff(a, b));
        }
        Ok(a)
    }

    fn implies(&mut self) -> Result<Formula, LogicError> {
        let a = self.or()?;
        if self.eat("->") {
            let b = self.implies()?;
            return Ok(Formula::implies(a, b));
        }
        Ok(a)
    }

    fn or(&mut self) -> Result<Formula, LogicError> {
        let mut a = self.and()?;
        while self.eat("|") {
            let b = self.and()?;
            a = Formula::or(a, b);
        }
        Ok(a)
    }

    fn and(&mut self) -> Result<Formula, LogicError> {
        let mut a = self.unary()?;
        while self.eat("&") {
            let b = self.unary()?;
            a = Formula::and(a, b);
        }
        Ok(a)
    }

    fn bound_vars(&mut self) -> Result<Vec<String>, LogicError> {
        let mut vars = Vec::new();
        while let Some(id) = self.peek_ident() {
            if self.sigma.get(id).is_some() || id == "w" || id == MEMBERSHIP {
                return Err(self.syntax(format!("`{id}` cannot be bound as a variable")));
            }
            self.pos += id.len();
            vars.push(id.to_string());
            self.eat(",");
        }
        if vars.is_empty() {
            return Err(self.syntax("expected a variable"));
        }
        self.expect(".")?;
        Ok(vars)
    }

    fn unary(&mut self) -> Result<Formula, LogicError> {
        if self.eat("~") {
            return Ok(Formula::not(self.unary()?));
        }
        if self.keyword("forall") {
            let vars = self.bound_vars()?;
            let body = self.iff()?;
            return Ok(vars.iter().rev().fold(body, |acc, v| Formula::forall(v, acc)));
        }
        if self.keyword("exists") {
            let vars = self.bound_vars()?;
            let body = self.iff()?;
            return Ok(vars.iter().rev().fold(body, |acc, v| Formula::exists(v, acc)));
        }
        if self.eat("(") {
            let f = self.iff()?;
            self.expect(")")?;
            return Ok(f);
        }
        self.atom()
    }

    /// Reads an optional `@i` copy suffix and checks it against the mode.
    fn copy_index(&mut self, name: &str) -> Result<Option<u8>, LogicError> {
        let copy = if self.rest().starts_with('@') {
            self.pos += 1;
            match self.rest().chars().next() {
                Some('0') => Some(0),
                Some('1') => Some(1),
                _ => return Err(self.syntax("copy index must be 0 or 1")),
            }
        } else {
            None
        };
        if copy.is_some() {
            self.pos += 1;
        }
        if name == MEMBERSHIP {
            return Ok(None);
        }
        match (self.doubled, copy) {
            (true, None) => Err(self.syntax(format!("`{name}` needs a copy index"))),
            (false, Some(_)) => Err(self.syntax(format!("copy index on `{name}` outside a doubled context"))),
            _ => Ok(copy),
        }
    }

    fn args(&mut self) -> Result<Vec<Term>, LogicError> {
        self.expect("(")?;
        let mut args = Vec::new();
        if self.eat(")") {
            return Ok(args);
        }
        loop {
            args.push(self.term()?);
            if self.eat(")") {
                return Ok(args);
            }
            self.expect(",")?;
        }
    }

    fn check_arity(name: &str, expected: usize, found: usize) -> Result<(), LogicError> {
        if expected == found {
            Ok(())
        } else {
            Err(LogicError::ArityMismatch {
                symbol: name.into(),
                expected,
                found,
            })
        }
    }

    fn atom(&mut self) -> Result<Formula, LogicError> {
        let start = self.pos;
        if let Some(id) = self.peek_ident() {
            let decl = if id == MEMBERSHIP {
                Some((SymbolKind::Relation, 2))
            } else {
                self.sigma.get(id).map(|d| (d.kind, d.arity))
            };
            if let Some((SymbolKind::Relation, arity)) = decl {
                self.pos += id.len();
                let copy = self.copy_index(id)?;
                let args = self.args()?;
                Self::check_arity(id, arity, args.len())?;
                return Ok(Formula::Rel(
                    Sym {
                        name: id.to_string(),
                        copy,
                    },
                    args,
                ));
            }
        }
        let lhs = self.term()?;
        if self.eat("!=") {
            let rhs = self.term()?;
            return Ok(Formula::neq(lhs, rhs));
        }
        if self.eat("=") {
            let rhs = self.term()?;
            return Ok(Formula::eq(lhs, rhs));
        }
        if self.peek("<") && !self.peek("<->") {
            self.pos += 1;
            let rhs = self.term()?;
            return Ok(Formula::lt(lhs, rhs));
        }
        self.pos = self.pos.max(start);
        Err(self.syntax("expected `=`, `!=` or `<`"))
    }

    fn term(&mut self) -> Result<Term, LogicError> {
        self.ws();
        let here = self.pos;
        let starts_literal = match self.peek_ident() {
            Some("w") => true,
            Some(_) => false,
            None => self.rest().starts_with(|c: char| c.is_ascii_digit()),
        };
        if starts_literal {
            let (o, used) = parse_ordinal_prefix(self.rest(), here).map_err(|e| match e {
                crate::ordinal::OrdinalError::Parse { pos, msg } => LogicError::Syntax { pos, msg },
                other => LogicError::Syntax {
                    pos: here,
                    msg: other.to_string(),
                },
            })?;
            self.pos += used;
            return Ok(Term::Lit(o));
        }
        let Some(id) = self.peek_ident() else {
            return Err(self.syntax("expected a term"));
        };
        self.pos += id.len();
        match self.sigma.get(id) {
            Some(d) if d.kind == SymbolKind::Constant => {
                let copy = self.copy_index(id)?;
                Ok(Term::Const(Sym {
                    name: id.into(),
                    copy,
                }))
            }
            Some(d) if d.kind == SymbolKind::Function => {
                let copy = self.copy_index(id)?;
                let args = self.args()?;
                Self::check_arity(id, d.arity, args.len())?;
                Ok(Term::App(
                    Sym {
                        name: id.into(),
                        copy,
                    },
                    args,
                ))
            }
            Some(d) => Err(LogicError::ArityMismatch {
                symbol: id.into(),
                expected: d.arity,
                found: 0,
            }),
            None => {
                if self.rest().starts_with('(') || self.rest().starts_with('@') {
                    return Err(LogicError::UnknownSymbol {
                        name: id.into(),
                        pos: here,
                    });
                }
                if id == MEMBERSHIP {
                    return Err(self.syntax("`in` is not a term"));
                }
                Ok(Term::Var(id.into()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::SymbolDecl;

    fn sigma() -> Signature {
        Signature::standard()
            .with(SymbolDecl::constant("h"))
            .unwrap()
            .with(SymbolDecl::function("f", 1))
            .unwrap()
    }

    #[test]
    fn forall_desugars() {
        let f = parse_formula("forall x. (In(x) <-> ~Out(x))", &sigma(), false).unwrap();
        let inner = Formula::iff(
            Formula::rel("In", None, vec![Term::var("x")]),
            Formula::not(Formula::rel("Out", None, vec![Term::var("x")])),
        );
        assert_eq!(f, Formula::not(Formula::exists("x", Formula::not(inner))));
    }

    #[test]
    fn doubled_copies() {
        let f = parse_formula("In@1(x) <-> ~In@0(x)", &sigma(), true).unwrap();
        assert_eq!(
            f,
            Formula::iff(
                Formula::rel("In", Some(1), vec![Term::var("x")]),
                Formula::not(Formula::rel("In", Some(0), vec![Term::var("x")]))
            )
        );
        assert!(parse_formula("In(x)", &sigma(), true).is_err());
        assert!(parse_formula("In@0(x)", &sigma(), false).is_err());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_formula("Foo(x)", &sigma(), false),
            Err(LogicError::UnknownSymbol { ref name, .. }) if name == "Foo"
        ));
        assert!(matches!(
            parse_formula("In(x, y)", &sigma(), false),
            Err(LogicError::ArityMismatch { expected: 1, found: 2, .. })
        ));
        assert!(matches!(
            parse_formula("x = ", &sigma(), false),
            Err(LogicError::Syntax { pos: 4, .. })
        ));
        assert!(parse_formula("exists h. h = h", &sigma(), false).is_err());
    }

    #[test]
    fn membership_forms_agree() {
        let a = parse_formula("in(x, y)", &sigma(), false).unwrap();
        let b = parse_formula("x < y", &sigma(), false).unwrap();
        assert_eq!(a, b);
        let c = parse_formula("x < y", &sigma(), true).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn literals_and_terms() {
        let f = parse_formula("f(h) = w*2+3 & x != 0", &sigma(), false).unwrap();
        assert_eq!(f.support_constants().len(), 2);
        assert_eq!(f.free_vars(), ["x"]);
    }

    #[test]
    fn precedence() {
        let s = sigma();
        let p = |t: &str| parse_formula(t, &s, false).unwrap();
        assert_eq!(p("In(x) & Out(x) | In(y)"), p("(In(x) & Out(x)) | In(y)"));
        assert_eq!(p("In(x) -> Out(x) -> In(y)"), p("In(x) -> (Out(x) -> In(y))"));
        assert_eq!(p("exists x. In(x) & Out(x)"), p("exists x. (In(x) & Out(x))"));
        assert_eq!(p("forall x y. x = y"), p("forall x. forall y. x = y"));
    }
}
