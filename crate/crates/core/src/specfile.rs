//! Text format for machine descriptions.
//!
//! ```text
//! # comments run to the end of the line
//! kappa: w                 # or finite:N, or any ordinal below w^w
//! flavor: gseqa            # or gseqap
//! signature {
//!   in: relation 2 membership;
//!   In: relation 1 in;
//!   Out: relation 1 out;
//!   h: constant;
//!   f: function 1;
//! }
//! params { c = 6; }
//! default { h(x): x = 0; }
//! tau {
//!   In(x): In@0(x);
//!   Out(x): Out@0(x);
//!   h(x): x = h@0;
//!   f(x, y): y = f@0(x);
//! }
//! ```
//!
//! Transition witnesses are parsed over the doubled signature, defaults
//! over the plain one.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::logic::{parse_formula, Distinguished, Signature, SymbolDecl, SymbolKind};
use crate::ordinal::{OrdinalNotation, OrdinalSet};
use crate::state::{Flavor, ParamValue};
use crate::validator::{MachineSpec, Witness};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct SpecError {
    pub line: usize,
    pub msg: String,
}

fn err(line: usize, msg: impl Into<String>) -> SpecError {
    SpecError { line, msg: msg.into() }
}

fn strip_comments(text: &str) -> String {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn line_at(text: &str, pos: usize) -> usize {
    text[..pos.min(text.len())].matches('\n').count() + 1
}

/// One `;`-terminated entry and the line it starts on.
fn entries(body: &str, offset: usize, full: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in body.char_indices() {
        match ch {
            '{' | '(' => depth += 1,
            '}' | ')' => depth -= 1,
            ';' if depth == 0 => {
                let e = body[start..i].trim();
                if !e.is_empty() {
                    let lead = body[start..i].len() - body[start..i].trim_start().len();
                    out.push((line_at(full, offset + start + lead), e.to_string()));
                }
                start = i + 1;
            }
            _ => {}
        }
    }
    let rest = body[start..].trim();
    if !rest.is_empty() {
        out.push((line_at(full, offset + start), format!("{rest}\u{0}")));
    }
    out
}

fn parse_decl(line: usize, e: &str) -> Result<SymbolDecl, SpecError> {
    let (name, rest) = e.split_once(':').ok_or_else(|| err(line, "expected `name: kind ...`"))?;
    let name = name.trim();
    let words: Vec<&str> = rest.split_whitespace().collect();
    let arity = |i: usize| -> Result<usize, SpecError> {
        words
            .get(i)
            .ok_or_else(|| err(line, format!("`{name}` needs an arity")))?
            .parse()
            .map_err(|_| err(line, format!("bad arity for `{name}`")))
    };
    let (decl, role_at) = match words.first().copied() {
        Some("constant") => (SymbolDecl::constant(name), 1),
        Some("relation") => (SymbolDecl::relation(name, arity(1)?), 2),
        Some("function") => (SymbolDecl::function(name, arity(1)?), 2),
        other => return Err(err(line, format!("unknown symbol kind {other:?}"))),
    };
    let distinguished = match words.get(role_at).copied() {
        None => Distinguished::None,
        Some("membership") => Distinguished::Membership,
        Some("in") => Distinguished::In,
        Some("out") => Distinguished::Out,
        Some(r) => return Err(err(line, format!("unknown role `{r}`"))),
    };
    if words.len() > role_at + 1 {
        return Err(err(line, format!("trailing words in declaration of `{name}`")));
    }
    Ok(SymbolDecl { distinguished, ..decl })
}

fn parse_witness(
    line: usize,
    e: &str,
    sigma: &Signature,
    doubled: bool,
) -> Result<(String, Witness), SpecError> {
    let open = e.find('(').ok_or_else(|| err(line, "expected `X(vars): formula`"))?;
    let close = e[open..].find(')').map(|i| i + open).ok_or_else(|| err(line, "unclosed `(`"))?;
    let name = e[..open].trim().to_string();
    let vars: Vec<String> = e[open + 1..close]
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    let rest = e[close + 1..].trim_start();
    let body = rest
        .strip_prefix(':')
        .ok_or_else(|| err(line, format!("expected `:` after the variables of `{name}`")))?;
    let body = parse_formula(body.trim(), sigma, doubled).map_err(|x| err(line, format!("`{name}`: {x}")))?;
    Ok((name, Witness { vars, body }))
}

/// Parses a machine description.
pub fn parse_spec(text: &str) -> Result<MachineSpec, SpecError> {
    let clean = strip_comments(text);
    let mut kappa = None;
    let mut flavor = Flavor::GSeqA;
    let mut blocks: BTreeMap<String, (usize, usize, String)> = BTreeMap::new();
    let mut pos = 0;
    let bytes = clean.as_bytes();
    while pos < clean.len() {
        if bytes[pos].is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        let line = line_at(&clean, pos);
        let rest = &clean[pos..];
        let word_end = rest
            .find(|c: char| !(c.is_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        let word = &rest[..word_end];
        let after = rest[word_end..].trim_start();
        if let Some(value) = after.strip_prefix(':') {
            let eol = value.find('\n').unwrap_or(value.len());
            let value = value[..eol].trim();
            match word {
                "kappa" => {
                    let k = match value.strip_prefix("finite:") {
                        Some(n) => OrdinalNotation::nat(
                            n.trim().parse().map_err(|_| err(line, format!("bad size `{n}`")))?,
                        ),
                        None => value
                            .parse::<OrdinalNotation>()
                            .map_err(|e| err(line, format!("bad kappa: {e}")))?,
                    };
                    kappa = Some(k);
                }
                "flavor" => {
                    flavor = match value {
                        "gseqa" => Flavor::GSeqA,
                        "gseqap" => Flavor::GSeqAP,
                        _ => return Err(err(line, format!("unknown flavor `{value}`"))),
                    }
                }
                _ => return Err(err(line, format!("unknown header `{word}`"))),
            }
            let consumed = rest.find('\n').map(|i| i + 1).unwrap_or(rest.len());
            pos = clean.len() - rest.len() + consumed;
            continue;
        }
        if let Some(inner) = after.strip_prefix('{') {
            if !["signature", "params", "default", "tau"].contains(&word) {
                return Err(err(line, format!("unknown section `{word}`")));
            }
            if blocks.contains_key(word) {
                return Err(err(line, format!("section `{word}` repeated")));
            }
            let mut depth = 1;
            let mut end = None;
            for (i, ch) in inner.char_indices() {
                match ch {
                    '{' => depth += 1,
                    '}' => {
                        depth -= 1;
                        if depth == 0 {
                            end = Some(i);
                            break;
                        }
                    }
                    _ => {}
                }
            }
            let end = end.ok_or_else(|| err(line, format!("section `{word}` is not closed")))?;
            let body_start = clean.len() - inner.len();
            blocks.insert(word.to_string(), (line, body_start, inner[..end].to_string()));
            pos = body_start + end + 1;
            continue;
        }
        return Err(err(line, format!("unexpected `{}`", rest.lines().next().unwrap_or(""))));
    }
    let kappa = kappa.ok_or_else(|| err(1, "missing `kappa:` header"))?;
    let section = |name: &str| -> Vec<(usize, String)> {
        match blocks.get(name) {
            Some((_, start, body)) => entries(body, *start, &clean),
            None => Vec::new(),
        }
    };
    let check_term = |(line, e): &(usize, String)| -> Result<(), SpecError> {
        if e.ends_with('\u{0}') {
            Err(err(*line, "entry is missing its terminating `;`"))
        } else {
            Ok(())
        }
    };
    let mut decls = Vec::new();
    for ent in section("signature") {
        check_term(&ent)?;
        decls.push(parse_decl(ent.0, &ent.1)?);
    }
    let sig_line = blocks.get("signature").map(|b| b.0).unwrap_or(1);
    let sigma = Signature::new(decls).map_err(|e| err(sig_line, e.to_string()))?;
    let mut params = BTreeMap::new();
    for ent in section("params") {
        check_term(&ent)?;
        let (line, e) = ent;
        let (name, value) = e.split_once('=').ok_or_else(|| err(line, "expected `name = value`"))?;
        let value = value.trim();
        let v = if value.starts_with('{') || value.starts_with("co") {
            ParamValue::Set(value.parse::<OrdinalSet>().map_err(|x| err(line, x.to_string()))?)
        } else {
            ParamValue::Ordinal(value.parse::<OrdinalNotation>().map_err(|x| err(line, x.to_string()))?)
        };
        params.insert(name.trim().to_string(), v);
    }
    let witnesses = |sec: &str, doubled: bool| -> Result<BTreeMap<String, Witness>, SpecError> {
        let mut out = BTreeMap::new();
        for ent in section(sec) {
            check_term(&ent)?;
            let (name, w) = parse_witness(ent.0, &ent.1, &sigma, doubled)?;
            if out.insert(name.clone(), w).is_some() {
                return Err(err(ent.0, format!("second `{sec}` witness for `{name}`")));
            }
        }
        Ok(out)
    };
    let defaults = witnesses("default", false)?;
    let tau = witnesses("tau", true)?;
    Ok(MachineSpec {
        kappa,
        sigma,
        flavor,
        params,
        tau,
        defaults,
    })
}

fn decl_line(d: &SymbolDecl) -> String {
    let kind = match d.kind {
        SymbolKind::Constant => "constant".to_string(),
        SymbolKind::Relation => format!("relation {}", d.arity),
        SymbolKind::Function => format!("function {}", d.arity),
    };
    let role = match d.distinguished {
        Distinguished::None => "",
        Distinguished::Membership => " membership",
        Distinguished::In => " in",
        Distinguished::Out => " out",
    };
    format!("{}: {kind}{role};", d.name)
}

/// Canonical text of a machine description; `parse_spec` reads it back to
/// an equal value.
pub fn print_spec(spec: &MachineSpec) -> String {
    let mut out = String::new();
    let kappa = match spec.kappa.as_nat() {
        Some(n) => format!("finite:{n}"),
        None => spec.kappa.to_string(),
    };
    let _ = writeln!(out, "kappa: {kappa}");
    let _ = writeln!(out, "flavor: {}", spec.flavor);
    let _ = writeln!(out, "signature {{");
    for d in spec.sigma.iter() {
        let _ = writeln!(out, "  {}", decl_line(d));
    }
    let _ = writeln!(out, "}}");
    if !spec.params.is_empty() {
        let _ = writeln!(out, "params {{");
        for (k, v) in &spec.params {
            let _ = writeln!(out, "  {k} = {v};");
        }
        let _ = writeln!(out, "}}");
    }
    for (title, map) in [("default", &spec.defaults), ("tau", &spec.tau)] {
        let _ = writeln!(out, "{title} {{");
        for d in spec.sigma.iter() {
            if let Some(w) = map.get(&d.name) {
                let _ = writeln!(out, "  {}({}): {};", d.name, w.vars.join(", "), w.body);
            }
        }
        let _ = writeln!(out, "}}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLIP: &str = "
        kappa: w
        flavor: gseqa   # bit flipper
        signature {
          in: relation 2 membership;
          In: relation 1 in;
          Out: relation 1 out;
          h: constant;
        }
        default { h(x): x = 0; }
        tau {
          In(x): ~In@0(x);
          Out(x): ~Out@0(x);
          h(x): x = h@0;
        }
    ";

    #[test]
    fn parses_and_round_trips() {
        let spec = parse_spec(FLIP).unwrap();
        assert_eq!(spec.kappa, OrdinalNotation::omega());
        assert_eq!(spec.tau.len(), 3);
        assert_eq!(spec.defaults["h"].vars, ["x"]);
        let again = parse_spec(&print_spec(&spec)).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn params_and_finite_kappa() {
        let text = "kappa: finite:6\nflavor: gseqap\nsignature { in: relation 2 membership; In: relation 1 in; Out: relation 1 out; c: constant; A: relation 1; }\nparams { c = 4; A = {1,2}; }\ntau { In(x): In@0(x); Out(x): Out@0(x); c(x): x = c@0; A(x): A@0(x); }";
        let spec = parse_spec(text).unwrap();
        assert_eq!(spec.kappa, OrdinalNotation::nat(6));
        assert_eq!(spec.params["c"], ParamValue::Ordinal(OrdinalNotation::nat(4)));
        assert!(matches!(spec.params["A"], ParamValue::Set(_)));
        assert_eq!(parse_spec(&print_spec(&spec)).unwrap(), spec);
    }

    #[test]
    fn errors_carry_lines() {
        let e = parse_spec("kappa: w\nbogus { }").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_spec("kappa: w\nsignature {\n in: relation 2 membership;\n In: relation 1 in;\n Out: relation 1 out;\n}\ntau {\n In(x): Nope@0(x);\n}").unwrap_err();
        assert_eq!(e.line, 8, "{e}");
        assert!(parse_spec("flavor: gseqa").is_err());
        let e = parse_spec("kappa: w\nsignature { in: relation 2 membership }").unwrap_err();
        assert!(e.msg.contains("terminating"), "{e}");
    }
}
