//! S-expression syntax for formulas, used in tests and debug output.
//!
//! ```text
//! formula := "true" | "false" | "(prop" NAT ")"
//!          | "(not" formula ")" | "(and" formula* ")" | "(or" formula* ")"
//!          | "(" rel term term ")"            rel ∈ { = <= < >= > distinct }
//! term    := INT | IDENT | IDENT "@" NAT
//!          | "(+" term* ")" | "(-" term ")" | "(-" term term ")" | "(*" INT term ")"
//! ```
//!
//! The printer always emits atoms as `(<= t 0)` or `(= t 0)`.

use thiserror::Error;

use super::{Cmp, Formula, Rel, Term, Var};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SexprError {
    #[error("unexpected end of input")]
    Eof,
    #[error("unexpected token `{0}`")]
    Unexpected(String),
    #[error("trailing input after formula")]
    Trailing,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

pub(crate) fn read(src: &str) -> Result<(Sexp, &str), SexprError> {
    let s = src.trim_start();
    if s.is_empty() {
        return Err(SexprError::Eof);
    }
    if let Some(mut rest) = s.strip_prefix('(') {
        let mut items = Vec::new();
        loop {
            rest = rest.trim_start();
            if let Some(r) = rest.strip_prefix(')') {
                return Ok((Sexp::List(items), r));
            }
            let (item, r) = read(rest)?;
            items.push(item);
            rest = r;
        }
    }
    if s.starts_with(')') {
        return Err(SexprError::Unexpected(")".into()));
    }
    if let Some(body) = s.strip_prefix('|') {
        let end = body.find('|').ok_or(SexprError::Eof)?;
        return Ok((Sexp::Atom(body[..end].to_string()), &body[end + 1..]));
    }
    let end = s
        .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
        .unwrap_or(s.len());
    Ok((Sexp::Atom(s[..end].to_string()), &s[end..]))
}

pub fn parse_sexpr(src: &str) -> Result<Formula, SexprError> {
    let (sx, rest) = read(src)?;
    if !rest.trim().is_empty() {
        return Err(SexprError::Trailing);
    }
    formula(&sx)
}

fn unexpected(s: &Sexp) -> SexprError {
    SexprError::Unexpected(match s {
        Sexp::Atom(a) => a.clone(),
        Sexp::List(_) => "(...)".into(),
    })
}

fn formula(s: &Sexp) -> Result<Formula, SexprError> {
    match s {
        Sexp::Atom(a) if a == "true" => Ok(Formula::True),
        Sexp::Atom(a) if a == "false" => Ok(Formula::False),
        Sexp::List(items) => {
            let Some(Sexp::Atom(head)) = items.first() else {
                return Err(unexpected(s));
            };
            let args = &items[1..];
            match head.as_str() {
                "not" if args.len() == 1 => Ok(Formula::not(formula(&args[0])?)),
                "and" => Ok(Formula::and(args.iter().map(formula).collect::<Result<Vec<_>, _>>()?)),
                "or" => Ok(Formula::or(args.iter().map(formula).collect::<Result<Vec<_>, _>>()?)),
                "prop" if args.len() == 1 => match &args[0] {
                    Sexp::Atom(n) => n.parse().map(Formula::Prop).map_err(|_| unexpected(&args[0])),
                    other => Err(unexpected(other)),
                },
                rel if args.len() == 2 => {
                    let cmp = match rel {
                        "=" => Cmp::Eq,
                        "distinct" => Cmp::Ne,
                        "<=" => Cmp::Le,
                        "<" => Cmp::Lt,
                        ">=" => Cmp::Ge,
                        ">" => Cmp::Gt,
                        _ => return Err(unexpected(&items[0])),
                    };
                    Ok(Formula::compare(&term(&args[0])?, cmp, &term(&args[1])?))
                }
                _ => Err(unexpected(&items[0])),
            }
        }
        other => Err(unexpected(other)),
    }
}

fn term(s: &Sexp) -> Result<Term, SexprError> {
    match s {
        Sexp::Atom(a) => {
            if let Ok(k) = a.parse::<i64>() {
                return Ok(Term::constant(k));
            }
            if !a.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
                return Err(unexpected(s));
            }
            match a.split_once('@') {
                Some((name, idx)) => {
                    let i = idx.parse().map_err(|_| unexpected(s))?;
                    Ok(Term::var(Var::indexed(name, i)))
                }
                None => Ok(Term::var(Var::new(a))),
            }
        }
        Sexp::List(items) => {
            let Some(Sexp::Atom(head)) = items.first() else {
                return Err(unexpected(s));
            };
            let args = items[1..].iter().map(term).collect::<Result<Vec<_>, _>>()?;
            match (head.as_str(), args.len()) {
                ("+", _) => Ok(args.iter().fold(Term::constant(0), |acc, t| acc.add(t))),
                ("-", 1) => Ok(args[0].neg()),
                ("-", 2) => Ok(args[0].sub(&args[1])),
                ("*", 2) if args[0].is_constant() => Ok(args[1].scale(args[0].constant_part())),
                ("*", 2) if args[1].is_constant() => Ok(args[0].scale(args[1].constant_part())),
                _ => Err(unexpected(&items[0])),
            }
        }
    }
}

fn print_term(t: &Term) -> String {
    let mut parts: Vec<String> = t
        .coeffs()
        .iter()
        .map(|(v, c)| if *c == 1 { v.to_string() } else { format!("(* {} {})", c, v) })
        .collect();
    if t.constant_part() != 0 || parts.is_empty() {
        parts.push(t.constant_part().to_string());
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

pub(crate) fn print(f: &Formula) -> String {
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Prop(p) => format!("(prop {})", p),
        Formula::Atom(a) => {
            let op = match a.rel() {
                Rel::Eq => "=",
                Rel::Le => "<=",
            };
            format!("({} {} 0)", op, print_term(a.term()))
        }
        Formula::Not(g) => format!("(not {})", print(g)),
        Formula::And(gs) | Formula::Or(gs) => {
            let head = if matches!(f, Formula::And(_)) { "and" } else { "or" };
            let inner: Vec<String> = gs.iter().map(print).collect();
            format!("({} {})", head, inner.join(" "))
        }
    }
}
