use std::collections::BTreeSet;
use std::sync::Arc;

use crate::formula::{Cmp, Formula, Term, Var};

use super::lexer::{lex, Tok, Token};
use super::{ParseError, ParseErrorKind, SourceProgram, Stmt};

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    declared: BTreeSet<Arc<str>>,
}

type PResult<T> = Result<T, ParseError>;

pub(super) fn parse(src: &str) -> PResult<SourceProgram> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        declared: BTreeSet::new(),
    };
    let mut declarations = Vec::new();
    while p.peek_ident("int") {
        p.pos += 1;
        let (name, tok) = p.ident()?;
        let name: Arc<str> = Arc::from(name.as_str());
        if !p.declared.insert(name.clone()) {
            return Err(p.error_at(&tok, ParseErrorKind::Redeclared(name.to_string())));
        }
        declarations.push(name);
        p.expect(";")?;
    }
    let mut body = Vec::new();
    while p.peek().tok != Tok::Eof {
        body.push(p.stmt()?);
    }
    Ok(SourceProgram { declarations, body })
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn peek_ident(&self, word: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == word)
    }

    fn peek_sym(&self, sym: &str) -> bool {
        matches!(self.peek().tok, Tok::Sym(s) if s == sym)
    }

    fn error_at(&self, t: &Token, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: t.line,
            col: t.col,
            kind,
        }
    }

    fn syntax(&self, what: &str) -> ParseError {
        let t = self.peek();
        let found = match &t.tok {
            Tok::Int(k) => k.to_string(),
            Tok::Ident(s) => s.clone(),
            Tok::Sym(s) => s.to_string(),
            Tok::Eof => "end of input".into(),
        };
        self.error_at(t, ParseErrorKind::Syntax(format!("expected {}, found `{}`", what, found)))
    }

    fn expect(&mut self, sym: &str) -> PResult<()> {
        if self.peek_sym(sym) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("`{}`", sym)))
        }
    }

    fn ident(&mut self) -> PResult<(String, Token)> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Ident(s) if !is_keyword(s) => {
                self.pos += 1;
                Ok((s.clone(), t))
            }
            _ => Err(self.syntax("identifier")),
        }
    }

    fn variable(&mut self) -> PResult<Arc<str>> {
        let (name, tok) = self.ident()?;
        match self.declared.get(name.as_str()) {
            Some(v) => Ok(v.clone()),
            None => Err(self.error_at(&tok, ParseErrorKind::Undeclared(name))),
        }
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect("{")?;
        let mut out = Vec::new();
        while !self.peek_sym("}") {
            if self.peek().tok == Tok::Eof {
                return Err(self.syntax("`}`"));
            }
            out.push(self.stmt()?);
        }
        self.pos += 1;
        Ok(out)
    }

    /// `*` or a condition, inside the parentheses of `if`/`while`.
    fn guard(&mut self) -> PResult<Option<Formula>> {
        self.expect("(")?;
        let g = if self.peek_sym("*") && *self.peek_at(1) == Tok::Sym(")") {
            self.pos += 1;
            None
        } else {
            Some(self.cond()?)
        };
        self.expect(")")?;
        Ok(g)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let word = match &self.peek().tok {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.syntax("statement")),
        };
        match word.as_str() {
            "assume" | "assert" => {
                self.pos += 1;
                self.expect("(")?;
                let c = self.cond()?;
                self.expect(")")?;
                self.expect(";")?;
                Ok(if word == "assume" { Stmt::Assume(c) } else { Stmt::Assert(c) })
            }
            "if" => {
                self.pos += 1;
                let cond = self.guard()?;
                let then = self.block()?;
                let els = if self.peek_ident("else") {
                    self.pos += 1;
                    self.block()?
                } else {
                    Vec::new()
                };
                Ok(Stmt::If { cond, then, els })
            }
            "while" => {
                self.pos += 1;
                let cond = self.guard()?;
                let body = self.block()?;
                Ok(Stmt::While { cond, body })
            }
            "error" => {
                self.pos += 1;
                self.expect("(")?;
                self.expect(")")?;
                self.expect(";")?;
                Ok(Stmt::Error)
            }
            "skip" => {
                self.pos += 1;
                self.expect(";")?;
                Ok(Stmt::Skip)
            }
            "int" => Err(self.syntax("statement (declarations must come first)")),
            _ => {
                let var = self.variable()?;
                self.expect("=")?;
                let s = if self.peek_ident("nondet") {
                    self.pos += 1;
                    self.expect("(")?;
                    self.expect(")")?;
                    Stmt::Havoc(var)
                } else {
                    Stmt::Assign(var, self.expr()?)
                };
                self.expect(";")?;
                Ok(s)
            }
        }
    }

    fn cond(&mut self) -> PResult<Formula> {
        let mut parts = vec![self.conj()?];
        while self.peek_sym("||") {
            self.pos += 1;
            parts.push(self.conj()?);
        }
        Ok(Formula::or(parts))
    }

    fn conj(&mut self) -> PResult<Formula> {
        let mut parts = vec![self.cond_unary()?];
        while self.peek_sym("&&") {
            self.pos += 1;
            parts.push(self.cond_unary()?);
        }
        Ok(Formula::and(parts))
    }

    fn cond_unary(&mut self) -> PResult<Formula> {
        if self.peek_sym("!") {
            self.pos += 1;
            return Ok(Formula::not(self.cond_unary()?));
        }
        if self.peek_sym("(") {
            // Either a parenthesized condition or a comparison whose left
            // operand starts with a parenthesized expression.
            let save = self.pos;
            self.pos += 1;
            if let Ok(c) = self.cond() {
                if self.peek_sym(")") {
                    self.pos += 1;
                    if !self.at_expr_continuation() {
                        return Ok(c);
                    }
                }
            }
            self.pos = save;
        }
        self.comparison()
    }

    fn at_expr_continuation(&self) -> bool {
        matches!(
            self.peek().tok,
            Tok::Sym("==" | "!=" | "<" | "<=" | ">" | ">=" | "+" | "-" | "*")
        )
    }

    fn comparison(&mut self) -> PResult<Formula> {
        let lhs = self.expr()?;
        let cmp = match self.peek().tok {
            Tok::Sym("==") => Cmp::Eq,
            Tok::Sym("!=") => Cmp::Ne,
            Tok::Sym("<") => Cmp::Lt,
            Tok::Sym("<=") => Cmp::Le,
            Tok::Sym(">") => Cmp::Gt,
            Tok::Sym(">=") => Cmp::Ge,
            _ => return Err(self.syntax("comparison operator")),
        };
        self.pos += 1;
        let rhs = self.expr()?;
        Ok(Formula::compare(&lhs, cmp, &rhs))
    }

    fn expr(&mut self) -> PResult<Term> {
        let mut acc = self.product()?;
        loop {
            if self.peek_sym("+") {
                self.pos += 1;
                acc = acc.add(&self.product()?);
            } else if self.peek_sym("-") {
                self.pos += 1;
                acc = acc.sub(&self.product()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> PResult<Term> {
        let mut acc = self.factor()?;
        while self.peek_sym("*") {
            let tok = self.peek().clone();
            self.pos += 1;
            let rhs = self.factor()?;
            acc = if acc.is_constant() {
                rhs.scale(acc.constant_part())
            } else if rhs.is_constant() {
                acc.scale(rhs.constant_part())
            } else {
                return Err(self.error_at(
                    &tok,
                    ParseErrorKind::Syntax("non-linear multiplication".into()),
                ));
            };
        }
        Ok(acc)
    }

    fn factor(&mut self) -> PResult<Term> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Int(k) => {
                self.pos += 1;
                Ok(Term::constant(k))
            }
            Tok::Sym("-") => {
                self.pos += 1;
                Ok(self.factor()?.neg())
            }
            Tok::Sym("(") => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(ref s) if s == "nondet" => Err(self.error_at(
                &t,
                ParseErrorKind::Syntax("nondet() is only allowed as a whole right-hand side".into()),
            )),
            Tok::Ident(_) => {
                let v = self.variable()?;
                Ok(Term::var(Var {
                    name: v,
                    index: None,
                }))
            }
            _ => Err(self.syntax("expression")),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "int" | "assume" | "assert" | "if" | "else" | "while" | "error" | "skip" | "nondet"
    )
}
