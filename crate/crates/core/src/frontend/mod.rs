//! Parser for the input language and construction of the single-block CFA.
//!
//! ```text
//! program := decl* stmt*
//! decl    := "int" IDENT ";"
//! stmt    := IDENT "=" (expr | "nondet" "(" ")") ";"
//!          | "assume" "(" cond ")" ";" | "assert" "(" cond ")" ";"
//!          | "if" "(" ("*" | cond) ")" block ("else" block)?
//!          | "while" "(" ("*" | cond) ")" block
//!          | "error" "(" ")" ";" | "skip" ";"
//! ```
//!
//! Expressions are linear; conditions combine comparisons with `&&`, `||`
//! and `!`. Comments run from `//` to the end of the line.

mod lexer;
mod parser;

use std::sync::Arc;

use thiserror::Error;

use crate::cfa::{Cfa, LocId, Operation, Program};
use crate::formula::{Formula, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign(Arc<str>, Term),
    Havoc(Arc<str>),
    Assume(Formula),
    Assert(Formula),
    /// `cond == None` is the nondeterministic `if (*)`.
    If {
        cond: Option<Formula>,
        then: Vec<Stmt>,
        els: Vec<Stmt>,
    },
    While {
        cond: Option<Formula>,
        body: Vec<Stmt>,
    },
    Error,
    Skip,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceProgram {
    pub declarations: Vec<Arc<str>>,
    pub body: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Lexical(String),
    #[error("{0}")]
    Syntax(String),
    #[error("undeclared variable `{0}`")]
    Undeclared(String),
    #[error("variable `{0}` declared twice")]
    Redeclared(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

pub fn parse(source: &str) -> Result<SourceProgram, ParseError> {
    parser::parse(source)
}

pub const ENTRY: LocId = 0;
pub const ERROR: LocId = 1;

struct Builder {
    cfa: Cfa,
    next: LocId,
}

impl Builder {
    fn fresh(&mut self) -> LocId {
        let l = self.next;
        self.next += 1;
        self.cfa.add_location(l);
        l
    }

    fn edge(&mut self, from: LocId, op: Operation, to: LocId) {
        self.cfa.add_edge(from, op, to);
    }

    fn seq(&mut self, stmts: &[Stmt], from: LocId, to: LocId) {
        match stmts.split_last() {
            None => self.edge(from, Operation::skip(), to),
            Some((last, init)) => {
                let mut cur = from;
                for s in init {
                    let mid = self.fresh();
                    self.stmt(s, cur, mid);
                    cur = mid;
                }
                self.stmt(last, cur, to);
            }
        }
    }

    /// Branch `from --[guard]--> ... --> to`; an empty branch is the guard
    /// edge alone.
    fn branch(&mut self, guard: Formula, stmts: &[Stmt], from: LocId, to: LocId) {
        if stmts.is_empty() {
            self.edge(from, Operation::assume(guard), to);
        } else {
            let start = self.fresh();
            self.edge(from, Operation::assume(guard), start);
            self.seq(stmts, start, to);
        }
    }

    fn stmt(&mut self, s: &Stmt, from: LocId, to: LocId) {
        match s {
            Stmt::Assign(x, t) => self.edge(from, Operation::Assign(x.clone(), t.clone()), to),
            Stmt::Havoc(x) => self.edge(from, Operation::Havoc(x.clone()), to),
            Stmt::Assume(c) => self.edge(from, Operation::assume(c.clone()), to),
            Stmt::Skip => self.edge(from, Operation::skip(), to),
            Stmt::Error => self.edge(from, Operation::skip(), ERROR),
            Stmt::Assert(c) => {
                let fail = self.fresh();
                self.edge(from, Operation::assume(Formula::not(c.clone())), fail);
                self.edge(fail, Operation::skip(), ERROR);
                self.edge(from, Operation::assume(c.clone()), to);
            }
            Stmt::If { cond, then, els } => {
                let (pos, neg) = guards(cond);
                self.branch(pos, then, from, to);
                self.branch(neg, els, from, to);
            }
            Stmt::While { cond, body } => {
                // The entry location must not get incoming edges.
                let head = if from == ENTRY {
                    let h = self.fresh();
                    self.edge(from, Operation::skip(), h);
                    h
                } else {
                    from
                };
                let (pos, neg) = guards(cond);
                self.branch(pos, body, head, head);
                self.edge(head, Operation::assume(neg), to);
            }
        }
    }
}

fn guards(cond: &Option<Formula>) -> (Formula, Formula) {
    match cond {
        Some(c) => (c.clone(), Formula::not(c.clone())),
        None => (Formula::True, Formula::True),
    }
}

/// Builds the single-block CFA: one edge per assignment, assume, havoc,
/// skip and error call, and two guard edges per branch or loop condition.
///
/// Location 0 is the entry and location 1 the error location. Locations left
/// without any edge (for example the continuation after `error();`) are
/// dropped.
pub fn to_cfa(p: &SourceProgram) -> Program {
    let mut b = Builder {
        cfa: Cfa::new(),
        next: 0,
    };
    let entry = b.fresh();
    let error = b.fresh();
    debug_assert_eq!((entry, error), (ENTRY, ERROR));
    let exit = b.fresh();
    b.seq(&p.body, entry, exit);
    let isolated: Vec<LocId> = b
        .cfa
        .locations()
        .iter()
        .copied()
        .filter(|&l| {
            l != entry
                && l != error
                && b.cfa.incoming(l).next().is_none()
                && b.cfa.outgoing(l).next().is_none()
        })
        .collect();
    for l in isolated {
        b.cfa.remove_location(l);
    }
    Program {
        cfa: b.cfa,
        entry,
        error,
        variables: p.declarations.clone(),
    }
}

/// Parses and translates in one step.
pub fn compile(source: &str) -> Result<Program, ParseError> {
    parse(source).map(|p| to_cfa(&p))
}
