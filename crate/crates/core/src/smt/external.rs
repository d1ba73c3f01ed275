//! SMT-LIB2 solver running as a child process.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use crate::formula::sexpr::{read, Sexp};
use crate::formula::{Formula, Rel, Term, Var};

use super::{strengthen, Assignment, Model, Rational, SatResult, SmtSolver, SolverError};

/// One solver process per instance; every query runs inside its own
/// `(push 1)` / `(pop 1)` scope.
pub struct ExternalSolver {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    queries: u64,
}

fn io(e: std::io::Error) -> SolverError {
    SolverError::Io(e.to_string())
}

fn var_name(v: &Var) -> String {
    format!("|{}|", v)
}

fn prop_name(p: u32) -> String {
    format!("|prop!{}|", p)
}

fn num(k: i64) -> String {
    if k < 0 {
        format!("(- {}.0)", k.unsigned_abs())
    } else {
        format!("{}.0", k)
    }
}

fn term(t: &Term) -> String {
    let mut parts: Vec<String> = t
        .coeffs()
        .iter()
        .map(|(v, c)| if *c == 1 { var_name(v) } else { format!("(* {} {})", num(*c), var_name(v)) })
        .collect();
    if t.constant_part() != 0 || parts.is_empty() {
        parts.push(num(t.constant_part()));
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

pub(crate) fn to_smtlib(f: &Formula) -> String {
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Prop(p) => prop_name(*p),
        Formula::Atom(a) => {
            let op = if a.rel() == Rel::Eq { "=" } else { "<=" };
            format!("({} {} 0.0)", op, term(a.term()))
        }
        Formula::Not(g) => format!("(not {})", to_smtlib(g)),
        Formula::And(gs) | Formula::Or(gs) => {
            let head = if matches!(f, Formula::And(_)) { "and" } else { "or" };
            let inner: Vec<String> = gs.iter().map(to_smtlib).collect();
            format!("({} {})", head, inner.join(" "))
        }
    }
}

fn parse_number(s: &Sexp) -> Result<Rational, SolverError> {
    let bad = || SolverError::Protocol(format!("not a number: {:?}", s));
    match s {
        Sexp::Atom(a) => {
            let (int, frac) = a.split_once('.').unwrap_or((a, ""));
            let digits = frac.trim_end_matches('0');
            let den = 10i128.checked_pow(digits.len() as u32).ok_or_else(bad)?;
            let whole: i128 = int.parse().map_err(|_| bad())?;
            let part: i128 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| bad())? };
            Ok(Rational::new(whole * den + part, den))
        }
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(op), x] if op == "-" => Ok(-parse_number(x)?),
            [Sexp::Atom(op), a, b] if op == "/" => Ok(parse_number(a)? / parse_number(b)?),
            _ => Err(bad()),
        },
    }
}

impl ExternalSolver {
    pub fn spawn(cmd: &str) -> Result<Self, SolverError> {
        let mut words = cmd.split_whitespace();
        let prog = words
            .next()
            .ok_or_else(|| SolverError::Spawn(cmd.into(), "empty command".into()))?;
        let mut child = Command::new(prog)
            .args(words)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SolverError::Spawn(cmd.into(), e.to_string()))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut s = ExternalSolver {
            child,
            stdin,
            stdout,
            queries: 0,
        };
        s.send("(set-option :print-success false)\n(set-option :produce-models true)\n(set-logic QF_LRA)\n")?;
        Ok(s)
    }

    fn send(&mut self, text: &str) -> Result<(), SolverError> {
        self.stdin.write_all(text.as_bytes()).map_err(io)?;
        self.stdin.flush().map_err(io)
    }

    /// Reads one complete s-expression or bare word from the solver.
    fn receive(&mut self) -> Result<Sexp, SolverError> {
        let mut buf = String::new();
        loop {
            let n = self.stdout.read_line(&mut buf).map_err(io)?;
            if n == 0 {
                return Err(SolverError::Io("solver closed its output".into()));
            }
            if buf.trim().is_empty() {
                buf.clear();
                continue;
            }
            let open = buf.matches('(').count();
            let close = buf.matches(')').count();
            if open <= close {
                break;
            }
        }
        let (sx, _) = read(&buf).map_err(|e| SolverError::Protocol(e.to_string()))?;
        if let Sexp::List(items) = &sx {
            if matches!(items.first(), Some(Sexp::Atom(a)) if a == "error") {
                return Err(SolverError::Protocol(buf.trim().to_string()));
            }
        }
        Ok(sx)
    }

    fn check(&mut self) -> Result<bool, SolverError> {
        self.queries += 1;
        self.send("(check-sat)\n")?;
        match self.receive()? {
            Sexp::Atom(a) if a == "sat" => Ok(true),
            Sexp::Atom(a) if a == "unsat" => Ok(false),
            other => Err(SolverError::Protocol(format!("{:?}", other))),
        }
    }

    fn open_scope(&mut self, f: &Formula, extra_props: &[u32]) -> Result<(Vec<Var>, Vec<u32>), SolverError> {
        let g = strengthen(f);
        let vars: Vec<Var> = g.vars().into_iter().collect();
        let mut props: BTreeSet<u32> = g.props();
        props.extend(extra_props.iter().copied());
        let mut text = String::from("(push 1)\n");
        for v in &vars {
            text.push_str(&format!("(declare-fun {} () Real)\n", var_name(v)));
        }
        for p in &props {
            text.push_str(&format!("(declare-fun {} () Bool)\n", prop_name(*p)));
        }
        text.push_str(&format!("(assert {})\n", to_smtlib(&g)));
        self.send(&text)?;
        Ok((vars, props.into_iter().collect()))
    }

    fn values(&mut self, vars: &[Var], props: &[u32]) -> Result<Model, SolverError> {
        let mut model = Model::default();
        if vars.is_empty() && props.is_empty() {
            return Ok(model);
        }
        let names: Vec<String> = vars
            .iter()
            .map(var_name)
            .chain(props.iter().map(|p| prop_name(*p)))
            .collect();
        self.send(&format!("(get-value ({}))\n", names.join(" ")))?;
        let Sexp::List(pairs) = self.receive()? else {
            return Err(SolverError::Protocol("get-value reply is not a list".into()));
        };
        if pairs.len() != names.len() {
            return Err(SolverError::Protocol("get-value reply has wrong length".into()));
        }
        for (i, pair) in pairs.iter().enumerate() {
            let Sexp::List(kv) = pair else {
                return Err(SolverError::Protocol("malformed get-value entry".into()));
            };
            let value = kv.get(1).ok_or_else(|| SolverError::Protocol("missing value".into()))?;
            if i < vars.len() {
                model.values.insert(vars[i].clone(), parse_number(value)?);
            } else {
                let b = matches!(value, Sexp::Atom(a) if a == "true");
                model.props.insert(props[i - vars.len()], b);
            }
        }
        Ok(model)
    }
}

impl SmtSolver for ExternalSolver {
    fn check_sat(&mut self, f: &Formula) -> Result<SatResult, SolverError> {
        let (vars, props) = self.open_scope(f, &[])?;
        let result = if self.check()? {
            SatResult::Sat(self.values(&vars, &props)?)
        } else {
            SatResult::Unsat
        };
        self.send("(pop 1)\n")?;
        Ok(result)
    }

    fn all_sat(&mut self, f: &Formula, important: &[u32]) -> Result<Vec<Assignment>, SolverError> {
        let _ = self.open_scope(f, important)?;
        let mut out = Vec::new();
        while self.check()? {
            let m = self.values(&[], important)?;
            let block: Vec<String> = important
                .iter()
                .map(|p| {
                    if m.props[p] {
                        format!("(not {})", prop_name(*p))
                    } else {
                        prop_name(*p)
                    }
                })
                .collect();
            out.push(m.props);
            if block.is_empty() {
                break;
            }
            self.send(&format!("(assert (or {}))\n", block.join(" ")))?;
        }
        self.send("(pop 1)\n")?;
        out.sort();
        out.dedup();
        Ok(out)
    }

    fn queries(&self) -> u64 {
        self.queries
    }
}

impl Drop for ExternalSolver {
    fn drop(&mut self) {
        let _ = self.send("(exit)\n");
        if self.child.try_wait().ok().flatten().is_none() {
            let _ = self.child.kill();
        }
        let _ = self.child.wait();
    }
}
