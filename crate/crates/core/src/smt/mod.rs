//! Satisfiability, entailment and AllSAT for quantifier-free linear
//! formulas.
//!
//! The internal backend runs clause learning over the propositional skeleton
//! and decides conjunctions of atoms with Fourier–Motzkin elimination over
//! the rationals. The external backend talks SMT-LIB2 to a solver process.
//!
//! Before solving, formulas are put in negation normal form and negated
//! atoms are replaced by their integer complements (`!(t <= 0)` becomes
//! `-t + 1 <= 0`). This is exact for integer-valued program variables and
//! leaves only positive atoms, so both backends see the same problem.

mod cdcl;
mod external;
mod theory;

use std::collections::{BTreeMap, HashMap};

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::formula::{Atom, Formula, Rel, Var};

use cdcl::{lit, Cdcl, Lit, Outcome};
pub use external::ExternalSolver;
use theory::{LinConstraint, TheoryResult};

pub type Rational = Ratio<i128>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("arithmetic overflow in the theory solver")]
    Overflow,
    #[error("could not start solver `{0}`: {1}")]
    Spawn(String, String),
    #[error("solver I/O failed: {0}")]
    Io(String),
    #[error("unexpected solver reply: {0}")]
    Protocol(String),
}

/// Values of the theory variables and propositional variables of a query.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Model {
    pub values: BTreeMap<Var, Rational>,
    pub props: BTreeMap<u32, bool>,
}

impl Model {
    /// Value of `v`; variables the query did not constrain are 0.
    pub fn value(&self, v: &Var) -> Rational {
        self.values.get(v).copied().unwrap_or_else(Rational::zero)
    }

    pub fn is_integral(&self) -> bool {
        self.values.values().all(|q| q.is_integer())
    }

    /// Evaluates `f` under rational semantics.
    pub fn eval(&self, f: &Formula) -> bool {
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Prop(p) => self.props.get(p).copied().unwrap_or(false),
            Formula::Atom(a) => {
                let t = a.term();
                let mut acc = Rational::from_integer(t.constant_part() as i128);
                for (v, c) in t.coeffs() {
                    acc += Rational::from_integer(*c as i128) * self.value(v);
                }
                match a.rel() {
                    Rel::Eq => acc.is_zero(),
                    Rel::Le => !acc.is_positive(),
                }
            }
            Formula::Not(g) => !self.eval(g),
            Formula::And(gs) => gs.iter().all(|g| self.eval(g)),
            Formula::Or(gs) => gs.iter().any(|g| self.eval(g)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(Model),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

/// Truth values of the requested propositional variables.
pub type Assignment = BTreeMap<u32, bool>;

pub trait SmtSolver {
    fn check_sat(&mut self, f: &Formula) -> Result<SatResult, SolverError>;

    /// Every total assignment to `important` that extends to a model of `f`,
    /// sorted.
    fn all_sat(&mut self, f: &Formula, important: &[u32]) -> Result<Vec<Assignment>, SolverError>;

    /// Number of satisfiability searches run so far.
    fn queries(&self) -> u64;

    fn entails(&mut self, a: &Formula, b: &Formula) -> Result<bool, SolverError> {
        if a.is_false() || b.is_true() {
            return Ok(true);
        }
        let q = Formula::and2(a.clone(), Formula::not(b.clone()));
        Ok(!self.check_sat(&q)?.is_sat())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverBackend {
    Internal,
    /// Command line of an SMT-LIB2 solver reading from stdin.
    External(String),
}

impl SolverBackend {
    pub fn create(&self) -> Result<Box<dyn SmtSolver>, SolverError> {
        match self {
            SolverBackend::Internal => Ok(Box::new(InternalSolver::new())),
            SolverBackend::External(cmd) => Ok(Box::new(ExternalSolver::spawn(cmd)?)),
        }
    }
}

/// NNF in which every atom occurs positively.
pub fn strengthen(f: &Formula) -> Formula {
    fn lit(f: &Formula) -> Formula {
        match f {
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Atom(a) => {
                    let t = a.term();
                    match a.rel() {
                        Rel::Le => Formula::atom(t.neg().add_constant(1), Rel::Le),
                        Rel::Eq => Formula::or2(
                            Formula::atom(t.add_constant(1), Rel::Le),
                            Formula::atom(t.neg().add_constant(1), Rel::Le),
                        ),
                    }
                }
                _ => f.clone(),
            },
            Formula::And(gs) => Formula::and(gs.iter().map(lit)),
            Formula::Or(gs) => Formula::or(gs.iter().map(lit)),
            _ => f.clone(),
        }
    }
    lit(&f.to_nnf())
}

/// Decides a conjunction of atoms over the rationals.
pub fn theory_check(conj: &[Atom]) -> Result<SatResult, SolverError> {
    let mut ids: BTreeMap<Var, u32> = BTreeMap::new();
    let mut rows = Vec::new();
    for a in conj {
        for v in a.vars() {
            let n = ids.len() as u32;
            ids.entry(v.clone()).or_insert(n);
        }
        rows.push(constraint(a, &ids));
    }
    match theory::check(&rows, ids.len())? {
        TheoryResult::Unsat(_) => Ok(SatResult::Unsat),
        TheoryResult::Sat(vals) => Ok(SatResult::Sat(Model {
            values: ids.into_iter().map(|(v, i)| (v, vals[i as usize])).collect(),
            props: BTreeMap::new(),
        })),
    }
}

fn constraint(a: &Atom, ids: &BTreeMap<Var, u32>) -> LinConstraint {
    let t = a.term();
    let mut coeffs: Vec<(u32, i128)> = t.coeffs().iter().map(|(v, c)| (ids[v], *c as i128)).collect();
    coeffs.sort_unstable();
    LinConstraint {
        coeffs,
        constant: t.constant_part() as i128,
        eq: a.rel() == Rel::Eq,
    }
}

/// Tseitin-style encoding of a strengthened formula into a [`Cdcl`]
/// instance. Only the implication from a definition variable to its
/// subformula is emitted, which suffices since every subformula occurs
/// positively.
struct Encoder {
    sat: Cdcl,
    atoms: HashMap<Atom, u32>,
    props: BTreeMap<u32, u32>,
    nodes: HashMap<Formula, Lit>,
    tvars: BTreeMap<Var, u32>,
}

impl Encoder {
    fn new() -> Self {
        Encoder {
            sat: Cdcl::new(),
            atoms: HashMap::new(),
            props: BTreeMap::new(),
            nodes: HashMap::new(),
            tvars: BTreeMap::new(),
        }
    }

    fn prop_var(&mut self, p: u32) -> u32 {
        if let Some(&v) = self.props.get(&p) {
            return v;
        }
        let v = self.sat.new_var();
        self.props.insert(p, v);
        v
    }

    fn literal(&mut self, f: &Formula) -> Lit {
        match f {
            Formula::Atom(a) => {
                if let Some(&v) = self.atoms.get(a) {
                    return lit(v, true);
                }
                for x in a.vars() {
                    if !self.tvars.contains_key(x) {
                        let id = self.sat.new_theory_var();
                        self.tvars.insert(x.clone(), id);
                    }
                }
                let v = self.sat.new_var();
                self.sat.attach(v, constraint(a, &self.tvars));
                self.atoms.insert(a.clone(), v);
                lit(v, true)
            }
            Formula::Prop(p) => lit(self.prop_var(*p), true),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Prop(p) => lit(self.prop_var(*p), false),
                other => panic!("negated non-propositional literal after strengthening: {}", other),
            },
            Formula::True | Formula::False => {
                let v = self.sat.new_var();
                self.sat.add_clause(&[lit(v, f.is_true())]);
                lit(v, true)
            }
            Formula::And(gs) | Formula::Or(gs) => {
                if let Some(&l) = self.nodes.get(f) {
                    return l;
                }
                let d = self.sat.new_var();
                let dl = lit(d, true);
                let children: Vec<Lit> = gs.iter().map(|g| self.literal(g)).collect();
                if matches!(f, Formula::And(_)) {
                    for c in children {
                        self.sat.add_clause(&[lit(d, false), c]);
                    }
                } else {
                    let mut clause = vec![lit(d, false)];
                    clause.extend(children);
                    self.sat.add_clause(&clause);
                }
                self.nodes.insert(f.clone(), dl);
                dl
            }
        }
    }

    fn assert(&mut self, f: &Formula) {
        match f {
            Formula::True => {}
            Formula::False => self.sat.add_clause(&[]),
            Formula::And(gs) => gs.iter().for_each(|g| self.assert(g)),
            Formula::Or(gs) => {
                let clause: Vec<Lit> = gs.iter().map(|g| self.literal(g)).collect();
                self.sat.add_clause(&clause);
            }
            other => {
                let l = self.literal(other);
                self.sat.add_clause(&[l]);
            }
        }
    }

    fn model(&self) -> Model {
        let vals = self.sat.theory_model();
        Model {
            values: self.tvars.iter().map(|(v, &i)| (v.clone(), vals[i as usize])).collect(),
            props: self
                .props
                .iter()
                .map(|(&p, &v)| (p, self.sat.value_of(v).unwrap_or(false)))
                .collect(),
        }
    }
}

/// In-process solver.
#[derive(Debug, Default)]
pub struct InternalSolver {
    queries: u64,
}

impl InternalSolver {
    pub fn new() -> Self {
        InternalSolver::default()
    }
}

impl SmtSolver for InternalSolver {
    fn check_sat(&mut self, f: &Formula) -> Result<SatResult, SolverError> {
        self.queries += 1;
        let mut enc = Encoder::new();
        enc.assert(&strengthen(f));
        match enc.sat.solve()? {
            Outcome::Sat => Ok(SatResult::Sat(enc.model())),
            Outcome::Unsat => Ok(SatResult::Unsat),
        }
    }

    fn all_sat(&mut self, f: &Formula, important: &[u32]) -> Result<Vec<Assignment>, SolverError> {
        let mut enc = Encoder::new();
        enc.assert(&strengthen(f));
        let vars: Vec<(u32, u32)> = important.iter().map(|&p| (p, enc.prop_var(p))).collect();
        let mut out = Vec::new();
        loop {
            self.queries += 1;
            match enc.sat.solve()? {
                Outcome::Unsat => break,
                Outcome::Sat => {
                    let a: Assignment = vars
                        .iter()
                        .map(|&(p, v)| (p, enc.sat.value_of(v).unwrap_or(false)))
                        .collect();
                    let block: Vec<Lit> = vars.iter().map(|&(p, v)| lit(v, !a[&p])).collect();
                    out.push(a);
                    enc.sat.add_clause(&block);
                }
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    fn queries(&self) -> u64 {
        self.queries
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_sexpr, Cmp, Term};

    fn f(s: &str) -> Formula {
        parse_sexpr(s).unwrap()
    }

    fn x() -> Term {
        Term::var(Var::new("x"))
    }

    #[test]
    fn contradiction_is_unsat() {
        let mut s = InternalSolver::new();
        assert_eq!(s.check_sat(&f("(and (> x 0) (< x 0))")).unwrap(), SatResult::Unsat);
    }

    #[test]
    fn disjunction_model() {
        let mut s = InternalSolver::new();
        let phi = f("(and (or (= x 2) (= x 7)) (< x 5))");
        match s.check_sat(&phi).unwrap() {
            SatResult::Sat(m) => {
                assert_eq!(m.value(&Var::new("x")), Rational::from_integer(2));
                assert!(m.eval(&phi));
            }
            SatResult::Unsat => panic!("expected sat"),
        }
    }

    #[test]
    fn true_has_empty_model() {
        let mut s = InternalSolver::new();
        assert_eq!(s.check_sat(&Formula::True).unwrap(), SatResult::Sat(Model::default()));
    }

    #[test]
    fn entailment_examples() {
        let mut s = InternalSolver::new();
        let x1 = Formula::compare(&x(), Cmp::Eq, &Term::constant(1));
        let pos = Formula::compare(&x(), Cmp::Gt, &Term::constant(0));
        assert!(s.entails(&x1, &pos).unwrap());
        assert!(!s.entails(&pos, &x1).unwrap());
        assert!(s.entails(&Formula::False, &pos).unwrap());
    }

    #[test]
    fn all_sat_examples() {
        let mut s = InternalSolver::new();
        let got = s.all_sat(&f("(or (prop 1) (prop 2))"), &[1, 2]).unwrap();
        let want: Vec<Assignment> = vec![
            BTreeMap::from([(1, false), (2, true)]),
            BTreeMap::from([(1, true), (2, false)]),
            BTreeMap::from([(1, true), (2, true)]),
        ];
        assert_eq!(got, want);

        let none = s.all_sat(&f("(and (prop 1) (not (prop 1)))"), &[1]).unwrap();
        assert!(none.is_empty());

        let phi = f("(and (or (and (prop 1) (> x 0)) (and (not (prop 1)) (<= x 0))) \
                          (or (and (prop 2) (< x 5)) (and (not (prop 2)) (>= x 5))) (= x 2))");
        let got = s.all_sat(&phi, &[1, 2]).unwrap();
        assert_eq!(got, vec![BTreeMap::from([(1, true), (2, true)])]);
    }

    #[test]
    fn theory_check_examples() {
        let a = |s: &str| match f(s) {
            Formula::Atom(a) => a,
            other => panic!("not an atom: {}", other),
        };
        assert_eq!(theory_check(&[a("(<= x 0)"), a("(<= (- x) -1)")]).unwrap(), SatResult::Unsat);
        match theory_check(&[a("(= x (+ y 1))"), a("(>= y 0)")]).unwrap() {
            SatResult::Sat(m) => {
                assert_eq!(m.value(&Var::new("y")), Rational::from_integer(0));
                assert_eq!(m.value(&Var::new("x")), Rational::from_integer(1));
            }
            SatResult::Unsat => panic!("expected sat"),
        }
        assert!(theory_check(&[]).unwrap().is_sat());
    }

    #[test]
    fn negated_equality_is_split() {
        let mut s = InternalSolver::new();
        let phi = f("(and (distinct x 0) (>= x 0) (<= x 0))");
        assert_eq!(s.check_sat(&phi).unwrap(), SatResult::Unsat);
    }
}
