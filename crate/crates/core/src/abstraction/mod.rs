//! Cartesian and Boolean predicate abstraction.
//!
//! Abstract states are BDDs over predicate ids. Predicates are interned in a
//! [`PredicateTable`] shared by the whole run, so the BDD variable of a
//! predicate is the same at every location and abstract states with
//! different precisions can still be compared.

mod bdd;

use std::collections::{BTreeMap, HashMap};

pub use bdd::{Bdd, BddRef};

use crate::cfa::{LocId, Operation};
use crate::formula::{encode_edge, Formula, SsaMap};
use crate::smt::{SmtSolver, SolverError};

pub type PredId = u32;

/// Propositional formula over predicate ids.
pub type AbstractFormula = BddRef;

#[derive(Clone, Debug, Default)]
pub struct PredicateTable {
    preds: Vec<Formula>,
    index: HashMap<Formula, PredId>,
}

impl PredicateTable {
    pub fn intern(&mut self, p: Formula) -> PredId {
        if let Some(&id) = self.index.get(&p) {
            return id;
        }
        let id = self.preds.len() as PredId;
        self.preds.push(p.clone());
        self.index.insert(p, id);
        id
    }

    pub fn get(&self, id: PredId) -> &Formula {
        &self.preds[id as usize]
    }

    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }
}

/// Predicates tracked at one location, in insertion order without
/// duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Precision(Vec<PredId>);

impl Precision {
    pub fn new() -> Self {
        Precision::default()
    }

    /// Adds `id`; returns whether it was new.
    pub fn insert(&mut self, id: PredId) -> bool {
        if self.0.contains(&id) {
            false
        } else {
            self.0.push(id);
            true
        }
    }

    pub fn contains(&self, id: PredId) -> bool {
        self.0.contains(&id)
    }

    pub fn ids(&self) -> &[PredId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<PredId> for Precision {
    fn from_iter<I: IntoIterator<Item = PredId>>(iter: I) -> Self {
        let mut p = Precision::new();
        for id in iter {
            p.insert(id);
        }
        p
    }
}

/// Precision per location; locations without an entry have the empty
/// precision.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProgramPrecision(BTreeMap<LocId, Precision>);

static EMPTY: Precision = Precision(Vec::new());

impl ProgramPrecision {
    pub fn new() -> Self {
        ProgramPrecision::default()
    }

    pub fn get(&self, l: LocId) -> &Precision {
        self.0.get(&l).unwrap_or(&EMPTY)
    }

    pub fn insert(&mut self, l: LocId, id: PredId) -> bool {
        self.0.entry(l).or_default().insert(id)
    }

    /// Same precision everywhere in `locs`.
    pub fn uniform(locs: impl IntoIterator<Item = LocId>, pi: &Precision) -> Self {
        ProgramPrecision(locs.into_iter().map(|l| (l, pi.clone())).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = (LocId, &Precision)> {
        self.0.iter().map(|(l, p)| (*l, p))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AbstractionMode {
    Cartesian,
    Boolean,
}

/// Owns the solver, the predicate table and the BDD manager of a run.
pub struct Abstractor {
    pub bdd: Bdd,
    pub preds: PredicateTable,
    solver: Box<dyn SmtSolver>,
    concrete: HashMap<BddRef, Formula>,
}

impl Abstractor {
    pub fn new(solver: Box<dyn SmtSolver>) -> Self {
        Abstractor {
            bdd: Bdd::new(),
            preds: PredicateTable::default(),
            solver,
            concrete: HashMap::new(),
        }
    }

    pub fn solver(&mut self) -> &mut dyn SmtSolver {
        self.solver.as_mut()
    }

    pub fn queries(&self) -> u64 {
        self.solver.queries()
    }

    /// Replaces every predicate id by its formula.
    pub fn concretize(&mut self, r: AbstractFormula) -> Formula {
        if r.is_true() {
            return Formula::True;
        }
        if r.is_false() {
            return Formula::False;
        }
        if let Some(f) = self.concrete.get(&r) {
            return f.clone();
        }
        let (v, lo, hi) = self.bdd.node(r).unwrap();
        let p = self.preds.get(v).clone();
        let np = Formula::not(p.clone());
        let f = match (lo, hi) {
            (BddRef::FALSE, BddRef::TRUE) => p,
            (BddRef::TRUE, BddRef::FALSE) => np,
            (BddRef::FALSE, h) => Formula::and2(p, self.concretize(h)),
            (l, BddRef::FALSE) => Formula::and2(np, self.concretize(l)),
            (BddRef::TRUE, h) => Formula::or2(np, self.concretize(h)),
            (l, BddRef::TRUE) => Formula::or2(p, self.concretize(l)),
            (l, h) => {
                let fh = self.concretize(h);
                let fl = self.concretize(l);
                Formula::or2(Formula::and2(p, fh), Formula::and2(np, fl))
            }
        };
        self.concrete.insert(r, f.clone());
        f
    }

    /// Strongest conjunction of predicates of `pi` entailed by `phi`.
    pub fn cartesian_abstract(&mut self, phi: &Formula, pi: &Precision) -> Result<AbstractFormula, SolverError> {
        self.abstract_at(phi, pi, AbstractionMode::Cartesian, None)
    }

    /// Strongest Boolean combination of predicates of `pi` entailed by `phi`,
    /// as a disjunction of full minterms.
    pub fn boolean_abstract(&mut self, phi: &Formula, pi: &Precision) -> Result<AbstractFormula, SolverError> {
        self.abstract_at(phi, pi, AbstractionMode::Boolean, None)
    }

    pub fn abstract_formula(
        &mut self,
        phi: &Formula,
        pi: &Precision,
        mode: AbstractionMode,
    ) -> Result<AbstractFormula, SolverError> {
        self.abstract_at(phi, pi, mode, None)
    }

    /// Abstraction of `phi`, reading each predicate at the SSA indices of
    /// `at` when given.
    fn abstract_at(
        &mut self,
        phi: &Formula,
        pi: &Precision,
        mode: AbstractionMode,
        at: Option<&SsaMap>,
    ) -> Result<AbstractFormula, SolverError> {
        if phi.is_false() {
            return Ok(BddRef::FALSE);
        }
        let inst = |p: &Formula| match at {
            Some(ssa) => p.at_ssa(ssa),
            None => p.clone(),
        };
        match mode {
            AbstractionMode::Cartesian => {
                if !self.solver.check_sat(phi)?.is_sat() {
                    return Ok(BddRef::FALSE);
                }
                let mut r = BddRef::TRUE;
                for &id in pi.ids() {
                    let p = inst(self.preds.get(id));
                    if self.solver.entails(phi, &p)? {
                        let v = self.bdd.var(id);
                        r = self.bdd.and(r, v);
                    }
                }
                Ok(r)
            }
            AbstractionMode::Boolean => {
                let mut parts = vec![phi.clone()];
                for &id in pi.ids() {
                    let p = inst(self.preds.get(id));
                    parts.push(Formula::iff(Formula::prop(id), p));
                }
                let query = Formula::and(parts);
                let models = self.solver.all_sat(&query, pi.ids())?;
                let mut r = BddRef::FALSE;
                for m in models {
                    let lits: Vec<(u32, bool)> = m.into_iter().collect();
                    let c = self.bdd.cube(&lits);
                    r = self.bdd.or(r, c);
                }
                Ok(r)
            }
        }
    }

    /// Abstract successor of `state` along `op`: the abstraction of the
    /// strongest postcondition of the concretized state.
    ///
    /// The postcondition is built in SSA form (state at index 0, the edge
    /// encoding after it) and the predicates are read at the output indices,
    /// which keeps the query linear in the size of `op`.
    pub fn abstract_post(
        &mut self,
        state: AbstractFormula,
        op: &Operation,
        pi: &Precision,
        mode: AbstractionMode,
    ) -> Result<AbstractFormula, SolverError> {
        if state.is_false() {
            return Ok(BddRef::FALSE);
        }
        let start = SsaMap::new();
        let pre = self.concretize(state).at_ssa(&start);
        let (enc, out) = encode_edge(op, &start);
        let post = Formula::and2(pre, enc);
        self.abstract_at(&post, pi, mode, Some(&out))
    }

    pub fn entails(&mut self, a: AbstractFormula, b: AbstractFormula) -> bool {
        self.bdd.implies(a, b)
    }

    /// Human-readable form of an abstract state.
    pub fn render(&mut self, r: AbstractFormula) -> String {
        self.concretize(r).to_string()
    }
}
