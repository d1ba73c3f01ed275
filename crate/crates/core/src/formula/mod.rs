//! Quantifier-free formulas over linear integer atoms, strongest
//! postconditions, and SSA path encoding.

pub(crate) mod sexpr;
mod sp;
mod ssa;
mod term;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use sexpr::{parse_sexpr, SexprError};
pub use sp::sp;
pub use ssa::{encode_edge, SsaMap};
pub use term::{Atom, Canon, Rel, Term, Var};

/// Boolean combination of linear atoms and propositional variables.
///
/// Propositional variables (`Prop`) only appear in solver queries such as the
/// Boolean-abstraction enumeration; program formulas never contain them.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Prop(u32),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenameError {
    #[error("renaming is not injective: {0} and {1} both map to {2}")]
    NotInjective(Var, Var, Var),
}

impl From<Canon> for Formula {
    fn from(c: Canon) -> Self {
        match c {
            Canon::Const(true) => Formula::True,
            Canon::Const(false) => Formula::False,
            Canon::Atom(a) => Formula::Atom(a),
        }
    }
}

/// Comparison operators of the surface syntax.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Formula {
    /// `lhs cmp rhs`, rewritten into canonical `= / <=` atoms.
    pub fn compare(lhs: &Term, cmp: Cmp, rhs: &Term) -> Formula {
        let d = lhs.sub(rhs);
        match cmp {
            Cmp::Eq => Atom::build(d, Rel::Eq).into(),
            Cmp::Ne => Formula::not(Atom::build(d, Rel::Eq).into()),
            Cmp::Le => Atom::build(d, Rel::Le).into(),
            // d < 0  <=>  d + 1 <= 0
            Cmp::Lt => Atom::build(d.add_constant(1), Rel::Le).into(),
            Cmp::Ge => Atom::build(d.neg(), Rel::Le).into(),
            Cmp::Gt => Atom::build(d.neg().add_constant(1), Rel::Le).into(),
        }
    }

    pub fn atom(term: Term, rel: Rel) -> Formula {
        Atom::build(term, rel).into()
    }

    pub fn prop(id: u32) -> Formula {
        Formula::Prop(id)
    }

    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    /// Conjunction with flattening and constant folding.
    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    /// Disjunction with flattening and constant folding.
    pub fn or(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn and2(a: Formula, b: Formula) -> Formula {
        Formula::and([a, b])
    }

    pub fn or2(a: Formula, b: Formula) -> Formula {
        Formula::or([a, b])
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or([Formula::not(a), b])
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and([
            Formula::implies(a.clone(), b.clone()),
            Formula::implies(b, a),
        ])
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::False)
    }

    /// All variables occurring in the formula.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |a| out.extend(a.vars().cloned()));
        out
    }

    pub fn props(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<u32>) {
        match self {
            Formula::Prop(p) => {
                out.insert(*p);
            }
            Formula::Not(f) => f.collect_props(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_props(out)),
            _ => {}
        }
    }

    pub fn visit_atoms(&self, f: &mut impl FnMut(&Atom)) {
        match self {
            Formula::Atom(a) => f(a),
            Formula::Not(inner) => inner.visit_atoms(f),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|g| g.visit_atoms(f)),
            _ => {}
        }
    }

    /// Distinct atoms of the formula, with SSA indices stripped so that the
    /// result ranges over current-state variables only. Atoms that become
    /// constant after stripping are dropped.
    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |a| {
            if let Canon::Atom(s) = a.map_vars(|v| v.with_index(None)) {
                out.insert(s);
            }
        });
        out
    }

    /// Applies `f` to every variable; atoms are re-canonicalized.
    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Var) -> Formula {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => self.clone(),
            Formula::Atom(a) => a.map_vars(&mut *f).into(),
            Formula::Not(inner) => Formula::not(inner.map_vars(f)),
            Formula::And(fs) => Formula::and(fs.iter().map(|g| g.map_vars(f))),
            Formula::Or(fs) => Formula::or(fs.iter().map(|g| g.map_vars(f))),
        }
    }

    /// Capture-free simultaneous renaming. Variables absent from `map` are
    /// left alone. Fails if two variables of the formula would be identified.
    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Result<Formula, RenameError> {
        let mut image: BTreeMap<Var, Var> = BTreeMap::new();
        for v in self.vars() {
            let target = map.get(&v).cloned().unwrap_or_else(|| v.clone());
            if let Some(prev) = image.insert(target.clone(), v.clone()) {
                return Err(RenameError::NotInjective(prev, v, target));
            }
        }
        Ok(self.map_vars(&mut |v| map.get(v).cloned().unwrap_or_else(|| v.clone())))
    }

    /// Instantiates current-state variables at the indices of `ssa`.
    pub fn at_ssa(&self, ssa: &SsaMap) -> Formula {
        self.map_vars(&mut |v| {
            if v.is_current() {
                v.with_index(Some(ssa.get(&v.name)))
            } else {
                v.clone()
            }
        })
    }

    /// Negation normal form: negations are pushed down to atoms and
    /// propositional variables.
    pub fn to_nnf(&self) -> Formula {
        self.nnf(false)
    }

    fn nnf(&self, negate: bool) -> Formula {
        match (self, negate) {
            (Formula::True, false) | (Formula::False, true) => Formula::True,
            (Formula::True, true) | (Formula::False, false) => Formula::False,
            (Formula::Atom(_) | Formula::Prop(_), false) => self.clone(),
            (Formula::Atom(_) | Formula::Prop(_), true) => Formula::Not(Box::new(self.clone())),
            (Formula::Not(inner), n) => inner.nnf(!n),
            (Formula::And(fs), false) => Formula::and(fs.iter().map(|f| f.nnf(false))),
            (Formula::And(fs), true) => Formula::or(fs.iter().map(|f| f.nnf(true))),
            (Formula::Or(fs), false) => Formula::or(fs.iter().map(|f| f.nnf(false))),
            (Formula::Or(fs), true) => Formula::and(fs.iter().map(|f| f.nnf(true))),
        }
    }

    /// Evaluates under an integer environment and a propositional valuation.
    pub fn eval_int(&self, env: &impl Fn(&Var) -> i64, props: &impl Fn(u32) -> bool) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => a.eval_int(env),
            Formula::Prop(p) => props(*p),
            Formula::Not(f) => !f.eval_int(env, props),
            Formula::And(fs) => fs.iter().all(|f| f.eval_int(env, props)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval_int(env, props)),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::Not(f) => 1 + f.size(),
            Formula::And(fs) | Formula::Or(fs) => 1 + fs.iter().map(Formula::size).sum::<usize>(),
            _ => 1,
        }
    }

    /// S-expression rendering, the inverse of [`parse_sexpr`].
    pub fn to_sexpr(&self) -> String {
        sexpr::print(self)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn paren(f: &mut fmt::Formatter<'_>, g: &Formula) -> fmt::Result {
            match g {
                Formula::And(_) | Formula::Or(_) => write!(f, "({})", g),
                _ => write!(f, "{}", g),
            }
        }
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{}", a),
            Formula::Prop(p) => write!(f, "v{}", p),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Atom(a) if a.rel() == Rel::Eq => {
                    let s = a.to_string();
                    write!(f, "{}", s.replacen("==", "!=", 1))
                }
                g => {
                    write!(f, "!")?;
                    match g {
                        Formula::Prop(_) => write!(f, "{}", g),
                        _ => write!(f, "({})", g),
                    }
                }
            },
            Formula::And(fs) | Formula::Or(fs) => {
                let sep = if matches!(self, Formula::And(_)) { " && " } else { " || " };
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{}", sep)?;
                    }
                    paren(f, g)?;
                }
                Ok(())
            }
        }
    }
}
