use std::collections::BTreeMap;
use std::sync::Arc;

use crate::cfa::Operation;

use super::{Cmp, Formula, Term, Var};

/// Current SSA index of each program variable; unmentioned variables are at
/// index 0.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SsaMap(BTreeMap<Arc<str>, u32>);

impl SsaMap {
    pub fn new() -> Self {
        SsaMap::default()
    }

    pub fn get(&self, name: &str) -> u32 {
        self.0.get(name).copied().unwrap_or(0)
    }

    pub fn set(&mut self, name: &Arc<str>, index: u32) {
        self.0.insert(name.clone(), index);
    }

    fn bump(&mut self, name: &Arc<str>) -> u32 {
        let i = self.get(name) + 1;
        self.set(name, i);
        i
    }

    pub fn var(&self, name: &Arc<str>) -> Var {
        Var {
            name: name.clone(),
            index: Some(self.get(name)),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Arc<str>, u32)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    /// Whether `v` is the live (latest) copy of its variable.
    pub fn is_live(&self, v: &Var) -> bool {
        v.index == Some(self.get(&v.name))
    }
}

/// SSA encoding of one edge label.
///
/// Returns the constraint contributed by `op` starting from `ssa`, together
/// with the map after `op`. When the branches of a choice leave a variable at
/// different indices, both are joined at a fresh index above either one and
/// each branch is padded with the connecting equality.
pub fn encode_edge(op: &Operation, ssa: &SsaMap) -> (Formula, SsaMap) {
    let mut out = ssa.clone();
    let f = encode(op, &mut out);
    (f, out)
}

fn encode(op: &Operation, ssa: &mut SsaMap) -> Formula {
    match op {
        Operation::Assume(c) => c.at_ssa(ssa),
        Operation::Assign(x, e) => {
            let rhs = e.map_vars(|v| ssa.var(&v.name));
            let i = ssa.bump(x);
            Formula::compare(&Term::var(Var::indexed(x, i)), Cmp::Eq, &rhs)
        }
        Operation::Havoc(x) => {
            ssa.bump(x);
            Formula::True
        }
        Operation::Seq(a, b) => {
            let fa = encode(a, ssa);
            let fb = encode(b, ssa);
            Formula::and2(fa, fb)
        }
        Operation::Choice(a, b) => {
            let mut sa = ssa.clone();
            let mut sb = ssa.clone();
            let mut fa = vec![encode(a, &mut sa)];
            let mut fb = vec![encode(b, &mut sb)];
            let names: std::collections::BTreeSet<Arc<str>> =
                sa.0.keys().chain(sb.0.keys()).cloned().collect();
            let mut joined = sa.clone();
            for name in names {
                let (ia, ib) = (sa.get(&name), sb.get(&name));
                if ia == ib {
                    continue;
                }
                let j = ia.max(ib) + 1;
                let target = Term::var(Var::indexed(&name, j));
                fa.push(Formula::compare(&target, Cmp::Eq, &Term::var(Var::indexed(&name, ia))));
                fb.push(Formula::compare(&target, Cmp::Eq, &Term::var(Var::indexed(&name, ib))));
                joined.set(&name, j);
            }
            *ssa = joined;
            Formula::or2(Formula::and(fa), Formula::and(fb))
        }
    }
}
