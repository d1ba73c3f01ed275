use std::collections::BTreeMap;
use std::sync::Arc;

use crate::cfa::Operation;

use super::{Cmp, Formula, Term, Var};

/// Next unused SSA index per variable.
#[derive(Clone, Default)]
struct Fresh(BTreeMap<Arc<str>, u32>);

impl Fresh {
    fn from_formula(phi: &Formula) -> Self {
        let mut m: BTreeMap<Arc<str>, u32> = BTreeMap::new();
        for v in phi.vars() {
            if let Some(i) = v.index {
                let e = m.entry(v.name.clone()).or_insert(1);
                *e = (*e).max(i + 1);
            }
        }
        Fresh(m)
    }

    fn take(&mut self, name: &Arc<str>) -> u32 {
        let e = self.0.entry(name.clone()).or_insert(1);
        let i = *e;
        *e += 1;
        i
    }

    fn join(&mut self, other: &Fresh) {
        for (k, v) in &other.0 {
            let e = self.0.entry(k.clone()).or_insert(1);
            *e = (*e).max(*v);
        }
    }
}

/// Strongest postcondition of `op` applied to `phi`.
///
/// Overwritten values are renamed to fresh indexed copies of the variable,
/// which stand for implicitly existentially quantified values. Fresh indices
/// depend only on `op` and the indices already present in `phi`, so two calls
/// on index-free inputs with the same operation name their copies alike.
pub fn sp(op: &Operation, phi: &Formula) -> Formula {
    let mut fresh = Fresh::from_formula(phi);
    sp_rec(op, phi.clone(), &mut fresh)
}

fn sp_rec(op: &Operation, phi: Formula, fresh: &mut Fresh) -> Formula {
    match op {
        Operation::Assume(c) => Formula::and2(phi, c.clone()),
        Operation::Assign(x, e) => {
            let cur = Var {
                name: x.clone(),
                index: None,
            };
            let hat = cur.with_index(Some(fresh.take(x)));
            let old = phi.map_vars(&mut |v| if *v == cur { hat.clone() } else { v.clone() });
            let rhs = e.map_vars(|v| if *v == cur { hat.clone() } else { v.clone() });
            Formula::and2(old, Formula::compare(&Term::var(cur), Cmp::Eq, &rhs))
        }
        Operation::Havoc(x) => {
            let cur = Var {
                name: x.clone(),
                index: None,
            };
            let hat = cur.with_index(Some(fresh.take(x)));
            phi.map_vars(&mut |v| if *v == cur { hat.clone() } else { v.clone() })
        }
        Operation::Seq(a, b) => {
            let mid = sp_rec(a, phi, fresh);
            sp_rec(b, mid, fresh)
        }
        Operation::Choice(a, b) => {
            let mut fa = fresh.clone();
            let mut fb = fresh.clone();
            let left = sp_rec(a, phi.clone(), &mut fa);
            let right = sp_rec(b, phi, &mut fb);
            fa.join(&fb);
            *fresh = fa;
            Formula::or2(left, right)
        }
    }
}
