use std::fmt;
use std::sync::Arc;

use crate::formula::{Formula, Term};

/// Edge label of a control-flow automaton.
///
/// Leaves are the atomic program operations; `Seq` and `Choice` are built by
/// summarization and denote sequential composition and nondeterministic
/// choice respectively.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Operation {
    Assign(Arc<str>, Term),
    Assume(Formula),
    Havoc(Arc<str>),
    Seq(Box<Operation>, Box<Operation>),
    Choice(Box<Operation>, Box<Operation>),
}

impl Operation {
    pub fn assign(var: &str, rhs: Term) -> Self {
        Operation::Assign(Arc::from(var), rhs)
    }

    pub fn assume(cond: Formula) -> Self {
        Operation::Assume(cond)
    }

    pub fn havoc(var: &str) -> Self {
        Operation::Havoc(Arc::from(var))
    }

    pub fn skip() -> Self {
        Operation::Assume(Formula::True)
    }

    /// Sequential composition, kept right-associated.
    pub fn seq(first: Operation, then: Operation) -> Self {
        match first {
            Operation::Seq(a, b) => Operation::seq(*a, Operation::seq(*b, then)),
            other => Operation::Seq(Box::new(other), Box::new(then)),
        }
    }

    pub fn choice(a: Operation, b: Operation) -> Self {
        Operation::Choice(Box::new(a), Box::new(b))
    }

    /// Choice with the components shared by both sequences pulled out:
    /// `Choice(p; a; s, p; b; s)` becomes `p; Choice(a, b); s`. An empty
    /// remainder becomes `[true]`.
    pub fn choice_factored(a: Operation, b: Operation) -> Self {
        let la = a.into_seq_list();
        let lb = b.into_seq_list();
        let max = la.len().min(lb.len());
        let pre = la.iter().zip(&lb).take_while(|(x, y)| x == y).count();
        if pre == la.len() && pre == lb.len() {
            return Operation::seq_all(la);
        }
        let suf = la
            .iter()
            .rev()
            .zip(lb.iter().rev())
            .take(max - pre)
            .take_while(|(x, y)| x == y)
            .count();
        let mut la = la;
        let mut lb = lb;
        let suffix = la.split_off(la.len() - suf);
        lb.truncate(lb.len() - suf);
        let mid_b = lb.split_off(pre);
        let mid_a = la.split_off(pre);
        let mut out = la;
        out.push(Operation::choice(Operation::seq_all(mid_a), Operation::seq_all(mid_b)));
        out.extend(suffix);
        Operation::seq_all(out)
    }

    fn into_seq_list(self) -> Vec<Operation> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Operation::Seq(a, b) => {
                    out.extend(a.into_seq_list());
                    cur = *b;
                }
                other => {
                    out.push(other);
                    return out;
                }
            }
        }
    }

    fn seq_all(ops: Vec<Operation>) -> Self {
        ops.into_iter()
            .rev()
            .reduce(|acc, op| Operation::seq(op, acc))
            .unwrap_or_else(Operation::skip)
    }

    pub fn is_atomic(&self) -> bool {
        !matches!(self, Operation::Seq(..) | Operation::Choice(..))
    }

    /// Number of atomic operations in the tree.
    pub fn leaf_count(&self) -> usize {
        match self {
            Operation::Seq(a, b) | Operation::Choice(a, b) => a.leaf_count() + b.leaf_count(),
            _ => 1,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Operation::Seq(a, b) | Operation::Choice(a, b) => 1 + a.depth().max(b.depth()),
            _ => 0,
        }
    }

    /// Program variables mentioned anywhere in the operation.
    pub fn variables(&self) -> std::collections::BTreeSet<Arc<str>> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut std::collections::BTreeSet<Arc<str>>) {
        match self {
            Operation::Assign(x, t) => {
                out.insert(x.clone());
                out.extend(t.vars().map(|v| v.name.clone()));
            }
            Operation::Assume(c) => out.extend(c.vars().into_iter().map(|v| v.name)),
            Operation::Havoc(x) => {
                out.insert(x.clone());
            }
            Operation::Seq(a, b) | Operation::Choice(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operation::Assign(x, t) => write!(f, "{} = {}", x, t),
            Operation::Assume(c) => write!(f, "[{}]", c),
            Operation::Havoc(x) => write!(f, "{} = nondet()", x),
            Operation::Seq(a, b) => write!(f, "{}; {}", a, b),
            Operation::Choice(a, b) => write!(f, "({} | {})", a, b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seq_is_right_associated() {
        let a = Operation::havoc("a");
        let b = Operation::havoc("b");
        let c = Operation::havoc("c");
        let left = Operation::seq(Operation::seq(a.clone(), b.clone()), c.clone());
        let right = Operation::seq(a, Operation::seq(b, c));
        assert_eq!(left, right);
    }
}
