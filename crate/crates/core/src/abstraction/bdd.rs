//! Reduced ordered binary decision diagrams with hash-consed nodes.
//!
//! Variables are ordered by their numeric id. Two references are equal iff
//! the functions they denote are equal.

use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BddRef(u32);

impl BddRef {
    pub const FALSE: BddRef = BddRef(0);
    pub const TRUE: BddRef = BddRef(1);

    pub fn is_false(self) -> bool {
        self == BddRef::FALSE
    }

    pub fn is_true(self) -> bool {
        self == BddRef::TRUE
    }

    pub fn is_const(self) -> bool {
        self.0 < 2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Node {
    var: u32,
    lo: BddRef,
    hi: BddRef,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Op {
    And,
    Or,
}

pub struct Bdd {
    nodes: Vec<Node>,
    unique: HashMap<Node, BddRef>,
    apply_cache: HashMap<(Op, BddRef, BddRef), BddRef>,
    not_cache: HashMap<BddRef, BddRef>,
}

impl Default for Bdd {
    fn default() -> Self {
        Bdd::new()
    }
}

impl Bdd {
    pub fn new() -> Self {
        let terminal = |v| Node {
            var: u32::MAX,
            lo: BddRef(v),
            hi: BddRef(v),
        };
        Bdd {
            nodes: vec![terminal(0), terminal(1)],
            unique: HashMap::new(),
            apply_cache: HashMap::new(),
            not_cache: HashMap::new(),
        }
    }

    fn mk(&mut self, var: u32, lo: BddRef, hi: BddRef) -> BddRef {
        if lo == hi {
            return lo;
        }
        let n = Node { var, lo, hi };
        if let Some(&r) = self.unique.get(&n) {
            return r;
        }
        let r = BddRef(self.nodes.len() as u32);
        self.nodes.push(n);
        self.unique.insert(n, r);
        r
    }

    /// Decision variable and cofactors of a non-constant node.
    pub fn node(&self, r: BddRef) -> Option<(u32, BddRef, BddRef)> {
        if r.is_const() {
            None
        } else {
            let n = self.nodes[r.0 as usize];
            Some((n.var, n.lo, n.hi))
        }
    }

    pub fn var(&mut self, v: u32) -> BddRef {
        self.mk(v, BddRef::FALSE, BddRef::TRUE)
    }

    pub fn literal(&mut self, v: u32, positive: bool) -> BddRef {
        if positive {
            self.mk(v, BddRef::FALSE, BddRef::TRUE)
        } else {
            self.mk(v, BddRef::TRUE, BddRef::FALSE)
        }
    }

    pub fn not(&mut self, a: BddRef) -> BddRef {
        if a.is_const() {
            return BddRef(1 - a.0);
        }
        if let Some(&r) = self.not_cache.get(&a) {
            return r;
        }
        let n = self.nodes[a.0 as usize];
        let lo = self.not(n.lo);
        let hi = self.not(n.hi);
        let r = self.mk(n.var, lo, hi);
        self.not_cache.insert(a, r);
        r
    }

    fn apply(&mut self, op: Op, a: BddRef, b: BddRef) -> BddRef {
        match op {
            Op::And => {
                if a.is_false() || b.is_false() {
                    return BddRef::FALSE;
                }
                if a.is_true() || a == b {
                    return b;
                }
                if b.is_true() {
                    return a;
                }
            }
            Op::Or => {
                if a.is_true() || b.is_true() {
                    return BddRef::TRUE;
                }
                if a.is_false() || a == b {
                    return b;
                }
                if b.is_false() {
                    return a;
                }
            }
        }
        let key = if a <= b { (op, a, b) } else { (op, b, a) };
        if let Some(&r) = self.apply_cache.get(&key) {
            return r;
        }
        let na = self.nodes[a.0 as usize];
        let nb = self.nodes[b.0 as usize];
        let var = na.var.min(nb.var);
        let (alo, ahi) = if na.var == var { (na.lo, na.hi) } else { (a, a) };
        let (blo, bhi) = if nb.var == var { (nb.lo, nb.hi) } else { (b, b) };
        let lo = self.apply(op, alo, blo);
        let hi = self.apply(op, ahi, bhi);
        let r = self.mk(var, lo, hi);
        self.apply_cache.insert(key, r);
        r
    }

    pub fn and(&mut self, a: BddRef, b: BddRef) -> BddRef {
        self.apply(Op::And, a, b)
    }

    pub fn or(&mut self, a: BddRef, b: BddRef) -> BddRef {
        self.apply(Op::Or, a, b)
    }

    /// Whether `a` entails `b`.
    pub fn implies(&mut self, a: BddRef, b: BddRef) -> bool {
        let nb = self.not(b);
        self.and(a, nb).is_false()
    }

    /// Conjunction of literals.
    pub fn cube(&mut self, lits: &[(u32, bool)]) -> BddRef {
        let mut sorted = lits.to_vec();
        sorted.sort_unstable_by(|a, b| b.0.cmp(&a.0));
        let mut r = BddRef::TRUE;
        for (v, pos) in sorted {
            r = if pos {
                self.mk(v, BddRef::FALSE, r)
            } else {
                self.mk(v, r, BddRef::FALSE)
            };
        }
        r
    }

    /// Evaluates under a total valuation of the variables it mentions.
    pub fn eval(&self, mut r: BddRef, val: impl Fn(u32) -> bool) -> bool {
        while let Some((v, lo, hi)) = self.node(r) {
            r = if val(v) { hi } else { lo };
        }
        r.is_true()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_equality() {
        let mut m = Bdd::new();
        let (a, b) = (m.var(0), m.var(1));
        let ab = m.and(a, b);
        let ba = m.and(b, a);
        assert_eq!(ab, ba);
        let na = m.not(a);
        let nb = m.not(b);
        let or = m.or(na, nb);
        assert_eq!(m.not(ab), or);
        let t = m.or(a, na);
        assert_eq!(t, BddRef::TRUE);
    }

    #[test]
    fn entailment() {
        let mut m = Bdd::new();
        let (a, b) = (m.var(0), m.var(1));
        let ab = m.and(a, b);
        assert!(m.implies(ab, a));
        assert!(!m.implies(a, ab));
        assert!(m.implies(BddRef::FALSE, a));
    }

    #[test]
    fn cube_matches_conjunction() {
        let mut m = Bdd::new();
        let c = m.cube(&[(2, true), (0, false)]);
        let a = m.literal(0, false);
        let b = m.var(2);
        assert_eq!(c, m.and(a, b));
        assert!(m.eval(c, |v| v == 2));
        assert!(!m.eval(c, |_| true));
    }
}
