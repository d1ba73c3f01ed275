//! Conjunctions of linear constraints over the rationals, decided by
//! equality substitution followed by Fourier–Motzkin elimination.

use std::collections::HashMap;

use num_integer::Integer;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, Zero};

use super::{Rational, SolverError};

type Res<T> = Result<T, SolverError>;

/// `sum(coeffs) + constant (= | <=) 0` over theory variable ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct LinConstraint {
    pub coeffs: Vec<(u32, i128)>,
    pub constant: i128,
    pub eq: bool,
}

pub(crate) enum TheoryResult {
    /// One value per theory variable id.
    Sat(Vec<Rational>),
    /// Indices (into the input) of an inconsistent subset.
    Unsat(Vec<usize>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Origin(Vec<u64>);

impl Origin {
    fn single(i: usize) -> Self {
        let mut v = vec![0u64; i / 64 + 1];
        v[i / 64] |= 1 << (i % 64);
        Origin(v)
    }

    fn union(&self, other: &Origin) -> Origin {
        let (long, short) = if self.0.len() >= other.0.len() { (self, other) } else { (other, self) };
        let mut v = long.0.clone();
        for (i, w) in short.0.iter().enumerate() {
            v[i] |= w;
        }
        Origin(v)
    }

    fn members(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, w) in self.0.iter().enumerate() {
            for b in 0..64 {
                if w & (1 << b) != 0 {
                    out.push(i * 64 + b);
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<(u32, i128)>,
    constant: i128,
    eq: bool,
    origin: Origin,
}

fn ovf() -> SolverError {
    SolverError::Overflow
}

fn mul(a: i128, b: i128) -> Res<i128> {
    a.checked_mul(b).ok_or_else(ovf)
}

fn add(a: i128, b: i128) -> Res<i128> {
    a.checked_add(b).ok_or_else(ovf)
}

impl Row {
    fn coeff(&self, v: u32) -> i128 {
        self.coeffs
            .binary_search_by_key(&v, |(w, _)| *w)
            .map(|i| self.coeffs[i].1)
            .unwrap_or(0)
    }

    /// `ka * self + kb * other`.
    fn combine(&self, ka: i128, other: &Row, kb: i128) -> Res<Row> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + other.coeffs.len());
        let (mut i, mut j) = (0, 0);
        while i < self.coeffs.len() || j < other.coeffs.len() {
            let take_a = j >= other.coeffs.len()
                || (i < self.coeffs.len() && self.coeffs[i].0 <= other.coeffs[j].0);
            let take_b = i >= self.coeffs.len()
                || (j < other.coeffs.len() && other.coeffs[j].0 <= self.coeffs[i].0);
            let (v, c) = match (take_a, take_b) {
                (true, true) => {
                    let c = add(mul(ka, self.coeffs[i].1)?, mul(kb, other.coeffs[j].1)?)?;
                    let v = self.coeffs[i].0;
                    i += 1;
                    j += 1;
                    (v, c)
                }
                (true, false) => {
                    let r = (self.coeffs[i].0, mul(ka, self.coeffs[i].1)?);
                    i += 1;
                    r
                }
                _ => {
                    let r = (other.coeffs[j].0, mul(kb, other.coeffs[j].1)?);
                    j += 1;
                    r
                }
            };
            if c != 0 {
                coeffs.push((v, c));
            }
        }
        let constant = add(mul(ka, self.constant)?, mul(kb, other.constant)?)?;
        let mut r = Row {
            coeffs,
            constant,
            eq: self.eq && other.eq,
            origin: self.origin.union(&other.origin),
        };
        r.normalize();
        Ok(r)
    }

    /// Divides by the gcd of all coefficients and the constant; equalities
    /// additionally get a positive leading coefficient.
    fn normalize(&mut self) {
        let mut g = self.constant.abs();
        for (_, c) in &self.coeffs {
            g = g.gcd(c);
        }
        if self.eq && self.coeffs.first().is_some_and(|(_, c)| *c < 0) {
            g = -g;
        }
        if g != 0 && g != 1 {
            for (_, c) in &mut self.coeffs {
                *c /= g;
            }
            self.constant /= g;
        }
    }

    /// For a row without variables: whether it is violated.
    fn contradictory(&self) -> bool {
        if self.eq {
            self.constant != 0
        } else {
            self.constant > 0
        }
    }

    /// `sum coeffs*values + constant`, skipping `skip`.
    fn eval_rest(&self, values: &[Rational], skip: u32) -> Res<Rational> {
        let mut acc = Rational::from_integer(self.constant);
        for &(v, c) in &self.coeffs {
            if v != skip {
                let term = Rational::from_integer(c).checked_mul(&values[v as usize]).ok_or_else(ovf)?;
                acc = acc.checked_add(&term).ok_or_else(ovf)?;
            }
        }
        Ok(acc)
    }
}

enum Elim {
    /// `var` is determined by the stored equality.
    Subst(u32, Row),
    /// `var` is bounded by the stored inequalities.
    Bounds(u32, Vec<Row>),
}

pub(crate) fn check(input: &[LinConstraint], num_vars: usize) -> Res<TheoryResult> {
    let mut rows: Vec<Row> = Vec::new();
    for (i, c) in input.iter().enumerate() {
        let mut r = Row {
            coeffs: c.coeffs.clone(),
            constant: c.constant,
            eq: c.eq,
            origin: Origin::single(i),
        };
        r.normalize();
        if r.coeffs.is_empty() {
            if r.contradictory() {
                return Ok(TheoryResult::Unsat(vec![i]));
            }
            continue;
        }
        rows.push(r);
    }
    let mut elims: Vec<Elim> = Vec::new();

    // Equalities first: solve each for its variable with the smallest
    // coefficient and substitute everywhere.
    while let Some(pos) = rows.iter().position(|r| r.eq) {
        let eq = rows.swap_remove(pos);
        let &(x, a) = eq.coeffs.iter().min_by_key(|(v, c)| (c.abs(), *v)).unwrap();
        let mut next = Vec::with_capacity(rows.len());
        for r in rows {
            let b = r.coeff(x);
            let r = if b == 0 {
                r
            } else {
                r.combine(a.abs(), &eq, -a.signum() * b)?
            };
            if r.coeffs.is_empty() {
                if r.contradictory() {
                    return Ok(TheoryResult::Unsat(r.origin.members()));
                }
                continue;
            }
            next.push(r);
        }
        rows = dedup(next);
        elims.push(Elim::Subst(x, eq));
    }

    // Fourier–Motzkin on the remaining inequalities.
    loop {
        let mut counts: HashMap<u32, (usize, usize)> = HashMap::new();
        for r in &rows {
            for &(v, c) in &r.coeffs {
                let e = counts.entry(v).or_default();
                if c > 0 {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
        let Some((&x, _)) = counts
            .iter()
            .min_by_key(|(v, (p, n))| ((p * n) as isize - (*p + *n) as isize, **v))
        else {
            break;
        };
        let (with_x, mut rest): (Vec<Row>, Vec<Row>) = rows.into_iter().partition(|r| r.coeff(x) != 0);
        let (pos, neg): (Vec<&Row>, Vec<&Row>) = with_x.iter().partition(|r| r.coeff(x) > 0);
        for p in &pos {
            for n in &neg {
                let a = p.coeff(x);
                let b = -n.coeff(x);
                let g = a.gcd(&b);
                let r = p.combine(b / g, n, a / g)?;
                if r.coeffs.is_empty() {
                    if r.contradictory() {
                        return Ok(TheoryResult::Unsat(r.origin.members()));
                    }
                    continue;
                }
                rest.push(r);
            }
        }
        rows = dedup(rest);
        elims.push(Elim::Bounds(x, with_x));
    }

    let mut values = vec![Rational::zero(); num_vars];
    for e in elims.iter().rev() {
        match e {
            Elim::Subst(x, eq) => {
                let a = Rational::from_integer(eq.coeff(*x));
                let rest = eq.eval_rest(&values, *x)?;
                values[*x as usize] = (-rest).checked_div(&a).ok_or_else(ovf)?;
            }
            Elim::Bounds(x, rows) => {
                let mut lo: Option<Rational> = None;
                let mut hi: Option<Rational> = None;
                for r in rows {
                    let a = r.coeff(*x);
                    let rest = r.eval_rest(&values, *x)?;
                    let bound = (-rest).checked_div(&Rational::from_integer(a)).ok_or_else(ovf)?;
                    if a > 0 {
                        hi = Some(hi.map_or(bound, |h| h.min(bound)));
                    } else {
                        lo = Some(lo.map_or(bound, |l| l.max(bound)));
                    }
                }
                values[*x as usize] = pick(lo, hi);
            }
        }
    }
    Ok(TheoryResult::Sat(values))
}

/// A value in `[lo, hi]`, preferring zero, then integers.
fn pick(lo: Option<Rational>, hi: Option<Rational>) -> Rational {
    let zero = Rational::zero();
    let fits = |v: &Rational| lo.as_ref().is_none_or(|l| l <= v) && hi.as_ref().is_none_or(|h| v <= h);
    if fits(&zero) {
        return zero;
    }
    match (&lo, &hi) {
        (Some(l), _) => {
            let c = l.ceil();
            if fits(&c) {
                c
            } else {
                *l
            }
        }
        (None, Some(h)) => h.floor(),
        (None, None) => zero,
    }
}

/// Drops duplicate rows; among inequalities with the same linear part only
/// the tightest survives. Equalities are merged only when identical.
fn dedup(rows: Vec<Row>) -> Vec<Row> {
    let mut best: HashMap<(Vec<(u32, i128)>, Option<i128>), usize> = HashMap::new();
    let mut out: Vec<Row> = Vec::with_capacity(rows.len());
    for r in rows {
        let key = (r.coeffs.clone(), r.eq.then_some(r.constant));
        match best.get(&key) {
            Some(&i) => {
                if !r.eq && r.constant > out[i].constant {
                    out[i] = r;
                }
            }
            None => {
                best.insert(key, out.len());
                out.push(r);
            }
        }
    }
    out
}
