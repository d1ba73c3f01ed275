#![allow(dead_code)]

use std::collections::BTreeMap;

use proptest::prelude::*;

use lbemc_core::{Cmp, Formula, Term, Var};

pub const VARS: [&str; 3] = ["a", "b", "c"];

pub fn cmp_strategy() -> impl Strategy<Value = Cmp> {
    prop_oneof![
        Just(Cmp::Eq),
        Just(Cmp::Ne),
        Just(Cmp::Lt),
        Just(Cmp::Le),
        Just(Cmp::Gt),
        Just(Cmp::Ge)
    ]
}

pub fn term_strategy() -> impl Strategy<Value = Term> {
    (prop::collection::vec(-3i64..=3, VARS.len()), -6i64..=6).prop_map(|(cs, k)| {
        Term::from_parts(k, VARS.iter().zip(cs).map(|(v, c)| (Var::new(v), c)))
    })
}

pub fn atom_strategy() -> impl Strategy<Value = Formula> {
    (term_strategy(), cmp_strategy()).prop_map(|(t, c)| Formula::compare(&t, c, &Term::constant(0)))
}

/// Conjunctions of mostly equalities over small terms, which exercise
/// substitution in the theory solver.
pub fn conjunction_strategy() -> impl Strategy<Value = Formula> {
    let small = (prop::collection::vec(-1i64..=1, VARS.len()), -3i64..=3).prop_map(|(cs, k)| {
        Term::from_parts(k, VARS.iter().zip(cs).map(|(v, c)| (Var::new(v), c)))
    });
    let cmp = prop_oneof![3 => Just(Cmp::Eq), 1 => Just(Cmp::Le), 1 => Just(Cmp::Ne)];
    prop::collection::vec((small, cmp), 2..=6).prop_map(|atoms| {
        Formula::and(atoms.into_iter().map(|(t, c)| Formula::compare(&t, c, &Term::constant(0))))
    })
}

/// Boolean combinations of linear comparisons over [`VARS`].
pub fn formula_strategy() -> impl Strategy<Value = Formula> {
    atom_strategy().prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Formula::and),
            prop::collection::vec(inner, 2..=3).prop_map(Formula::or),
        ]
    })
}

/// Propositional formulas over proposition ids `0..n`.
pub fn prop_formula_strategy(n: u32) -> impl Strategy<Value = Formula> {
    (0..n).prop_map(Formula::prop).prop_recursive(4, 16, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Formula::and),
            prop::collection::vec(inner, 2..=3).prop_map(Formula::or),
        ]
    })
}

/// Every assignment of `lo..=hi` to the named variables.
pub fn grid(names: &[&str], lo: i64, hi: i64) -> Vec<BTreeMap<String, i64>> {
    let mut out = vec![BTreeMap::new()];
    for n in names {
        out = out
            .into_iter()
            .flat_map(|m| {
                (lo..=hi).map(move |v| {
                    let mut m = m.clone();
                    m.insert(n.to_string(), v);
                    m
                })
            })
            .collect();
    }
    out
}

pub fn eval_at(f: &Formula, env: &BTreeMap<String, i64>) -> bool {
    f.eval_int(&|v: &Var| env[&*v.name], &|_| false)
}
