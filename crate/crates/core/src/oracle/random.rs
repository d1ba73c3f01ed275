//! Seeded generators for random programs, operations and formulas.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::cfa::Operation;
use crate::formula::{Cmp, Formula, Term, Var};
use crate::frontend::{SourceProgram, Stmt};

#[derive(Clone, Debug)]
pub struct RandomProgramConfig {
    pub max_vars: usize,
    /// Constants are drawn from this range.
    pub values: (i64, i64),
    pub max_loop_depth: usize,
    pub max_stmts: usize,
}

impl Default for RandomProgramConfig {
    fn default() -> Self {
        RandomProgramConfig {
            max_vars: 4,
            values: (0, 3),
            max_loop_depth: 1,
            max_stmts: 12,
        }
    }
}

const NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

fn cmp<R: Rng>(rng: &mut R) -> Cmp {
    *[Cmp::Eq, Cmp::Ne, Cmp::Lt, Cmp::Le, Cmp::Gt, Cmp::Ge].choose(rng).unwrap()
}

fn var_term(v: &Arc<str>) -> Term {
    Term::var(Var {
        name: v.clone(),
        index: None,
    })
}

fn comparison<R: Rng>(rng: &mut R, vars: &[Arc<str>], values: (i64, i64)) -> Formula {
    let lhs = var_term(vars.choose(rng).unwrap());
    let rhs = if rng.gen_bool(0.3) && vars.len() > 1 {
        var_term(vars.choose(rng).unwrap())
    } else {
        Term::constant(rng.gen_range(values.0..=values.1))
    };
    Formula::compare(&lhs, cmp(rng), &rhs)
}

fn condition<R: Rng>(rng: &mut R, vars: &[Arc<str>], values: (i64, i64)) -> Formula {
    match rng.gen_range(0..10) {
        0 => Formula::and2(comparison(rng, vars, values), comparison(rng, vars, values)),
        1 => Formula::or2(comparison(rng, vars, values), comparison(rng, vars, values)),
        2 => Formula::not(comparison(rng, vars, values)),
        _ => comparison(rng, vars, values),
    }
}

fn expression<R: Rng>(rng: &mut R, vars: &[Arc<str>], values: (i64, i64)) -> Term {
    match rng.gen_range(0..3) {
        0 => Term::constant(rng.gen_range(values.0..=values.1)),
        1 => var_term(vars.choose(rng).unwrap()).add_constant(*[-1, 1].choose(rng).unwrap()),
        _ => var_term(vars.choose(rng).unwrap()),
    }
}

struct Gen<'a, R> {
    rng: &'a mut R,
    vars: Vec<Arc<str>>,
    cfg: &'a RandomProgramConfig,
    budget: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn block(&mut self, depth: usize, max_len: usize) -> Vec<Stmt> {
        let len = self.rng.gen_range(0..=max_len);
        let mut out = Vec::new();
        for _ in 0..len {
            if self.budget == 0 {
                break;
            }
            self.budget -= 1;
            out.push(self.stmt(depth));
        }
        out
    }

    fn stmt(&mut self, loop_depth: usize) -> Stmt {
        let values = self.cfg.values;
        let x = self.vars.choose(self.rng).unwrap().clone();
        match self.rng.gen_range(0..20) {
            0..=5 => Stmt::Assign(x, expression(self.rng, &self.vars, values)),
            6 => Stmt::Havoc(x),
            7 | 8 => Stmt::Assume(condition(self.rng, &self.vars, values)),
            9 | 10 => Stmt::Assert(condition(self.rng, &self.vars, values)),
            11 => Stmt::Error,
            12 => Stmt::Skip,
            13..=16 => {
                let cond = (!self.rng.gen_bool(0.2)).then(|| condition(self.rng, &self.vars, values));
                let then = self.block(loop_depth, 3);
                let els = self.block(loop_depth, 2);
                Stmt::If { cond, then, els }
            }
            _ if loop_depth < self.cfg.max_loop_depth => {
                let cond = (!self.rng.gen_bool(0.3)).then(|| condition(self.rng, &self.vars, values));
                let body = self.block(loop_depth + 1, 3);
                Stmt::While { cond, body }
            }
            _ => Stmt::Assign(x, expression(self.rng, &self.vars, values)),
        }
    }
}

/// A random well-formed program within the limits of `cfg`.
pub fn random_program<R: Rng>(rng: &mut R, cfg: &RandomProgramConfig) -> SourceProgram {
    let n = rng.gen_range(1..=cfg.max_vars.clamp(1, NAMES.len()));
    let vars: Vec<Arc<str>> = NAMES[..n].iter().map(|s| Arc::from(*s)).collect();
    let mut g = Gen {
        rng,
        vars: vars.clone(),
        cfg,
        budget: cfg.max_stmts,
    };
    let mut body = Vec::new();
    while g.budget > 0 && body.len() < 6 {
        g.budget -= 1;
        let s = g.stmt(0);
        body.push(s);
        if g.rng.gen_bool(0.25) {
            break;
        }
    }
    SourceProgram {
        declarations: vars,
        body,
    }
}

/// A random operation tree of the given nesting depth over `vars`.
pub fn random_operation<R: Rng>(rng: &mut R, vars: &[Arc<str>], depth: usize) -> Operation {
    if depth == 0 || rng.gen_bool(0.3) {
        let x = vars.choose(rng).unwrap();
        return match rng.gen_range(0..4) {
            0 => Operation::Havoc(x.clone()),
            1 => Operation::assume(condition(rng, vars, (-2, 3))),
            _ => {
                let rhs = expression(rng, vars, (-2, 3));
                Operation::Assign(x.clone(), rhs)
            }
        };
    }
    let a = random_operation(rng, vars, depth - 1);
    let b = random_operation(rng, vars, depth - 1);
    if rng.gen_bool(0.5) {
        Operation::seq(a, b)
    } else {
        Operation::choice(a, b)
    }
}

/// A random Boolean combination of comparisons over `vars`.
pub fn random_formula<R: Rng>(rng: &mut R, vars: &[Arc<str>], depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.35) {
        return comparison(rng, vars, (-2, 3));
    }
    let a = random_formula(rng, vars, depth - 1);
    let b = random_formula(rng, vars, depth - 1);
    match rng.gen_range(0..3) {
        0 => Formula::and2(a, b),
        1 => Formula::or2(a, b),
        _ => Formula::not(a),
    }
}
