//! Brute-force semantics used as ground truth: explicit-state reachability
//! over bounded integer domains, syntactic path enumeration, semantic
//! equivalence, and concrete replay of counterexamples.

mod random;

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::Arc;

pub use random::{random_formula, random_operation, random_program, RandomProgramConfig};

use crate::cfa::{Edge, LocId, Operation, Program};
use crate::formula::{encode_edge, Formula, SsaMap, Var};
use crate::smt::{Model, SmtSolver, SolverError};

/// Inclusive value range per variable plus a cap on explored states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainBound {
    pub default: (i64, i64),
    pub per_var: BTreeMap<Arc<str>, (i64, i64)>,
    pub budget: usize,
}

impl DomainBound {
    pub fn uniform(lo: i64, hi: i64, budget: usize) -> Self {
        assert!(lo <= hi && budget > 0, "empty domain or zero budget");
        DomainBound {
            default: (lo, hi),
            per_var: BTreeMap::new(),
            budget,
        }
    }

    pub fn range(&self, var: &str) -> (i64, i64) {
        self.per_var.get(var).copied().unwrap_or(self.default)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reachability {
    Reachable,
    NotReachable,
    BudgetExceeded,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConcreteState {
    pub location: LocId,
    pub env: Vec<i64>,
}

struct Evaluator<'a> {
    index: HashMap<Arc<str>, usize>,
    ranges: Vec<(i64, i64)>,
    vars: &'a [Arc<str>],
}

impl<'a> Evaluator<'a> {
    fn new(vars: &'a [Arc<str>], b: &DomainBound) -> Self {
        Evaluator {
            index: vars.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect(),
            ranges: vars.iter().map(|v| b.range(v)).collect(),
            vars,
        }
    }

    fn slot(&self, v: &Var) -> usize {
        *self
            .index
            .get(&v.name)
            .unwrap_or_else(|| panic!("variable `{}` is not declared", v.name))
    }

    fn holds(&self, f: &Formula, env: &[i64]) -> bool {
        f.eval_int(&|v| env[self.slot(v)], &|_| false)
    }

    /// All successor environments within bounds.
    fn post(&self, op: &Operation, env: Vec<i64>) -> Vec<Vec<i64>> {
        match op {
            Operation::Assume(c) => {
                if self.holds(c, &env) {
                    vec![env]
                } else {
                    vec![]
                }
            }
            Operation::Assign(x, t) => {
                let i = self.index[x];
                let val = t.eval_int(|v| env[self.slot(v)]);
                let (lo, hi) = self.ranges[i];
                if val < lo || val > hi {
                    return vec![];
                }
                let mut e = env;
                e[i] = val;
                vec![e]
            }
            Operation::Havoc(x) => {
                let i = self.index[x];
                let (lo, hi) = self.ranges[i];
                (lo..=hi)
                    .map(|val| {
                        let mut e = env.clone();
                        e[i] = val;
                        e
                    })
                    .collect()
            }
            Operation::Seq(a, b) => self
                .post(a, env)
                .into_iter()
                .flat_map(|e| self.post(b, e))
                .collect(),
            Operation::Choice(a, b) => {
                let mut out = self.post(a, env.clone());
                for e in self.post(b, env) {
                    if !out.contains(&e) {
                        out.push(e);
                    }
                }
                out
            }
        }
    }

    fn initial_envs(&self) -> Vec<Vec<i64>> {
        let mut out = vec![Vec::with_capacity(self.vars.len())];
        for &(lo, hi) in &self.ranges {
            out = out
                .into_iter()
                .flat_map(|e| {
                    (lo..=hi).map(move |v| {
                        let mut e = e.clone();
                        e.push(v);
                        e
                    })
                })
                .collect();
        }
        out
    }
}

/// Breadth-first search for a concrete state at the error location,
/// starting from every initial environment within the bounds.
pub fn explicit_reachable(p: &Program, b: &DomainBound) -> Reachability {
    let ev = Evaluator::new(&p.variables, b);
    let mut seen: HashSet<ConcreteState> = HashSet::new();
    let mut queue = VecDeque::new();
    for env in ev.initial_envs() {
        let s = ConcreteState {
            location: p.entry,
            env,
        };
        if seen.insert(s.clone()) {
            queue.push_back(s);
        }
    }
    if p.entry == p.error && !queue.is_empty() {
        return Reachability::Reachable;
    }
    let mut out_edges: HashMap<LocId, Vec<&Edge>> = HashMap::new();
    for e in p.cfa.edges() {
        out_edges.entry(e.source).or_default().push(e);
    }
    while let Some(s) = queue.pop_front() {
        for e in out_edges.get(&s.location).map(Vec::as_slice).unwrap_or(&[]) {
            for env in ev.post(&e.op, s.env.clone()) {
                if e.target == p.error {
                    return Reachability::Reachable;
                }
                let next = ConcreteState {
                    location: e.target,
                    env,
                };
                if seen.insert(next.clone()) {
                    if seen.len() > b.budget {
                        return Reachability::BudgetExceeded;
                    }
                    queue.push_back(next);
                }
            }
        }
    }
    Reachability::NotReachable
}

/// Concrete successor environments of `env` along `op`, with `env` and the
/// results indexed like `vars`. Havoc ranges over the variable's bound and
/// assignments leaving the bound are dropped. Sorted, without duplicates.
pub fn concrete_post(vars: &[Arc<str>], op: &Operation, env: &[i64], b: &DomainBound) -> Vec<Vec<i64>> {
    let ev = Evaluator::new(vars, b);
    let mut out = ev.post(op, env.to_vec());
    out.sort();
    out.dedup();
    out
}

/// Every environment within the bounds, indexed like `vars`.
pub fn initial_envs(vars: &[Arc<str>], b: &DomainBound) -> Vec<Vec<i64>> {
    Evaluator::new(vars, b).initial_envs()
}

/// Every path from the entry with between 1 and `max_len` edges, as edge
/// indices. Shorter paths come first; paths of equal length are ordered
/// lexicographically by edge index.
pub fn enum_paths(p: &Program, max_len: usize) -> Vec<Vec<usize>> {
    let edges = p.cfa.edges();
    let mut out = Vec::new();
    let mut frontier: Vec<(LocId, Vec<usize>)> = vec![(p.entry, Vec::new())];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (loc, path) in &frontier {
            for (i, e) in edges.iter().enumerate() {
                if e.source == *loc {
                    let mut q = path.clone();
                    q.push(i);
                    next.push((e.target, q));
                }
            }
        }
        out.extend(next.iter().map(|(_, q)| q.clone()));
        frontier = next;
    }
    out
}

pub fn semantically_equivalent(
    solver: &mut dyn SmtSolver,
    a: &Formula,
    b: &Formula,
) -> Result<bool, SolverError> {
    Ok(solver.entails(a, b)? && solver.entails(b, a)?)
}

/// Executes `path` concretely, taking initial values and havoc results from
/// `model` (indexed as by [`encode_edge`] threaded from the all-zero map).
/// Returns whether some execution follows the whole path and ends at the
/// error location. Requires integral model values.
pub fn replay(p: &Program, path: &[Edge], model: &Model) -> bool {
    if path.last().map_or(p.entry, |e| e.target) != p.error {
        return false;
    }
    let as_int = |v: &Var| -> Option<i64> {
        let q = model.value(v);
        q.is_integer().then(|| i64::try_from(q.to_integer()).ok()).flatten()
    };
    let mut env: BTreeMap<Arc<str>, i64> = BTreeMap::new();
    for name in &p.variables {
        match as_int(&Var {
            name: name.clone(),
            index: Some(0),
        }) {
            Some(v) => env.insert(name.clone(), v),
            None => return false,
        };
    }
    let mut states = vec![(env, SsaMap::new())];
    for e in path {
        states = states
            .into_iter()
            .flat_map(|(env, ssa)| exec(&e.op, env, ssa, &as_int))
            .collect();
        if states.is_empty() {
            return false;
        }
    }
    true
}

type Env = BTreeMap<Arc<str>, i64>;

fn exec(op: &Operation, mut env: Env, ssa: SsaMap, val: &dyn Fn(&Var) -> Option<i64>) -> Vec<(Env, SsaMap)> {
    let lookup = |env: &Env, v: &Var| env.get(&v.name).copied().unwrap_or(0);
    match op {
        Operation::Assume(c) => {
            if c.eval_int(&|v| lookup(&env, v), &|_| false) {
                vec![(env, ssa)]
            } else {
                vec![]
            }
        }
        Operation::Assign(x, t) => {
            let v = t.eval_int(|v| lookup(&env, v));
            env.insert(x.clone(), v);
            let (_, next) = encode_edge(op, &ssa);
            vec![(env, next)]
        }
        Operation::Havoc(x) => {
            let (_, next) = encode_edge(op, &ssa);
            match val(&next.var(x)) {
                Some(v) => {
                    env.insert(x.clone(), v);
                    vec![(env, next)]
                }
                None => vec![],
            }
        }
        Operation::Seq(a, b) => exec(a, env, ssa, val)
            .into_iter()
            .flat_map(|(e, s)| exec(b, e, s, val))
            .collect(),
        Operation::Choice(a, b) => {
            let (_, joined) = encode_edge(op, &ssa);
            let mut out = exec(a, env.clone(), ssa.clone(), val);
            out.extend(exec(b, env, ssa, val));
            out.into_iter().map(|(e, _)| (e, joined.clone())).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::compile;

    #[test]
    fn reachability_examples() {
        let b = DomainBound::uniform(0, 1, 10_000);
        let p = compile("int x; x = 1; assume(x == 1); error();").unwrap();
        assert_eq!(explicit_reachable(&p, &b), Reachability::Reachable);
        let p = compile("int x; x = 0; assume(x > 0); error();").unwrap();
        assert_eq!(explicit_reachable(&p, &b), Reachability::NotReachable);
    }

    #[test]
    fn guarded_error_in_loop_program() {
        let src = "int i; int x; int z;
            while (i > 0) { if (x == 1) { z = 0; } else { z = 1; } i = i - 1; }
            if (z > 1) { error(); }";
        let p = compile(src).unwrap();
        let mut b = DomainBound::uniform(0, 1, 10_000);
        b.per_var.insert(Arc::from("i"), (0, 2));
        assert_eq!(explicit_reachable(&p, &b), Reachability::NotReachable);
    }

    #[test]
    fn budget_is_reported() {
        let p = compile("int x; while (*) { x = nondet(); } error();").unwrap();
        let b = DomainBound::uniform(0, 50, 3);
        assert_eq!(explicit_reachable(&p, &b), Reachability::BudgetExceeded);
    }

    #[test]
    fn path_counts() {
        let p = compile("int x; error();").unwrap();
        assert_eq!(enum_paths(&p, 1).len(), 1);

        let p = compile("int x; if (x > 0) { x = 1; } else { x = 2; }").unwrap();
        let paths = enum_paths(&p, 2);
        assert_eq!(paths.len(), 4);
        assert_eq!(paths.iter().filter(|q| q.len() == 2).count(), 2);
    }

    #[test]
    fn loop_paths_unroll() {
        // entry -> head, head -> body -> head, head -> exit
        let p = compile("int x; while (*) { x = x + 1; }").unwrap();
        let paths = enum_paths(&p, 4);
        let max_iters = paths
            .iter()
            .map(|q| q.iter().filter(|&&i| p.cfa.edges()[i].op.to_string().starts_with("x =")).count())
            .max()
            .unwrap();
        assert_eq!(max_iters, 1);
        let paths = enum_paths(&p, 5);
        assert_eq!(paths.iter().filter(|q| q.len() == 5).count(), 1);
    }

    #[test]
    fn equivalence_examples() {
        use crate::formula::parse_sexpr;
        let mut s = crate::smt::InternalSolver::new();
        let f = |x: &str| parse_sexpr(x).unwrap();
        assert!(semantically_equivalent(&mut s, &f("(or (> x 0) (> x 1))"), &f("(> x 0)")).unwrap());
        assert!(!semantically_equivalent(&mut s, &f("(> x 0)"), &f("(>= x 0)")).unwrap());
        assert!(semantically_equivalent(&mut s, &Formula::True, &Formula::not(Formula::False)).unwrap());
    }
}
