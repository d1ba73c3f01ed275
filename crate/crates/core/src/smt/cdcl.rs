//! Clause-learning search over the propositional skeleton, with the linear
//! theory checked at every propagation fixpoint.

use super::theory::{self, LinConstraint, TheoryResult};
use super::{Rational, SolverError};

pub(crate) type Lit = u32;

pub(crate) fn lit(var: u32, positive: bool) -> Lit {
    var * 2 + u32::from(!positive)
}

fn var_of(l: Lit) -> usize {
    (l / 2) as usize
}

fn neg(l: Lit) -> Lit {
    l ^ 1
}

#[derive(Default)]
pub(crate) struct Cdcl {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<u32>>,
    value: Vec<Option<bool>>,
    level: Vec<u32>,
    reason: Vec<Option<u32>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    /// Theory constraint attached to a Boolean variable, active when true.
    theory: Vec<Option<u32>>,
    constraints: Vec<LinConstraint>,
    num_theory_vars: usize,
    dirty: bool,
    model: Vec<Rational>,
    seen: Vec<bool>,
    unsat: bool,
}

pub(crate) enum Outcome {
    Sat,
    Unsat,
}

impl Cdcl {
    pub fn new() -> Self {
        Cdcl {
            var_inc: 1.0,
            ..Default::default()
        }
    }

    pub fn new_var(&mut self) -> u32 {
        let v = self.value.len() as u32;
        self.value.push(None);
        self.level.push(0);
        self.reason.push(None);
        self.activity.push(0.0);
        self.theory.push(None);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        v
    }

    pub fn new_theory_var(&mut self) -> u32 {
        self.num_theory_vars += 1;
        self.model.push(Rational::from_integer(0));
        (self.num_theory_vars - 1) as u32
    }

    pub fn attach(&mut self, var: u32, c: LinConstraint) {
        self.theory[var as usize] = Some(self.constraints.len() as u32);
        self.constraints.push(c);
    }

    pub fn value_of(&self, var: u32) -> Option<bool> {
        self.value[var as usize]
    }

    pub fn theory_model(&self) -> &[Rational] {
        &self.model
    }

    fn lit_value(&self, l: Lit) -> Option<bool> {
        self.value[var_of(l)].map(|b| b == (l & 1 == 0))
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: Option<u32>) {
        let v = var_of(l);
        self.value[v] = Some(l & 1 == 0);
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        if l & 1 == 0 && self.theory[v].is_some() {
            self.dirty = true;
        }
        self.trail.push(l);
    }

    fn backtrack(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let keep = self.trail_lim[lvl as usize];
        for &l in &self.trail[keep..] {
            let v = var_of(l);
            self.value[v] = None;
            self.reason[v] = None;
        }
        self.trail.truncate(keep);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = keep;
    }

    fn watch(&mut self, lits: Vec<Lit>) -> u32 {
        let idx = self.clauses.len() as u32;
        self.watches[lits[0] as usize].push(idx);
        self.watches[lits[1] as usize].push(idx);
        self.clauses.push(lits);
        idx
    }

    /// Adds a clause at decision level 0.
    pub fn add_clause(&mut self, lits: &[Lit]) {
        self.backtrack(0);
        if self.unsat {
            return;
        }
        let mut c: Vec<Lit> = Vec::with_capacity(lits.len());
        for &l in lits {
            match self.lit_value(l) {
                Some(true) => return,
                Some(false) => {}
                None => {
                    if c.contains(&neg(l)) {
                        return;
                    }
                    if !c.contains(&l) {
                        c.push(l);
                    }
                }
            }
        }
        match c.len() {
            0 => self.unsat = true,
            1 => self.enqueue(c[0], None),
            _ => {
                self.watch(c);
            }
        }
    }

    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = neg(p);
            let ws = std::mem::take(&mut self.watches[false_lit as usize]);
            let mut keep = Vec::with_capacity(ws.len());
            let mut conflict = None;
            let mut iter = ws.into_iter();
            for ci in iter.by_ref() {
                let c = &mut self.clauses[ci as usize];
                if c[0] == false_lit {
                    c.swap(0, 1);
                }
                let first = c[0];
                if self.value[var_of(first)].map(|b| b == (first & 1 == 0)) == Some(true) {
                    keep.push(ci);
                    continue;
                }
                let mut moved = false;
                for k in 2..c.len() {
                    let l = c[k];
                    if self.value[var_of(l)].map(|b| b == (l & 1 == 0)) != Some(false) {
                        c.swap(1, k);
                        self.watches[c[1] as usize].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                keep.push(ci);
                if self.lit_value(first) == Some(false) {
                    conflict = Some(ci);
                    break;
                }
                self.enqueue(first, Some(ci));
            }
            keep.extend(iter);
            self.watches[false_lit as usize] = keep;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
    }

    /// First-UIP analysis of a clause falsified at the current level.
    fn analyze(&mut self, confl: u32) -> (Vec<Lit>, u32) {
        let cur = self.decision_level();
        let mut learnt: Vec<Lit> = vec![0];
        let mut counter = 0usize;
        let mut clause = confl;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        loop {
            let lits = self.clauses[clause as usize].clone();
            for &q in &lits {
                if Some(q) == p {
                    continue;
                }
                let v = var_of(q);
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(v);
                    if self.level[v] == cur {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[var_of(self.trail[idx])] {
                    break;
                }
            }
            let pl = self.trail[idx];
            self.seen[var_of(pl)] = false;
            counter -= 1;
            p = Some(pl);
            if counter == 0 {
                break;
            }
            clause = self.reason[var_of(pl)].expect("implied literal has a reason");
        }
        learnt[0] = neg(p.unwrap());
        for &l in &learnt[1..] {
            self.seen[var_of(l)] = false;
        }
        let mut bt = 0;
        if learnt.len() > 1 {
            let (mut best, mut best_lvl) = (1, self.level[var_of(learnt[1])]);
            for (i, &l) in learnt.iter().enumerate().skip(2) {
                let lv = self.level[var_of(l)];
                if lv > best_lvl {
                    best = i;
                    best_lvl = lv;
                }
            }
            learnt.swap(1, best);
            bt = best_lvl;
        }
        self.var_inc /= 0.95;
        (learnt, bt)
    }

    /// Learns from clause `confl` (all literals false) and backjumps.
    /// Returns false when the conflict is at the root.
    fn resolve(&mut self, confl: u32) -> bool {
        if self.decision_level() == 0 {
            return false;
        }
        let (learnt, bt) = self.analyze(confl);
        self.backtrack(bt);
        if learnt.len() == 1 {
            self.enqueue(learnt[0], None);
        } else {
            let first = learnt[0];
            let ci = self.watch(learnt);
            self.enqueue(first, Some(ci));
        }
        true
    }

    /// Records a falsified theory lemma and resolves the conflict.
    fn theory_conflict(&mut self, mut lits: Vec<Lit>) -> bool {
        if lits.is_empty() {
            return false;
        }
        lits.sort_by_key(|&l| std::cmp::Reverse(self.level[var_of(l)]));
        let top = self.level[var_of(lits[0])];
        if top == 0 {
            return false;
        }
        self.backtrack(top);
        if lits.len() == 1 {
            // A single culprit atom is false everywhere.
            self.backtrack(0);
            self.enqueue(lits[0], None);
            return true;
        }
        let ci = self.watch(lits);
        self.resolve(ci)
    }

    fn check_theory(&mut self) -> Result<Option<Vec<Lit>>, SolverError> {
        let mut active = Vec::new();
        let mut vars = Vec::new();
        for &l in &self.trail {
            if l & 1 == 0 {
                if let Some(ci) = self.theory[var_of(l)] {
                    active.push(self.constraints[ci as usize].clone());
                    vars.push(var_of(l) as u32);
                }
            }
        }
        match theory::check(&active, self.num_theory_vars)? {
            TheoryResult::Sat(model) => {
                self.model = model;
                self.dirty = false;
                Ok(None)
            }
            TheoryResult::Unsat(core) => Ok(Some(core.into_iter().map(|i| lit(vars[i], false)).collect())),
        }
    }

    fn pick_branch(&self) -> Option<u32> {
        let mut best: Option<usize> = None;
        for v in 0..self.value.len() {
            if self.value[v].is_none() && best.is_none_or(|b| self.activity[v] > self.activity[b]) {
                best = Some(v);
            }
        }
        best.map(|v| v as u32)
    }

    pub fn solve(&mut self) -> Result<Outcome, SolverError> {
        if self.unsat {
            return Ok(Outcome::Unsat);
        }
        loop {
            if let Some(confl) = self.propagate() {
                if !self.resolve(confl) {
                    self.unsat = true;
                    return Ok(Outcome::Unsat);
                }
                continue;
            }
            if self.dirty {
                if let Some(lemma) = self.check_theory()? {
                    if !self.theory_conflict(lemma) {
                        self.unsat = true;
                        return Ok(Outcome::Unsat);
                    }
                    continue;
                }
            }
            match self.pick_branch() {
                None => return Ok(Outcome::Sat),
                Some(v) => {
                    self.trail_lim.push(self.trail.len());
                    self.enqueue(lit(v, false), None);
                }
            }
        }
    }
}
