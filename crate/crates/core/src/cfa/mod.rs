//! Control-flow automata and their summarization into large blocks.

mod dot;
mod op;

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

pub use dot::to_dot;
pub(crate) use dot::escape as dot_escape;
pub use op::Operation;

pub type LocId = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub source: LocId,
    pub op: Operation,
    pub target: LocId,
}

impl Edge {
    pub fn new(source: LocId, op: Operation, target: LocId) -> Self {
        Edge { source, op, target }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cfa {
    locations: BTreeSet<LocId>,
    edges: Vec<Edge>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CfaError {
    #[error("unknown location {0}")]
    UnknownLocation(LocId),
}

impl Cfa {
    pub fn new() -> Self {
        Cfa::default()
    }

    pub fn add_location(&mut self, l: LocId) {
        self.locations.insert(l);
    }

    /// Appends an edge, registering both endpoints as locations.
    pub fn add_edge(&mut self, source: LocId, op: Operation, target: LocId) {
        self.locations.insert(source);
        self.locations.insert(target);
        self.edges.push(Edge::new(source, op, target));
    }

    pub fn remove_location(&mut self, l: LocId) {
        self.locations.remove(&l);
        self.edges.retain(|e| e.source != l && e.target != l);
    }

    pub fn locations(&self) -> &BTreeSet<LocId> {
        &self.locations
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn contains(&self, l: LocId) -> bool {
        self.locations.contains(&l)
    }

    pub fn outgoing(&self, l: LocId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.source == l)
    }

    pub fn incoming(&self, l: LocId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.target == l)
    }
}

/// A CFA with distinguished entry and error locations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub cfa: Cfa,
    pub entry: LocId,
    pub error: LocId,
    /// Declared program variables, in declaration order.
    pub variables: Vec<Arc<str>>,
}

/// One rewrite performed by [`summarize`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleApplication {
    /// Outgoing edges of the error location were dropped.
    Rule0 { removed_edges: usize },
    /// `removed_loc` had the single predecessor `from`; its outgoing edges
    /// were redirected to start at `from`.
    Rule1 { removed_loc: LocId, from: LocId, to: Vec<LocId> },
    /// Two parallel edges `source -> target` were merged into a choice.
    Rule2 { source: LocId, target: LocId },
}

impl RuleApplication {
    pub fn rule(&self) -> u8 {
        match self {
            RuleApplication::Rule0 { .. } => 0,
            RuleApplication::Rule1 { .. } => 1,
            RuleApplication::Rule2 { .. } => 2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SummarizationTrace {
    pub applications: Vec<RuleApplication>,
}

impl SummarizationTrace {
    /// Number of Rule 1 and Rule 2 applications.
    pub fn fusion_count(&self) -> usize {
        self.applications.iter().filter(|a| a.rule() != 0).count()
    }
}

impl Program {
    fn check(&self, l: LocId) -> Result<(), CfaError> {
        if self.cfa.contains(l) {
            Ok(())
        } else {
            Err(CfaError::UnknownLocation(l))
        }
    }

    fn rule0_in_place(&mut self) -> usize {
        let before = self.cfa.edges.len();
        let err = self.error;
        self.cfa.edges.retain(|e| e.source != err);
        before - self.cfa.edges.len()
    }

    fn rule1_in_place(&mut self, l2: LocId) -> Option<RuleApplication> {
        if l2 == self.entry || l2 == self.error {
            return None;
        }
        let mut incoming = self.cfa.edges.iter().enumerate().filter(|(_, e)| e.target == l2);
        let (pos, first) = incoming.next()?;
        if incoming.next().is_some() || first.source == l2 {
            return None;
        }
        let l1 = first.source;
        let op1 = first.op.clone();
        let outgoing: Vec<Edge> = self.cfa.outgoing(l2).cloned().collect();
        // A sink other than the error location is the program exit; keep it.
        if outgoing.is_empty() {
            return None;
        }
        let fused: Vec<Edge> = outgoing
            .iter()
            .map(|e| Edge::new(l1, Operation::seq(op1.clone(), e.op.clone()), e.target))
            .collect();
        let to = fused.iter().map(|e| e.target).collect();
        self.cfa.edges.splice(pos..pos + 1, fused);
        self.cfa.remove_location(l2);
        Some(RuleApplication::Rule1 {
            removed_loc: l2,
            from: l1,
            to,
        })
    }

    fn rule2_in_place(&mut self, l1: LocId, l2: Option<LocId>) -> Option<RuleApplication> {
        let edges = &self.cfa.edges;
        let mut pair = None;
        'outer: for i in 0..edges.len() {
            if edges[i].source != l1 || l2.is_some_and(|t| edges[i].target != t) {
                continue;
            }
            for j in i + 1..edges.len() {
                if edges[j].source == l1 && edges[j].target == edges[i].target {
                    pair = Some((i, j));
                    break 'outer;
                }
            }
        }
        let (i, j) = pair?;
        let second = self.cfa.edges.remove(j);
        let first = &mut self.cfa.edges[i];
        let a = std::mem::replace(&mut first.op, Operation::skip());
        first.op = Operation::choice_factored(a, second.op);
        Some(RuleApplication::Rule2 {
            source: l1,
            target: second.target,
        })
    }

    /// Removes every edge leaving the error location.
    pub fn apply_rule0(&self) -> Program {
        let mut p = self.clone();
        p.rule0_in_place();
        p
    }

    /// Eliminates `l2` if it has exactly one incoming edge, from a different
    /// location, and is neither entry, error, nor a sink.
    pub fn try_rule1(&self, l2: LocId) -> Result<Option<Program>, CfaError> {
        self.check(l2)?;
        let mut p = self.clone();
        Ok(p.rule1_in_place(l2).map(|_| p))
    }

    /// Merges the two earliest parallel edges `l1 -> l2` into a choice, with
    /// their common leading and trailing steps factored out.
    pub fn try_rule2(&self, l1: LocId, l2: LocId) -> Result<Option<Program>, CfaError> {
        self.check(l1)?;
        self.check(l2)?;
        let mut p = self.clone();
        Ok(p.rule2_in_place(l1, Some(l2)).map(|_| p))
    }
}

/// Large-block summarization: Rule 0 once, then Rules 1 and 2 until neither
/// applies.
///
/// Locations are scanned in ascending order. At each location Rule 2 is tried
/// on its outgoing edges first, then Rule 1 on the location itself; the scan
/// restarts from the lowest location after every change.
pub fn summarize(p: &Program) -> (Program, SummarizationTrace) {
    let mut out = p.clone();
    let mut trace = SummarizationTrace::default();
    let removed = out.rule0_in_place();
    if removed > 0 {
        trace.applications.push(RuleApplication::Rule0 {
            removed_edges: removed,
        });
    }
    'scan: loop {
        let locs: Vec<LocId> = out.cfa.locations.iter().copied().collect();
        for l in locs {
            if let Some(app) = out.rule2_in_place(l, None) {
                trace.applications.push(app);
                continue 'scan;
            }
            if let Some(app) = out.rule1_in_place(l) {
                trace.applications.push(app);
                continue 'scan;
            }
        }
        break;
    }
    (out, trace)
}
