use std::fmt::Write;

use crate::abstraction::{AbstractFormula, Precision};
use crate::cfa::{dot_escape, Edge, LocId};

#[derive(Clone, Debug)]
pub struct ArtNode {
    pub id: usize,
    pub location: LocId,
    pub state: AbstractFormula,
    pub precision: Precision,
    /// Parent node and the index of the CFA edge leading here.
    pub parent: Option<(usize, usize)>,
    pub covered_by: Option<usize>,
    pub children: Vec<usize>,
}

/// Abstract reachability tree. Nodes are stored in creation order, so a
/// node id is its index.
#[derive(Clone, Debug, Default)]
pub struct Art {
    pub nodes: Vec<ArtNode>,
    pub waitlist: Vec<usize>,
}

impl Art {
    pub const ROOT: usize = 0;

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Whether `a` is an ancestor of (or equal to) `b`.
    pub fn is_ancestor(&self, a: usize, mut b: usize) -> bool {
        loop {
            if a == b {
                return true;
            }
            match self.nodes[b].parent {
                Some((p, _)) => b = p,
                None => return false,
            }
        }
    }

    /// GraphViz rendering; `label` renders an abstract state. Covered nodes
    /// are dashed with a dotted edge to their coverer.
    pub fn to_dot(&self, edges: &[Edge], mut label: impl FnMut(AbstractFormula) -> String) -> String {
        let mut out = String::from("digraph art {\n  node [shape=ellipse];\n");
        for n in &self.nodes {
            let style = if n.covered_by.is_some() { ", style=dashed" } else { "" };
            let _ = writeln!(
                out,
                "  a{} [label=\"{} @{}\\n{}\"{}];",
                n.id,
                n.id,
                n.location,
                dot_escape(&label(n.state)),
                style
            );
        }
        for n in &self.nodes {
            if let Some((p, e)) = n.parent {
                let _ = writeln!(
                    out,
                    "  a{} -> a{} [label=\"{}\"];",
                    p,
                    n.id,
                    dot_escape(&edges[e].op.to_string())
                );
            }
            if let Some(c) = n.covered_by {
                let _ = writeln!(out, "  a{} -> a{} [style=dotted];", n.id, c);
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Path from the root to a node at the error location.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterexamplePath {
    /// CFA edges and the ART node each one reaches.
    pub steps: Vec<(Edge, usize)>,
}

impl CounterexamplePath {
    pub fn edges(&self) -> Vec<Edge> {
        self.steps.iter().map(|(e, _)| e.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}
