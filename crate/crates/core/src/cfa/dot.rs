use std::fmt::Write;

use super::Program;

pub(crate) fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// GraphViz rendering. Entry is drawn as a box, the error location as a
/// double circle; assume operations appear as `[p]`.
pub fn to_dot(p: &Program) -> String {
    let mut out = String::from("digraph cfa {\n  node [shape=circle];\n");
    for &l in p.cfa.locations() {
        let shape = if l == p.error {
            ", shape=doublecircle"
        } else if l == p.entry {
            ", shape=box"
        } else {
            ""
        };
        let _ = writeln!(out, "  n{} [label=\"{}\"{}];", l, l, shape);
    }
    for e in p.cfa.edges() {
        let _ = writeln!(
            out,
            "  n{} -> n{} [label=\"{}\"];",
            e.source,
            e.target,
            escape(&e.op.to_string())
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfa::{Cfa, Operation};

    #[test]
    fn minimal_program() {
        let mut cfa = Cfa::new();
        cfa.add_edge(0, Operation::skip(), 1);
        let p = Program {
            cfa,
            entry: 0,
            error: 1,
            variables: vec![],
        };
        let dot = to_dot(&p);
        assert_eq!(dot.matches("[label=").count(), 3);
        assert!(dot.contains("n0 -> n1 [label=\"[true]\"];"));
        assert_eq!(dot, to_dot(&p));
    }
}
