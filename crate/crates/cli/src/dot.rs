use std::fmt::Write;

use capslice_core::{EdgeKind, FdGraph, NodeKind};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// DOT text with nodes and edges in id order.
pub fn render(g: &FdGraph) -> String {
    let mut out = String::from("digraph fd {\n");
    for node in g.nodes() {
        let shape = match node.kind {
            NodeKind::Mission => "doubleoctagon",
            NodeKind::Function => "box",
            NodeKind::Directive => "ellipse",
        };
        let label = if node.label.is_empty() { node.id.as_str() } else { &node.label };
        writeln!(out, "  {} [shape={shape}, label={}];", quote(node.id.as_str()), quote(label)).unwrap();
    }
    for edge in g.edges() {
        let style = match edge.kind {
            EdgeKind::Intersection => "dashed",
            EdgeKind::Refinement => "dotted",
            EdgeKind::Decomposition => "solid",
        };
        writeln!(
            out,
            "  {} -> {} [label=\"{}\", style={style}];",
            quote(edge.parent.as_str()),
            quote(edge.child.as_str()),
            edge.raw_weight
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
