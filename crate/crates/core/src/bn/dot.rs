use std::collections::BTreeMap;
use std::fmt::Write;

use super::graph::Bn;

/// Graphviz rendering. Output is a pure function of the graph: layers are
/// ranked left to right, deterministic nodes get a double border and
/// bijective edges are drawn without arrowheads.
pub fn export_dot(bn: &Bn) -> String {
    let mut out = String::new();
    out.push_str("digraph bn {\n  rankdir=LR;\n  node [shape=circle];\n");
    let mut ranks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for n in bn.nodes() {
        ranks.entry(n.step.map_or(0, |s| usize::MAX - s)).or_default().push(n.id);
        let border = if n.deterministic { ", peripheries=2" } else { "" };
        let _ = writeln!(out, "  n{} [label=\"{}\"{}];", n.id, escape(&n.label), border);
    }
    if ranks.len() > 1 {
        for ids in ranks.values() {
            let list: Vec<String> = ids.iter().map(|i| format!("n{i}")).collect();
            let _ = writeln!(out, "  {{ rank=same; {}; }}", list.join("; "));
        }
    }
    for e in bn.edges() {
        let attr = if e.bijective { " [dir=none]" } else { "" };
        let _ = writeln!(out, "  n{} -> n{}{};", e.from, e.to, attr);
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
