use std::fmt::Write;

use super::{DdManager, NodeId, NodeView};

pub(super) fn render(m: &DdManager, root: NodeId) -> String {
    let mut out = String::from("digraph dd {\n");
    for n in m.reachable(root).into_iter().rev() {
        match m.view(n) {
            NodeView::Terminal(t) => {
                let _ = writeln!(out, "  {n} [shape=box, label=\"{}\"];", escape(&t.to_string()));
            }
            NodeView::Inner { var, low, high } => {
                let _ = writeln!(out, "  {n} [shape=circle, label=\"{}\"];", escape(m.var_name(var)));
                let _ = writeln!(out, "  {n} -> {low} [style=dashed];");
                let _ = writeln!(out, "  {n} -> {high};");
            }
        }
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
