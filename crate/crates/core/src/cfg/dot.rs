use std::fmt::Write;

use super::Cfg;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => {}
            c => out.push(c),
        }
    }
    out
}

/// Graphviz rendering. Condition nodes are diamonds, placeholders dashed.
pub fn emit_dot(g: &Cfg) -> String {
    let mut out = String::from("digraph cfg {\n");
    for n in &g.nodes {
        let shape = if g.is_condition(&n.id) {
            "shape=diamond"
        } else if n.placeholder {
            "shape=box, style=dashed"
        } else {
            "shape=box"
        };
        let _ = writeln!(out, "    \"{}\" [label=\"{}\", {}];", n.id, escape(&n.label), shape);
    }
    for e in &g.edges {
        match &e.label {
            Some(l) => {
                let _ = writeln!(out, "    \"{}\" -> \"{}\" [label=\"{}\"];", e.from, e.to, escape(l));
            }
            None => {
                let _ = writeln!(out, "    \"{}\" -> \"{}\";", e.from, e.to);
            }
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node() {
        let dot = emit_dot(&Cfg::single("entry", "entry"));
        assert_eq!(dot.lines().filter(|l| l.contains("[label=")).count(), 1);
        assert!(dot.starts_with("digraph cfg {\n"));
        assert!(dot.ends_with("}\n"));
    }

    #[test]
    fn shapes_and_escapes() {
        let mut g = Cfg::new();
        g.add_node("c", "s == \"a\"");
        g.add_node("p", "for_block_1");
        g.add_node("x", "x");
        g.add_edge("c", "p", Some("true"));
        g.add_edge("c", "x", Some("false"));
        let dot = emit_dot(&g);
        assert!(dot.contains("\"c\" [label=\"s == \\\"a\\\"\", shape=diamond];"));
        assert!(dot.contains("style=dashed"));
        assert!(dot.contains("\"c\" -> \"p\" [label=\"true\"];"));
    }
}
