//! Graphviz export of the merged communicative event diagram.
//!
//! The direction of an arrow is what distinguishes ingoing from outgoing
//! interactions; styles and colours only reinforce it.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::ced::graph::{NodeKind, PrecedenceGraph};
use crate::ced::{AndKind, Direction, ModelRepository, NodeKey};

const LEGEND: &str = "\
// Legend
//   rounded box         communicative event (identifier and name)
//   box inside cluster  event variant of a specialised event
//   dashed grey box     out-of-scope event without a full definition
//   plain text          organisational role
//   filled circle       start node; double circle: end node
//   \"+\" circle          and node (join or fork); \"o\" circle: or node
//   thin open arrow     precedence relation; dashed arrow: loopback
//   bold arrow          ingoing interaction, role -> event, labelled with the message
//   dotted arrow        outgoing interaction, event -> role
";

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn quote(s: &str) -> String {
    format!("\"{}\"", escape(s))
}

fn node_id(key: &NodeKey) -> String {
    match key {
        NodeKey::Start => quote("start"),
        NodeKey::End => quote("end"),
        NodeKey::Event(id) => quote(id),
        NodeKey::Logical(id) => quote(&format!("node:{id}")),
    }
}

fn role_id(role: &str) -> String {
    quote(&format!("role:{role}"))
}

/// Render the merged graph. Loopback edges are classified by depth; if the
/// classification fails every edge is drawn as a plain precedence.
pub fn merged_dot(repo: &ModelRepository) -> String {
    let g = PrecedenceGraph::build(repo);
    let loopbacks = g.classify().unwrap_or_else(|_| vec![false; g.edges().len()]);
    let mut out = String::new();
    out.push_str(LEGEND);
    out.push_str("digraph ced {\n  rankdir=TB;\n  node [fontname=\"Helvetica\"];\n  edge [arrowhead=vee];\n");

    for (i, n) in g.nodes().iter().enumerate() {
        if n.kind != NodeKind::Event || !g.nodes().iter().any(|c| c.kind == NodeKind::Variant(i)) {
            continue;
        }
        let _ = writeln!(out, "  subgraph {} {{", quote(&format!("cluster {}", n.key)));
        out.push_str("    style=rounded;\n");
        let mut stack = vec![i];
        while let Some(p) = stack.pop() {
            let _ = writeln!(out, "    {};", node_id(&g.nodes()[p].key));
            for (c, child) in g.nodes().iter().enumerate() {
                if child.kind == NodeKind::Variant(p) {
                    stack.push(c);
                }
            }
        }
        out.push_str("  }\n");
    }

    for n in g.nodes() {
        let id = node_id(&n.key);
        let attrs = match n.kind {
            NodeKind::Start => "shape=circle, style=filled, fillcolor=black, label=\"\", width=0.25".to_string(),
            NodeKind::End => "shape=doublecircle, style=filled, fillcolor=black, label=\"\", width=0.2".to_string(),
            NodeKind::And(kind) => {
                let tip = match kind {
                    Some(AndKind::Join) => "and-join",
                    Some(AndKind::Fork) => "and-fork",
                    None => "and",
                };
                format!("shape=circle, label=\"+\", tooltip={}", quote(&format!("{tip} {}", n.key)))
            }
            NodeKind::Or => format!("shape=circle, label=\"o\", tooltip={}", quote(&format!("or {}", n.key))),
            NodeKind::Unresolved => format!(
                "shape=box, style=\"rounded,dashed\", color=grey50, fontcolor=grey50, label={}",
                quote(&n.key.to_string())
            ),
            NodeKind::Event | NodeKind::Variant(_) => {
                let id = n.key.to_string();
                let name = match repo.event(&id) {
                    Some(e) => e.name.clone(),
                    None => repo.variant(&id).map(|(_, v)| v.name.clone()).unwrap_or_default(),
                };
                let shape = if n.kind == NodeKind::Event {
                    "shape=box, style=rounded"
                } else {
                    "shape=box"
                };
                format!("{shape}, label=\"{}\\n{}\"", escape(&id), escape(&name))
            }
        };
        let _ = writeln!(out, "  {id} [{attrs}];");
    }

    for (e, lb) in g.edges().iter().zip(&loopbacks) {
        let s = node_id(&g.nodes()[e.source].key);
        let t = node_id(&g.nodes()[e.target].key);
        if *lb {
            let _ = writeln!(out, "  {s} -> {t} [style=dashed, constraint=false];");
        } else {
            let _ = writeln!(out, "  {s} -> {t};");
        }
    }

    // Interactions of fully defined events and their variants.
    let mut roles: BTreeSet<&str> = BTreeSet::new();
    let mut lines: Vec<String> = Vec::new();
    for ev in &repo.events {
        let mut owners: Vec<(&str, &[crate::ced::CommunicativeInteraction])> = vec![(&ev.id, &ev.interactions)];
        crate::ced::for_each_variant(&ev.variants, &mut |v| owners.push((&v.id, &v.interactions)));
        for (owner, interactions) in owners {
            for i in interactions {
                if i.counterpart_role.is_empty() {
                    continue;
                }
                roles.insert(&i.counterpart_role);
                let (role, event) = (role_id(&i.counterpart_role), quote(owner));
                match i.direction {
                    Direction::Ingoing => {
                        let label = i.message_ref.as_deref().unwrap_or(&i.name);
                        lines.push(format!(
                            "  {role} -> {event} [style=bold, color=blue4, label={}];",
                            quote(label)
                        ));
                    }
                    Direction::Outgoing => lines.push(format!(
                        "  {event} -> {role} [style=dotted, color=darkgreen, label={}];",
                        quote(&i.name)
                    )),
                }
            }
        }
    }
    for r in roles {
        let _ = writeln!(out, "  {} [shape=plaintext, label={}];", role_id(r), quote(r));
    }
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ced::{parse_model, SourceFile};

    #[test]
    fn dot_shape() {
        let src = r#"
process S {
  event 1 "Client places order" { primary Client; in "Order" message=ORDER; out "Notice" to Manager }
  variant-event 2 "Supplier evaluates order" { primary Supplier; variant 1 "accepts" {} variant 2 "rejects" {} }
  extern "X 1"
  start -> 1 -> 2
  2.2 -> 1
  2.1 -> "X 1"
}
"#;
        let repo = parse_model(&[SourceFile::new("s.ced", src)]).unwrap();
        let dot = merged_dot(&repo);
        assert!(dot.starts_with("// Legend"));
        assert!(dot.contains("subgraph \"cluster S 2\""));
        assert!(dot.contains("\"S 2.2\" -> \"S 1\" [style=dashed, constraint=false];"));
        assert!(dot.contains("\"role:Client\" -> \"S 1\" [style=bold"));
        assert!(dot.contains("\"S 1\" -> \"role:Manager\" [style=dotted"));
        assert!(dot.contains("\"X 1\" [shape=box, style=\"rounded,dashed\""));
        assert_eq!(dot, merged_dot(&repo));
    }
}
