//! Diagrams are overlapping views of one model. This module merges them and
//! checks that out-of-scope references keep the views consistent.

use std::collections::BTreeSet;

use crate::ced::graph::{NodeKind, PrecedenceGraph};
use crate::ced::{ModelRepository, Node, NodeKey};
use crate::diagnostic::{Code, Diagnostic, Loc};

/// The global precedence graph assembled from every diagram.
pub type MergedGraph = PrecedenceGraph;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("{loc}: extern `{id}` has no full definition in any diagram")]
    DanglingExtern { id: String, loc: Loc },
}

/// Merge all diagrams, failing on the first extern that never resolves.
pub fn merge_views(repo: &ModelRepository) -> Result<MergedGraph, PartitionError> {
    let g = PrecedenceGraph::build(repo);
    if let Some(n) = g.unresolved().next() {
        return Err(PartitionError::DanglingExtern {
            id: n.key.to_string(),
            loc: n.loc.clone(),
        });
    }
    Ok(g)
}

/// Cross-diagram findings: missing precedent references (P01), conflicting
/// loopback annotations (P01), dangling externs (P02), unreferenced
/// successors and extern-only edges (P03).
pub fn check_partition(repo: &ModelRepository) -> Vec<Diagnostic> {
    check_partition_graph(repo, &PrecedenceGraph::build(repo))
}

/// True when `key`, or the event a variant belongs to, is a member of the
/// diagram.
fn present(diagram: &crate::ced::Diagram, key: &NodeKey) -> bool {
    if diagram.has_member(key) {
        return true;
    }
    match key.event_id().and_then(|id| id.split_once('.')) {
        Some((parent, _)) => diagram.has_member(&NodeKey::Event(parent.to_string())),
        None => false,
    }
}

pub fn check_partition_graph(repo: &ModelRepository, g: &MergedGraph) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for node in g.unresolved() {
        out.push(
            Diagnostic::new(
                Code::P02,
                &node.loc,
                format!("extern `{}` has no full definition in any diagram", node.key),
            )
            .with_element(node.key.to_string()),
        );
    }
    for d in &repo.diagrams {
        let mut missing_pre: BTreeSet<NodeKey> = BTreeSet::new();
        let mut missing_succ: BTreeSet<NodeKey> = BTreeSet::new();
        for m in &d.members {
            let id = match &m.node {
                Node::Event(id) | Node::Variant(id) => id,
                _ => continue,
            };
            let key = NodeKey::Event(id.clone());
            for p in g.direct_precedents(&key) {
                if !present(d, &p) && missing_pre.insert(p.clone()) {
                    out.push(
                        Diagnostic::new(
                            Code::P01,
                            &m.loc,
                            format!(
                                "direct precedent {p} of {id} is missing from diagram \"{}\"; add `extern \"{p}\"`",
                                d.name
                            ),
                        )
                        .with_element(id.clone()),
                    );
                }
            }
            for s in g.direct_successors(&key) {
                if !present(d, &s) && missing_succ.insert(s.clone()) {
                    out.push(
                        Diagnostic::new(
                            Code::P03,
                            &m.loc,
                            format!("direct successor {s} of {id} is not referenced in diagram \"{}\"", d.name),
                        )
                        .with_element(id.clone()),
                    );
                }
            }
        }
        for e in &d.edges {
            if matches!((&e.source, &e.target), (Node::Extern(_), Node::Extern(_))) {
                out.push(
                    Diagnostic::new(
                        Code::P03,
                        &e.loc,
                        format!(
                            "precedence {} -> {} links two out-of-scope events in diagram \"{}\"",
                            e.source.key(),
                            e.target.key(),
                            d.name
                        ),
                    )
                    .with_element(format!("{} -> {}", e.source.key(), e.target.key())),
                );
            }
        }
    }
    for e in g.edges() {
        let flags: BTreeSet<bool> = e.declared.values().copied().collect();
        if flags.len() > 1 {
            let (s, t) = (&g.nodes()[e.source].key, &g.nodes()[e.target].key);
            let loc = e
                .declared
                .keys()
                .nth(1)
                .and_then(|&di| {
                    repo.diagrams[di]
                        .edges
                        .iter()
                        .find(|x| &x.source.key() == s && &x.target.key() == t)
                        .map(|x| x.loc.clone())
                })
                .unwrap_or_else(|| e.loc.clone());
            out.push(
                Diagnostic::new(
                    Code::P01,
                    &loc,
                    format!("diagrams disagree on whether {s} -> {t} is a loopback"),
                )
                .with_element(format!("{s} -> {t}")),
            );
        }
    }
    out
}

/// Node keys (flagged when unresolved) and edge endpoints.
pub type GraphSignature = (BTreeSet<(NodeKey, bool)>, BTreeSet<(NodeKey, NodeKey)>);

/// Node and edge identity sets of a merged graph, for comparing partitions.
pub fn graph_signature(g: &MergedGraph) -> GraphSignature {
    let nodes = g
        .nodes()
        .iter()
        .map(|n| (n.key.clone(), n.kind == NodeKind::Unresolved))
        .collect();
    let edges = g
        .edges()
        .iter()
        .map(|e| (g.nodes()[e.source].key.clone(), g.nodes()[e.target].key.clone()))
        .collect();
    (nodes, edges)
}
