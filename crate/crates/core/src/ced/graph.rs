//! The merged precedence graph: depth, loopback classification and
//! topological ordering.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, VecDeque};

use super::{AndKind, CommunicativeEvent, ModelRepository, Node, NodeKey};
use crate::diagnostic::Loc;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("precedence graph still has a cycle after removing loopbacks (involving {})", .nodes.join(", "))]
    CyclicResidue { nodes: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Start,
    End,
    Event,
    /// Index of the parent node (event or enclosing variant).
    Variant(usize),
    And(Option<AndKind>),
    Or,
    /// Referenced as extern but never fully defined.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub key: NodeKey,
    pub kind: NodeKind,
    /// Full definition when there is one, else the first reference.
    pub loc: Loc,
    /// Diagrams holding the node as a member.
    pub diagrams: BTreeSet<usize>,
}

impl GraphNode {
    pub fn is_event_like(&self) -> bool {
        matches!(self.kind, NodeKind::Event | NodeKind::Variant(_) | NodeKind::Unresolved)
    }

    pub fn is_logical(&self) -> bool {
        matches!(self.kind, NodeKind::And(_) | NodeKind::Or)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphEdge {
    pub source: usize,
    pub target: usize,
    /// Diagrams asserting the edge.
    pub diagrams: BTreeSet<usize>,
    /// Explicit `[loopback]`/`[forward]` annotations by diagram.
    pub declared: BTreeMap<usize, bool>,
    /// First assertion.
    pub loc: Loc,
}

/// Union of all diagrams with externs resolved by identifier and duplicate
/// edges collapsed.
#[derive(Debug, Clone, Default)]
pub struct PrecedenceGraph {
    nodes: Vec<GraphNode>,
    edges: Vec<GraphEdge>,
    index: HashMap<NodeKey, usize>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

/// Shortest distance from the start of the process. `None` marks a node no
/// start reaches.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Depths {
    map: BTreeMap<NodeKey, Option<u32>>,
}

impl Depths {
    /// Depth of a node; `None` when unreachable or unknown. The start node
    /// itself is not part of the map.
    pub fn get(&self, key: &NodeKey) -> Option<u32> {
        self.map.get(key).copied().flatten()
    }

    pub fn contains(&self, key: &NodeKey) -> bool {
        self.map.contains_key(key)
    }

    pub fn unreachable(&self) -> Vec<&NodeKey> {
        self.map.iter().filter(|(_, d)| d.is_none()).map(|(k, _)| k).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeKey, Option<u32>)> {
        self.map.iter().map(|(k, d)| (k, *d))
    }
}

fn parent_id(variant_id: &str) -> Option<&str> {
    variant_id.rfind('.').map(|i| &variant_id[..i])
}

/// Ordering key for events: acronym, then numeric path.
fn event_sort_key(id: &str) -> (String, Vec<u32>) {
    match id.split_once(' ') {
        Some((acr, num)) => (
            acr.to_string(),
            num.split('.').map(|p| p.parse().unwrap_or(u32::MAX)).collect(),
        ),
        None => (id.to_string(), Vec::new()),
    }
}

impl PrecedenceGraph {
    /// Merge every diagram of the repository. Externs without a full
    /// definition stay in the graph as [`NodeKind::Unresolved`].
    pub fn build(repo: &ModelRepository) -> Self {
        let mut kinds: BTreeMap<NodeKey, (NodeKind, Loc, BTreeSet<usize>, bool)> = BTreeMap::new();
        for (di, d) in repo.diagrams.iter().enumerate() {
            for m in &d.members {
                let (kind, defining) = match &m.node {
                    Node::Event(_) => (NodeKind::Event, true),
                    // Parent index is filled in once all nodes are known.
                    Node::Variant(_) => (NodeKind::Variant(usize::MAX), true),
                    Node::And { kind, .. } => (NodeKind::And(*kind), true),
                    Node::Or(_) => (NodeKind::Or, true),
                    Node::Start => (NodeKind::Start, true),
                    Node::End => (NodeKind::End, true),
                    Node::Extern(_) => (NodeKind::Unresolved, false),
                };
                let entry = kinds
                    .entry(m.node.key())
                    .or_insert_with(|| (kind, m.loc.clone(), BTreeSet::new(), defining));
                entry.2.insert(di);
                let upgrade = defining && !entry.3;
                let refine_and = matches!((entry.0, kind), (NodeKind::And(None), NodeKind::And(Some(_))));
                if upgrade || refine_and {
                    entry.0 = kind;
                    if upgrade {
                        entry.1 = m.loc.clone();
                        entry.3 = true;
                    }
                }
            }
        }
        let mut g = PrecedenceGraph::default();
        for (key, (kind, loc, diagrams, _)) in kinds {
            g.index.insert(key.clone(), g.nodes.len());
            g.nodes.push(GraphNode {
                key,
                kind,
                loc,
                diagrams,
            });
        }
        let n = g.nodes.len();
        g.children = vec![Vec::new(); n];
        for i in 0..n {
            if let NodeKind::Variant(_) = g.nodes[i].kind {
                let parent = g.nodes[i]
                    .key
                    .event_id()
                    .and_then(parent_id)
                    .and_then(|p| g.index.get(&NodeKey::Event(p.to_string())).copied());
                match parent {
                    Some(p) => {
                        g.nodes[i].kind = NodeKind::Variant(p);
                        g.children[p].push(i);
                    }
                    None => g.nodes[i].kind = NodeKind::Event,
                }
            }
        }
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        g.out_edges = vec![Vec::new(); n];
        g.in_edges = vec![Vec::new(); n];
        for (di, d) in repo.diagrams.iter().enumerate() {
            for e in &d.edges {
                let s = g.index[&e.source.key()];
                let t = g.index[&e.target.key()];
                let ei = *edge_index.entry((s, t)).or_insert_with(|| {
                    g.edges.push(GraphEdge {
                        source: s,
                        target: t,
                        diagrams: BTreeSet::new(),
                        declared: BTreeMap::new(),
                        loc: e.loc.clone(),
                    });
                    g.out_edges[s].push(g.edges.len() - 1);
                    g.in_edges[t].push(g.edges.len() - 1);
                    g.edges.len() - 1
                });
                g.edges[ei].diagrams.insert(di);
                if let Some(flag) = e.declared_loopback {
                    g.edges[ei].declared.entry(di).or_insert(flag);
                }
            }
        }
        g
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn index_of(&self, key: &NodeKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn node(&self, key: &NodeKey) -> Option<&GraphNode> {
        self.index_of(key).map(|i| &self.nodes[i])
    }

    pub fn outgoing(&self, node: usize) -> impl Iterator<Item = &GraphEdge> + '_ {
        self.out_edges[node].iter().map(move |&e| &self.edges[e])
    }

    pub fn incoming(&self, node: usize) -> impl Iterator<Item = &GraphEdge> + '_ {
        self.in_edges[node].iter().map(move |&e| &self.edges[e])
    }

    /// Externs with no full definition anywhere.
    pub fn unresolved(&self) -> impl Iterator<Item = &GraphNode> + '_ {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Unresolved)
    }

    /// Breadth-first depth. The start node sits at depth -1 so its
    /// successors are at 0; events and unresolved externs without incoming
    /// precedence are implicitly connected to start and also sit at 0.
    /// A variant lies one step below its parent.
    fn raw_depths(&self) -> Vec<Option<i64>> {
        let mut depth: Vec<Option<i64>> = vec![None; self.nodes.len()];
        let mut queue = VecDeque::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.kind == NodeKind::Start {
                depth[i] = Some(-1);
                queue.push_back(i);
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            let root = matches!(n.kind, NodeKind::Event | NodeKind::Unresolved) && self.in_edges[i].is_empty();
            if root {
                depth[i] = Some(0);
            }
        }
        // Depth 0 roots go after the start node in the queue; start's own
        // successors also get 0, so the BFS layers stay consistent.
        for (i, d) in depth.iter().enumerate() {
            if *d == Some(0) {
                queue.push_back(i);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = depth[u].expect("queued nodes have a depth");
            let next = self.out_edges[u]
                .iter()
                .map(|&e| self.edges[e].target)
                .chain(self.children[u].iter().copied());
            for v in next {
                if depth[v].is_none() {
                    depth[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        depth
    }

    pub fn depths(&self) -> Depths {
        let raw = self.raw_depths();
        let map = self
            .nodes
            .iter()
            .zip(raw)
            .filter(|(n, _)| n.kind != NodeKind::Start)
            .map(|(n, d)| (n.key.clone(), d.map(|d| d as u32)))
            .collect();
        Depths { map }
    }

    /// Loopback flag per edge. An edge is a loopback when it lies on a cycle
    /// and its target is shallower than its source; unreachable nodes count
    /// as infinitely deep. Cycles whose nodes all share one depth have no
    /// such edge, so their equal-depth edges are flagged as well.
    ///
    /// Requiring the cycle keeps edges that merely join two branches of
    /// unequal length (as in a pure DAG) out of the set.
    pub fn classify(&self) -> Result<Vec<bool>, GraphError> {
        let raw = self.raw_depths();
        let d = |i: usize| raw[i].unwrap_or(i64::MAX);
        let all = vec![true; self.edges.len()];
        let comp = self.components(&all);
        let same = |comp: &[usize], e: &GraphEdge| comp[self.representative(e.source)] == comp[self.representative(e.target)];
        let mut flags: Vec<bool> = self
            .edges
            .iter()
            .map(|e| same(&comp, e) && d(e.target) < d(e.source))
            .collect();
        let kept: Vec<bool> = flags.iter().map(|f| !f).collect();
        let residual = self.components(&kept);
        for (flag, e) in flags.iter_mut().zip(&self.edges) {
            if !*flag && same(&residual, e) && d(e.target) == d(e.source) {
                *flag = true;
            }
        }
        self.check_acyclic(&flags)?;
        Ok(flags)
    }

    /// Strongly connected component of every node over the edges selected
    /// by `mask`, with variants collapsed into their top-level event
    /// (iterative Tarjan).
    fn components(&self, mask: &[bool]) -> Vec<usize> {
        let n = self.nodes.len();
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (e, _) in self.edges.iter().zip(mask).filter(|(_, m)| **m) {
            succ[self.representative(e.source)].push(self.representative(e.target));
        }
        const UNSEEN: usize = usize::MAX;
        let mut index = vec![UNSEEN; n];
        let mut low = vec![0; n];
        let mut on_stack = vec![false; n];
        let mut comp = vec![UNSEEN; n];
        let mut stack = Vec::new();
        let mut next = 0;
        let mut ncomp = 0;
        for root in 0..n {
            if index[root] != UNSEEN {
                continue;
            }
            let mut call: Vec<(usize, usize)> = vec![(root, 0)];
            index[root] = next;
            low[root] = next;
            next += 1;
            stack.push(root);
            on_stack[root] = true;
            while let Some(&mut (v, ref mut pos)) = call.last_mut() {
                if let Some(&w) = succ[v].get(*pos) {
                    *pos += 1;
                    if index[w] == UNSEEN {
                        index[w] = next;
                        low[w] = next;
                        next += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                    continue;
                }
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
        comp
    }

    fn check_acyclic(&self, loopback: &[bool]) -> Result<(), GraphError> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        for (e, lb) in self.edges.iter().zip(loopback) {
            if !lb {
                indeg[e.target] += 1;
            }
        }
        let mut stack: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(u) = stack.pop() {
            seen += 1;
            for &ei in &self.out_edges[u] {
                if !loopback[ei] {
                    let t = self.edges[ei].target;
                    indeg[t] -= 1;
                    if indeg[t] == 0 {
                        stack.push(t);
                    }
                }
            }
        }
        if seen == n {
            Ok(())
        } else {
            let nodes = (0..n).filter(|&i| indeg[i] > 0).map(|i| self.nodes[i].key.to_string()).collect();
            Err(GraphError::CyclicResidue { nodes })
        }
    }

    /// Top-level event of a node: variants collapse into their event.
    fn representative(&self, mut i: usize) -> usize {
        while let NodeKind::Variant(p) = self.nodes[i].kind {
            i = p;
        }
        i
    }

    /// Identifiers of fully defined top-level events in temporal order.
    /// Every non-loopback precedence, possibly through logical nodes, is
    /// respected; ties go to the lower (acronym, number).
    pub fn topological_order(&self, loopback: &[bool]) -> Result<Vec<String>, GraphError> {
        let n = self.nodes.len();
        let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        let mut indeg = vec![0usize; n];
        for (e, lb) in self.edges.iter().zip(loopback) {
            if *lb {
                continue;
            }
            let (s, t) = (self.representative(e.source), self.representative(e.target));
            if s != t && succ[s].insert(t) {
                indeg[t] += 1;
            }
        }
        let live: Vec<bool> = (0..n)
            .map(|i| !matches!(self.nodes[i].kind, NodeKind::Variant(_)))
            .collect();
        // Non-events are released first so they never hold an event back.
        let priority = |i: usize| {
            let node = &self.nodes[i];
            let is_event = matches!(node.kind, NodeKind::Event | NodeKind::Unresolved);
            let (acr, num) = match node.key.event_id() {
                Some(id) if is_event => event_sort_key(id),
                _ => (node.key.to_string(), Vec::new()),
            };
            Reverse((is_event, acr, num, i))
        };
        let mut heap: BinaryHeap<_> = (0..n).filter(|&i| live[i] && indeg[i] == 0).map(priority).collect();
        let mut order = Vec::new();
        let mut seen = 0;
        while let Some(Reverse((_, _, _, u))) = heap.pop() {
            seen += 1;
            if self.nodes[u].kind == NodeKind::Event {
                if let Some(id) = self.nodes[u].key.event_id() {
                    order.push(id.to_string());
                }
            }
            for &t in &succ[u] {
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    heap.push(priority(t));
                }
            }
        }
        if seen == live.iter().filter(|l| **l).count() {
            Ok(order)
        } else {
            let nodes = (0..n)
                .filter(|&i| live[i] && indeg[i] > 0)
                .map(|i| self.nodes[i].key.to_string())
                .collect();
            Err(GraphError::CyclicResidue { nodes })
        }
    }

    fn walk(&self, start: usize, forward: bool) -> Vec<NodeKey> {
        let mut found = BTreeSet::new();
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            let edges = if forward { &self.out_edges[u] } else { &self.in_edges[u] };
            for &ei in edges {
                let e = &self.edges[ei];
                let v = if forward { e.target } else { e.source };
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                let node = &self.nodes[v];
                if node.is_logical() {
                    stack.push(v);
                } else if node.is_event_like() {
                    found.insert(node.key.clone());
                }
            }
        }
        found.into_iter().collect()
    }

    /// Events reachable backwards crossing only logical nodes.
    pub fn direct_precedents(&self, key: &NodeKey) -> Vec<NodeKey> {
        self.index_of(key).map(|i| self.walk(i, false)).unwrap_or_default()
    }

    /// Events reachable forwards crossing only logical nodes.
    pub fn direct_successors(&self, key: &NodeKey) -> Vec<NodeKey> {
        self.index_of(key).map(|i| self.walk(i, true)).unwrap_or_default()
    }
}

/// Depth of every node of the merged graph except the start node.
pub fn event_depth(repo: &ModelRepository) -> Depths {
    PrecedenceGraph::build(repo).depths()
}

/// Set the `loopback` flag of every diagram edge from the merged graph.
pub fn classify_precedences(repo: &mut ModelRepository) -> Result<(), GraphError> {
    let g = PrecedenceGraph::build(repo);
    let flags = g.classify()?;
    let lookup: HashMap<(NodeKey, NodeKey), bool> = g
        .edges()
        .iter()
        .zip(flags)
        .map(|(e, f)| ((g.nodes[e.source].key.clone(), g.nodes[e.target].key.clone()), f))
        .collect();
    for d in &mut repo.diagrams {
        for e in &mut d.edges {
            e.loopback = lookup[&(e.source.key(), e.target.key())];
        }
    }
    Ok(())
}

/// Fully defined events in temporal order.
pub fn topological_order(repo: &ModelRepository) -> Result<Vec<&CommunicativeEvent>, GraphError> {
    let g = PrecedenceGraph::build(repo);
    let flags = g.classify()?;
    let ids = g.topological_order(&flags)?;
    let index: HashMap<&str, &CommunicativeEvent> = repo.events.iter().rev().map(|e| (e.id.as_str(), e)).collect();
    Ok(ids.iter().filter_map(|id| index.get(id.as_str()).copied()).collect())
}

pub fn direct_precedents(repo: &ModelRepository, event_id: &str) -> Vec<String> {
    let g = PrecedenceGraph::build(repo);
    g.direct_precedents(&NodeKey::Event(event_id.to_string()))
        .into_iter()
        .map(|k| k.to_string())
        .collect()
}

pub fn direct_successors(repo: &ModelRepository, event_id: &str) -> Vec<String> {
    let g = PrecedenceGraph::build(repo);
    g.direct_successors(&NodeKey::Event(event_id.to_string()))
        .into_iter()
        .map(|k| k.to_string())
        .collect()
}
