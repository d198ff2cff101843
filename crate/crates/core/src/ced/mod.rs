//! Communicative Event Diagrams: processes, events, roles, interactions and
//! the precedence graph, plus the repository that holds a whole model.

pub mod graph;
mod ident;
mod lexer;
mod parser;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::diagnostic::Loc;
use crate::msl::{FormulaText, MessageStructure};
use crate::templates::EventSpec;

pub use graph::{
    classify_precedences, direct_precedents, direct_successors, event_depth, topological_order, Depths, GraphError,
    PrecedenceGraph,
};
pub use ident::{assign_identifiers, event_id, variant_id};
pub use parser::{parse_model, parse_model_with, ModelError, SourceFile};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Process {
    pub acronym: String,
    pub name: String,
    pub loc: Loc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RoleKind {
    Primary,
    Receiver,
    Interface,
    /// Only recorded in event specification templates.
    Support,
}

impl RoleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RoleKind::Primary => "primary",
            RoleKind::Receiver => "receiver",
            RoleKind::Interface => "interface",
            RoleKind::Support => "support",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleBinding {
    pub role_name: String,
    pub kind: RoleKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Ingoing,
    Outgoing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunicativeInteraction {
    pub direction: Direction,
    pub name: String,
    /// Message structure conveyed (ingoing only).
    pub message_ref: Option<String>,
    /// Sender of an ingoing interaction, receiver of an outgoing one.
    pub counterpart_role: String,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventVariant {
    pub number: u32,
    pub name: String,
    pub id: String,
    pub condition: Option<FormulaText>,
    pub roles: Vec<RoleBinding>,
    pub interactions: Vec<CommunicativeInteraction>,
    pub variants: Vec<EventVariant>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunicativeEvent {
    pub process: String,
    pub number: u32,
    pub name: String,
    pub id: String,
    pub roles: Vec<RoleBinding>,
    pub interactions: Vec<CommunicativeInteraction>,
    /// Empty for a simple (non-specialised) event.
    pub variants: Vec<EventVariant>,
    pub goal: Option<String>,
    pub precondition_text: Option<String>,
    /// Index of the diagram holding the full definition.
    pub diagram: usize,
    pub loc: Loc,
}

impl CommunicativeEvent {
    pub fn is_specialised(&self) -> bool {
        !self.variants.is_empty()
    }

    /// Role bindings of the event and all of its variants.
    pub fn all_roles(&self) -> Vec<&RoleBinding> {
        let mut out: Vec<&RoleBinding> = self.roles.iter().collect();
        for_each_variant(&self.variants, &mut |v| out.extend(v.roles.iter()));
        out
    }

    /// Interactions of the event and all of its variants.
    pub fn all_interactions(&self) -> Vec<&CommunicativeInteraction> {
        let mut out: Vec<&CommunicativeInteraction> = self.interactions.iter().collect();
        for_each_variant(&self.variants, &mut |v| out.extend(v.interactions.iter()));
        out
    }

    pub fn primary_roles(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for r in self.all_roles() {
            if r.kind == RoleKind::Primary && !names.contains(&r.role_name.as_str()) {
                names.push(&r.role_name);
            }
        }
        names
    }

    pub fn ingoing_messages(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for i in self.all_interactions() {
            if let (Direction::Ingoing, Some(m)) = (i.direction, i.message_ref.as_deref()) {
                if !names.contains(&m) {
                    names.push(m);
                }
            }
        }
        names
    }
}

/// Depth-first visit of nested variants.
pub fn for_each_variant<'a>(variants: &'a [EventVariant], f: &mut dyn FnMut(&'a EventVariant)) {
    for v in variants {
        f(v);
        for_each_variant(&v.variants, f);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AndKind {
    Fork,
    Join,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Event(String),
    Variant(String),
    And { id: String, kind: Option<AndKind> },
    Or(String),
    Start,
    End,
    /// Reference to an event fully defined in another diagram.
    Extern(String),
}

impl Node {
    /// Identity of the node in the merged graph; externs become the event
    /// they refer to.
    pub fn key(&self) -> NodeKey {
        match self {
            Node::Event(id) | Node::Variant(id) | Node::Extern(id) => NodeKey::Event(id.clone()),
            Node::And { id, .. } | Node::Or(id) => NodeKey::Logical(id.clone()),
            Node::Start => NodeKey::Start,
            Node::End => NodeKey::End,
        }
    }
}

/// Node identity shared by all diagrams.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKey {
    Start,
    End,
    Event(String),
    Logical(String),
}

impl NodeKey {
    pub fn event_id(&self) -> Option<&str> {
        match self {
            NodeKey::Event(id) => Some(id),
            _ => None,
        }
    }
}

impl fmt::Display for NodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKey::Start => f.write_str("start"),
            NodeKey::End => f.write_str("end"),
            NodeKey::Event(id) | NodeKey::Logical(id) => f.write_str(id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Member {
    pub node: Node,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrecedenceRelation {
    pub source: Node,
    pub target: Node,
    /// Set by [`classify_precedences`].
    pub loopback: bool,
    /// Explicit `[loopback]` / `[forward]` annotation, a rendering hint.
    pub declared_loopback: Option<bool>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagram {
    pub name: String,
    pub members: Vec<Member>,
    pub edges: Vec<PrecedenceRelation>,
    pub loc: Loc,
}

impl Diagram {
    pub fn has_member(&self, key: &NodeKey) -> bool {
        self.members.iter().any(|m| &m.node.key() == key)
    }

    /// True when the event or variant is fully defined here.
    pub fn defines(&self, id: &str) -> bool {
        self.members
            .iter()
            .any(|m| matches!(&m.node, Node::Event(x) | Node::Variant(x) if x == id))
    }
}

/// Where an event or variant identifier points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElementRef {
    Event(usize),
    /// Event index plus the child index at each nesting level.
    Variant(usize, Vec<usize>),
}

#[derive(Debug, Clone, Default)]
pub struct ModelRepository {
    pub processes: BTreeMap<String, Process>,
    pub events: Vec<CommunicativeEvent>,
    pub diagrams: Vec<Diagram>,
    pub message_structures: Vec<MessageStructure>,
    /// Declared business-object class names, normalised.
    pub business_objects: BTreeSet<String>,
    pub templates: Vec<EventSpec>,
    /// Template identifier → diagram identifier.
    pub aliases: BTreeMap<String, String>,
}

impl ModelRepository {
    /// First definition of every event and variant id.
    pub fn element_index(&self) -> HashMap<String, ElementRef> {
        fn walk(variants: &[EventVariant], ev: usize, path: &mut Vec<usize>, out: &mut HashMap<String, ElementRef>) {
            for (i, v) in variants.iter().enumerate() {
                path.push(i);
                out.entry(v.id.clone()).or_insert_with(|| ElementRef::Variant(ev, path.clone()));
                walk(&v.variants, ev, path, out);
                path.pop();
            }
        }
        let mut out = HashMap::new();
        for (i, e) in self.events.iter().enumerate() {
            out.entry(e.id.clone()).or_insert(ElementRef::Event(i));
            walk(&e.variants, i, &mut Vec::new(), &mut out);
        }
        out
    }

    pub fn event(&self, id: &str) -> Option<&CommunicativeEvent> {
        self.events.iter().find(|e| e.id == id)
    }

    /// Variant by id together with its top-level event.
    pub fn variant(&self, id: &str) -> Option<(&CommunicativeEvent, &EventVariant)> {
        fn find<'a>(vs: &'a [EventVariant], id: &str) -> Option<&'a EventVariant> {
            vs.iter().find_map(|v| if v.id == id { Some(v) } else { find(&v.variants, id) })
        }
        self.events.iter().find_map(|e| find(&e.variants, id).map(|v| (e, v)))
    }

    pub fn structure(&self, name: &str) -> Option<&MessageStructure> {
        self.message_structures.iter().find(|m| m.name == name)
    }

    /// Template resolution through the alias table.
    pub fn resolve_alias<'a>(&'a self, id: &'a str) -> &'a str {
        self.aliases.get(id).map(String::as_str).unwrap_or(id)
    }

    pub fn template_for(&self, event_id: &str) -> Option<&EventSpec> {
        self.templates
            .iter()
            .find(|t| self.resolve_alias(&t.header.event_id) == event_id)
    }

    /// Sorted, de-duplicated event ids (top level only).
    pub fn event_ids(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.events.iter().map(|e| e.id.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }
}
