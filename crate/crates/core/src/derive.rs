//! Class-model derivation. Each communicative event contributes a view
//! built from its ingoing message structure; views are integrated in
//! temporal order into one class model.
//!
//! Mapping rules:
//! 1. every named aggregation becomes a class (a root iteration also yields
//!    a container class named after it);
//! 2. an iteration gives a composition, container one to member many;
//! 3. a field whose domain names a registered business object gives a
//!    reference association, many to one, and no attribute;
//! 4. other fields become attributes: `i` stored, `g` generated identifier,
//!    `d` derived (with its formula);
//! 5. each specialisation variant becomes a class composed one-to-one under
//!    the enclosing class. A nested plain aggregation is composed the same way.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::ced::graph::PrecedenceGraph;
use crate::ced::{CommunicativeEvent, GraphError, ModelRepository, NodeKey};
use crate::diagnostic::{Code, Diagnostic, Loc};
use crate::exec::Execution;
use crate::msl::{self, AcquisitionOp, DomainRef, FormulaText, MessageStructure, Substructure};

/// Domain names understood as plain data rather than business objects.
pub const BASIC_DOMAINS: &[&str] = &[
    "number",
    "integer",
    "real",
    "decimal",
    "text",
    "string",
    "date",
    "time",
    "datetime",
    "money",
    "boolean",
    "bool",
    "email",
    "phone",
    "url",
    "percentage",
    "image",
    "file",
];

/// `Client address` → `ClientAddress`, `ORDER` → `Order`.
pub fn normalise_name(name: &str) -> String {
    name.split_whitespace()
        .map(|w| {
            let mut cs = w.chars();
            match cs.next() {
                Some(c) => c.to_uppercase().chain(cs.flat_map(char::to_lowercase)).collect::<String>(),
                None => String::new(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Stored,
    GeneratedId,
    Derived,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub domain: DomainRef,
    pub kind: AttributeKind,
    pub formula: Option<FormulaText>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Class {
    pub name: String,
    pub attributes: Vec<Attribute>,
    pub origin_events: BTreeSet<String>,
}

impl Class {
    fn new(name: String, origin: &str) -> Self {
        Class {
            name,
            attributes: Vec::new(),
            origin_events: BTreeSet::from([origin.to_string()]),
        }
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Cardinality {
    One,
    Many,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AssociationKind {
    Composition,
    Reference,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Association {
    pub from: String,
    pub to: String,
    pub card_from: Cardinality,
    pub card_to: Cardinality,
    pub kind: AssociationKind,
    pub origin_event: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassModel {
    pub classes: BTreeMap<String, Class>,
    pub associations: Vec<Association>,
}

impl ClassModel {
    pub fn association(&self, from: &str, to: &str, kind: AssociationKind) -> Option<&Association> {
        self.associations
            .iter()
            .find(|a| a.from == from && a.to == to && a.kind == kind)
    }
}

/// A model together with the findings raised while building it.
#[derive(Debug, Clone, Default)]
pub struct Derivation {
    pub model: ClassModel,
    pub diagnostics: Vec<Diagnostic>,
}

struct ViewBuilder<'a> {
    event: &'a str,
    registry: &'a BTreeSet<String>,
    model: ClassModel,
    diagnostics: Vec<Diagnostic>,
}

impl ViewBuilder<'_> {
    fn class(&mut self, name: &str) -> String {
        let name = normalise_name(name);
        self.model
            .classes
            .entry(name.clone())
            .or_insert_with(|| Class::new(name.clone(), self.event));
        name
    }

    fn associate(&mut self, from: &str, to: &str, card_to: Cardinality, kind: AssociationKind) {
        let card_from = match kind {
            AssociationKind::Composition => Cardinality::One,
            AssociationKind::Reference => Cardinality::Many,
        };
        if self.model.association(from, to, kind).is_none() {
            self.model.associations.push(Association {
                from: from.to_string(),
                to: to.to_string(),
                card_from,
                card_to,
                kind,
                origin_event: self.event.to_string(),
            });
        }
    }

    /// Class for a complex substructure (named after desugaring).
    fn complex(&mut self, node: &Substructure) -> String {
        let class = self.class(node.name().unwrap_or("Anonymous"));
        match node {
            Substructure::Aggregation(a) => {
                for child in &a.children {
                    self.child(&class, child);
                }
            }
            Substructure::Iteration(it) => {
                let member = self.complex(&it.body);
                self.associate(&class, &member, Cardinality::Many, AssociationKind::Composition);
            }
            Substructure::Specialisation(s) => {
                for v in &s.variants {
                    let variant = self.complex(v);
                    self.associate(&class, &variant, Cardinality::One, AssociationKind::Composition);
                }
            }
            Substructure::Field(_) => unreachable!("fields are handled by child()"),
        }
        class
    }

    fn child(&mut self, class: &str, node: &Substructure) {
        match node {
            Substructure::Field(f) => {
                let target = f.props.domain.name().map(normalise_name);
                if let Some(target) = target.filter(|t| self.registry.contains(t)) {
                    self.associate(class, &target, Cardinality::One, AssociationKind::Reference);
                    return;
                }
                if let DomainRef::Basic(d) | DomainRef::BusinessObject(d) = &f.props.domain {
                    if !BASIC_DOMAINS.iter().any(|b| b.eq_ignore_ascii_case(d.trim())) {
                        self.diagnostics.push(
                            Diagnostic::new(
                                Code::D01,
                                &f.loc,
                                format!(
                                    "domain `{d}` of field `{}` is neither a basic domain nor a known business object",
                                    f.name
                                ),
                            )
                            .with_element(format!("{}/{}", self.event, f.name)),
                        );
                    }
                }
                let kind = match f.props.op {
                    AcquisitionOp::Input => AttributeKind::Stored,
                    AcquisitionOp::Generation => AttributeKind::GeneratedId,
                    AcquisitionOp::Derivation => AttributeKind::Derived,
                };
                let formula = match kind {
                    AttributeKind::Derived => f.props.derivation_formula.clone(),
                    _ => None,
                };
                let attr = Attribute {
                    name: normalise_name(&f.name),
                    domain: f.props.domain.clone(),
                    kind,
                    formula,
                    loc: f.loc.clone(),
                };
                let c = self.model.classes.get_mut(class).expect("class created before its children");
                if c.attribute(&attr.name).is_none() {
                    c.attributes.push(attr);
                }
            }
            Substructure::Iteration(it) => {
                let member = self.complex(&it.body);
                self.associate(class, &member, Cardinality::Many, AssociationKind::Composition);
            }
            Substructure::Aggregation(_) | Substructure::Specialisation(_) => {
                let inner = self.complex(node);
                self.associate(class, &inner, Cardinality::One, AssociationKind::Composition);
            }
        }
    }
}

/// View contributed by one message structure on behalf of `event_id`.
pub fn derive_structure_view(ms: &MessageStructure, event_id: &str, registry: &BTreeSet<String>) -> Derivation {
    let ms = msl::desugar(ms);
    let mut b = ViewBuilder {
        event: event_id,
        registry,
        model: ClassModel::default(),
        diagnostics: Vec::new(),
    };
    b.complex(&ms.root);
    for c in b.model.classes.values() {
        let ids: Vec<&Attribute> = c
            .attributes
            .iter()
            .filter(|a| a.kind == AttributeKind::GeneratedId)
            .collect();
        if ids.len() > 1 {
            b.diagnostics.push(
                Diagnostic::new(
                    Code::D03,
                    &ids[1].loc,
                    format!("class {} has {} generated identifier attributes", c.name, ids.len()),
                )
                .with_element(c.name.clone()),
            );
        }
    }
    Derivation {
        model: b.model,
        diagnostics: b.diagnostics,
    }
}

/// View of one event: the union of the views of its ingoing messages.
pub fn derive_view(event: &CommunicativeEvent, repo: &ModelRepository, registry: &BTreeSet<String>) -> Derivation {
    let views: Vec<Derivation> = event
        .ingoing_messages()
        .into_iter()
        .filter_map(|m| repo.structure(m))
        .map(|ms| derive_structure_view(ms, &event.id, registry))
        .collect();
    let mut diagnostics: Vec<Diagnostic> = views.iter().flat_map(|v| v.diagnostics.clone()).collect();
    let models: Vec<ClassModel> = views.into_iter().map(|v| v.model).collect();
    let merged = integrate(&models);
    diagnostics.extend(merged.diagnostics);
    Derivation {
        model: merged.model,
        diagnostics,
    }
}

/// Fold views in order. Classes merge by name, attributes by name (the
/// first domain wins and a conflict is reported), associations by
/// (from, to, kind).
pub fn integrate(views: &[ClassModel]) -> Derivation {
    let mut model = ClassModel::default();
    let mut diagnostics = Vec::new();
    for view in views {
        for (name, class) in &view.classes {
            let target = model.classes.entry(name.clone()).or_insert_with(|| Class {
                name: name.clone(),
                attributes: Vec::new(),
                origin_events: BTreeSet::new(),
            });
            target.origin_events.extend(class.origin_events.iter().cloned());
            for attr in &class.attributes {
                match target.attributes.iter().find(|a| a.name == attr.name) {
                    None => target.attributes.push(attr.clone()),
                    Some(existing) if existing.domain != attr.domain => diagnostics.push(
                        Diagnostic::new(
                            Code::D02,
                            &attr.loc,
                            format!(
                                "attribute {name}.{} has domain `{}` here but `{}` elsewhere; keeping `{}`",
                                attr.name, attr.domain, existing.domain, existing.domain
                            ),
                        )
                        .with_element(format!("{name}.{}", attr.name)),
                    ),
                    Some(_) => {}
                }
            }
        }
        for a in &view.associations {
            if model.association(&a.from, &a.to, a.kind).is_none() {
                model.associations.push(a.clone());
            }
        }
    }
    Derivation { model, diagnostics }
}

/// Events of depth 0: connected to the start node, explicitly or not.
fn initiatory_events<'a>(repo: &'a ModelRepository, g: &PrecedenceGraph) -> Vec<&'a CommunicativeEvent> {
    let depths = g.depths();
    repo.events
        .iter()
        .filter(|e| depths.get(&NodeKey::Event(e.id.clone())) == Some(0))
        .collect()
}

/// The business-object registry: declared objects plus every class created
/// by a globally initiatory event.
pub fn business_object_registry(repo: &ModelRepository) -> BTreeSet<String> {
    let declared = repo.business_objects.clone();
    let g = PrecedenceGraph::build(repo);
    let mut registry = declared.clone();
    for e in initiatory_events(repo, &g) {
        registry.extend(derive_view(e, repo, &declared).model.classes.into_keys());
    }
    registry
}

pub fn derive_class_model(repo: &ModelRepository) -> Result<Derivation, GraphError> {
    derive_class_model_with(repo, Execution::default())
}

/// Derive every event's view (possibly in parallel) and integrate them in
/// temporal order.
pub fn derive_class_model_with(repo: &ModelRepository, exec: Execution) -> Result<Derivation, GraphError> {
    let ordered = crate::ced::topological_order(repo)?;
    let registry = business_object_registry(repo);
    let views = exec.map(&ordered, |e| derive_view(e, repo, &registry));
    let mut diagnostics: Vec<Diagnostic> = Vec::new();
    let mut models = Vec::with_capacity(views.len());
    for v in views {
        diagnostics.extend(v.diagnostics);
        models.push(v.model);
    }
    let merged = integrate(&models);
    diagnostics.extend(merged.diagnostics);
    diagnostics.sort();
    diagnostics.dedup();
    Ok(Derivation {
        model: merged.model,
        diagnostics,
    })
}

fn card(c: Cardinality) -> &'static str {
    match c {
        Cardinality::One => "1",
        Cardinality::Many => "*",
    }
}

fn kind_str(k: AttributeKind) -> &'static str {
    match k {
        AttributeKind::Stored => "stored",
        AttributeKind::GeneratedId => "generated_id",
        AttributeKind::Derived => "derived",
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('"', "\\\"")
        .replace('{', "\\{")
        .replace('}', "\\}")
        .replace('|', "\\|")
        .replace('<', "\\<")
        .replace('>', "\\>")
}

/// Graphviz rendering: classes as records, compositions with a filled
/// diamond at the container, references as open arrows.
pub fn to_dot(model: &ClassModel) -> String {
    let mut out = String::from("digraph classes {\n  rankdir=TB;\n  node [shape=record, fontname=\"Helvetica\"];\n");
    for c in model.classes.values() {
        let attrs: Vec<String> = c
            .attributes
            .iter()
            .map(|a| {
                let marker = match a.kind {
                    AttributeKind::Stored => "",
                    AttributeKind::GeneratedId => " «id»",
                    AttributeKind::Derived => " /derived",
                };
                dot_escape(&format!("{}: {}{}", a.name, a.domain, marker))
            })
            .collect();
        let _ = writeln!(
            out,
            "  \"{}\" [label=\"{{{}|{}\\l}}\"];",
            c.name,
            dot_escape(&c.name),
            attrs.join("\\l")
        );
    }
    for a in &model.associations {
        let style = match a.kind {
            AssociationKind::Composition => "dir=back, arrowtail=diamond",
            AssociationKind::Reference => "arrowhead=vee",
        };
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [{style}, taillabel=\"{}\", headlabel=\"{}\"];",
            a.from,
            a.to,
            card(a.card_from),
            card(a.card_to)
        );
    }
    out.push_str("}\n");
    out
}

#[derive(Serialize)]
struct JsonAttribute<'a> {
    name: &'a str,
    domain: String,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    formula: Option<&'a str>,
}

#[derive(Serialize)]
struct JsonClass<'a> {
    name: &'a str,
    attributes: Vec<JsonAttribute<'a>>,
    origin_events: &'a BTreeSet<String>,
}

#[derive(Serialize)]
struct JsonModel<'a> {
    classes: Vec<JsonClass<'a>>,
    associations: &'a [Association],
}

pub fn to_json(model: &ClassModel) -> String {
    let doc = JsonModel {
        classes: model
            .classes
            .values()
            .map(|c| JsonClass {
                name: &c.name,
                attributes: c
                    .attributes
                    .iter()
                    .map(|a| JsonAttribute {
                        name: &a.name,
                        domain: a.domain.to_string(),
                        kind: kind_str(a.kind),
                        formula: a.formula.as_ref().map(FormulaText::text),
                    })
                    .collect(),
                origin_events: &c.origin_events,
            })
            .collect(),
        associations: &model.associations,
    };
    serde_json::to_string_pretty(&doc).expect("class model serialises") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msl::parse_message_structure;

    const ORDER: &str = "ORDER = < Order number : g : number + Request date : i : date + Payment type : i : text \
        + Client : i : Client + DESTINATIONS = { DESTINATION = < Address : i : Client address \
        + Person in charge : i : text + LINES = { LINE = < Product : i : Product + Price : i : money \
        + Quantity : i : number > } > } >";

    fn registry(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn names() {
        assert_eq!(normalise_name("Client address"), "ClientAddress");
        assert_eq!(normalise_name("ORDER"), "Order");
        assert_eq!(normalise_name("Order  number"), "OrderNumber");
    }

    #[test]
    fn order_view() {
        let ms = parse_message_structure(ORDER).unwrap();
        let v = derive_structure_view(&ms, "SALE 1", &registry(&["Client", "ClientAddress", "Product"]));
        assert!(v.diagnostics.is_empty(), "{:?}", v.diagnostics);
        let names: Vec<&str> = v.model.classes.keys().map(String::as_str).collect();
        assert_eq!(names, ["Destination", "Line", "Order"]);
        use AssociationKind::*;
        use Cardinality::*;
        let expect = [
            ("Order", "Client", Reference, Many, One),
            ("Order", "Destination", Composition, One, Many),
            ("Destination", "ClientAddress", Reference, Many, One),
            ("Destination", "Line", Composition, One, Many),
            ("Line", "Product", Reference, Many, One),
        ];
        assert_eq!(v.model.associations.len(), expect.len());
        for (from, to, kind, cf, ct) in expect {
            let a = v.model.association(from, to, kind).unwrap();
            assert_eq!((a.card_from, a.card_to), (cf, ct), "{from}->{to}");
        }
        let order = &v.model.classes["Order"];
        assert_eq!(order.attribute("OrderNumber").unwrap().kind, AttributeKind::GeneratedId);
        assert!(order.attribute("Client").is_none());
    }

    #[test]
    fn unknown_domain_is_reported_and_kept() {
        let ms = parse_message_structure(ORDER).unwrap();
        let v = derive_structure_view(&ms, "SALE 1", &registry(&["Client", "Product"]));
        assert_eq!(v.diagnostics.len(), 1);
        assert_eq!(v.diagnostics[0].code, Code::D01);
        let dest = &v.model.classes["Destination"];
        assert_eq!(dest.attribute("Address").unwrap().kind, AttributeKind::Stored);
    }

    #[test]
    fn trivial_and_specialised() {
        let v = derive_structure_view(&parse_message_structure("A = < x:i:text >").unwrap(), "E 1", &BTreeSet::new());
        assert_eq!(v.model.classes.len(), 1);
        assert_eq!(v.model.classes["A"].attributes[0].kind, AttributeKind::Stored);

        let src = "PROJECT = < Title:i:text + TYPE = [ THEORY = < Subject:i:text > | PRACTICE = < Functionality:i:text > ] >";
        let v = derive_structure_view(&parse_message_structure(src).unwrap(), "E 1", &BTreeSet::new());
        for variant in ["Theory", "Practice"] {
            let a = v.model.association("Type", variant, AssociationKind::Composition).unwrap();
            assert_eq!((a.card_from, a.card_to), (Cardinality::One, Cardinality::One));
        }
    }

    #[test]
    fn integration_conflicts_and_idempotence() {
        let a = derive_structure_view(
            &parse_message_structure("CLIENT = < Telephone:i:phone >").unwrap(),
            "CLIE 1",
            &BTreeSet::new(),
        );
        let b = derive_structure_view(
            &parse_message_structure("CLIENT = < Telephone:i:text >").unwrap(),
            "CLIE 2",
            &BTreeSet::new(),
        );
        let once = integrate(std::slice::from_ref(&a.model));
        assert_eq!(integrate(&[a.model.clone(), a.model.clone()]).model, once.model);
        let both = integrate(&[a.model.clone(), b.model]);
        assert_eq!(both.diagnostics.len(), 1);
        assert_eq!(both.diagnostics[0].code, Code::D02);
        let tel = both.model.classes["Client"].attribute("Telephone").unwrap();
        assert_eq!(tel.domain, DomainRef::Basic("phone".into()));
    }

    #[test]
    fn exports() {
        let ms = parse_message_structure(ORDER).unwrap();
        let v = derive_structure_view(&ms, "SALE 1", &registry(&["Client", "ClientAddress", "Product"]));
        let dot = to_dot(&v.model);
        assert!(dot.contains("\"Order\" -> \"Destination\" [dir=back, arrowtail=diamond"));
        let json: serde_json::Value = serde_json::from_str(&to_json(&v.model)).unwrap();
        assert_eq!(json["classes"].as_array().unwrap().len(), 3);
        assert_eq!(json["associations"][0]["kind"], "reference");
    }
}
