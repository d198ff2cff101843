//! Invariants checked over generated inputs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use comm_analysis::ced::graph::PrecedenceGraph;
use comm_analysis::ced::{event_id, parse_model, variant_id, NodeKey, SourceFile};
use comm_analysis::derive::{
    integrate, Association, AssociationKind, Attribute, AttributeKind, Cardinality, Class, ClassModel,
};
use comm_analysis::diagnostic::Loc;
use comm_analysis::msl::{desugar, parse_message_structure, serialize, DomainRef, FormulaText};
use comm_analysis::templates::{parse_template, write_template, EventSpec, FieldDescription};
use proptest::prelude::*;

// ---------------------------------------------------------------- MSL

#[derive(Debug, Clone)]
enum Tree {
    Field { op: usize, domain: usize, example: bool },
    Agg { named: bool, children: Vec<Tree> },
    Iter { named: bool, items: Vec<Tree> },
    Spec { named: bool, variants: Vec<Vec<Tree>> },
}

fn tree() -> impl Strategy<Value = Tree> {
    let leaf = (0..3usize, 0..4usize, any::<bool>()).prop_map(|(op, domain, example)| Tree::Field { op, domain, example });
    leaf.prop_recursive(4, 24, 4, |inner| {
        prop_oneof![
            (any::<bool>(), prop::collection::vec(inner.clone(), 1..4))
                .prop_map(|(named, children)| Tree::Agg { named, children }),
            (any::<bool>(), prop::collection::vec(inner.clone(), 1..3))
                .prop_map(|(named, items)| Tree::Iter { named, items }),
            (any::<bool>(), prop::collection::vec(prop::collection::vec(inner, 1..3), 1..3))
                .prop_map(|(named, variants)| Tree::Spec { named, variants }),
        ]
    })
}

#[derive(Default)]
struct Writer {
    text: String,
    fields: Vec<String>,
    complex: usize,
}

impl Writer {
    fn list(&mut self, items: &[Tree]) {
        for (i, t) in items.iter().enumerate() {
            if i > 0 {
                self.text.push_str(" + ");
            }
            self.item(t);
        }
    }

    fn label(&mut self, named: bool) {
        self.complex += 1;
        if named {
            self.text.push_str(&format!("PART {} = ", self.complex));
        }
    }

    fn item(&mut self, t: &Tree) {
        match t {
            Tree::Field { op, domain, example } => {
                let name = format!("Item {}", self.fields.len() + 1);
                let op = ["i", "g", "d"][*op];
                let domain = ["text", "number", "date", "[low|high]"][*domain];
                self.text.push_str(&format!("{name} : {op} : {domain}"));
                if *example {
                    self.text.push_str(" \"e.g. 42\"");
                }
                self.fields.push(name);
            }
            Tree::Agg { named, children } => {
                self.label(*named);
                self.text.push_str("< ");
                self.list(children);
                self.text.push_str(" >");
            }
            Tree::Iter { named, items } => {
                self.label(*named);
                self.text.push_str("{ ");
                self.list(items);
                self.text.push_str(" }");
            }
            Tree::Spec { named, variants } => {
                self.label(*named);
                self.text.push_str("[ ");
                for (i, v) in variants.iter().enumerate() {
                    if i > 0 {
                        self.text.push_str(" | ");
                    }
                    self.list(v);
                }
                self.text.push_str(" ]");
            }
        }
    }
}

/// Text of a structure whose root is an aggregation or iteration, plus a
/// few `field` blocks and the field names.
fn structure_text(root: &[Tree], iterate: bool, props: &[(usize, usize)]) -> (String, Vec<String>) {
    let mut w = Writer::default();
    w.text.push_str("MESSAGE = ");
    w.item(&if iterate {
        Tree::Iter { named: false, items: root.to_vec() }
    } else {
        Tree::Agg { named: false, children: root.to_vec() }
    });
    w.text.push('\n');
    let n = w.fields.len();
    let mut described = BTreeSet::new();
    for &(f, g) in props {
        let (f, g) = (f % n, g % n);
        if described.insert(f) {
            w.text.push_str(&format!(
                "field {} {{ description=\"about {f}\" mandatory=true formula=\":{} + 1\" }}\n",
                w.fields[f],
                w.fields[g].replace(' ', "_")
            ));
        }
    }
    (w.text, w.fields)
}

fn msl_input() -> impl Strategy<Value = (String, Vec<String>)> {
    (
        prop::collection::vec(tree(), 1..4),
        any::<bool>(),
        prop::collection::vec((0..64usize, 0..64usize), 0..4),
    )
        .prop_map(|(root, iterate, props)| structure_text(&root, iterate, &props))
}

proptest! {
    #[test]
    fn msl_serialization_round_trips((text, fields) in msl_input()) {
        let ms = parse_message_structure(&text).unwrap();
        prop_assert_eq!(ms.field_names(), fields.iter().map(String::as_str).collect::<Vec<_>>());
        let printed = serialize(&ms);
        let again = parse_message_structure(&printed)
            .unwrap_or_else(|e| panic!("{e}\n{printed}"));
        prop_assert!(ms.same_structure(&again), "{}\n{}", text, printed);
        prop_assert_eq!(serialize(&again), printed);
    }

    #[test]
    fn desugaring_is_idempotent((text, _) in msl_input()) {
        let once = desugar(&parse_message_structure(&text).unwrap());
        prop_assert_eq!(desugar(&once), once.clone());
        let reparsed = parse_message_structure(&serialize(&once)).unwrap();
        prop_assert!(reparsed.same_structure(&once));
    }

    #[test]
    fn dropping_a_bracket_is_rejected((text, _) in msl_input(), pick in any::<prop::sample::Index>()) {
        let structure = text.lines().next().unwrap();
        let brackets: Vec<usize> = structure
            .char_indices()
            .filter(|(_, c)| "<>{}[]".contains(*c))
            .map(|(i, _)| i)
            .collect();
        let at = brackets[pick.index(brackets.len())];
        let mut broken = structure.to_string();
        broken.remove(at);
        prop_assert!(parse_message_structure(&broken).is_err(), "accepted {}", broken);
    }

    #[test]
    fn formula_references_are_identifiers(text in "[ -~]{0,40}") {
        let re = regex::Regex::new(r":([A-Za-z_][A-Za-z0-9_]*)").unwrap();
        let mut expected: Vec<String> = Vec::new();
        for c in re.captures_iter(&text) {
            let name = c[1].to_string();
            if !expected.contains(&name) {
                expected.push(name);
            }
        }
        let formula = FormulaText::new(text.clone());
        prop_assert_eq!(formula.field_refs(), expected.as_slice());
    }
}

// -------------------------------------------------------------- graphs

/// A process of `n` events where every event after the first has a
/// forward precedent, plus arbitrary extra edges in either direction.
fn graph_source() -> impl Strategy<Value = String> {
    (2..16usize)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(any::<prop::sample::Index>(), n - 1),
                prop::collection::vec((1..=n, 1..=n), 0..n * 2),
            )
        })
        .prop_map(|(n, parents, extra)| {
            let mut edges = BTreeSet::new();
            for (j, p) in (2..=n).zip(parents) {
                edges.insert((p.index(j - 1) + 1, j));
            }
            edges.extend(extra.into_iter().filter(|(a, b)| a != b));
            let mut src = String::from("process A {\n");
            for k in 1..=n {
                src.push_str(&format!("  event {k} \"Clerk registers item\" {{}}\n"));
            }
            src.push_str("  start -> 1\n");
            for (a, b) in edges {
                src.push_str(&format!("  {a} -> {b}\n"));
            }
            src.push_str("}\n");
            src
        })
}

fn acyclic(nodes: usize, edges: &[(usize, usize)]) -> bool {
    let mut indeg = vec![0; nodes];
    for &(_, t) in edges {
        indeg[t] += 1;
    }
    let mut ready: Vec<usize> = (0..nodes).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = ready.pop() {
        seen += 1;
        for &(s, t) in edges {
            if s == v {
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    ready.push(t);
                }
            }
        }
    }
    seen == nodes
}

proptest! {
    #[test]
    fn loopbacks_leave_an_acyclic_residue(src in graph_source()) {
        let repo = parse_model(&[SourceFile::new("g.ced", src)]).unwrap();
        let g = PrecedenceGraph::build(&repo);
        let flags = g.classify().unwrap();
        let depths = g.depths();
        let depth = |i: usize| depths.get(&g.nodes()[i].key).unwrap();
        let mut residue = Vec::new();
        for (e, lb) in g.edges().iter().zip(&flags) {
            if *lb {
                prop_assert!(depth(e.target) <= depth(e.source));
            } else {
                residue.push((e.source, e.target));
            }
        }
        prop_assert!(acyclic(g.nodes().len(), &residue));

        let order = g.topological_order(&flags).unwrap();
        let pos: HashMap<&str, usize> = order.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        for &(s, t) in &residue {
            if let (NodeKey::Event(a), NodeKey::Event(b)) = (&g.nodes()[s].key, &g.nodes()[t].key) {
                prop_assert!(pos[a.as_str()] < pos[b.as_str()], "{} before {}", a, b);
            }
        }
    }

    #[test]
    fn acyclic_graphs_have_no_loopbacks(n in 2..20usize, edges in prop::collection::vec((1..20usize, 1..20usize), 0..40)) {
        let mut src = String::from("process A {\n");
        for k in 1..=n {
            src.push_str(&format!("  event {k} \"Clerk registers item\" {{}}\n"));
        }
        for (a, b) in edges.into_iter().map(|(a, b)| (a.min(b), a.max(b))).filter(|(a, b)| a != b && *b <= n) {
            src.push_str(&format!("  {a} -> {b}\n"));
        }
        src.push_str("}\n");
        let repo = parse_model(&[SourceFile::new("g.ced", src)]).unwrap();
        let flags = PrecedenceGraph::build(&repo).classify().unwrap();
        prop_assert!(flags.iter().all(|f| !f));
    }

    #[test]
    fn identifiers_compose(acr in "[A-Z]{4}", n in 1..500u32, path in prop::collection::vec(1..9u32, 0..3)) {
        let mut id = event_id(&acr, n);
        prop_assert_eq!(&id, &format!("{acr} {n}"));
        for m in &path {
            let parent = id.clone();
            id = variant_id(&parent, *m);
            let prefix = format!("{parent}.");
            prop_assert!(id.starts_with(&prefix));
        }
        let re = regex::Regex::new(r"^[A-Z]{4} [1-9][0-9]*(\.[1-9][0-9]*)*$").unwrap();
        prop_assert!(re.is_match(&id));
        prop_assert_eq!(id.matches('.').count(), path.len());
    }
}

// ----------------------------------------------------------- templates

fn words() -> impl Strategy<Value = String> {
    "[A-Za-z][A-Za-z ,.]{0,20}[a-z]"
}

fn event_spec() -> impl Strategy<Value = EventSpec> {
    (
        (words(), words(), words(), prop::option::of("[a-z]{1,8}/[a-z]{1,8}\\.png")),
        (words(), prop::collection::vec(words(), 0..3), words()),
        (prop::option::of("[A-Z]{3,8}"), prop::collection::vec(("[A-Z][a-z]{1,8}", words()), 0..4)),
        (prop::collection::vec(words(), 0..3), prop::collection::vec(words(), 0..3)),
    )
        .prop_map(|((name, description, goal, diagram), (primary, support, medium), (structure, fields), (constraints, treatments))| {
            let mut spec = EventSpec::new("SALE 1", Loc::default());
            spec.header.name = name;
            spec.header.description = description;
            spec.header.goal = goal;
            spec.header.explanatory_diagram = diagram;
            spec.contact.primary_actor = primary;
            spec.contact.support_actors = support;
            spec.contact.medium = medium;
            spec.message.structure_ref = structure;
            spec.message.field_descriptions = fields
                .into_iter()
                .map(|(field, text)| FieldDescription { field, text, loc: Loc::default() })
                .collect();
            spec.message.structural_constraints = constraints;
            spec.reaction.treatments = treatments;
            spec
        })
}

fn clear_locs(mut spec: EventSpec) -> EventSpec {
    spec.loc = Loc::default();
    for f in &mut spec.message.field_descriptions {
        f.loc = Loc::default();
    }
    spec
}

proptest! {
    #[test]
    fn templates_round_trip(spec in event_spec()) {
        let text = write_template(&spec);
        let parsed = parse_template(&text, &Arc::from("t.cet")).unwrap_or_else(|e| panic!("{e}\n{text}"));
        prop_assert_eq!(clear_locs(parsed), spec);
    }
}

// --------------------------------------------------------- integration

const CLASSES: [&str; 5] = ["Order", "Client", "Product", "Line", "Supplier"];
const ATTRS: [&str; 6] = ["Code", "Name", "Date", "Amount", "Address", "Phone"];

fn domain_of(attr: usize) -> DomainRef {
    DomainRef::Basic(["text", "number", "date"][attr % 3].into())
}

/// Views that agree wherever they overlap: an attribute's domain and an
/// association's cardinalities are fixed by their names.
fn view() -> impl Strategy<Value = ClassModel> {
    (
        prop::collection::btree_map(0..CLASSES.len(), prop::collection::btree_set(0..ATTRS.len(), 0..4), 1..4),
        prop::collection::vec((0..CLASSES.len(), 0..CLASSES.len(), any::<bool>()), 0..4),
        "[A-Z]{4} [1-9]",
    )
        .prop_map(|(classes, assocs, origin)| {
            let mut model = ClassModel::default();
            for (c, attrs) in classes {
                let name = CLASSES[c].to_string();
                let class = Class {
                    name: name.clone(),
                    attributes: attrs
                        .into_iter()
                        .map(|a| Attribute {
                            name: ATTRS[a].into(),
                            domain: domain_of(a),
                            kind: AttributeKind::Stored,
                            formula: None,
                            loc: Loc::default(),
                        })
                        .collect(),
                    origin_events: BTreeSet::from([origin.clone()]),
                };
                model.classes.insert(name, class);
            }
            for (f, t, composition) in assocs {
                let kind = if composition { AssociationKind::Composition } else { AssociationKind::Reference };
                if model.association(CLASSES[f], CLASSES[t], kind).is_none() {
                    model.associations.push(Association {
                        from: CLASSES[f].into(),
                        to: CLASSES[t].into(),
                        card_from: if (f + t) % 2 == 0 { Cardinality::One } else { Cardinality::Many },
                        card_to: if composition { Cardinality::Many } else { Cardinality::One },
                        kind,
                        origin_event: origin.clone(),
                    });
                }
            }
            model
        })
}

type Shape = (
    BTreeMap<String, (BTreeSet<(String, String)>, BTreeSet<String>)>,
    BTreeSet<(String, String, Cardinality, Cardinality, AssociationKind)>,
);

fn shape(model: &ClassModel) -> Shape {
    let classes = model
        .classes
        .iter()
        .map(|(n, c)| {
            let attrs = c.attributes.iter().map(|a| (a.name.clone(), a.domain.to_string())).collect();
            (n.clone(), (attrs, c.origin_events.clone()))
        })
        .collect();
    let assocs = model
        .associations
        .iter()
        .map(|a| (a.from.clone(), a.to.clone(), a.card_from, a.card_to, a.kind))
        .collect();
    (classes, assocs)
}

proptest! {
    #[test]
    fn integration_ignores_view_order(views in prop::collection::vec(view(), 1..5), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let forward = integrate(&views);
        prop_assert!(forward.diagnostics.is_empty());
        let mut shuffled = views.clone();
        shuffled.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        let other = integrate(&shuffled);
        prop_assert!(other.diagnostics.is_empty());
        prop_assert_eq!(shape(&forward.model), shape(&other.model));
    }
}
