use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::{field_name_matches, AcquisitionOp, Field, MessageStructure, Substructure};
use crate::diagnostic::{Code, Diagnostic, Severity};

/// Development stage a model is written for.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Stage {
    #[default]
    Analysis,
    DesignMemory,
    DesignInterface,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Analysis => "analysis",
            Stage::DesignMemory => "design-memory",
            Stage::DesignInterface => "design-interface",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "analysis" => Ok(Stage::Analysis),
            "design-memory" => Ok(Stage::DesignMemory),
            "design-interface" => Ok(Stage::DesignInterface),
            other => Err(format!(
                "unknown stage `{other}` (expected analysis, design-memory or design-interface)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Applicability {
    HighlyRecommended,
    Recommended,
    NotRecommended,
    Discouraged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FieldProperty {
    Name,
    OpInput,
    OpGeneration,
    OpDerivation,
    Domain,
    Example,
    Description,
    Label,
    LinkWithMemory,
    Compulsoriness,
    Initialisation,
    Visibility,
}

impl FieldProperty {
    fn describe(self) -> &'static str {
        match self {
            FieldProperty::Name => "name",
            FieldProperty::OpInput => "acquisition operation i",
            FieldProperty::OpGeneration => "acquisition operation g",
            FieldProperty::OpDerivation => "acquisition operation d",
            FieldProperty::Domain => "domain",
            FieldProperty::Example => "example",
            FieldProperty::Description => "description",
            FieldProperty::Label => "label",
            FieldProperty::LinkWithMemory => "link with memory",
            FieldProperty::Compulsoriness => "compulsoriness",
            FieldProperty::Initialisation => "initialisation",
            FieldProperty::Visibility => "visibility",
        }
    }
}

/// Recommendation level of a field property per development stage.
pub fn stage_applicability(stage: Stage, prop: FieldProperty) -> Applicability {
    use Applicability::{HighlyRecommended as HR, NotRecommended as NR, Recommended as R};
    use FieldProperty::*;
    match (stage, prop) {
        (_, Name | OpInput | OpGeneration | Domain | Example | Description) => HR,
        (Stage::Analysis, OpDerivation) => NR,
        (_, OpDerivation) => HR,
        (Stage::Analysis, Label | LinkWithMemory | Compulsoriness | Initialisation | Visibility) => NR,
        (Stage::DesignMemory, Label | Initialisation | Visibility) => NR,
        (Stage::DesignMemory, LinkWithMemory) => HR,
        (Stage::DesignMemory, Compulsoriness) => R,
        (Stage::DesignInterface, Visibility) => R,
        (Stage::DesignInterface, _) => HR,
    }
}

fn used_properties(field: &Field) -> Vec<FieldProperty> {
    let p = &field.props;
    let mut used = vec![
        FieldProperty::Name,
        match p.op {
            AcquisitionOp::Input => FieldProperty::OpInput,
            AcquisitionOp::Generation => FieldProperty::OpGeneration,
            AcquisitionOp::Derivation => FieldProperty::OpDerivation,
        },
        FieldProperty::Domain,
    ];
    let optional = [
        (p.example.is_some(), FieldProperty::Example),
        (p.description.is_some(), FieldProperty::Description),
        (p.label.is_some(), FieldProperty::Label),
        (p.link_with_memory.is_some(), FieldProperty::LinkWithMemory),
        (p.mandatory.is_some(), FieldProperty::Compulsoriness),
        (p.init_formula.is_some(), FieldProperty::Initialisation),
        (p.visible.is_some(), FieldProperty::Visibility),
    ];
    used.extend(optional.into_iter().filter(|(set, _)| *set).map(|(_, prop)| prop));
    used
}

/// Structural and stage findings for one (desugared) message structure:
/// CA-C08..C11, CA-S01 and CA-S02.
pub fn validate_structure(ms: &MessageStructure, stage: Stage) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if let Substructure::Specialisation(s) = &ms.root {
        out.push(
            Diagnostic::new(
                Code::C08,
                &s.loc,
                format!("initial substructure of `{}` is a specialisation", ms.name),
            )
            .with_element(ms.name.clone()),
        );
    }
    check_siblings(ms, &ms.root, &mut out);

    let fields = ms.fields();
    for (path, field) in &fields {
        for prop in used_properties(field) {
            let severity = match stage_applicability(stage, prop) {
                Applicability::NotRecommended => Severity::Warning,
                Applicability::Discouraged => Severity::Error,
                _ => continue,
            };
            let mut d = Diagnostic::new(
                Code::S01,
                &field.loc,
                format!("{} of field `{}` is not recommended at {} stage", prop.describe(), field.name, stage),
            )
            .with_element(format!("{}/{}", ms.name, path_tail(path)));
            d.severity = severity;
            out.push(d);
        }
        let formulas = [
            ("initialisation", field.props.init_formula.as_ref()),
            ("derivation", field.props.derivation_formula.as_ref()),
        ];
        for (role, formula) in formulas {
            let Some(formula) = formula else { continue };
            for r in formula.field_refs() {
                if !fields.iter().any(|(_, f)| field_name_matches(&f.name, r)) {
                    out.push(
                        Diagnostic::new(
                            Code::S02,
                            &field.loc,
                            format!("{role} formula of `{}` references unknown field `:{r}`", field.name),
                        )
                        .with_element(format!("{}/{}", ms.name, path_tail(path))),
                    );
                }
            }
        }
    }
    out
}

fn path_tail(path: &super::FieldPath) -> String {
    path.segments[1.min(path.segments.len())..].join("/")
}

/// C09–C11: a field, aggregation or specialisation may be placed at most
/// once in its parent.
fn check_siblings(ms: &MessageStructure, node: &Substructure, out: &mut Vec<Diagnostic>) {
    let children: Vec<&Substructure> = match node {
        Substructure::Field(_) => return,
        Substructure::Aggregation(a) => a.children.iter().collect(),
        Substructure::Iteration(i) => vec![i.body.as_ref()],
        Substructure::Specialisation(s) => s.variants.iter().collect(),
    };
    let mut seen: BTreeMap<(u8, &str), usize> = BTreeMap::new();
    for child in &children {
        let (kind, code, what) = match child {
            Substructure::Field(_) => (0u8, Code::C09, "field"),
            Substructure::Specialisation(_) => (2, Code::C11, "specialisation substructure"),
            _ => (1, Code::C10, "substructure"),
        };
        let Some(name) = child.name() else { continue };
        let count = seen.entry((kind, name)).or_insert(0);
        *count += 1;
        if *count == 2 {
            out.push(
                Diagnostic::new(
                    code,
                    child.loc(),
                    format!(
                        "{what} `{name}` appears more than once in `{}`",
                        node.name().unwrap_or(&ms.name)
                    ),
                )
                .with_element(format!("{}/{name}", ms.name)),
            );
        }
    }
    for child in children {
        check_siblings(ms, child, out);
    }
}
