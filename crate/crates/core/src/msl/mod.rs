//! Message Structures: a bracketed structured-text notation for the message
//! conveyed in a communicative interaction.
//!
//! `< … >` aggregates, `{ … }` iterates, `[ … | … ]` specialises, and `+`
//! separates siblings. Fields are written `Name : op : domain "example"`.

mod desugar;
mod lexer;
mod parser;
mod serialize;
mod validate;

use std::fmt;
use std::str::FromStr;

use crate::diagnostic::Loc;

pub use desugar::desugar;
pub use parser::{parse_message_structure, parse_msl, ParseOptions};
pub use serialize::serialize;
pub use validate::{stage_applicability, validate_structure, Applicability, FieldProperty, Stage};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MslError {
    #[error("{line}:{column}: syntax error: {message}")]
    Syntax {
        line: u32,
        column: u32,
        message: String,
    },
    #[error("{line}:{column}: {message}")]
    Structure {
        line: u32,
        column: u32,
        message: String,
    },
}

impl MslError {
    pub fn line(&self) -> u32 {
        match self {
            MslError::Syntax { line, .. } | MslError::Structure { line, .. } => *line,
        }
    }

    pub fn column(&self) -> u32 {
        match self {
            MslError::Syntax { column, .. } | MslError::Structure { column, .. } => *column,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageStructure {
    pub name: String,
    pub root: Substructure,
    pub loc: Loc,
}

// Fields dominate real structures, so boxing them would cost more than it saves.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Substructure {
    Aggregation(Aggregation),
    Iteration(Iteration),
    Specialisation(Specialisation),
    Field(Field),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aggregation {
    pub name: Option<String>,
    pub children: Vec<Substructure>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Iteration {
    pub name: Option<String>,
    pub body: Box<Substructure>,
    pub loc: Loc,
}

/// Structural alternatives. A single variant marks that variant optional.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Specialisation {
    pub name: Option<String>,
    pub variants: Vec<Substructure>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub name: String,
    pub props: FieldProperties,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldProperties {
    pub op: AcquisitionOp,
    pub domain: DomainRef,
    pub example: Option<String>,
    pub description: Option<String>,
    pub label: Option<String>,
    pub link_with_memory: Option<String>,
    pub mandatory: Option<bool>,
    pub init_formula: Option<FormulaText>,
    pub visible: Option<bool>,
    pub derivation_formula: Option<FormulaText>,
}

impl FieldProperties {
    pub fn new(op: AcquisitionOp, domain: DomainRef) -> Self {
        FieldProperties {
            op,
            domain,
            example: None,
            description: None,
            label: None,
            link_with_memory: None,
            mandatory: None,
            init_formula: None,
            visible: None,
            derivation_formula: None,
        }
    }

    /// True when anything beyond op, domain and example is set.
    pub(crate) fn has_extended(&self) -> bool {
        self.description.is_some()
            || self.label.is_some()
            || self.link_with_memory.is_some()
            || self.mandatory.is_some()
            || self.init_formula.is_some()
            || self.visible.is_some()
            || self.derivation_formula.is_some()
    }
}

/// Where a field's information comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AcquisitionOp {
    /// `i`: provided by the primary actor.
    Input,
    /// `g`: generated by the information system.
    Generation,
    /// `d`: derived from memory.
    Derivation,
}

impl AcquisitionOp {
    pub fn as_str(self) -> &'static str {
        match self {
            AcquisitionOp::Input => "i",
            AcquisitionOp::Generation => "g",
            AcquisitionOp::Derivation => "d",
        }
    }
}

impl fmt::Display for AcquisitionOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AcquisitionOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "i" => Ok(AcquisitionOp::Input),
            "g" => Ok(AcquisitionOp::Generation),
            "d" => Ok(AcquisitionOp::Derivation),
            other => Err(format!("unknown acquisition operation `{other}` (expected i, g or d)")),
        }
    }
}

/// Field domain. Parsing only distinguishes enumerations; named domains stay
/// `Basic` until resolved against a business-object registry.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DomainRef {
    Basic(String),
    BusinessObject(String),
    EnumLiteral(Vec<String>),
}

impl DomainRef {
    pub fn name(&self) -> Option<&str> {
        match self {
            DomainRef::Basic(n) | DomainRef::BusinessObject(n) => Some(n),
            DomainRef::EnumLiteral(_) => None,
        }
    }
}

impl fmt::Display for DomainRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainRef::Basic(n) | DomainRef::BusinessObject(n) => f.write_str(n),
            DomainRef::EnumLiteral(tokens) => write!(f, "[{}]", tokens.join("|")),
        }
    }
}

/// Opaque formula text. Only `:name` field references are extracted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FormulaText {
    text: String,
    field_refs: Vec<String>,
}

impl FormulaText {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let field_refs = extract_field_refs(&text);
        FormulaText { text, field_refs }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn field_refs(&self) -> &[String] {
        &self.field_refs
    }
}

/// Identifiers introduced by `:`, in order of first appearance.
fn extract_field_refs(text: &str) -> Vec<String> {
    let mut refs: Vec<String> = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c != ':' {
            continue;
        }
        let start = i + 1;
        let mut end = start;
        let mut first = true;
        while let Some(&(j, n)) = chars.peek() {
            let ok = if first {
                n.is_ascii_alphabetic() || n == '_'
            } else {
                n.is_ascii_alphanumeric() || n == '_'
            };
            if !ok {
                break;
            }
            first = false;
            end = j + n.len_utf8();
            chars.next();
        }
        if end > start {
            let name = &text[start..end];
            if !refs.iter().any(|r| r == name) {
                refs.push(name.to_string());
            }
        }
    }
    refs
}

impl Substructure {
    pub fn name(&self) -> Option<&str> {
        match self {
            Substructure::Aggregation(a) => a.name.as_deref(),
            Substructure::Iteration(i) => i.name.as_deref(),
            Substructure::Specialisation(s) => s.name.as_deref(),
            Substructure::Field(f) => Some(&f.name),
        }
    }

    pub fn loc(&self) -> &Loc {
        match self {
            Substructure::Aggregation(a) => &a.loc,
            Substructure::Iteration(i) => &i.loc,
            Substructure::Specialisation(s) => &s.loc,
            Substructure::Field(f) => &f.loc,
        }
    }

    pub fn is_complex(&self) -> bool {
        !matches!(self, Substructure::Field(_))
    }

    fn clear_locs(&mut self) {
        match self {
            Substructure::Aggregation(a) => {
                a.loc = Loc::default();
                a.children.iter_mut().for_each(Substructure::clear_locs);
            }
            Substructure::Iteration(i) => {
                i.loc = Loc::default();
                i.body.clear_locs();
            }
            Substructure::Specialisation(s) => {
                s.loc = Loc::default();
                s.variants.iter_mut().for_each(Substructure::clear_locs);
            }
            Substructure::Field(f) => f.loc = Loc::default(),
        }
    }
}

/// A field together with the names of its enclosing substructures.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldPath {
    pub segments: Vec<String>,
}

impl FieldPath {
    pub fn field_name(&self) -> &str {
        self.segments.last().map(String::as_str).unwrap_or("")
    }
}

impl fmt::Display for FieldPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.segments.join("/"))
    }
}

impl MessageStructure {
    /// Copy with every location reset, for structural comparison.
    pub fn without_locs(&self) -> MessageStructure {
        let mut copy = self.clone();
        copy.loc = Loc::default();
        copy.root.clear_locs();
        copy
    }

    pub fn same_structure(&self, other: &MessageStructure) -> bool {
        self.without_locs() == other.without_locs()
    }

    /// Every field with its path, in document order.
    pub fn fields(&self) -> Vec<(FieldPath, &Field)> {
        fn walk<'a>(node: &'a Substructure, prefix: &mut Vec<String>, out: &mut Vec<(FieldPath, &'a Field)>) {
            match node {
                Substructure::Field(f) => {
                    let mut segments = prefix.clone();
                    segments.push(f.name.clone());
                    out.push((FieldPath { segments }, f));
                }
                other => {
                    let pushed = match other.name() {
                        Some(n) => {
                            prefix.push(n.to_string());
                            true
                        }
                        None => false,
                    };
                    match other {
                        Substructure::Aggregation(a) => a.children.iter().for_each(|c| walk(c, prefix, out)),
                        Substructure::Iteration(i) => walk(&i.body, prefix, out),
                        Substructure::Specialisation(s) => s.variants.iter().for_each(|c| walk(c, prefix, out)),
                        Substructure::Field(_) => unreachable!(),
                    }
                    if pushed {
                        prefix.pop();
                    }
                }
            }
        }
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        if self.root.name().is_none() {
            prefix.push(self.name.clone());
        }
        walk(&self.root, &mut prefix, &mut out);
        out
    }

    pub fn field_names(&self) -> Vec<&str> {
        self.fields().into_iter().map(|(_, f)| f.name.as_str()).collect()
    }

    /// Number of aggregation, iteration and specialisation nodes.
    pub fn complex_count(&self) -> usize {
        fn count(node: &Substructure) -> usize {
            match node {
                Substructure::Field(_) => 0,
                Substructure::Aggregation(a) => 1 + a.children.iter().map(count).sum::<usize>(),
                Substructure::Iteration(i) => 1 + count(&i.body),
                Substructure::Specialisation(s) => 1 + s.variants.iter().map(count).sum::<usize>(),
            }
        }
        count(&self.root)
    }
}

pub fn collect_fields(ms: &MessageStructure) -> Vec<FieldPath> {
    ms.fields().into_iter().map(|(p, _)| p).collect()
}

/// Field-name match used by formula references: exact, or ignoring case and
/// whitespace (`:OrderNumber` resolves to `Order number`).
pub(crate) fn field_name_matches(field: &str, reference: &str) -> bool {
    if field == reference {
        return true;
    }
    let squashed: String = field.split_whitespace().collect();
    squashed.eq_ignore_ascii_case(reference)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_refs_are_colon_prefixed_identifiers() {
        let f = FormulaText::new("(:Price * :Quantity) + :Price");
        assert_eq!(f.field_refs(), ["Price", "Quantity"]);
        assert!(FormulaText::new("today()").field_refs().is_empty());
        assert!(FormulaText::new("a : b :1x").field_refs().is_empty());
    }

    #[test]
    fn squashed_field_name_reference() {
        assert!(field_name_matches("Order number", "OrderNumber"));
        assert!(field_name_matches("Price", "Price"));
        assert!(!field_name_matches("Price", "Pricee"));
    }
}
