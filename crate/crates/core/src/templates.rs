//! Event specification templates: the `.cet` file format, generation from
//! a model, consistency checks against the model and Markdown rendering.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::ced::{CommunicativeEvent, Direction, ModelRepository, RoleKind};
use crate::diagnostic::{Code, Diagnostic, Loc};
use crate::msl::{self, MessageStructure};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Header {
    pub event_id: String,
    pub name: String,
    pub description: String,
    pub goal: String,
    /// Relative path to an explanatory diagram or scanned form.
    pub explanatory_diagram: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Contact {
    pub primary_actor: String,
    pub support_actors: Vec<String>,
    pub interface_actors: Vec<String>,
    pub availability: String,
    pub medium: String,
    pub accreditation: String,
    pub verification: String,
    pub occurrence_constraints: String,
    pub frequency: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDescription {
    /// Field name, or a `/`-separated path suffix when the name is ambiguous.
    pub field: String,
    pub text: String,
    pub loc: Loc,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MessageSection {
    pub structure_ref: Option<String>,
    pub field_descriptions: Vec<FieldDescription>,
    pub structural_constraints: Vec<String>,
    pub contextual_constraints: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Reaction {
    pub data_view_ref: Option<String>,
    pub treatments: Vec<String>,
    pub linked_behaviours: Vec<String>,
    pub linked_communications: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSpec {
    pub header: Header,
    pub contact: Contact,
    pub message: MessageSection,
    pub reaction: Reaction,
    /// Position of the `event` header line.
    pub loc: Loc,
}

impl EventSpec {
    pub fn new(event_id: impl Into<String>, loc: Loc) -> Self {
        EventSpec {
            header: Header {
                event_id: event_id.into(),
                ..Default::default()
            },
            contact: Contact::default(),
            message: MessageSection::default(),
            reaction: Reaction::default(),
            loc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct CetError {
    pub line: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    General,
    Contact,
    Message,
    Reaction,
}

/// Parse a `.cet` template.
pub fn parse_template(text: &str, file: &Arc<str>) -> Result<EventSpec, CetError> {
    let err = |line: usize, message: String| CetError {
        line: line as u32 + 1,
        message,
    };
    let mut spec: Option<EventSpec> = None;
    let mut section: Option<Section> = None;
    // The list key that `- item` lines currently extend.
    let mut list_key: Option<String> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some(spec) = spec.as_mut() else {
            let id = line
                .strip_prefix("event")
                .map(str::trim)
                .and_then(|r| r.strip_prefix('"'))
                .and_then(|r| r.strip_suffix('"'))
                .filter(|id| !id.is_empty());
            match id {
                Some(id) => spec = Some(EventSpec::new(id, Loc::new(file, n as u32 + 1, 1))),
                None => return Err(err(n, "a template starts with `event \"ID\"`".into())),
            }
            continue;
        };
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = Some(match name.trim() {
                "general" => Section::General,
                "contact" => Section::Contact,
                "message" => Section::Message,
                "reaction" => Section::Reaction,
                other => return Err(err(n, format!("unknown section [{other}]"))),
            });
            list_key = None;
            continue;
        }
        let Some(section) = section else {
            return Err(err(n, "expected a section header such as [general]".into()));
        };
        if let Some(item) = line.strip_prefix('-') {
            let item = item.trim().to_string();
            let Some(key) = list_key.as_deref() else {
                return Err(err(n, "list item outside a list key".into()));
            };
            let loc = Loc::new(file, n as u32 + 1, 1);
            push_item(spec, section, key, item, loc).map_err(|m| err(n, m))?;
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(err(n, format!("expected `key: value`, found `{line}`")));
        };
        let (key, value) = (key.trim(), value.trim().to_string());
        if is_list_key(section, key) {
            if !value.is_empty() {
                return Err(err(n, format!("`{key}` takes `- item` lines")));
            }
            list_key = Some(key.to_string());
        } else {
            list_key = None;
            set_scalar(spec, section, key, value).map_err(|m| err(n, m))?;
        }
    }
    spec.ok_or_else(|| CetError {
        line: 1,
        message: "empty template".into(),
    })
}

fn is_list_key(section: Section, key: &str) -> bool {
    matches!(
        (section, key),
        (Section::Contact, "support" | "interface")
            | (Section::Message, "fields" | "structural" | "contextual")
            | (Section::Reaction, "treatments" | "behaviours" | "communications")
    )
}

fn set_scalar(spec: &mut EventSpec, section: Section, key: &str, value: String) -> Result<(), String> {
    let opt = |v: String| if v.is_empty() { None } else { Some(v) };
    let h = &mut spec.header;
    let c = &mut spec.contact;
    match (section, key) {
        (Section::General, "name") => h.name = value,
        (Section::General, "description") => h.description = value,
        (Section::General, "goal") => h.goal = value,
        (Section::General, "diagram") => h.explanatory_diagram = opt(value),
        (Section::Contact, "primary") => c.primary_actor = value,
        (Section::Contact, "availability") => c.availability = value,
        (Section::Contact, "medium") => c.medium = value,
        (Section::Contact, "accreditation") => c.accreditation = value,
        (Section::Contact, "verification") => c.verification = value,
        (Section::Contact, "occurrence") => c.occurrence_constraints = value,
        (Section::Contact, "frequency") => c.frequency = value,
        (Section::Message, "structure") => spec.message.structure_ref = opt(value),
        (Section::Reaction, "data-view") => spec.reaction.data_view_ref = opt(value),
        _ => return Err(format!("unknown key `{key}` in this section")),
    }
    Ok(())
}

fn push_item(spec: &mut EventSpec, section: Section, key: &str, item: String, loc: Loc) -> Result<(), String> {
    match (section, key) {
        (Section::Contact, "support") => spec.contact.support_actors.push(item),
        (Section::Contact, "interface") => spec.contact.interface_actors.push(item),
        (Section::Message, "fields") => {
            let (field, text) = item
                .split_once(':')
                .ok_or_else(|| "field descriptions read `- Field: text`".to_string())?;
            spec.message.field_descriptions.push(FieldDescription {
                field: field.trim().to_string(),
                text: text.trim().to_string(),
                loc,
            });
        }
        (Section::Message, "structural") => spec.message.structural_constraints.push(item),
        (Section::Message, "contextual") => spec.message.contextual_constraints.push(item),
        (Section::Reaction, "treatments") => spec.reaction.treatments.push(item),
        (Section::Reaction, "behaviours") => spec.reaction.linked_behaviours.push(item),
        (Section::Reaction, "communications") => spec.reaction.linked_communications.push(item),
        _ => unreachable!("list keys are checked before items are accepted"),
    }
    Ok(())
}

/// Write a template in `.cet` form. Parsing the output yields `spec` again,
/// apart from positions and values containing line breaks.
pub fn write_template(spec: &EventSpec) -> String {
    fn scalar(out: &mut String, key: &str, value: &str) {
        let _ = writeln!(out, "{key}: {value}");
    }
    fn list(out: &mut String, key: &str, items: &[String]) {
        let _ = writeln!(out, "{key}:");
        for i in items {
            let _ = writeln!(out, "  - {i}");
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "event \"{}\"", spec.header.event_id);
    out.push_str("\n[general]\n");
    scalar(&mut out, "name", &spec.header.name);
    scalar(&mut out, "description", &spec.header.description);
    scalar(&mut out, "goal", &spec.header.goal);
    scalar(&mut out, "diagram", spec.header.explanatory_diagram.as_deref().unwrap_or(""));
    let c = &spec.contact;
    out.push_str("\n[contact]\n");
    scalar(&mut out, "primary", &c.primary_actor);
    list(&mut out, "support", &c.support_actors);
    list(&mut out, "interface", &c.interface_actors);
    scalar(&mut out, "availability", &c.availability);
    scalar(&mut out, "medium", &c.medium);
    scalar(&mut out, "accreditation", &c.accreditation);
    scalar(&mut out, "verification", &c.verification);
    scalar(&mut out, "occurrence", &c.occurrence_constraints);
    scalar(&mut out, "frequency", &c.frequency);
    let m = &spec.message;
    out.push_str("\n[message]\n");
    scalar(&mut out, "structure", m.structure_ref.as_deref().unwrap_or(""));
    let fields: Vec<String> = m
        .field_descriptions
        .iter()
        .map(|f| format!("{}: {}", f.field, f.text).trim_end().to_string())
        .collect();
    list(&mut out, "fields", &fields);
    list(&mut out, "structural", &m.structural_constraints);
    list(&mut out, "contextual", &m.contextual_constraints);
    let r = &spec.reaction;
    out.push_str("\n[reaction]\n");
    scalar(&mut out, "data-view", r.data_view_ref.as_deref().unwrap_or(""));
    list(&mut out, "treatments", &r.treatments);
    list(&mut out, "behaviours", &r.linked_behaviours);
    list(&mut out, "communications", &r.linked_communications);
    // `key: ` with an empty value is written without the trailing blank.
    out.lines().map(str::trim_end).fold(String::new(), |mut acc, l| {
        acc.push_str(l);
        acc.push('\n');
        acc
    })
}

/// Field keys for a structure: the bare name, or the shortest unambiguous
/// path suffix when several fields share a name.
pub(crate) fn field_keys(ms: &MessageStructure) -> Vec<String> {
    let paths = msl::collect_fields(ms);
    paths
        .iter()
        .map(|p| {
            let segs = &p.segments;
            (1..=segs.len())
                .map(|k| segs[segs.len() - k..].join("/"))
                .find(|suffix| paths.iter().filter(|q| path_ends_with(&q.segments, suffix)).count() == 1)
                .unwrap_or_else(|| segs.join("/"))
        })
        .collect()
}

fn path_ends_with(segments: &[String], suffix: &str) -> bool {
    let want: Vec<&str> = suffix.split('/').map(str::trim).collect();
    want.len() <= segments.len()
        && segments[segments.len() - want.len()..]
            .iter()
            .zip(&want)
            .all(|(a, b)| a == b)
}

fn linked_communication(label: &str, role: &str) -> String {
    format!("{label} to {role}")
}

/// Build a skeleton template for an event (or variant parent) of the model.
pub fn generate_template(repo: &ModelRepository, event_id: &str) -> Result<EventSpec, TemplateError> {
    let ev = repo
        .event(repo.resolve_alias(event_id))
        .ok_or_else(|| TemplateError::UnknownEvent(event_id.to_string()))?;
    let mut spec = EventSpec::new(ev.id.clone(), ev.loc.clone());
    spec.header.name = ev.name.clone();
    spec.header.goal = ev.goal.clone().unwrap_or_default();
    spec.contact.primary_actor = ev.primary_roles().first().map(|s| s.to_string()).unwrap_or_default();
    for r in ev.all_roles() {
        if r.kind == RoleKind::Interface && !spec.contact.interface_actors.contains(&r.role_name) {
            spec.contact.interface_actors.push(r.role_name.clone());
        }
    }
    if let Some(name) = ev.ingoing_messages().first() {
        spec.message.structure_ref = Some(name.to_string());
        if let Some(ms) = repo.structure(name) {
            spec.message.field_descriptions = field_keys(ms)
                .into_iter()
                .map(|field| FieldDescription {
                    field,
                    text: String::new(),
                    loc: ev.loc.clone(),
                })
                .collect();
        }
    }
    for i in ev.all_interactions() {
        if i.direction == Direction::Outgoing {
            let text = linked_communication(&i.name, &i.counterpart_role);
            if !spec.reaction.linked_communications.contains(&text) {
                spec.reaction.linked_communications.push(text);
            }
        }
    }
    Ok(spec)
}

fn mentions(haystack: &str, needle: &str) -> bool {
    !needle.trim().is_empty() && haystack.to_lowercase().contains(&needle.trim().to_lowercase())
}

/// Check a template against the model: identifier (T01), primary actor
/// (T02), field descriptions (T03) and linked communications (T04).
pub fn check_template(spec: &EventSpec, repo: &ModelRepository) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let id = repo.resolve_alias(&spec.header.event_id);
    let Some(ev) = repo.event(id) else {
        out.push(
            Diagnostic::new(
                Code::T01,
                &spec.loc,
                format!("template identifier `{}` does not resolve to an event", spec.header.event_id),
            )
            .with_element(spec.header.event_id.clone()),
        );
        return out;
    };
    let primaries = ev.primary_roles();
    let actor = spec.contact.primary_actor.trim();
    if !actor.is_empty() && !primaries.iter().any(|p| p.eq_ignore_ascii_case(actor)) {
        out.push(
            Diagnostic::new(
                Code::T02,
                &spec.loc,
                format!(
                    "primary actor `{actor}` differs from the diagram's primary role{} {}",
                    if primaries.len() == 1 { "" } else { "s" },
                    if primaries.is_empty() { "(none)".to_string() } else { primaries.join(", ") }
                ),
            )
            .with_element(ev.id.clone()),
        );
    }
    check_descriptions(spec, repo, ev, &mut out);
    for i in ev.all_interactions() {
        if i.direction != Direction::Outgoing {
            continue;
        }
        let covered = spec
            .reaction
            .linked_communications
            .iter()
            .any(|c| mentions(c, &i.counterpart_role) || mentions(c, &i.name));
        if !covered {
            out.push(
                Diagnostic::new(
                    Code::T04,
                    &spec.loc,
                    format!(
                        "outgoing interaction \"{}\" to {} is not listed among the linked communications",
                        i.name, i.counterpart_role
                    ),
                )
                .with_element(ev.id.clone()),
            );
        }
    }
    out
}

fn check_descriptions(spec: &EventSpec, repo: &ModelRepository, ev: &CommunicativeEvent, out: &mut Vec<Diagnostic>) {
    let name = spec
        .message
        .structure_ref
        .clone()
        .or_else(|| ev.ingoing_messages().first().map(|s| s.to_string()));
    let Some(name) = name else {
        for d in &spec.message.field_descriptions {
            out.push(
                Diagnostic::new(
                    Code::T03,
                    &d.loc,
                    format!("field `{}` is described but the event has no message structure", d.field),
                )
                .with_element(ev.id.clone()),
            );
        }
        return;
    };
    let Some(ms) = repo.structure(&name) else {
        out.push(
            Diagnostic::new(Code::T03, &spec.loc, format!("message structure `{name}` is not defined"))
                .with_element(ev.id.clone()),
        );
        return;
    };
    let paths = msl::collect_fields(ms);
    let mut described = vec![false; paths.len()];
    for d in &spec.message.field_descriptions {
        let hits: Vec<usize> = paths
            .iter()
            .enumerate()
            .filter(|(_, p)| path_ends_with(&p.segments, &d.field))
            .map(|(i, _)| i)
            .collect();
        if hits.is_empty() {
            out.push(
                Diagnostic::new(
                    Code::T03,
                    &d.loc,
                    format!("described field `{}` does not exist in {}", d.field, ms.name),
                )
                .with_element(format!("{}/{}", ev.id, d.field)),
            );
        } else if !d.text.trim().is_empty() {
            for i in hits {
                described[i] = true;
            }
        }
    }
    for (p, done) in paths.iter().zip(described) {
        if !done {
            out.push(
                Diagnostic::new(Code::T03, &spec.loc, format!("field `{p}` has no description"))
                    .with_element(format!("{}/{}", ev.id, p.field_name())),
            );
        }
    }
}

fn escape_cell(s: &str) -> String {
    s.replace('|', "\\|")
}

/// Render a template as Markdown with the four numbered sections.
/// `structure` is the referenced message structure, when known.
pub fn render_template(spec: &EventSpec, structure: Option<&MessageStructure>) -> String {
    const NONE: &str = "(none specified)\n";
    fn item(out: &mut String, label: &str, value: &str) {
        if !value.trim().is_empty() {
            let _ = writeln!(out, "- **{label}:** {value}");
        }
    }
    fn list(out: &mut String, title: &str, items: &[String]) {
        if !items.is_empty() {
            let _ = writeln!(out, "\n### {title}\n");
            for i in items {
                let _ = writeln!(out, "- {i}");
            }
        }
    }
    fn section(doc: &mut String, title: &str, body: String) {
        let _ = writeln!(doc, "\n## {title}\n");
        doc.push_str(if body.trim().is_empty() { NONE } else { body.trim_start_matches('\n') });
    }

    let h = &spec.header;
    let mut doc = String::new();
    let _ = writeln!(doc, "# {}. {}", h.event_id, h.name);

    let mut body = String::new();
    item(&mut body, "Identifier", &h.event_id);
    item(&mut body, "Name", &h.name);
    item(&mut body, "Description", &h.description);
    item(&mut body, "Goal", &h.goal);
    item(&mut body, "Explanatory diagram", h.explanatory_diagram.as_deref().unwrap_or(""));
    section(&mut doc, "1. General information", body);

    let c = &spec.contact;
    let mut body = String::new();
    item(&mut body, "Primary actor", &c.primary_actor);
    item(&mut body, "Support actors", &c.support_actors.join(", "));
    item(&mut body, "Interface actors", &c.interface_actors.join(", "));
    item(&mut body, "Availability", &c.availability);
    item(&mut body, "Communication medium", &c.medium);
    item(&mut body, "Accreditation", &c.accreditation);
    item(&mut body, "Verification", &c.verification);
    item(&mut body, "Occurrence constraints", &c.occurrence_constraints);
    item(&mut body, "Frequency", &c.frequency);
    section(&mut doc, "2. Contact", body);

    let m = &spec.message;
    let mut body = String::new();
    if let Some(name) = &m.structure_ref {
        let _ = writeln!(body, "Message structure: `{name}`\n");
        if let Some(ms) = structure {
            let _ = writeln!(body, "```text\n{}```", msl::serialize(ms));
        }
    }
    if !m.field_descriptions.is_empty() {
        body.push_str("\n### Field descriptions\n\n| Field | Description |\n|---|---|\n");
        for d in &m.field_descriptions {
            let _ = writeln!(body, "| {} | {} |", escape_cell(&d.field), escape_cell(&d.text));
        }
    }
    list(&mut body, "Structural constraints", &m.structural_constraints);
    list(&mut body, "Contextual constraints", &m.contextual_constraints);
    section(&mut doc, "3. Message", body);

    let r = &spec.reaction;
    let mut body = String::new();
    if let Some(v) = &r.data_view_ref {
        let _ = writeln!(body, "Data model view: {v}");
    }
    list(&mut body, "Treatments", &r.treatments);
    list(&mut body, "Linked behaviours", &r.linked_behaviours);
    list(&mut body, "Linked communications", &r.linked_communications);
    section(&mut doc, "4. Reaction", body);
    doc
}
