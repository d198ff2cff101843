use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::sync::Arc;

use super::lexer::{tokenize, Tok, Token};
use super::{
    assign_identifiers, event_id, variant_id, AndKind, CommunicativeEvent, CommunicativeInteraction, Diagram,
    Direction, EventVariant, Member, ModelRepository, Node, PrecedenceRelation, Process, RoleBinding, RoleKind,
};
use crate::diagnostic::Loc;
use crate::exec::Execution;
use crate::msl::{self, FormulaText, MessageStructure, ParseOptions};
use crate::templates::{self, EventSpec};

/// One input text. The extension of `path` selects the notation:
/// `.ced` diagrams, `.msl` message structures, `.cet` templates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        SourceFile {
            path: path.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("{file}:{line}:{column}: syntax error: {message}")]
    Syntax {
        file: String,
        line: u32,
        column: u32,
        message: String,
    },
    #[error("{file}:{line}:{column}: {message}")]
    Structure {
        file: String,
        line: u32,
        column: u32,
        message: String,
    },
    #[error("{second}: duplicate definition of `{id}` (first defined at {first})")]
    DuplicateDefinition { id: String, first: Loc, second: Loc },
    #[error("{second}: duplicate message structure `{name}` (first defined at {first})")]
    DuplicateStructure { name: String, first: Loc, second: Loc },
    #[error("{path}: unsupported file type (expected .ced, .msl or .cet)")]
    UnsupportedFile { path: String },
}

/// Parse and assemble a model from any number of sources. Sources are
/// processed in path order, so the result does not depend on input order.
pub fn parse_model(sources: &[SourceFile]) -> Result<ModelRepository, ModelError> {
    parse_model_with(sources, Execution::default())
}

pub fn parse_model_with(sources: &[SourceFile], exec: Execution) -> Result<ModelRepository, ModelError> {
    let mut ordered: Vec<&SourceFile> = sources.iter().collect();
    ordered.sort_by(|a, b| a.path.cmp(&b.path));
    let parsed = exec.map(&ordered, |s| parse_file(s));
    let mut repo = ModelRepository::default();
    let mut first_event: HashMap<String, (u64, Loc)> = HashMap::new();
    for (file_index, result) in parsed.into_iter().enumerate() {
        let fm = result?;
        let offset = repo.diagrams.len();
        for p in fm.processes {
            repo.processes.entry(p.acronym.clone()).or_insert(p);
        }
        for (mut ev, block) in fm.events {
            let key = ((file_index as u64) << 32) | block as u64;
            match first_event.get(&ev.id) {
                Some((b, first)) if *b != key => {
                    return Err(ModelError::DuplicateDefinition {
                        id: ev.id.clone(),
                        first: first.clone(),
                        second: ev.loc.clone(),
                    })
                }
                Some(_) => {}
                None => {
                    first_event.insert(ev.id.clone(), (key, ev.loc.clone()));
                }
            }
            ev.diagram += offset;
            repo.events.push(ev);
        }
        repo.diagrams.extend(fm.diagrams);
        for ms in fm.structures {
            if let Some(first) = repo.structure(&ms.name) {
                return Err(ModelError::DuplicateStructure {
                    name: ms.name.clone(),
                    first: first.loc.clone(),
                    second: ms.loc.clone(),
                });
            }
            repo.message_structures.push(ms);
        }
        repo.business_objects.extend(fm.business_objects);
        for (from, to) in fm.aliases {
            repo.aliases.entry(from).or_insert(to);
        }
        repo.templates.extend(fm.templates);
    }
    assign_identifiers(&mut repo);
    Ok(repo)
}

#[derive(Default)]
struct FileModel {
    processes: Vec<Process>,
    /// Events with the ordinal of the process block defining them.
    events: Vec<(CommunicativeEvent, u32)>,
    diagrams: Vec<Diagram>,
    structures: Vec<MessageStructure>,
    business_objects: Vec<String>,
    aliases: Vec<(String, String)>,
    templates: Vec<EventSpec>,
}

fn parse_file(source: &SourceFile) -> Result<FileModel, ModelError> {
    let file: Arc<str> = Arc::from(source.path.as_str());
    let ext = Path::new(&source.path)
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("");
    match ext {
        "ced" => CedParser::run(source, file),
        "msl" => {
            let structures = parse_structures(&source.text, &file, 0)?;
            Ok(FileModel {
                structures,
                ..Default::default()
            })
        }
        "cet" => {
            let spec = templates::parse_template(&source.text, &file).map_err(|e| ModelError::Syntax {
                file: source.path.clone(),
                line: e.line,
                column: 1,
                message: e.message,
            })?;
            Ok(FileModel {
                templates: vec![spec],
                ..Default::default()
            })
        }
        _ => Err(ModelError::UnsupportedFile {
            path: source.path.clone(),
        }),
    }
}

fn parse_structures(text: &str, file: &Arc<str>, line_offset: u32) -> Result<Vec<MessageStructure>, ModelError> {
    let opts = ParseOptions {
        allow_specialisation_root: true,
        line_offset,
    };
    msl::parse_msl(text, file, opts).map_err(|e| ModelError::Syntax {
        file: file.to_string(),
        line: e.line(),
        column: e.column(),
        message: match e {
            msl::MslError::Syntax { message, .. } | msl::MslError::Structure { message, .. } => message,
        },
    })
}

#[derive(Debug, Clone)]
enum RawEnd {
    /// Process-relative event number or variant path.
    Num(String),
    Id(String),
    Logical(String),
    Start,
    End,
}

#[derive(Debug, Clone)]
struct RawEdge {
    from: (RawEnd, Option<String>, Loc),
    to: (RawEnd, Option<String>, Loc),
    declared: Option<bool>,
    loc: Loc,
}

struct DiagramBuilder {
    name: String,
    loc: Loc,
    members: Vec<Member>,
    edges: Vec<RawEdge>,
    defined: HashSet<String>,
    variants: HashSet<String>,
    logical: BTreeMap<String, Node>,
    externs: HashSet<String>,
}

impl DiagramBuilder {
    fn new(name: String, loc: Loc) -> Self {
        DiagramBuilder {
            name,
            loc,
            members: Vec::new(),
            edges: Vec::new(),
            defined: HashSet::new(),
            variants: HashSet::new(),
            logical: BTreeMap::new(),
            externs: HashSet::new(),
        }
    }

    fn is_empty(&self) -> bool {
        self.members.is_empty() && self.edges.is_empty()
    }

    fn add_member(&mut self, node: Node, loc: Loc) {
        if !self.members.iter().any(|m| m.node == node) {
            self.members.push(Member { node, loc });
        }
    }
}

#[derive(Default)]
struct Body {
    roles: Vec<RoleBinding>,
    interactions: Vec<CommunicativeInteraction>,
    goal: Option<String>,
    precondition: Option<String>,
    variants: Vec<EventVariant>,
}

struct CedParser<'a> {
    toks: Vec<Token>,
    pos: usize,
    file: Arc<str>,
    source: &'a SourceFile,
    out: FileModel,
    blocks: u32,
}

type PResult<T> = Result<T, ModelError>;

fn is_event_id(s: &str) -> bool {
    let mut parts = s.splitn(2, ' ');
    let acr = parts.next().unwrap_or("");
    let num = parts.next().unwrap_or("");
    is_acronym(acr)
        && !num.is_empty()
        && num.split('.').all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_digit()))
}

fn is_acronym(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit())
        && s.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

impl<'a> CedParser<'a> {
    fn run(source: &'a SourceFile, file: Arc<str>) -> PResult<FileModel> {
        let toks = tokenize(&source.text).map_err(|e| ModelError::Syntax {
            file: source.path.clone(),
            line: e.line,
            column: e.column,
            message: e.message,
        })?;
        let mut p = CedParser {
            toks,
            pos: 0,
            file,
            source,
            out: FileModel::default(),
            blocks: 0,
        };
        let stem = Path::new(&source.path)
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("diagram")
            .to_string();
        let mut implicit = DiagramBuilder::new(stem, Loc::new(&p.file, 1, 1));
        while p.pos < p.toks.len() {
            if p.peek_ident("diagram") {
                let loc = p.loc();
                p.pos += 1;
                let name = p.string("diagram name")?;
                p.expect(Tok::LBrace)?;
                let mut d = DiagramBuilder::new(name, loc);
                let index = p.out.diagrams.len();
                while !p.eat(&Tok::RBrace) {
                    if p.pos >= p.toks.len() {
                        return p.unexpected("`}` closing the diagram");
                    }
                    p.item(&mut d, index, None)?;
                }
                p.finish_diagram(d)?;
            } else {
                // Top-level statements form a diagram named after the file;
                // its index is fixed when it is finished last.
                let index = usize::MAX;
                p.item(&mut implicit, index, None)?;
            }
        }
        if !implicit.is_empty() {
            let index = p.out.diagrams.len();
            for (ev, _) in p.out.events.iter_mut() {
                if ev.diagram == usize::MAX {
                    ev.diagram = index;
                }
            }
            p.finish_diagram(implicit)?;
        }
        Ok(p.out)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(w)) if w == word)
    }

    fn loc(&self) -> Loc {
        match self.toks.get(self.pos).or_else(|| self.toks.last()) {
            Some(t) => Loc::new(&self.file, t.line, t.column),
            None => Loc::new(&self.file, 1, 1),
        }
    }

    fn error_at<T>(&self, loc: &Loc, message: impl Into<String>) -> PResult<T> {
        Err(ModelError::Syntax {
            file: self.source.path.clone(),
            line: loc.line,
            column: loc.column,
            message: message.into(),
        })
    }

    fn unexpected<T>(&self, expected: &str) -> PResult<T> {
        let found = match self.peek() {
            Some(t) => t.describe(),
            None => "end of input".into(),
        };
        self.error_at(&self.loc(), format!("expected {expected}, found {found}"))
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_ident(&mut self, word: &str) -> bool {
        if self.peek_ident(word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.unexpected(&tok.describe())
        }
    }

    fn string(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.unexpected(what),
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.unexpected(what),
        }
    }

    /// Identifier or quoted string.
    fn name(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) | Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.unexpected(what),
        }
    }

    fn number(&mut self, what: &str) -> PResult<u32> {
        let loc = self.loc();
        match self.peek() {
            Some(Tok::Num(n)) if !n.contains('.') => {
                let n = n.clone();
                self.pos += 1;
                match n.parse::<u32>() {
                    Ok(v) if v > 0 => Ok(v),
                    _ => self.error_at(&loc, format!("{what} must be a positive integer")),
                }
            }
            _ => self.unexpected(what),
        }
    }

    fn end_stmt(&mut self) {
        self.eat(&Tok::Semi);
    }

    /// Statement valid at file, diagram or process level.
    fn item(&mut self, d: &mut DiagramBuilder, diagram: usize, process: Option<&str>) -> PResult<()> {
        let loc = self.loc();
        let Some(tok) = self.peek().cloned() else {
            return self.unexpected("statement");
        };
        match tok {
            Tok::Ident(word) => match word.as_str() {
                "process" if process.is_none() => self.process(d, diagram),
                "event" | "variant-event" => match process {
                    Some(acr) => self.event(d, diagram, acr),
                    None => self.error_at(&loc, "events must be declared inside a process block"),
                },
                "node" => {
                    self.pos += 1;
                    let kind = self.ident("`and`, `and-join`, `and-fork` or `or`")?;
                    let id_loc = self.loc();
                    let id = self.ident("node identifier")?;
                    if is_event_id(&id) || id == "start" || id == "end" {
                        return self.error_at(&id_loc, format!("`{id}` cannot name a logical node"));
                    }
                    let node = match kind.as_str() {
                        "and" => Node::And { id: id.clone(), kind: None },
                        "and-join" => Node::And {
                            id: id.clone(),
                            kind: Some(AndKind::Join),
                        },
                        "and-fork" => Node::And {
                            id: id.clone(),
                            kind: Some(AndKind::Fork),
                        },
                        "or" => Node::Or(id.clone()),
                        other => return self.error_at(&loc, format!("unknown node kind `{other}`")),
                    };
                    if d.logical.contains_key(&id) {
                        return self.error_at(&id_loc, format!("logical node `{id}` declared twice"));
                    }
                    d.logical.insert(id, node.clone());
                    d.add_member(node, loc);
                    self.end_stmt();
                    Ok(())
                }
                "extern" => {
                    self.pos += 1;
                    let id_loc = self.loc();
                    let id = self.string("quoted event identifier")?;
                    if !is_event_id(&id) {
                        return self.error_at(
                            &id_loc,
                            format!("out-of-scope references must name an event (like \"SALE 7\"), found `{id}`"),
                        );
                    }
                    d.externs.insert(id.clone());
                    d.add_member(Node::Extern(id), loc);
                    self.end_stmt();
                    Ok(())
                }
                "business-object" => {
                    self.pos += 1;
                    let name = self.name("business object name")?;
                    self.out.business_objects.push(crate::derive::normalise_name(&name));
                    self.end_stmt();
                    Ok(())
                }
                "alias" => {
                    self.pos += 1;
                    let from = self.string("alias")?;
                    self.expect(Tok::Eq)?;
                    let to = self.string("event identifier")?;
                    self.out.aliases.push((from, to));
                    self.end_stmt();
                    Ok(())
                }
                "messages" => {
                    self.pos += 1;
                    match self.toks.get(self.pos) {
                        Some(Token {
                            tok: Tok::Raw(text), line, ..
                        }) => {
                            let (text, line) = (text.clone(), *line);
                            self.pos += 1;
                            let structures = parse_structures(&text, &self.file, line - 1)?;
                            self.out.structures.extend(structures);
                            Ok(())
                        }
                        _ => self.unexpected("`{`"),
                    }
                }
                _ => self.edge_or_anchor(d, process),
            },
            Tok::Num(_) | Tok::Str(_) => self.edge_or_anchor(d, process),
            _ => self.unexpected("statement"),
        }
    }

    fn endpoint(&mut self, process: Option<&str>) -> PResult<(RawEnd, Option<String>, Loc)> {
        let loc = self.loc();
        let end = match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                if process.is_none() {
                    return self.error_at(
                        &loc,
                        format!("bare event number `{n}` outside a process block; use a quoted identifier"),
                    );
                }
                RawEnd::Num(n)
            }
            Some(Tok::Str(s)) => RawEnd::Id(s),
            Some(Tok::Ident(w)) if w == "start" => RawEnd::Start,
            Some(Tok::Ident(w)) if w == "end" => RawEnd::End,
            Some(Tok::Ident(w)) => RawEnd::Logical(w),
            _ => return self.unexpected("precedence endpoint"),
        };
        self.pos += 1;
        Ok((end, process.map(str::to_string), loc))
    }

    fn edge_or_anchor(&mut self, d: &mut DiagramBuilder, process: Option<&str>) -> PResult<()> {
        let loc = self.loc();
        let first = self.endpoint(process)?;
        if !matches!(self.peek(), Some(Tok::Arrow)) {
            return match first.0 {
                RawEnd::Start => {
                    d.add_member(Node::Start, loc);
                    self.end_stmt();
                    Ok(())
                }
                RawEnd::End => {
                    d.add_member(Node::End, loc);
                    self.end_stmt();
                    Ok(())
                }
                _ => self.unexpected("`->`"),
            };
        }
        let mut chain = vec![first];
        while self.eat(&Tok::Arrow) {
            chain.push(self.endpoint(process)?);
        }
        let mut declared = None;
        if self.eat(&Tok::LBracket) {
            let hint_loc = self.loc();
            declared = match self.ident("`loopback` or `forward`")?.as_str() {
                "loopback" => Some(true),
                "forward" => Some(false),
                other => return self.error_at(&hint_loc, format!("unknown edge annotation `{other}`")),
            };
            self.expect(Tok::RBracket)?;
        }
        for pair in chain.windows(2) {
            d.edges.push(RawEdge {
                from: pair[0].clone(),
                to: pair[1].clone(),
                declared,
                loc: pair[0].2.clone(),
            });
        }
        self.end_stmt();
        Ok(())
    }

    fn process(&mut self, d: &mut DiagramBuilder, diagram: usize) -> PResult<()> {
        let loc = self.loc();
        self.pos += 1;
        let acr_loc = self.loc();
        let acronym = self.ident("process acronym")?;
        if !is_acronym(&acronym) {
            return self.error_at(&acr_loc, format!("process acronym `{acronym}` must be uppercase alphanumeric"));
        }
        let name = match self.peek() {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                s
            }
            _ => acronym.clone(),
        };
        self.out.processes.push(Process {
            acronym: acronym.clone(),
            name,
            loc,
        });
        self.blocks += 1;
        self.expect(Tok::LBrace)?;
        while !self.eat(&Tok::RBrace) {
            if self.pos >= self.toks.len() {
                return self.unexpected("`}` closing the process");
            }
            self.item(d, diagram, Some(&acronym))?;
        }
        Ok(())
    }

    fn event(&mut self, d: &mut DiagramBuilder, diagram: usize, acronym: &str) -> PResult<()> {
        let loc = self.loc();
        let specialised = self.ident("event")? == "variant-event";
        let number = self.number("event number")?;
        let name = self.string("event name")?;
        let id = event_id(acronym, number);
        self.expect(Tok::LBrace)?;
        let body = self.body(&id, specialised, &[])?;
        if specialised && body.variants.is_empty() {
            return self.error_at(&loc, format!("variant-event {id} declares no variants"));
        }
        d.defined.insert(id.clone());
        d.add_member(Node::Event(id.clone()), loc.clone());
        super::for_each_variant(&body.variants, &mut |v| {
            d.defined.insert(v.id.clone());
            d.variants.insert(v.id.clone());
            d.members.push(Member {
                node: Node::Variant(v.id.clone()),
                loc: v.loc.clone(),
            });
        });
        self.out.events.push((
            CommunicativeEvent {
                process: acronym.to_string(),
                number,
                name,
                id,
                roles: body.roles,
                interactions: body.interactions,
                variants: body.variants,
                goal: body.goal,
                precondition_text: body.precondition,
                diagram,
                loc,
            },
            self.blocks,
        ));
        Ok(())
    }

    /// Statements of an event or variant body, after its `{`.
    fn body(&mut self, id: &str, allow_variants: bool, inherited_primary: &[String]) -> PResult<Body> {
        let mut b = Body::default();
        loop {
            let loc = self.loc();
            if self.eat(&Tok::RBrace) {
                break;
            }
            let word = match self.peek() {
                Some(Tok::Ident(w)) => w.clone(),
                Some(Tok::Semi) => {
                    self.pos += 1;
                    continue;
                }
                _ => return self.unexpected("event statement or `}`"),
            };
            self.pos += 1;
            match word.as_str() {
                "primary" | "receiver" | "interface" => {
                    let kind = match word.as_str() {
                        "primary" => RoleKind::Primary,
                        "receiver" => RoleKind::Receiver,
                        _ => RoleKind::Interface,
                    };
                    let role_name = self.name("role name")?;
                    b.roles.push(RoleBinding { role_name, kind, loc });
                }
                "support" => {
                    return self.error_at(
                        &loc,
                        "support actors belong in the event specification template, not the diagram",
                    )
                }
                "in" => {
                    let label = self.string("interaction label")?;
                    let mut message_ref = None;
                    let mut counterpart = String::new();
                    loop {
                        if self.eat_ident("message") {
                            self.expect(Tok::Eq)?;
                            message_ref = Some(self.name("message structure name")?);
                        } else if self.eat_ident("from") {
                            counterpart = self.name("role name")?;
                        } else {
                            break;
                        }
                    }
                    b.interactions.push(CommunicativeInteraction {
                        direction: Direction::Ingoing,
                        name: label,
                        message_ref,
                        counterpart_role: counterpart,
                        loc,
                    });
                }
                "out" => {
                    let label = self.string("interaction label")?;
                    if !self.eat_ident("to") {
                        return self.unexpected("`to`");
                    }
                    let role = self.name("role name")?;
                    b.interactions.push(CommunicativeInteraction {
                        direction: Direction::Outgoing,
                        name: label,
                        message_ref: None,
                        counterpart_role: role,
                        loc,
                    });
                }
                "goal" => b.goal = Some(self.string("goal text")?),
                "precondition" => b.precondition = Some(self.string("precondition text")?),
                "variant" if allow_variants => {
                    let number = self.number("variant number")?;
                    let name = self.string("variant name")?;
                    let mut condition = None;
                    if self.eat(&Tok::LBracket) {
                        if !self.eat_ident("condition") {
                            return self.unexpected("`condition`");
                        }
                        self.expect(Tok::Eq)?;
                        condition = Some(FormulaText::new(self.string("condition formula")?));
                        self.expect(Tok::RBracket)?;
                    }
                    self.expect(Tok::LBrace)?;
                    let vid = variant_id(id, number);
                    let mut primaries: Vec<String> = inherited_primary.to_vec();
                    primaries.extend(
                        b.roles
                            .iter()
                            .filter(|r| r.kind == RoleKind::Primary)
                            .map(|r| r.role_name.clone()),
                    );
                    let inner = self.body(&vid, true, &primaries)?;
                    b.variants.push(EventVariant {
                        number,
                        name,
                        id: vid,
                        condition,
                        roles: inner.roles,
                        interactions: inner.interactions,
                        variants: inner.variants,
                        loc,
                    });
                }
                "variant" => return self.error_at(&loc, "variants require `variant-event`"),
                other => return self.error_at(&loc, format!("unknown event statement `{other}`")),
            }
            self.end_stmt();
        }
        let default_sender = b
            .roles
            .iter()
            .find(|r| r.kind == RoleKind::Primary)
            .map(|r| r.role_name.clone())
            .or_else(|| inherited_primary.first().cloned())
            .unwrap_or_default();
        for i in &mut b.interactions {
            if i.direction == Direction::Ingoing && i.counterpart_role.is_empty() {
                i.counterpart_role = default_sender.clone();
            }
        }
        Ok(b)
    }

    fn resolve(&self, d: &DiagramBuilder, end: &(RawEnd, Option<String>, Loc)) -> PResult<Node> {
        let (raw, process, loc) = end;
        match raw {
            RawEnd::Start => Ok(Node::Start),
            RawEnd::End => Ok(Node::End),
            RawEnd::Num(n) => {
                let acr = process.as_deref().unwrap_or_default();
                let mut parts = n.splitn(2, '.');
                let head = parts.next().unwrap_or_default();
                let id = match parts.next() {
                    Some(rest) => format!("{acr} {head}.{rest}"),
                    None => format!("{acr} {head}"),
                };
                self.defined_node(d, &id, loc)
            }
            RawEnd::Id(id) => {
                if d.defined.contains(id) {
                    self.defined_node(d, id, loc)
                } else if d.externs.contains(id) {
                    Ok(Node::Extern(id.clone()))
                } else {
                    self.error_at(
                        loc,
                        format!("`{id}` is neither defined in diagram \"{}\" nor declared extern", d.name),
                    )
                }
            }
            RawEnd::Logical(id) => match d.logical.get(id) {
                Some(node) => Ok(node.clone()),
                None => self.error_at(loc, format!("unknown node `{id}`")),
            },
        }
    }

    fn defined_node(&self, d: &DiagramBuilder, id: &str, loc: &Loc) -> PResult<Node> {
        if d.variants.contains(id) {
            Ok(Node::Variant(id.to_string()))
        } else if d.defined.contains(id) {
            Ok(Node::Event(id.to_string()))
        } else if d.externs.contains(id) {
            Ok(Node::Extern(id.to_string()))
        } else {
            self.error_at(loc, format!("event `{id}` is not defined in diagram \"{}\"", d.name))
        }
    }

    fn finish_diagram(&mut self, mut d: DiagramBuilder) -> PResult<()> {
        let mut edges = Vec::with_capacity(d.edges.len());
        for raw in &d.edges {
            let source = self.resolve(&d, &raw.from)?;
            let target = self.resolve(&d, &raw.to)?;
            edges.push(PrecedenceRelation {
                source,
                target,
                loopback: false,
                declared_loopback: raw.declared,
                loc: raw.loc.clone(),
            });
        }
        for e in &edges {
            for (node, loc) in [(&e.source, &e.loc), (&e.target, &e.loc)] {
                if matches!(node, Node::Start | Node::End) {
                    d.add_member(node.clone(), loc.clone());
                }
            }
        }
        self.out.diagrams.push(Diagram {
            name: d.name,
            members: d.members,
            edges,
            loc: d.loc,
        });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(src: &str) -> Result<ModelRepository, ModelError> {
        parse_model(&[SourceFile::new("m.ced", src)])
    }

    #[test]
    fn empty_process_block() {
        let repo = model("process SALE \"Sales management\" { }").unwrap();
        assert_eq!(repo.processes["SALE"].name, "Sales management");
        assert!(repo.events.is_empty());
    }

    #[test]
    fn events_variants_and_edges() {
        let src = r#"
diagram "Sales" {
  extern "CLIE 1"
  process SALE "Sales management" {
    event 1 "A client places an order" {
      primary Client; interface Salesman
      in "Order" message=ORDER
      out "Order" to "Sales manager"
    }
    variant-event 3 "Supplier evaluates order" {
      primary Supplier
      variant 1 "Supplier accepts" [condition=":accepted"] { out "Acceptance" to Client }
      variant 2 "Supplier rejects" { variant 1 "Nested" { } }
    }
    start -> 1 -> 3
    3.1 -> end
    "CLIE 1" -> 1
    3.2 -> 1 [loopback]
  }
}
"#;
        let repo = model(src).unwrap();
        assert_eq!(repo.events.len(), 2);
        let e1 = &repo.events[0];
        assert_eq!(e1.id, "SALE 1");
        assert_eq!(e1.interactions[0].counterpart_role, "Client");
        assert_eq!(e1.interactions[1].counterpart_role, "Sales manager");
        let e3 = &repo.events[1];
        assert_eq!(e3.variants[0].id, "SALE 3.1");
        assert_eq!(e3.variants[1].variants[0].id, "SALE 3.2.1");
        assert_eq!(e3.variants[0].condition.as_ref().unwrap().field_refs(), ["accepted"]);
        let d = &repo.diagrams[0];
        assert_eq!(d.edges.len(), 5);
        assert_eq!(d.edges[0].source, Node::Start);
        assert_eq!(d.edges[2].source, Node::Variant("SALE 3.1".into()));
        assert_eq!(d.edges[3].source, Node::Extern("CLIE 1".into()));
        assert_eq!(d.edges[4].declared_loopback, Some(true));
        assert!(d.has_member(&super::super::NodeKey::End));
    }

    #[test]
    fn implicit_diagram_named_after_file() {
        let repo = parse_model(&[SourceFile::new("dir/client.ced", "process CLIE { event 1 \"x\" { } }")]).unwrap();
        assert_eq!(repo.diagrams[0].name, "client");
        assert_eq!(repo.events[0].diagram, 0);
    }

    #[test]
    fn duplicate_definition_across_files() {
        let a = SourceFile::new("a.ced", "process SALE { event 1 \"x\" { } }");
        let b = SourceFile::new("b.ced", "process SALE { event 1 \"y\" { } }");
        let err = parse_model(&[a, b]).unwrap_err();
        assert!(matches!(err, ModelError::DuplicateDefinition { ref id, .. } if id == "SALE 1"), "{err}");
    }

    #[test]
    fn duplicate_number_in_one_block_is_kept_for_linting() {
        let repo = model("process SALE { event 1 \"x\" { } event 1 \"y\" { } }").unwrap();
        assert_eq!(repo.events.len(), 2);
    }

    #[test]
    fn syntax_errors() {
        let cases = [
            ("process sale { }", "uppercase"),
            ("process SALE { event 1 \"x\" { support Courier } }", "support actors"),
            ("process SALE { event 1 \"x\" { } 1 -> 2 }", "not defined"),
            ("extern \"or1\"", "must name an event"),
            ("process SALE { event 1 \"x\" { } } 1 -> 1", "bare event number"),
            ("process SALE { variant-event 1 \"x\" { } }", "no variants"),
            ("process SALE { event 1 \"x\" { variant 1 \"v\" { } } }", "variant-event"),
            ("process SALE { event 1 \"x\" { } 1 -> J }", "unknown node"),
        ];
        for (src, needle) in cases {
            let err = model(src).unwrap_err();
            assert!(err.to_string().contains(needle), "{src}: {err}");
        }
    }

    #[test]
    fn inline_messages_keep_file_lines() {
        let src = "process SALE { event 1 \"x\" { in \"A\" message=A } }\nmessages {\n  A = < a:i:text >\n}\n";
        let repo = model(src).unwrap();
        assert_eq!(repo.message_structures[0].loc.line, 3);
        let bad = "messages {\n\n  A = < >\n}";
        match model(bad).unwrap_err() {
            ModelError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
    }
}
