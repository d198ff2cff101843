use std::sync::Arc;

use super::lexer::{tokenize, Tok, Token};
use super::{
    Aggregation, DomainRef, Field, FieldProperties, FormulaText, Iteration, MessageStructure, MslError,
    Specialisation, Substructure,
};
use crate::diagnostic::Loc;

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Accept a specialisation as initial substructure so the violation can
    /// be reported as a finding instead of a parse failure.
    pub allow_specialisation_root: bool,
    /// Added to every reported line (for structures embedded in other files).
    pub line_offset: u32,
}

/// Parse text holding exactly one message structure.
pub fn parse_message_structure(source: &str) -> Result<MessageStructure, MslError> {
    let file: Arc<str> = Arc::from("");
    let mut all = parse_msl(source, &file, ParseOptions::default())?;
    match all.len() {
        1 => Ok(all.remove(0)),
        0 => Err(MslError::Syntax {
            line: 1,
            column: 1,
            message: "no message structure found".into(),
        }),
        _ => Err(MslError::Syntax {
            line: all[1].loc.line,
            column: all[1].loc.column,
            message: "expected a single message structure".into(),
        }),
    }
}

/// Parse an `.msl` document: any number of structures, each optionally
/// followed by `field <path> { key=value … }` property blocks.
pub fn parse_msl(source: &str, file: &Arc<str>, opts: ParseOptions) -> Result<Vec<MessageStructure>, MslError> {
    let tokens = tokenize(source, opts.line_offset)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        file: Arc::clone(file),
        opts,
    };
    let mut out = Vec::new();
    while !p.at_end() {
        out.push(p.structure()?);
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    file: Arc<str>,
    opts: ParseOptions,
}

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + offset).map(|t| &t.tok)
    }

    fn here(&self) -> (u32, u32) {
        match self.tokens.get(self.pos).or_else(|| self.tokens.last()) {
            Some(t) => (t.line, t.column),
            None => (1 + self.opts.line_offset, 1),
        }
    }

    fn loc(&self) -> Loc {
        let (line, column) = self.here();
        Loc::new(&self.file, line, column)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, MslError> {
        let (line, column) = self.here();
        Err(MslError::Syntax {
            line,
            column,
            message: message.into(),
        })
    }

    fn unexpected<T>(&self, expected: &str) -> Result<T, MslError> {
        match self.peek() {
            Some(t) => self.error(format!("expected {expected}, found {}", t.describe())),
            None => self.error(format!("expected {expected}, found end of input")),
        }
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), MslError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.unexpected(&tok.describe())
        }
    }

    fn name(&mut self, what: &str) -> Result<String, MslError> {
        match self.peek() {
            Some(Tok::Name(n)) => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            _ => self.unexpected(what),
        }
    }

    fn structure(&mut self) -> Result<MessageStructure, MslError> {
        let loc = self.loc();
        let name = self.name("structure name")?;
        if !self.eat(&Tok::Eq) {
            return self.unexpected("`=` after structure name");
        }
        let root_loc = self.loc();
        let root = self.complex(Some(name.clone()))?;
        match &root {
            Substructure::Specialisation(_) if !self.opts.allow_specialisation_root => {
                return Err(MslError::Structure {
                    line: root_loc.line,
                    column: root_loc.column,
                    message: format!("initial substructure of `{name}` cannot be a specialisation"),
                });
            }
            Substructure::Field(_) => unreachable!("complex() never yields a field"),
            _ => {}
        }
        let mut ms = MessageStructure { name, root, loc };
        while self.at_field_block() {
            self.field_block(&mut ms)?;
        }
        Ok(ms)
    }

    fn complex(&mut self, name: Option<String>) -> Result<Substructure, MslError> {
        let loc = self.loc();
        match self.peek() {
            Some(Tok::LAngle) => {
                self.pos += 1;
                let children = self.list(&Tok::RAngle, "aggregation")?;
                self.expect(Tok::RAngle)?;
                Ok(Substructure::Aggregation(Aggregation { name, children, loc }))
            }
            Some(Tok::LBrace) => {
                self.pos += 1;
                let items = self.list(&Tok::RBrace, "iteration")?;
                self.expect(Tok::RBrace)?;
                let body = implicit_aggregation(items, &loc);
                Ok(Substructure::Iteration(Iteration {
                    name,
                    body: Box::new(body),
                    loc,
                }))
            }
            Some(Tok::LBracket) => {
                self.pos += 1;
                let mut variants = Vec::new();
                loop {
                    let vloc = self.loc();
                    let items = self.list(&Tok::RBracket, "specialisation variant")?;
                    variants.push(implicit_aggregation(items, &vloc));
                    if self.eat(&Tok::Pipe) {
                        continue;
                    }
                    self.expect(Tok::RBracket)?;
                    break;
                }
                Ok(Substructure::Specialisation(Specialisation { name, variants, loc }))
            }
            _ => self.unexpected("`<`, `{` or `[`"),
        }
    }

    fn list(&mut self, close: &Tok, what: &str) -> Result<Vec<Substructure>, MslError> {
        if self.peek() == Some(close) || self.peek() == Some(&Tok::Pipe) {
            return self.error(format!("empty {what}"));
        }
        let mut items = vec![self.substructure()?];
        while self.eat(&Tok::Plus) {
            items.push(self.substructure()?);
        }
        Ok(items)
    }

    fn substructure(&mut self) -> Result<Substructure, MslError> {
        match self.peek() {
            Some(Tok::LAngle | Tok::LBrace | Tok::LBracket) => self.complex(None),
            Some(Tok::Name(_)) => {
                let loc = self.loc();
                let name = self.name("name")?;
                if self.eat(&Tok::Eq) {
                    return self.complex(Some(name));
                }
                self.field(name, loc)
            }
            _ => self.unexpected("substructure"),
        }
    }

    fn field(&mut self, name: String, loc: Loc) -> Result<Substructure, MslError> {
        let mut props = FieldProperties::new(super::AcquisitionOp::Input, DomainRef::Basic("text".into()));
        if self.eat(&Tok::Colon) {
            let op = self.name("acquisition operation")?;
            props.op = match op.parse() {
                Ok(op) => op,
                Err(e) => {
                    self.pos -= 1;
                    return self.error(e);
                }
            };
            self.expect(Tok::Colon)?;
            props.domain = self.domain()?;
        }
        if let Some(Tok::Str(s)) = self.peek() {
            props.example = Some(s.clone());
            self.pos += 1;
        }
        Ok(Substructure::Field(Field { name, props, loc }))
    }

    fn domain(&mut self) -> Result<DomainRef, MslError> {
        if self.eat(&Tok::LBracket) {
            let mut tokens = vec![self.name("enumeration literal")?];
            while self.eat(&Tok::Pipe) {
                tokens.push(self.name("enumeration literal")?);
            }
            if tokens.len() < 2 {
                return self.error("enumerated domain needs at least two literals");
            }
            self.expect(Tok::RBracket)?;
            return Ok(DomainRef::EnumLiteral(tokens));
        }
        Ok(DomainRef::Basic(self.name("domain")?))
    }

    fn at_field_block(&self) -> bool {
        let Some(Tok::Name(n)) = self.peek() else {
            return false;
        };
        if !n.starts_with("field ") {
            return false;
        }
        let mut i = 1;
        while self.peek_at(i) == Some(&Tok::Slash) && matches!(self.peek_at(i + 1), Some(Tok::Name(_))) {
            i += 2;
        }
        self.peek_at(i) == Some(&Tok::LBrace)
    }

    fn field_block(&mut self, ms: &mut MessageStructure) -> Result<(), MslError> {
        let header_pos = self.pos;
        let first = self.name("field")?;
        let mut path = vec![first["field ".len()..].to_string()];
        while self.eat(&Tok::Slash) {
            path.push(self.name("path segment")?);
        }
        self.expect(Tok::LBrace)?;

        let matches: Vec<usize> = ms
            .fields()
            .iter()
            .enumerate()
            .filter(|(_, (p, _))| p.segments.ends_with(&path))
            .map(|(i, _)| i)
            .collect();
        let target = match matches.as_slice() {
            [one] => *one,
            [] => {
                self.pos = header_pos;
                return self.error(format!("no field `{}` in `{}`", path.join("/"), ms.name));
            }
            _ => {
                self.pos = header_pos;
                return self.error(format!("field reference `{}` is ambiguous; use a path", path.join("/")));
            }
        };

        let mut pending_key: Option<String> = None;
        loop {
            let key = match pending_key.take() {
                Some(k) => k,
                None => {
                    if self.eat(&Tok::RBrace) {
                        break;
                    }
                    if self.eat(&Tok::Semi) {
                        continue;
                    }
                    self.name("property name")?
                }
            };
            let key_pos = self.pos.saturating_sub(1);
            self.expect(Tok::Eq)?;
            let value = match self.bump() {
                Some(Tok::Str(s)) => s,
                Some(Tok::Name(n)) => {
                    // `mandatory=true visible=false` lexes as one run.
                    let mut words = n.splitn(2, ' ');
                    let v = words.next().unwrap_or_default().to_string();
                    if let Some(rest) = words.next() {
                        pending_key = Some(rest.to_string());
                    }
                    v
                }
                _ => {
                    self.pos -= 1;
                    return self.unexpected("property value");
                }
            };
            let field = nth_field_mut(&mut ms.root, target).expect("index from fields()");
            if let Err(msg) = set_property(&mut field.props, &key, value) {
                self.pos = key_pos;
                return self.error(msg);
            }
        }
        Ok(())
    }
}

fn implicit_aggregation(mut items: Vec<Substructure>, loc: &Loc) -> Substructure {
    if items.len() == 1 {
        items.remove(0)
    } else {
        Substructure::Aggregation(Aggregation {
            name: None,
            children: items,
            loc: loc.clone(),
        })
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" => Ok(true),
        "false" | "no" => Ok(false),
        _ => Err(format!("expected true or false, found `{v}`")),
    }
}

fn set_property(props: &mut FieldProperties, key: &str, value: String) -> Result<(), String> {
    match key {
        "example" => props.example = Some(value),
        "description" => props.description = Some(value),
        "label" => props.label = Some(value),
        "link" => props.link_with_memory = Some(value),
        "mandatory" => props.mandatory = Some(parse_bool(&value)?),
        "init" => props.init_formula = Some(FormulaText::new(value)),
        "visible" => props.visible = Some(parse_bool(&value)?),
        "formula" => props.derivation_formula = Some(FormulaText::new(value)),
        other => return Err(format!("unknown field property `{other}`")),
    }
    Ok(())
}

pub(crate) fn nth_field_mut(node: &mut Substructure, n: usize) -> Option<&mut Field> {
    fn walk<'a>(node: &'a mut Substructure, n: usize, seen: &mut usize) -> Option<&'a mut Field> {
        match node {
            Substructure::Field(f) => {
                if *seen == n {
                    return Some(f);
                }
                *seen += 1;
                None
            }
            Substructure::Aggregation(a) => a.children.iter_mut().find_map(|c| walk(c, n, seen)),
            Substructure::Iteration(i) => walk(&mut i.body, n, seen),
            Substructure::Specialisation(s) => s.variants.iter_mut().find_map(|c| walk(c, n, seen)),
        }
    }
    let mut seen = 0;
    walk(node, n, &mut seen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msl::AcquisitionOp;

    #[test]
    fn minimal_aggregation() {
        let ms = parse_message_structure("A = < a >").unwrap();
        assert_eq!(ms.name, "A");
        let Substructure::Aggregation(agg) = &ms.root else {
            panic!("root should be an aggregation")
        };
        assert_eq!(agg.name.as_deref(), Some("A"));
        assert_eq!(agg.children.len(), 1);
        assert_eq!(agg.children[0].name(), Some("a"));
    }

    #[test]
    fn specialisation_root_is_a_structure_error() {
        let err = parse_message_structure("A = [ a | b ]").unwrap_err();
        assert!(matches!(err, MslError::Structure { line: 1, column: 5, .. }), "{err:?}");
        let file: Arc<str> = Arc::from("x.msl");
        let lenient = ParseOptions {
            allow_specialisation_root: true,
            ..Default::default()
        };
        let all = parse_msl("A = [ a | b ]", &file, lenient).unwrap();
        assert!(matches!(all[0].root, Substructure::Specialisation(_)));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let cases = [
            ("A < a >", "`=`"),
            ("A = < >", "empty aggregation"),
            ("A = { }", "empty iteration"),
            ("A = < a + >", "expected substructure"),
            ("A = < a \n + b }", "expected `>`"),
            ("A = < a : x : text >", "acquisition"),
            ("A = < a : i : [one] >", "two literals"),
        ];
        for (src, needle) in cases {
            let err = parse_message_structure(src).unwrap_err();
            assert!(err.to_string().contains(needle), "{src}: {err}");
        }
        let err = parse_message_structure("A = < a \n + b }").unwrap_err();
        assert_eq!((err.line(), err.column()), (2, 6));
    }

    #[test]
    fn field_properties_block() {
        let src = r#"
LINE = < Price : i : money + Quantity : i : number + Amount : d : money >
field Amount { formula="(:Price * :Quantity)" label="Amount" mandatory=true visible=false }
field LINE/Price { description="Catalogue price" }
"#;
        let ms = parse_message_structure(src).unwrap();
        let fields = ms.fields();
        let amount = fields[2].1;
        assert_eq!(amount.props.op, AcquisitionOp::Derivation);
        assert_eq!(amount.props.derivation_formula.as_ref().unwrap().field_refs(), ["Price", "Quantity"]);
        assert_eq!(amount.props.mandatory, Some(true));
        assert_eq!(amount.props.visible, Some(false));
        assert_eq!(fields[0].1.props.description.as_deref(), Some("Catalogue price"));
    }

    #[test]
    fn field_block_errors() {
        let err = parse_message_structure("A = < a >\nfield b { label=\"x\" }").unwrap_err();
        assert!(err.to_string().contains("no field `b`"));
        let err = parse_message_structure("A = < a >\nfield a { colour=\"x\" }").unwrap_err();
        assert!(err.to_string().contains("unknown field property"));
    }

    #[test]
    fn several_structures_per_file() {
        let file: Arc<str> = Arc::from("m.msl");
        let all = parse_msl("A = < a >\n# second\nB = { b + c }", &file, ParseOptions::default()).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[1].loc.line, 3);
        assert!(matches!(all[1].root, Substructure::Iteration(_)));
    }
}
