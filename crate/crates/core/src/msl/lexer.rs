use super::MslError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    /// A run of name characters; internal whitespace collapsed.
    Name(String),
    Str(String),
    Eq,
    LAngle,
    RAngle,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Pipe,
    Plus,
    Colon,
    Slash,
    Semi,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Name(n) => format!("name `{n}`"),
            Tok::Str(_) => "string".to_string(),
            Tok::Eq => "`=`".into(),
            Tok::LAngle => "`<`".into(),
            Tok::RAngle => "`>`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Semi => "`;`".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: u32,
    pub column: u32,
}

fn punct(c: char) -> Option<Tok> {
    Some(match c {
        '=' => Tok::Eq,
        '<' => Tok::LAngle,
        '>' => Tok::RAngle,
        '{' => Tok::LBrace,
        '}' => Tok::RBrace,
        '[' => Tok::LBracket,
        ']' => Tok::RBracket,
        '|' => Tok::Pipe,
        '+' => Tok::Plus,
        ':' => Tok::Colon,
        '/' => Tok::Slash,
        ';' => Tok::Semi,
        _ => return None,
    })
}

/// `line_offset` shifts reported lines for sources embedded in other files.
pub(crate) fn tokenize(src: &str, line_offset: u32) -> Result<Vec<Token>, MslError> {
    let mut out = Vec::new();
    let mut line = 1 + line_offset;
    let mut col = 1u32;
    let mut chars = src.chars().peekable();

    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '#' => {
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '"' => {
                let (sl, sc) = (line, col);
                chars.next();
                col += 1;
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => {
                            return Err(MslError::Syntax {
                                line: sl,
                                column: sc,
                                message: "unterminated string".into(),
                            })
                        }
                        Some('"') => {
                            col += 1;
                            break;
                        }
                        Some('\\') => {
                            col += 1;
                            match chars.next() {
                                Some('n') => s.push('\n'),
                                Some(e) => s.push(e),
                                None => continue,
                            }
                            col += 1;
                        }
                        Some('\n') => {
                            s.push('\n');
                            line += 1;
                            col = 1;
                        }
                        Some(o) => {
                            s.push(o);
                            col += 1;
                        }
                    }
                }
                out.push(Token {
                    tok: Tok::Str(s),
                    line: sl,
                    column: sc,
                });
            }
            c => {
                if let Some(tok) = punct(c) {
                    out.push(Token { tok, line, column: col });
                    chars.next();
                    col += 1;
                    continue;
                }
                let (sl, sc) = (line, col);
                let mut raw = String::new();
                while let Some(&n) = chars.peek() {
                    if n == '\n' || n == '#' || n == '"' || punct(n).is_some() {
                        break;
                    }
                    raw.push(n);
                    chars.next();
                    col += 1;
                }
                let name = raw.split_whitespace().collect::<Vec<_>>().join(" ");
                if !name.is_empty() {
                    out.push(Token {
                        tok: Tok::Name(name),
                        line: sl,
                        column: sc,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_keep_inner_spaces_and_stop_at_newline() {
        let toks = tokenize("< Order   number +\nPerson in charge >", 0).unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::LAngle,
                Tok::Name("Order number".into()),
                Tok::Plus,
                Tok::Name("Person in charge".into()),
                Tok::RAngle
            ]
        );
        assert_eq!((toks[3].line, toks[3].column), (2, 1));
    }

    #[test]
    fn strings_and_comments() {
        let toks = tokenize("a \"x # \\\"y\" # trailing\nb", 0).unwrap();
        assert_eq!(toks[1].tok, Tok::Str("x # \"y".into()));
        assert_eq!(toks.len(), 3);
        assert!(tokenize("\"open", 0).is_err());
    }
}
