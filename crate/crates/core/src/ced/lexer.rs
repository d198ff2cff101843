#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    /// Digits with optional `.`-separated parts: `3`, `3.1`, `5.2.2`.
    Num(String),
    Str(String),
    /// Raw text of a `messages { … }` block.
    Raw(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Eq,
    Arrow,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Raw(_) => "messages block".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Arrow => "`->`".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: u32,
    pub column: u32,
}

#[derive(Debug)]
pub(crate) struct LexError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    column: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_comment(&mut self) {
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            self.bump();
        }
    }

    fn string(&mut self, line: u32, column: u32) -> Result<String, LexError> {
        let mut s = String::new();
        loop {
            match self.bump() {
                None => {
                    return Err(LexError {
                        line,
                        column,
                        message: "unterminated string".into(),
                    })
                }
                Some('"') => return Ok(s),
                Some('\\') => match self.bump() {
                    Some('n') => s.push('\n'),
                    Some(c) => s.push(c),
                    None => {}
                },
                Some(c) => s.push(c),
            }
        }
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        chars: src.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut out: Vec<Token> = Vec::new();
    while let Some(c) = cur.peek() {
        let (line, column) = (cur.line, cur.column);
        let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line, column });
        match c {
            c if c.is_whitespace() => {
                cur.bump();
            }
            '#' => cur.skip_comment(),
            '"' => {
                cur.bump();
                let s = cur.string(line, column)?;
                push(&mut out, Tok::Str(s));
            }
            '{' => {
                cur.bump();
                let raw_block = matches!(out.last(), Some(Token { tok: Tok::Ident(k), .. }) if k == "messages");
                if raw_block {
                    let (bl, bc) = (cur.line, cur.column);
                    let raw = raw_until_close(&mut cur, line, column)?;
                    // Raw text starts right after `{`; pad so embedded lines keep file numbering.
                    let padded = format!("{}{}", " ".repeat(bc.saturating_sub(1) as usize), raw);
                    out.push(Token {
                        tok: Tok::Raw(padded),
                        line: bl,
                        column: 1,
                    });
                } else {
                    push(&mut out, Tok::LBrace);
                }
            }
            '}' => {
                cur.bump();
                push(&mut out, Tok::RBrace);
            }
            '[' => {
                cur.bump();
                push(&mut out, Tok::LBracket);
            }
            ']' => {
                cur.bump();
                push(&mut out, Tok::RBracket);
            }
            ';' => {
                cur.bump();
                push(&mut out, Tok::Semi);
            }
            '=' => {
                cur.bump();
                push(&mut out, Tok::Eq);
            }
            '-' => {
                cur.bump();
                if cur.peek() == Some('>') {
                    cur.bump();
                    push(&mut out, Tok::Arrow);
                } else {
                    return Err(LexError {
                        line,
                        column,
                        message: "unexpected `-`".into(),
                    });
                }
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(n) = cur.peek() {
                    if n.is_ascii_digit() || (n == '.' && !s.ends_with('.')) {
                        s.push(n);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                if s.ends_with('.') {
                    return Err(LexError {
                        line,
                        column,
                        message: format!("malformed number `{s}`"),
                    });
                }
                push(&mut out, Tok::Num(s));
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(n) = cur.peek() {
                    if n.is_alphanumeric() || n == '_' {
                        s.push(n);
                        cur.bump();
                    } else if n == '-' {
                        // `a->b` keeps the arrow; `and-join` keeps the dash.
                        let mut ahead = cur.chars.clone();
                        ahead.next();
                        if ahead.peek() == Some(&'>') {
                            break;
                        }
                        s.push(n);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                push(&mut out, Tok::Ident(s));
            }
            other => {
                return Err(LexError {
                    line,
                    column,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

/// Text up to the brace closing an already-consumed `{`, respecting quoted
/// strings and `#` comments. The closing brace is consumed.
fn raw_until_close(cur: &mut Cursor<'_>, line: u32, column: u32) -> Result<String, LexError> {
    let mut depth = 1usize;
    let mut raw = String::new();
    while let Some(c) = cur.bump() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Ok(raw);
                }
            }
            '"' => {
                raw.push(c);
                while let Some(n) = cur.bump() {
                    raw.push(n);
                    if n == '\\' {
                        if let Some(e) = cur.bump() {
                            raw.push(e);
                        }
                    } else if n == '"' {
                        break;
                    }
                }
                continue;
            }
            '#' => {
                raw.push(c);
                while let Some(n) = cur.peek() {
                    if n == '\n' {
                        break;
                    }
                    raw.push(n);
                    cur.bump();
                }
                continue;
            }
            _ => {}
        }
        raw.push(c);
    }
    Err(LexError {
        line,
        column,
        message: "unterminated messages block".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn arrows_dashes_and_paths() {
        assert_eq!(
            toks("a->b node and-join J 3.1 -> \"SALE 7\""),
            vec![
                Tok::Ident("a".into()),
                Tok::Arrow,
                Tok::Ident("b".into()),
                Tok::Ident("node".into()),
                Tok::Ident("and-join".into()),
                Tok::Ident("J".into()),
                Tok::Num("3.1".into()),
                Tok::Arrow,
                Tok::Str("SALE 7".into()),
            ]
        );
    }

    #[test]
    fn messages_block_is_raw() {
        let t = tokenize("messages { A = { B = < x > } \"}\" # }\n}\nstart").unwrap();
        match &t[1].tok {
            Tok::Raw(r) => assert!(r.contains("A = { B = < x > }") && r.contains("# }")),
            other => panic!("{other:?}"),
        }
        assert_eq!(t[2].tok, Tok::Ident("start".into()));
        assert_eq!(t[2].line, 3);
    }

    #[test]
    fn errors() {
        assert!(tokenize("a - b").is_err());
        assert!(tokenize("3.").is_err());
        assert!(tokenize("\"open").is_err());
        assert!(tokenize("messages { < ").is_err());
    }
}
