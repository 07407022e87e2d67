//! Tokenizer shared by the model language and the certificate sidecars.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Colon,
    Assign,
    EqEq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Newline,
    End,
}

impl Tok {
    /// How the token reads in diagnostics.
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Number(v) => format!("number {v}"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Colon => "':'".into(),
            Tok::Assign => "'='".into(),
            Tok::EqEq => "'=='".into(),
            Tok::Ne => "'!='".into(),
            Tok::Lt => "'<'".into(),
            Tok::Le => "'<='".into(),
            Tok::Gt => "'>'".into(),
            Tok::Ge => "'>='".into(),
            Tok::Newline => "end of line".into(),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

/// A syntax or validation problem, with its position and the alternatives
/// the parser would have accepted.
#[derive(Debug, Clone)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
    pub expected: Vec<&'static str>,
}

impl ParseError {
    pub fn new(line: u32, col: u32, message: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            message: message.into(),
            expected: Vec::new(),
        }
    }

    pub fn expecting(mut self, expected: Vec<&'static str>) -> Self {
        self.expected = expected;
        self
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.col, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

pub fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out: Vec<Spanned> = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    while let Some(&c) = chars.peek() {
        let (tok_line, tok_col) = (line, col);
        let tok = match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
                // Collapse runs of blank lines into a single separator.
                if matches!(out.last().map(|s| &s.tok), Some(Tok::Newline) | None) {
                    continue;
                }
                out.push(Spanned {
                    tok: Tok::Newline,
                    line: tok_line,
                    col: tok_col,
                });
                continue;
            }
            ' ' | '\t' | '\r' => {
                chars.next();
                col += 1;
                continue;
            }
            '#' => {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    chars.next();
                }
                continue;
            }
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            '=' | '!' | '<' | '>' => {
                chars.next();
                col += 1;
                let double = chars.peek() == Some(&'=');
                if double {
                    chars.next();
                    col += 1;
                }
                let tok = match (c, double) {
                    ('=', true) => Tok::EqEq,
                    ('=', false) => Tok::Assign,
                    ('!', true) => Tok::Ne,
                    ('<', true) => Tok::Le,
                    ('<', false) => Tok::Lt,
                    ('>', true) => Tok::Ge,
                    ('>', false) => Tok::Gt,
                    ('!', false) => {
                        return Err(ParseError::new(tok_line, tok_col, "stray '!'")
                            .expecting(vec!["'!='"]))
                    }
                    _ => unreachable!(),
                };
                out.push(Spanned {
                    tok,
                    line: tok_line,
                    col: tok_col,
                });
                continue;
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let mut raw = String::new();
                while chars
                    .peek()
                    .is_some_and(|&c| c.is_ascii_digit() || c == '.')
                {
                    raw.push(chars.next().unwrap());
                    col += 1;
                }
                // Scientific notation, with an optional signed exponent.
                if chars.peek().is_some_and(|&c| c == 'e' || c == 'E') {
                    let mut look = chars.clone();
                    let e = look.next().unwrap();
                    let mut tail = String::new();
                    if look.peek().is_some_and(|&c| c == '+' || c == '-') {
                        tail.push(look.next().unwrap());
                    }
                    if look.peek().is_some_and(|c| c.is_ascii_digit()) {
                        raw.push(e);
                        raw.push_str(&tail);
                        chars = look;
                        col += 1 + tail.len() as u32;
                        while chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                            raw.push(chars.next().unwrap());
                            col += 1;
                        }
                    }
                }
                let value: f64 = raw.parse().map_err(|_| {
                    ParseError::new(tok_line, tok_col, format!("malformed number '{raw}'"))
                })?;
                out.push(Spanned {
                    tok: Tok::Number(value),
                    line: tok_line,
                    col: tok_col,
                });
                continue;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let mut raw = String::new();
                while chars
                    .peek()
                    .is_some_and(|&c| c.is_ascii_alphanumeric() || c == '_')
                {
                    raw.push(chars.next().unwrap());
                    col += 1;
                }
                out.push(Spanned {
                    tok: Tok::Ident(raw),
                    line: tok_line,
                    col: tok_col,
                });
                continue;
            }
            other => {
                return Err(ParseError::new(
                    tok_line,
                    tok_col,
                    format!("unexpected character '{other}'"),
                ))
            }
        };
        chars.next();
        col += 1;
        out.push(Spanned {
            tok,
            line: tok_line,
            col: tok_col,
        });
    }
    if !matches!(out.last().map(|s| &s.tok), Some(Tok::Newline) | None) {
        out.push(Spanned {
            tok: Tok::Newline,
            line,
            col,
        });
    }
    out.push(Spanned {
        tok: Tok::End,
        line,
        col,
    });
    Ok(out)
}
