//! Tokenizer for the `.iss` format.
//!
//! Whitespace separated, `#` comments to end of line, LF or CRLF. Every
//! token carries a 1-based source span.

use super::{Diagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    Star,
    Semi,
    Comma,
    Eq,
    Slash,
    Arrow,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Star => "`*`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

pub fn lex(file: &str, text: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let mut tokens = Vec::new();
    let mut diagnostics = Vec::new();
    let mut line = 1usize;
    let mut column = 1usize;
    let mut chars = text.chars().peekable();

    let span = |line: usize, column: usize, length: usize| SourceSpan {
        file: file.to_string(),
        line,
        column,
        length,
    };

    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
                column = 1;
            }
            '\r' => {
                chars.next();
                // CRLF and bare CR both end the line via the following '\n'
                // or immediately.
                if chars.peek() != Some(&'\n') {
                    line += 1;
                    column = 1;
                }
            }
            ' ' | '\t' => {
                chars.next();
                column += 1;
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    column += 1;
                }
            }
            'A'..='Z' | 'a'..='z' | '_' => {
                let start = column;
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(c);
                        chars.next();
                        column += 1;
                    } else {
                        break;
                    }
                }
                let len = word.len();
                tokens.push(Token {
                    tok: Tok::Ident(word),
                    span: span(line, start, len),
                });
            }
            '0'..='9' => {
                let start = column;
                let mut digits = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        digits.push(c);
                        chars.next();
                        column += 1;
                    } else {
                        break;
                    }
                }
                match digits.parse::<u64>() {
                    Ok(n) => tokens.push(Token {
                        tok: Tok::Int(n),
                        span: span(line, start, digits.len()),
                    }),
                    Err(_) => diagnostics.push(Diagnostic::error(
                        span(line, start, digits.len()),
                        format!("integer `{digits}` out of range"),
                        None,
                    )),
                }
            }
            '-' => {
                let start = column;
                chars.next();
                column += 1;
                if chars.peek() == Some(&'>') {
                    chars.next();
                    column += 1;
                    tokens.push(Token {
                        tok: Tok::Arrow,
                        span: span(line, start, 2),
                    });
                } else {
                    diagnostics.push(Diagnostic::error(
                        span(line, start, 1),
                        "stray `-`".to_string(),
                        Some("`->`".to_string()),
                    ));
                }
            }
            _ => {
                let single = match c {
                    '*' => Some(Tok::Star),
                    ';' => Some(Tok::Semi),
                    ',' => Some(Tok::Comma),
                    '=' => Some(Tok::Eq),
                    '/' => Some(Tok::Slash),
                    '{' => Some(Tok::LBrace),
                    '}' => Some(Tok::RBrace),
                    '(' => Some(Tok::LParen),
                    ')' => Some(Tok::RParen),
                    '[' => Some(Tok::LBracket),
                    ']' => Some(Tok::RBracket),
                    _ => None,
                };
                match single {
                    Some(tok) => {
                        tokens.push(Token {
                            tok,
                            span: span(line, column, 1),
                        });
                        chars.next();
                        column += 1;
                    }
                    None => {
                        diagnostics.push(Diagnostic::error(
                            span(line, column, c.len_utf8()),
                            format!("unexpected character `{c}`"),
                            None,
                        ));
                        chars.next();
                        column += 1;
                    }
                }
            }
        }
    }

    if diagnostics.is_empty() {
        Ok(tokens)
    } else {
        Err(diagnostics)
    }
}
