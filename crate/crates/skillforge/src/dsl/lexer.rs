use super::ast::Span;
use super::error::{DslError, DslErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Number(f64),
    Ident(String),
    Let,
    Reward,
    Metric,
    And,
    Or,
    Not,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Lt,
    Le,
    Gt,
    Ge,
    Eq, // `=` in expression position
    Newline,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Number(_) => "number".into(),
            Tok::Ident(n) => format!("identifier `{n}`"),
            Tok::Let => "`let`".into(),
            Tok::Reward => "`reward`".into(),
            Tok::Metric => "`metric`".into(),
            Tok::And => "`and`".into(),
            Tok::Or => "`or`".into(),
            Tok::Not => "`not`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Tokenize the whole source. `#` starts a comment running to end of line;
/// newlines are significant (statements are line-based).
///
/// The lexer never panics: any byte sequence either tokenizes or yields a
/// `ParseError` with a position.
pub fn lex(source: &str) -> Result<Vec<Token>, DslError> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = source.chars().peekable();

    while let Some(&c) = chars.peek() {
        let span = Span::new(line, col);
        match c {
            '\n' => {
                chars.next();
                out.push(Token { tok: Tok::Newline, span });
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                chars.next();
                col += 1;
            }
            '#' => {
                while let Some(&c2) = chars.peek() {
                    if c2 == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '+' => {
                chars.next();
                col += 1;
                out.push(Token { tok: Tok::Plus, span });
            }
            '-' => {
                chars.next();
                col += 1;
                out.push(Token { tok: Tok::Minus, span });
            }
            '*' => {
                chars.next();
                col += 1;
                out.push(Token { tok: Tok::Star, span });
            }
            '/' => {
                chars.next();
                col += 1;
                out.push(Token { tok: Tok::Slash, span });
            }
            '^' => {
                chars.next();
                col += 1;
                out.push(Token { tok: Tok::Caret, span });
            }
            '(' => {
                chars.next();
                col += 1;
                out.push(Token { tok: Tok::LParen, span });
            }
            ')' => {
                chars.next();
                col += 1;
                out.push(Token { tok: Tok::RParen, span });
            }
            ',' => {
                chars.next();
                col += 1;
                out.push(Token { tok: Tok::Comma, span });
            }
            '=' => {
                chars.next();
                col += 1;
                // Statement-level `=` vs expression-level equality is
                // disambiguated by the parser; the lexer emits `Eq`.
                out.push(Token { tok: Tok::Eq, span });
            }
            '<' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'=') {
                    chars.next();
                    col += 1;
                    out.push(Token { tok: Tok::Le, span });
                } else {
                    out.push(Token { tok: Tok::Lt, span });
                }
            }
            '>' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'=') {
                    chars.next();
                    col += 1;
                    out.push(Token { tok: Tok::Ge, span });
                } else {
                    out.push(Token { tok: Tok::Gt, span });
                }
            }
            c if c.is_ascii_digit() => {
                let mut text = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        text.push(d);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                if chars.peek() == Some(&'.') {
                    text.push('.');
                    chars.next();
                    col += 1;
                    let mut frac = false;
                    while let Some(&d) = chars.peek() {
                        if d.is_ascii_digit() {
                            frac = true;
                            text.push(d);
                            chars.next();
                            col += 1;
                        } else {
                            break;
                        }
                    }
                    if !frac {
                        return Err(DslError::new(
                            DslErrorKind::ParseError,
                            span,
                            "expected digits after decimal point",
                        ));
                    }
                }
                if matches!(chars.peek(), Some('e') | Some('E')) {
                    text.push('e');
                    chars.next();
                    col += 1;
                    if matches!(chars.peek(), Some('+') | Some('-')) {
                        text.push(chars.next().unwrap());
                        col += 1;
                    }
                    let mut exp = false;
                    while let Some(&d) = chars.peek() {
                        if d.is_ascii_digit() {
                            exp = true;
                            text.push(d);
                            chars.next();
                            col += 1;
                        } else {
                            break;
                        }
                    }
                    if !exp {
                        return Err(DslError::new(
                            DslErrorKind::ParseError,
                            span,
                            "expected digits in exponent",
                        ));
                    }
                }
                let value: f64 = text.parse().map_err(|_| {
                    DslError::new(
                        DslErrorKind::ParseError,
                        span,
                        format!("invalid number literal `{text}`"),
                    )
                })?;
                if !value.is_finite() {
                    return Err(DslError::new(
                        DslErrorKind::ParseError,
                        span,
                        format!("number literal `{text}` is out of range"),
                    ));
                }
                out.push(Token { tok: Tok::Number(value), span });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        name.push(d);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                let tok = match name.as_str() {
                    "let" => Tok::Let,
                    "reward" => Tok::Reward,
                    "metric" => Tok::Metric,
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    "not" => Tok::Not,
                    _ => Tok::Ident(name),
                };
                out.push(Token { tok, span });
            }
            other => {
                return Err(DslError::new(
                    DslErrorKind::ParseError,
                    span,
                    format!("unexpected character `{}`", other.escape_default()),
                ));
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span::new(line, col),
    });
    Ok(out)
}
