//! Tokenizer for constraint files: `--` line comments, identifiers, numbers,
//! the usual operator set, and `->` collection chains.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum TokKind {
    Ident(String),
    Int(i64),
    Real(f64),
    StrLit(String),
    KwContext,
    KwInv,
    KwPre,
    KwIn,
    KwAnd,
    KwOr,
    KwXor,
    KwImplies,
    KwNot,
    KwTrue,
    KwFalse,
    KwSelf,
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    ColonColon,
    Arrow,
    Pipe,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

impl fmt::Display for TokKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokKind::Ident(s) => write!(f, "identifier '{s}'"),
            TokKind::Int(v) => write!(f, "integer {v}"),
            TokKind::Real(v) => write!(f, "real {v}"),
            TokKind::StrLit(s) => write!(f, "string '{s}'"),
            TokKind::KwContext => write!(f, "'context'"),
            TokKind::KwInv => write!(f, "'inv'"),
            TokKind::KwPre => write!(f, "'pre'"),
            TokKind::KwIn => write!(f, "'in'"),
            TokKind::KwAnd => write!(f, "'and'"),
            TokKind::KwOr => write!(f, "'or'"),
            TokKind::KwXor => write!(f, "'xor'"),
            TokKind::KwImplies => write!(f, "'implies'"),
            TokKind::KwNot => write!(f, "'not'"),
            TokKind::KwTrue => write!(f, "'true'"),
            TokKind::KwFalse => write!(f, "'false'"),
            TokKind::KwSelf => write!(f, "'self'"),
            TokKind::LParen => write!(f, "'('"),
            TokKind::RParen => write!(f, "')'"),
            TokKind::Comma => write!(f, "','"),
            TokKind::Dot => write!(f, "'.'"),
            TokKind::Colon => write!(f, "':'"),
            TokKind::ColonColon => write!(f, "'::'"),
            TokKind::Arrow => write!(f, "'->'"),
            TokKind::Pipe => write!(f, "'|'"),
            TokKind::Lt => write!(f, "'<'"),
            TokKind::Le => write!(f, "'<='"),
            TokKind::Gt => write!(f, "'>'"),
            TokKind::Ge => write!(f, "'>='"),
            TokKind::Eq => write!(f, "'='"),
            TokKind::Ne => write!(f, "'<>'"),
            TokKind::Plus => write!(f, "'+'"),
            TokKind::Minus => write!(f, "'-'"),
            TokKind::Star => write!(f, "'*'"),
            TokKind::Slash => write!(f, "'/'"),
            TokKind::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokKind,
    pub line: usize,
    pub col: usize,
}

pub fn lex(text: &str) -> Result<Vec<Token>, super::ParseError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1usize;
    let mut col = 1usize;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let (tok_line, tok_col) = (line, col);
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '-' => {
                bump!();
                match chars.peek() {
                    Some('-') => {
                        while let Some(&n) = chars.peek() {
                            if n == '\n' {
                                break;
                            }
                            bump!();
                        }
                    }
                    Some('>') => {
                        bump!();
                        tokens.push(Token {
                            kind: TokKind::Arrow,
                            line: tok_line,
                            col: tok_col,
                        });
                    }
                    _ => tokens.push(Token {
                        kind: TokKind::Minus,
                        line: tok_line,
                        col: tok_col,
                    }),
                }
            }
            '<' => {
                bump!();
                let kind = match chars.peek() {
                    Some('=') => {
                        bump!();
                        TokKind::Le
                    }
                    Some('>') => {
                        bump!();
                        TokKind::Ne
                    }
                    _ => TokKind::Lt,
                };
                tokens.push(Token {
                    kind,
                    line: tok_line,
                    col: tok_col,
                });
            }
            '>' => {
                bump!();
                let kind = if chars.peek() == Some(&'=') {
                    bump!();
                    TokKind::Ge
                } else {
                    TokKind::Gt
                };
                tokens.push(Token {
                    kind,
                    line: tok_line,
                    col: tok_col,
                });
            }
            ':' => {
                bump!();
                let kind = if chars.peek() == Some(&':') {
                    bump!();
                    TokKind::ColonColon
                } else {
                    TokKind::Colon
                };
                tokens.push(Token {
                    kind,
                    line: tok_line,
                    col: tok_col,
                });
            }
            '\'' => {
                bump!();
                let mut s = String::new();
                loop {
                    match bump!() {
                        Some('\'') => break,
                        Some(ch) => s.push(ch),
                        None => {
                            return Err(super::ParseError::Lex {
                                line: tok_line,
                                col: tok_col,
                                message: "unterminated string literal".into(),
                            })
                        }
                    }
                }
                tokens.push(Token {
                    kind: TokKind::StrLit(s),
                    line: tok_line,
                    col: tok_col,
                });
            }
            '0'..='9' => {
                let mut digits = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        digits.push(d);
                        bump!();
                    } else {
                        break;
                    }
                }
                // A dot starts a fraction only when followed by a digit, so
                // navigation off a literal is not swallowed here.
                let mut is_real = false;
                if chars.peek() == Some(&'.') {
                    let mut ahead = chars.clone();
                    ahead.next();
                    if ahead.peek().is_some_and(|d| d.is_ascii_digit()) {
                        is_real = true;
                        digits.push('.');
                        bump!();
                        while let Some(&d) = chars.peek() {
                            if d.is_ascii_digit() {
                                digits.push(d);
                                bump!();
                            } else {
                                break;
                            }
                        }
                    }
                }
                let kind = if is_real {
                    TokKind::Real(digits.parse().map_err(|_| super::ParseError::Lex {
                        line: tok_line,
                        col: tok_col,
                        message: format!("invalid real literal '{digits}'"),
                    })?)
                } else {
                    TokKind::Int(digits.parse().map_err(|_| super::ParseError::Lex {
                        line: tok_line,
                        col: tok_col,
                        message: format!("integer literal '{digits}' out of range"),
                    })?)
                };
                tokens.push(Token {
                    kind,
                    line: tok_line,
                    col: tok_col,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                while let Some(&a) = chars.peek() {
                    if a.is_ascii_alphanumeric() || a == '_' {
                        word.push(a);
                        bump!();
                    } else {
                        break;
                    }
                }
                let kind = match word.as_str() {
                    "context" => TokKind::KwContext,
                    "inv" => TokKind::KwInv,
                    "pre" => TokKind::KwPre,
                    "in" => TokKind::KwIn,
                    "and" => TokKind::KwAnd,
                    "or" => TokKind::KwOr,
                    "xor" => TokKind::KwXor,
                    "implies" => TokKind::KwImplies,
                    "not" => TokKind::KwNot,
                    "true" => TokKind::KwTrue,
                    "false" => TokKind::KwFalse,
                    "self" => TokKind::KwSelf,
                    _ => TokKind::Ident(word),
                };
                tokens.push(Token {
                    kind,
                    line: tok_line,
                    col: tok_col,
                });
            }
            _ => {
                let kind = match c {
                    '(' => TokKind::LParen,
                    ')' => TokKind::RParen,
                    ',' => TokKind::Comma,
                    '.' => TokKind::Dot,
                    '|' => TokKind::Pipe,
                    '=' => TokKind::Eq,
                    '+' => TokKind::Plus,
                    '*' => TokKind::Star,
                    '/' => TokKind::Slash,
                    other => {
                        return Err(super::ParseError::Lex {
                            line: tok_line,
                            col: tok_col,
                            message: format!("unexpected character '{other}'"),
                        })
                    }
                };
                bump!();
                tokens.push(Token {
                    kind,
                    line: tok_line,
                    col: tok_col,
                });
            }
        }
    }
    tokens.push(Token {
        kind: TokKind::Eof,
        line,
        col,
    });
    Ok(tokens)
}
