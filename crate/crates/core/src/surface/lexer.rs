//! Tokeniser for `.aeff` source text.

use std::fmt;

use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Pragma(Vec<String>),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(n) => write!(f, "integer {n}"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Pragma(_) => write!(f, "pragma"),
            Tok::Kw(k) => write!(f, "`{k}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

pub const KEYWORDS: &[&str] = &[
    "let", "rec", "in", "fun", "return", "match", "with", "if", "then", "else", "send", "promise", "as", "when",
    "await", "until", "unbox", "spawn", "run", "operation", "effect", "type", "true", "false", "inl", "inr", "mod",
];

// Longest first so that prefixes do not shadow longer symbols.
const SYMBOLS: &[&str] = &[
    "!->", "!<-", "|->", "->", "||", "|]", "[|", "<<", ">>", "<=", ">=", "<>", "&&", ":=", "(", ")", "[", "]", "{",
    "}", ",", ";", ":", "=", "|", "@", "+", "-", "*", "/", "<", ">", "!", "$", ".", "^",
];

pub fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = vec![];
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let advance = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize| {
        for k in 0..n {
            if chars[*i + k] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        }
        *i += n;
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '(' && chars.get(i + 1) == Some(&'*') {
            let mut depth = 0;
            loop {
                if i >= chars.len() {
                    return Err(ParseError::new(pos, "unterminated comment", vec![]));
                }
                if chars[i] == '(' && chars.get(i + 1) == Some(&'*') {
                    depth += 1;
                    advance(&mut i, &mut line, &mut col, 2);
                } else if chars[i] == '*' && chars.get(i + 1) == Some(&')') {
                    depth -= 1;
                    advance(&mut i, &mut line, &mut col, 2);
                    if depth == 0 {
                        break;
                    }
                } else {
                    advance(&mut i, &mut line, &mut col, 1);
                }
            }
            continue;
        }
        if c == '#' {
            let start = i;
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            let text: String = chars[start + 1..i].iter().collect();
            let mut words = text.split_whitespace();
            match words.next() {
                Some("extensions") => out.push((Tok::Pragma(words.map(String::from).collect()), pos)),
                _ => return Err(ParseError::new(pos, "unknown pragma", vec!["#extensions".into()])),
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(&mut i, &mut line, &mut col, 1);
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse().map_err(|_| ParseError::new(pos, "integer literal too large", vec![]))?;
            out.push((Tok::Int(n), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                advance(&mut i, &mut line, &mut col, 1);
            }
            let text: String = chars[start..i].iter().collect();
            match KEYWORDS.iter().find(|k| **k == text) {
                Some(k) => out.push((Tok::Kw(k), pos)),
                None => out.push((Tok::Ident(text), pos)),
            }
            continue;
        }
        if c == '"' {
            let mut s = String::new();
            advance(&mut i, &mut line, &mut col, 1);
            loop {
                match chars.get(i) {
                    None => return Err(ParseError::new(pos, "unterminated string", vec![])),
                    Some('"') => {
                        advance(&mut i, &mut line, &mut col, 1);
                        break;
                    }
                    Some('\\') => {
                        let e = match chars.get(i + 1) {
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('"') => '"',
                            Some('\\') => '\\',
                            _ => return Err(ParseError::new(pos, "bad escape in string", vec![])),
                        };
                        s.push(e);
                        advance(&mut i, &mut line, &mut col, 2);
                    }
                    Some(ch) => {
                        s.push(*ch);
                        advance(&mut i, &mut line, &mut col, 1);
                    }
                }
            }
            out.push((Tok::Str(s), pos));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                out.push((Tok::Sym(s), pos));
                advance(&mut i, &mut line, &mut col, s.chars().count());
            }
            None => return Err(ParseError::new(pos, format!("unexpected character `{c}`"), vec![])),
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}
