use alloc::string::String;
use alloc::vec::Vec;

use super::parser::ParseError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(super) enum Keyword {
    Wif,
    Then,
    Else,
    Combine,
    With,
    Forall,
    Where,
}

impl Keyword {
    fn from_ident(s: &str) -> Option<Keyword> {
        let kw = [
            ("wif", Keyword::Wif),
            ("then", Keyword::Then),
            ("else", Keyword::Else),
            ("combine", Keyword::Combine),
            ("with", Keyword::With),
            ("forall", Keyword::Forall),
            ("where", Keyword::Where),
        ];
        kw.iter().find(|(k, _)| s.eq_ignore_ascii_case(k)).map(|(_, v)| *v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(super) enum Tok {
    Ident(String),
    Number(f64),
    Kw(Keyword),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Slash,
    Plus,
    Minus,
    Star,
    Arrow,
    Amp,
    Bang,
    Eq,
    Neq,
    Eof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(super) struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug)]
pub(super) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub(super) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out: Vec<Token> = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let after_with = matches!(out.last(), Some(Token { tok: Tok::Kw(Keyword::With), .. }));
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric()
                    || chars[i] == '_'
                    // combination function names such as `l-reg` and `noisy-or`
                    || (after_with && chars[i] == '-'))
            {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            match Keyword::from_ident(&word) {
                Some(kw) => Tok::Kw(kw),
                None => Tok::Ident(word),
            }
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit: String = chars[start..i].iter().collect();
            let v: f64 = lit
                .parse()
                .map_err(|_| ParseError::new(pos.line, pos.col, alloc::format!("bad number `{lit}`")))?;
            Tok::Number(v)
        } else {
            i += 1;
            match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                '/' => Tok::Slash,
                '+' => Tok::Plus,
                '*' => Tok::Star,
                '&' => Tok::Amp,
                '=' => Tok::Eq,
                '-' => Tok::Minus,
                '<' if chars.get(i) == Some(&'-') => {
                    i += 1;
                    Tok::Arrow
                }
                '!' if chars.get(i) == Some(&'=') => {
                    i += 1;
                    Tok::Neq
                }
                '!' => Tok::Bang,
                other => {
                    return Err(ParseError::new(
                        pos.line,
                        pos.col,
                        alloc::format!("unexpected character `{other}`"),
                    ))
                }
            }
        };
        col += i - start;
        out.push(Token { tok, pos });
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}
