use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Temporal {
    Then,
    And,
    Or,
    Not,
}

impl Temporal {
    pub fn as_str(self) -> &'static str {
        match self {
            Temporal::Then => "then",
            Temporal::And => "and",
            Temporal::Or => "or",
            Temporal::Not => "not",
        }
    }

    fn from_word(word: &str) -> Option<Self> {
        match word {
            "then" => Some(Temporal::Then),
            "and" => Some(Temporal::And),
            "or" => Some(Temporal::Or),
            "not" => Some(Temporal::Not),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    LParen,
    RParen,
    Colon,
    Semicolon,
    Comma,
    Keyword(Temporal),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::Colon => f.write_str("`:`"),
            TokenKind::Semicolon => f.write_str("`;`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::Keyword(k) => write!(f, "`{}`", k.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unexpected character {ch:?} at {line}:{col}")]
pub struct LexError {
    pub ch: char,
    pub line: usize,
    pub col: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-'
}

/// Splits rule text into tokens. `#` starts a comment that runs to end of line.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut tokens = Vec::new();
    for (line_idx, line) in source.lines().enumerate() {
        let line_no = line_idx + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let single = match c {
                '#' => break,
                c if c.is_whitespace() => {
                    i += 1;
                    continue;
                }
                '(' => Some(TokenKind::LParen),
                ')' => Some(TokenKind::RParen),
                ':' => Some(TokenKind::Colon),
                ';' => Some(TokenKind::Semicolon),
                ',' => Some(TokenKind::Comma),
                _ => None,
            };
            if let Some(kind) = single {
                tokens.push(Token { kind, line: line_no, col });
                i += 1;
                continue;
            }
            if !is_ident_char(c) {
                return Err(LexError { ch: c, line: line_no, col });
            }
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let kind = match Temporal::from_word(&word) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(word),
            };
            tokens.push(Token { kind, line: line_no, col });
        }
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    fn ident(s: &str) -> TokenKind {
        TokenKind::Ident(s.to_string())
    }

    #[test]
    fn binary_clause() {
        assert_eq!(
            kinds("(p1 near p2)"),
            vec![
                TokenKind::LParen,
                ident("p1"),
                ident("near"),
                ident("p2"),
                TokenKind::RParen
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(kinds("").is_empty());
        assert!(kinds("   # only a comment\n").is_empty());
    }

    #[test]
    fn sequence_with_keyword() {
        let k = kinds("p1 use-phone then (p1 close p2)");
        assert_eq!(k.len(), 8);
        assert_eq!(k[2], TokenKind::Keyword(Temporal::Then));
        assert_eq!(k[1], ident("use-phone"));
    }

    #[test]
    fn positions_are_tracked() {
        let toks = tokenize("a: p: person;\n  (p move)").unwrap();
        let lparen = toks.iter().find(|t| t.kind == TokenKind::LParen).unwrap();
        assert_eq!((lparen.line, lparen.col), (2, 3));
    }

    #[test]
    fn foreign_character_is_an_error() {
        let err = tokenize("(p1 near P2)").unwrap_err();
        assert_eq!((err.ch, err.line, err.col), ('P', 1, 10));
        assert!(tokenize("a & b").is_err());
    }
}
