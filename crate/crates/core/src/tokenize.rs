//! Splits raw page text into the token stream used by diffing and annotation.
//!
//! The page is never parsed as HTML. A single alternation is applied left to
//! right with first-alternative-wins semantics:
//!
//! | kind            | pattern                          |
//! |-----------------|----------------------------------|
//! | date-like       | `(?:\d{1,4}[./-]){2}\d{1,4}`     |
//! | decimal number  | `\d+.\d+` (the `.` is any char)  |
//! | word            | `\w+`                            |
//! | whitespace      | `\s+`                            |
//! | other           | `\W` (a single character)        |
//!
//! Dates, decimals, onion names and Bitcoin addresses therefore survive as
//! single tokens, which keeps the most common changes between versions
//! atomic.

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

static TOKEN_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"((?:\d{1,4}[./-]){2}\d{1,4})|(\d+.\d+)|(\w+)|(\s+)|(\W)")
        .expect("token pattern compiles")
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    DateLike,
    DecimalNumber,
    Word,
    Whitespace,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
}

impl Token {
    pub fn new(text: impl Into<String>, kind: TokenKind) -> Self {
        Token {
            text: text.into(),
            kind,
        }
    }

    pub fn is_whitespace(&self) -> bool {
        self.kind == TokenKind::Whitespace
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// An ordered token sequence whose concatenation is the source text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenStream {
    tokens: Vec<Token>,
}

impl TokenStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.tokens.iter()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.text.as_str())
    }

    pub fn push(&mut self, token: Token) {
        debug_assert!(!token.text.is_empty());
        self.tokens.push(token);
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.tokens
    }
}

impl From<Vec<Token>> for TokenStream {
    fn from(tokens: Vec<Token>) -> Self {
        TokenStream { tokens }
    }
}

impl FromIterator<Token> for TokenStream {
    fn from_iter<I: IntoIterator<Item = Token>>(iter: I) -> Self {
        TokenStream {
            tokens: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a TokenStream {
    type Item = &'a Token;
    type IntoIter = std::slice::Iter<'a, Token>;

    fn into_iter(self) -> Self::IntoIter {
        self.tokens.iter()
    }
}

impl std::ops::Index<usize> for TokenStream {
    type Output = Token;

    fn index(&self, index: usize) -> &Token {
        &self.tokens[index]
    }
}

pub fn tokenize(text: &str) -> TokenStream {
    let mut tokens = Vec::new();
    for caps in TOKEN_RE.captures_iter(text) {
        let (idx, m) = caps
            .iter()
            .enumerate()
            .skip(1)
            .find_map(|(i, m)| m.map(|m| (i, m)))
            .expect("one alternative always participates");
        let kind = match idx {
            1 => TokenKind::DateLike,
            2 => TokenKind::DecimalNumber,
            3 => TokenKind::Word,
            4 => TokenKind::Whitespace,
            _ => TokenKind::Other,
        };
        tokens.push(Token::new(m.as_str(), kind));
    }
    TokenStream { tokens }
}

pub fn detokenize(stream: &TokenStream) -> String {
    concat(stream.tokens())
}

pub(crate) fn concat(tokens: &[Token]) -> String {
    let len = tokens.iter().map(|t| t.text.len()).sum();
    let mut out = String::with_capacity(len);
    for t in tokens {
        out.push_str(&t.text);
    }
    out
}
