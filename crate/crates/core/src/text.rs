//! Tokenization shared by the lexical index, the hashing embedder, the
//! query grammar and the overlap scorer.

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Letters and digits; everything else separates tokens.
pub const DEFAULT_TOKEN_PATTERN: &str = r"[^\W_]+";

/// Query grammar pattern: like the default, but keeps decimal numbers such as
/// `12.50` in one piece.
pub const QUERY_TOKEN_PATTERN: &str = r"[0-9]+(?:\.[0-9]+)?|[^\W_]+";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub pattern: String,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            pattern: DEFAULT_TOKEN_PATTERN.to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Tokenizer {
    config: TokenizerConfig,
    regex: Regex,
}

/// A token together with its byte span in the (unlowercased) source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

impl Tokenizer {
    pub fn new(config: TokenizerConfig) -> Result<Self> {
        let regex = Regex::new(&config.pattern)
            .map_err(|e| Error::Config(format!("token pattern: {e}")))?;
        Ok(Tokenizer { config, regex })
    }

    pub fn config(&self) -> &TokenizerConfig {
        &self.config
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        self.tokens(text).into_iter().map(|t| t.text).collect()
    }

    pub fn tokens(&self, text: &str) -> Vec<Token> {
        self.regex
            .find_iter(text)
            .map(|m| Token {
                text: if self.config.lowercase {
                    m.as_str().to_lowercase()
                } else {
                    m.as_str().to_string()
                },
                start: m.start(),
                end: m.end(),
            })
            .collect()
    }
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer::new(TokenizerConfig::default()).expect("default pattern compiles")
    }
}

/// Process-wide default tokenizer.
pub fn default_tokenizer() -> &'static Tokenizer {
    static TOKENIZER: OnceLock<Tokenizer> = OnceLock::new();
    TOKENIZER.get_or_init(Tokenizer::default)
}

pub fn tokenize(text: &str) -> Vec<String> {
    default_tokenizer().tokenize(text)
}

const STOPWORDS: &[&str] = &[
    "a", "about", "an", "and", "any", "are", "as", "at", "be", "but", "by", "can", "could", "do",
    "for", "from", "find", "get", "has", "have", "i", "im", "in", "is", "it", "its", "looking",
    "locate", "me", "my", "need", "of", "on", "or", "our", "please", "search", "show", "some",
    "something", "that", "the", "their", "them", "there", "this", "to", "want", "we", "what",
    "which", "with", "would", "you", "your",
];

pub fn is_stopword(token: &str) -> bool {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS.iter().copied().collect())
        .contains(token)
}
