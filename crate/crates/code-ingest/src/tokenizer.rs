use serde::{Deserialize, Serialize};

use crate::{lexer, IngestError, Vocab};

/// One tokenized unit: its text, byte span, and vocabulary id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub id: usize,
}

/// A tokenized source document.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    pub tokens: Vec<Token>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn ids(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.id).collect()
    }
}

/// Maps sources to [`TokenSequence`]s against a fixed vocabulary.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    vocab: Vocab,
}

impl Tokenizer {
    pub fn new(vocab: Vocab) -> Self {
        Self { vocab }
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn tokenize(&self, source: &str) -> TokenSequence {
        let tokens = lexer::lex(source)
            .into_iter()
            .map(|raw| Token {
                text: raw.text.to_string(),
                start: raw.start,
                end: raw.end,
                id: self.vocab.id_of(raw.text),
            })
            .collect();
        TokenSequence { tokens }
    }

    pub fn tokenize_bytes(&self, source: &[u8]) -> Result<TokenSequence, IngestError> {
        let text = std::str::from_utf8(source)
            .map_err(|e| IngestError::InvalidUtf8 { offset: e.valid_up_to() })?;
        Ok(self.tokenize(text))
    }
}
