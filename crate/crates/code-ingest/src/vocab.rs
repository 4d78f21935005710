use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{lexer, IngestError};

/// Id of the reserved padding token.
pub const PAD_ID: usize = 0;
/// Id of the reserved out-of-vocabulary token.
pub const OOV_ID: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const OOV_TOKEN: &str = "<oov>";

/// A token vocabulary built from a training corpus.
///
/// Ids 0 and 1 are always the pad and out-of-vocabulary tokens; corpus tokens
/// follow in first-seen order, which makes construction deterministic for a
/// fixed corpus ordering.
#[derive(Debug, Clone)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    tokens: Vec<String>,
}

impl Vocab {
    /// Build a vocabulary from an ordered corpus of source texts.
    pub fn build<'a, I>(corpus: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut vocab = Self::reserved();
        for text in corpus {
            for tok in lexer::lex(text) {
                vocab.intern(tok.text);
            }
        }
        vocab
    }

    fn reserved() -> Self {
        let tokens = vec![PAD_TOKEN.to_string(), OOV_TOKEN.to_string()];
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { tokens, index }
    }

    fn intern(&mut self, text: &str) -> usize {
        if let Some(&id) = self.index.get(text) {
            return id;
        }
        let id = self.tokens.len();
        self.tokens.push(text.to_string());
        self.index.insert(text.to_string(), id);
        id
    }

    /// Id for `text`, or [`OOV_ID`] when the token was never seen.
    pub fn id_of(&self, text: &str) -> usize {
        self.index.get(text).copied().unwrap_or(OOV_ID)
    }

    /// Token text for `id`, if in range.
    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(|s| s.as_str())
    }

    /// Total number of ids, reserved tokens included.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&VocabFile { tokens: self.tokens.clone() })
            .expect("vocab serialization cannot fail")
    }

    pub fn from_json(json: &str) -> Result<Self, IngestError> {
        let file: VocabFile = serde_json::from_str(json)
            .map_err(|source| IngestError::MalformedRecord { line: 1, source })?;
        if file.tokens.len() < 2
            || file.tokens[PAD_ID] != PAD_TOKEN
            || file.tokens[OOV_ID] != OOV_TOKEN
        {
            return Err(IngestError::MalformedVocab);
        }
        let index = file
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Self { tokens: file.tokens, index })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_ids_come_first() {
        let v = Vocab::build(["x = 1"]);
        assert_eq!(v.token(PAD_ID), Some(PAD_TOKEN));
        assert_eq!(v.token(OOV_ID), Some(OOV_TOKEN));
        assert_eq!(v.id_of("x"), 2);
    }

    #[test]
    fn first_seen_order_is_stable() {
        let v = Vocab::build(["b a", "a c"]);
        assert_eq!(v.id_of("b"), 2);
        assert_eq!(v.id_of("a"), 3);
        assert_eq!(v.id_of("c"), 4);
        assert_eq!(v.len(), 5);
    }

    #[test]
    fn unseen_tokens_map_to_oov() {
        let v = Vocab::build(["x"]);
        assert_eq!(v.id_of("never_seen"), OOV_ID);
    }

    #[test]
    fn json_round_trip_preserves_ids() {
        let v = Vocab::build(["def f ( ) :", "x = 1"]);
        let restored = Vocab::from_json(&v.to_json()).unwrap();
        assert_eq!(restored.len(), v.len());
        for id in 0..v.len() {
            assert_eq!(restored.token(id), v.token(id));
        }
    }

    #[test]
    fn malformed_vocab_is_rejected() {
        assert!(Vocab::from_json(r#"{"tokens":["a","b"]}"#).is_err());
    }
}
