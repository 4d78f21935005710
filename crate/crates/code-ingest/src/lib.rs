//! Source-to-token front end: a rule-based lexer, a corpus-derived vocabulary,
//! and utilities to truncate and segment token streams into fixed-length
//! snippets ready for the model.
//!
//! Tokenization is deliberately simple and reversible: maximal runs of
//! word characters (alphanumerics plus `_`) form one token, every other
//! non-whitespace character is a single token, and whitespace only separates.
//! Every token keeps its byte span in the original source so downstream
//! passes can align AST information with token positions.

mod error;
mod lexer;
mod segment;
mod serialize;
mod tokenizer;
mod vocab;

pub use error::IngestError;
pub use lexer::{lex, lex_bytes, RawToken};
pub use segment::{segment, truncate, Snippet};
pub use serialize::{read_snippet_jsonl, read_token_jsonl, write_snippet_jsonl, write_token_jsonl};
pub use tokenizer::{Token, TokenSequence, Tokenizer};
pub use vocab::{Vocab, OOV_ID, OOV_TOKEN, PAD_ID, PAD_TOKEN};
