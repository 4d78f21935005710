//! AST-driven hint extraction.
//!
//! Parses Python or Java sources with tree-sitter, collects the structural
//! spans that act as retrieval hints (imports, class and function headers,
//! field definitions, comments), and projects those byte spans onto a token
//! sequence as a per-token mask.

mod error;
mod extract;
mod mask;
mod parse;
mod serialize;

pub use error::HintError;
pub use extract::{extract_hints, hint_spans, HintKind, HintSpan};
pub use mask::{build_mask, token_kinds, HintMask};
pub use parse::{parse_ast, Language, ParsedSource};
pub use serialize::{read_hint_jsonl, write_hint_jsonl, write_mask_json};
