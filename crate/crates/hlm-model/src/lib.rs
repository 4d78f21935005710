//! Snippet-recurrent transformer encoder with two external memories: bridge
//! rows that carry state between adjacent snippets, and a per-document bank
//! of hint key/value pairs read through gated top-K retrieval.

mod config;
mod diag;
mod error;
mod input;
mod model;
mod params;

pub use config::{KnnScoreMode, ModelConfig};
pub use diag::{EncodeDiag, FusionDiag, HeadFusionDiag, RetrievalRow, SnippetDiag};
pub use error::ModelError;
pub use input::DocumentInput;
pub use model::{
    rank_token_ids, BankMode, BoundParams, DocumentEncoding, EncodeOptions, Hlm, SnippetContext,
    SnippetForward, ATTN_MASK_VALUE,
};
pub use params::ParamStore;
