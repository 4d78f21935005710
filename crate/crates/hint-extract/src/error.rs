use thiserror::Error;

#[derive(Debug, Error)]
pub enum HintError {
    /// Language name not recognized; only `python` and `java` are supported.
    #[error("unsupported language: {0}")]
    UnsupportedLanguage(String),

    /// The bundled grammar could not be loaded into the parser.
    #[error("failed to initialize parser: {0}")]
    ParserInit(String),

    /// The parser gave up without producing a tree.
    #[error("parser returned no tree")]
    ParseFailed,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
