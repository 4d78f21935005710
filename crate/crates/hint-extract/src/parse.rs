use std::str::FromStr;

use serde::{Deserialize, Serialize};
use tree_sitter::{Parser, Tree};

use crate::HintError;

/// Supported source languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Python,
    Java,
}

impl FromStr for Language {
    type Err = HintError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "python" | "py" => Ok(Language::Python),
            "java" => Ok(Language::Java),
            other => Err(HintError::UnsupportedLanguage(other.to_string())),
        }
    }
}

impl Language {
    fn grammar(self) -> tree_sitter::Language {
        match self {
            Language::Python => tree_sitter_python::language(),
            Language::Java => tree_sitter_java::language(),
        }
    }
}

/// A parsed source file. Broken sources still parse; damaged regions show up
/// as error nodes in the tree and are skipped during extraction.
pub struct ParsedSource {
    pub language: Language,
    tree: Tree,
}

impl ParsedSource {
    pub fn root(&self) -> tree_sitter::Node<'_> {
        self.tree.root_node()
    }
}

/// Parse `source` with the grammar for `language`.
pub fn parse_ast(source: &str, language: Language) -> Result<ParsedSource, HintError> {
    let mut parser = Parser::new();
    parser
        .set_language(&language.grammar())
        .map_err(|e| HintError::ParserInit(e.to_string()))?;
    let tree = parser.parse(source, None).ok_or(HintError::ParseFailed)?;
    Ok(ParsedSource { language, tree })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn language_names_parse() {
        assert_eq!("python".parse::<Language>().unwrap(), Language::Python);
        assert_eq!("Java".parse::<Language>().unwrap(), Language::Java);
        assert!(matches!(
            "cobol".parse::<Language>(),
            Err(HintError::UnsupportedLanguage(_))
        ));
    }

    #[test]
    fn broken_source_still_yields_a_tree() {
        let parsed = parse_ast("def broken(:\n", Language::Python).unwrap();
        assert!(parsed.root().has_error());
    }
}
