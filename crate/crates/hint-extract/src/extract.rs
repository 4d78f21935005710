use serde::{Deserialize, Serialize};
use tree_sitter::Node;

use crate::{parse_ast, HintError, Language, ParsedSource};

/// The structural categories treated as hints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HintKind {
    ImportStatement,
    ClassDefinition,
    FunctionDefinition,
    FieldDefinition,
    LineComment,
    BlockComment,
}

/// One extracted hint: its category and the byte range it covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintSpan {
    pub kind: HintKind,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// Collect hint spans from a parsed source.
///
/// Class and function hints cover only the declaration header (through the
/// parameter list or superclass clause), not the body. Field hints cover the
/// whole assignment or declaration statement. Python string-only expression
/// statements (docstrings) count as block comments. Subtrees under parse
/// errors are skipped. Spans come back sorted by start position.
pub fn extract_hints(parsed: &ParsedSource, source: &str) -> Vec<HintSpan> {
    let mut spans = Vec::new();
    walk(parsed.root(), parsed.language, source, &mut spans);
    spans.sort_by_key(|s| (s.start, s.end));
    spans
}

/// Parse and extract in one step.
pub fn hint_spans(source: &str, language: Language) -> Result<Vec<HintSpan>, HintError> {
    let parsed = parse_ast(source, language)?;
    Ok(extract_hints(&parsed, source))
}

fn walk(node: Node<'_>, language: Language, source: &str, out: &mut Vec<HintSpan>) {
    if node.is_error() {
        return;
    }
    if let Some((kind, start, end)) = classify(node, language) {
        push_span(out, kind, start, end, source);
    }
    let mut cursor = node.walk();
    for child in node.children(&mut cursor) {
        walk(child, language, source, out);
    }
}

fn classify(node: Node<'_>, language: Language) -> Option<(HintKind, usize, usize)> {
    let full = (node.start_byte(), node.end_byte());
    match language {
        Language::Python => match node.kind() {
            "import_statement" | "import_from_statement" => {
                Some((HintKind::ImportStatement, full.0, full.1))
            }
            "class_definition" => {
                let (s, e) = header_span(node, &[":"]);
                Some((HintKind::ClassDefinition, s, e))
            }
            "function_definition" => {
                let (s, e) = header_span(node, &[":"]);
                Some((HintKind::FunctionDefinition, s, e))
            }
            "expression_statement" => classify_python_statement(node),
            "comment" => Some((HintKind::LineComment, full.0, full.1)),
            _ => None,
        },
        Language::Java => match node.kind() {
            "import_declaration" => Some((HintKind::ImportStatement, full.0, full.1)),
            "class_declaration" => {
                let (s, e) = header_span(node, &["class_body"]);
                Some((HintKind::ClassDefinition, s, e))
            }
            "method_declaration" => {
                let (s, e) = header_span(node, &["block", ";"]);
                Some((HintKind::FunctionDefinition, s, e))
            }
            "field_declaration" => Some((HintKind::FieldDefinition, full.0, full.1)),
            "line_comment" => Some((HintKind::LineComment, full.0, full.1)),
            "block_comment" => Some((HintKind::BlockComment, full.0, full.1)),
            _ => None,
        },
    }
}

/// Module-level and class-level assignments are field definitions; statements
/// that consist of a single string literal are docstrings.
fn classify_python_statement(stmt: Node<'_>) -> Option<(HintKind, usize, usize)> {
    let span = (stmt.start_byte(), stmt.end_byte());
    let first = stmt.named_child(0)?;
    if first.kind() == "assignment" && stmt.named_child_count() == 1 {
        let module_level = matches!(stmt.parent().map(|p| p.kind()), Some("module"));
        let class_level = stmt.parent().is_some_and(|p| {
            p.kind() == "block"
                && matches!(p.parent().map(|g| g.kind()), Some("class_definition"))
        });
        if module_level || class_level {
            return Some((HintKind::FieldDefinition, span.0, span.1));
        }
    }
    if first.kind() == "string" && stmt.named_child_count() == 1 && stmt.child_count() == 1 {
        return Some((HintKind::BlockComment, span.0, span.1));
    }
    None
}

/// Header span of a declaration: from the node start through the last child
/// before any of `stop_kinds` (the body or the terminating punctuation).
fn header_span(node: Node<'_>, stop_kinds: &[&str]) -> (usize, usize) {
    let start = node.start_byte();
    let mut end = start;
    let mut cursor = node.walk();
    for child in node.children(&mut cursor) {
        if stop_kinds.contains(&child.kind()) {
            break;
        }
        end = child.end_byte();
    }
    (start, end.max(start))
}

fn push_span(out: &mut Vec<HintSpan>, kind: HintKind, start: usize, end: usize, source: &str) {
    if start >= end {
        return;
    }
    out.push(HintSpan { kind, start, end, text: source[start..end].to_string() });
}
