//! Golden tests: every fixture's extracted hints must match the checked-in
//! expected spans exactly, and each golden span's text must be the literal
//! slice of the fixture at its byte range.

use std::fs;
use std::path::{Path, PathBuf};

use hint_extract::{hint_spans, HintKind, HintSpan, Language};

fn fixture_dir(lang: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(lang)
}

fn check_language(lang: Language, dir: &str, ext: &str) -> usize {
    let mut checked = 0;
    let mut entries: Vec<PathBuf> = fs::read_dir(fixture_dir(dir))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    entries.sort();
    for path in entries {
        let source = fs::read_to_string(&path).unwrap();
        let golden_path = path.with_extension("golden.json");
        let golden: Vec<HintSpan> =
            serde_json::from_str(&fs::read_to_string(&golden_path).unwrap()).unwrap();

        for span in &golden {
            assert_eq!(
                &source[span.start..span.end],
                span.text,
                "stale offsets in {}",
                golden_path.display()
            );
        }

        let extracted = hint_spans(&source, lang).unwrap();
        assert_eq!(extracted, golden, "span mismatch for {}", path.display());
        checked += 1;
    }
    checked
}

#[test]
fn python_fixtures_match_goldens() {
    assert!(check_language(Language::Python, "python", "py") >= 10);
}

#[test]
fn java_fixtures_match_goldens() {
    assert!(check_language(Language::Java, "java", "java") >= 10);
}

/// The corpus exercises every hint category in both languages where the
/// grammar can produce it.
#[test]
fn corpus_covers_all_kinds() {
    let mut seen = std::collections::BTreeSet::new();
    for (lang, dir, ext) in
        [(Language::Python, "python", "py"), (Language::Java, "java", "java")]
    {
        let mut paths: Vec<PathBuf> = fs::read_dir(fixture_dir(dir))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == ext))
            .collect();
        paths.sort();
        for path in paths {
            let source = fs::read_to_string(&path).unwrap();
            for span in hint_spans(&source, lang).unwrap() {
                seen.insert((lang, span.kind));
            }
        }
    }
    for kind in [
        HintKind::ImportStatement,
        HintKind::ClassDefinition,
        HintKind::FunctionDefinition,
        HintKind::FieldDefinition,
        HintKind::LineComment,
        HintKind::BlockComment,
    ] {
        assert!(seen.contains(&(Language::Python, kind)), "python missing {kind:?}");
        assert!(seen.contains(&(Language::Java, kind)), "java missing {kind:?}");
    }
}
