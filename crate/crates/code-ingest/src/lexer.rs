use crate::IngestError;

/// A lexed token referencing the source it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawToken<'a> {
    pub text: &'a str,
    /// Byte offset of the first byte of the token.
    pub start: usize,
    /// Byte offset one past the last byte of the token.
    pub end: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Split `source` into tokens.
///
/// Maximal runs of word characters (alphanumeric or `_`) form a single token;
/// every other non-whitespace character becomes a one-character token.
/// Whitespace never appears in the output. Spans are byte offsets and tokens
/// are emitted strictly left to right, so `start` is non-decreasing.
pub fn lex(source: &str) -> Vec<RawToken<'_>> {
    let mut out = Vec::new();
    let mut chars = source.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if is_word_char(c) {
            let mut end = start + c.len_utf8();
            chars.next();
            while let Some(&(i, next)) = chars.peek() {
                if is_word_char(next) {
                    end = i + next.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            out.push(RawToken { text: &source[start..end], start, end });
        } else {
            let end = start + c.len_utf8();
            chars.next();
            out.push(RawToken { text: &source[start..end], start, end });
        }
    }
    out
}

/// Like [`lex`], but accepts raw bytes and reports the offset of the first
/// invalid UTF-8 byte instead of panicking.
pub fn lex_bytes(source: &[u8]) -> Result<Vec<RawToken<'_>>, IngestError> {
    let text = std::str::from_utf8(source)
        .map_err(|e| IngestError::InvalidUtf8 { offset: e.valid_up_to() })?;
    Ok(lex(text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_and_punctuation_split() {
        let toks = lex("def f(x):");
        let texts: Vec<&str> = toks.iter().map(|t| t.text).collect();
        assert_eq!(texts, ["def", "f", "(", "x", ")", ":"]);
    }

    #[test]
    fn underscores_and_digits_stay_joined() {
        let toks = lex("MAX_ARRAY_SIZE=1024");
        let texts: Vec<&str> = toks.iter().map(|t| t.text).collect();
        assert_eq!(texts, ["MAX_ARRAY_SIZE", "=", "1024"]);
    }

    #[test]
    fn spans_recover_the_source_text() {
        let src = "x = y + 12  # note";
        for t in lex(src) {
            assert_eq!(&src[t.start..t.end], t.text);
        }
    }

    #[test]
    fn whitespace_only_input_is_empty() {
        assert!(lex("  \t\n  ").is_empty());
    }

    #[test]
    fn multibyte_characters_are_single_tokens_with_byte_spans() {
        let src = "a → b";
        let toks = lex(src);
        assert_eq!(toks.len(), 3);
        assert_eq!(toks[1].text, "→");
        assert_eq!(toks[1].end - toks[1].start, "→".len());
    }

    #[test]
    fn invalid_utf8_names_the_offset() {
        let bytes = b"abc \xff def";
        match lex_bytes(bytes) {
            Err(IngestError::InvalidUtf8 { offset }) => assert_eq!(offset, 4),
            other => panic!("expected utf-8 error, got {other:?}"),
        }
    }
}
