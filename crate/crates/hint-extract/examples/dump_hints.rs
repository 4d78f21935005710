//! Print the hints extracted from a source file as pretty JSON.
//!
//! Usage: cargo run -p hint-extract --example dump_hints -- <python|java> <file>

use hint_extract::{hint_spans, Language};

fn main() {
    let mut args = std::env::args().skip(1);
    let (lang, path) = match (args.next(), args.next()) {
        (Some(l), Some(p)) => (l, p),
        _ => {
            eprintln!("usage: dump_hints <python|java> <file>");
            std::process::exit(2);
        }
    };
    let language: Language = lang.parse().expect("language");
    let source = std::fs::read_to_string(&path).expect("read source");
    let spans = hint_spans(&source, language).expect("extract");
    println!("{}", serde_json::to_string_pretty(&spans).expect("serialize"));
}
