//! Hint extraction over source files.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use code_ingest::{Tokenizer, Vocab};
use hint_extract::{
    build_mask, hint_spans, write_hint_jsonl, write_mask_json, Language,
};

use crate::error::{data_err, CliError};

/// Extract hint spans, a token dump, and an aligned mask from source files.
#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// Source language of every input.
    #[arg(long, default_value = "python")]
    pub language: Language,
    /// Directory receiving one output trio per input.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Source files to process.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

pub fn run(args: &ExtractArgs) -> Result<(), CliError> {
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| data_err(format!("{}: {e}", args.out_dir.display())))?;
    let mut failed = 0usize;
    for file in &args.files {
        match process(file, args.language, &args.out_dir) {
            Ok((hints, tokens)) => {
                eprintln!("{}: {hints} hints over {tokens} tokens", file.display());
            }
            Err(e) => {
                eprintln!("{}: {e}", file.display());
                failed += 1;
            }
        }
    }
    if failed > 0 {
        return Err(data_err(format!(
            "{failed} of {} inputs failed",
            args.files.len()
        )));
    }
    Ok(())
}

/// Write `{name}.hints.jsonl`, `{name}.tokens.jsonl`, and `{name}.mask.json`
/// for one input; failures leave other inputs unaffected.
fn process(file: &Path, language: Language, out_dir: &Path) -> Result<(usize, usize), String> {
    let source = fs::read_to_string(file).map_err(|e| e.to_string())?;
    let spans = hint_spans(&source, language).map_err(|e| e.to_string())?;
    // A file-local vocabulary; the dump's ids matter only within the file.
    let vocab = Vocab::build([source.as_str()]);
    let seq = Tokenizer::new(vocab).tokenize(&source);
    let mask = build_mask(&spans, &seq);

    let name = file
        .file_name()
        .ok_or_else(|| "not a file path".to_string())?
        .to_string_lossy()
        .into_owned();
    let write = |suffix: &str, body: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>| {
        let mut buf = Vec::new();
        body(&mut buf).map_err(|e| e.to_string())?;
        fs::write(out_dir.join(format!("{name}.{suffix}")), buf).map_err(|e| e.to_string())
    };
    write("hints.jsonl", &|w| {
        write_hint_jsonl(w, &spans).map_err(std::io::Error::other)
    })?;
    write("tokens.jsonl", &|w| {
        code_ingest::write_token_jsonl(w, &seq).map_err(std::io::Error::other)
    })?;
    write("mask.json", &|w| {
        write_mask_json(w, &mask).map_err(std::io::Error::other)
    })?;
    Ok((spans.len(), seq.len()))
}
