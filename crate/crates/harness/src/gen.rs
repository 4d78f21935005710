//! Synthetic Python document generators for the three evaluation tasks.
//!
//! Every generated document is valid Python whose token count is an exact
//! multiple of the snippet length, so segmentation never pads. The signal a
//! query needs always sits far from the query itself: name bindings land in
//! the first snippet, chain bindings and guard checks land two snippets from
//! the end, and the query token is the final token of the document. Line
//! budgets are measured with the real lexer rather than assumed, so template
//! edits cannot silently break the geometry.

use code_ingest::{lex, Vocab, OOV_ID};
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Examples, LabeledExample, RankedExample, TaskKind};
use crate::error::HarnessError;

/// Configuration for one generated dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticTaskSpec {
    pub task: TaskKind,
    /// Number of examples to generate.
    pub size: usize,
    pub seed: u64,
    /// Cap on distinct tokens across the generated corpus.
    pub vocab_budget: usize,
    /// Tokens per snippet; every document is a whole number of snippets.
    pub snippet_len: usize,
    /// Inclusive range of snippets per document.
    pub num_snippets_range: (usize, usize),
}

impl Default for SyntheticTaskSpec {
    fn default() -> Self {
        Self {
            task: TaskKind::Recall,
            size: 64,
            seed: 0,
            vocab_budget: 512,
            snippet_len: 32,
            num_snippets_range: (8, 8),
        }
    }
}

impl SyntheticTaskSpec {
    /// Reject geometries the templates cannot realize.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.size == 0 {
            return Err(HarnessError::InvalidSpec("size must be at least 1".into()));
        }
        let (lo, hi) = self.num_snippets_range;
        if lo < 4 || lo > hi {
            return Err(HarnessError::InvalidSpec(format!(
                "num_snippets_range ({lo}, {hi}) must satisfy 4 <= lo <= hi"
            )));
        }
        if self.snippet_len < 12 {
            return Err(HarnessError::InvalidSpec(
                "snippet_len below 12 leaves no room for the opening bindings".into(),
            ));
        }
        if self.vocab_budget < 96 {
            return Err(HarnessError::InvalidSpec(
                "vocab_budget below 96 cannot hold the template token pools".into(),
            ));
        }
        Ok(())
    }
}

const KEYS: [&str; 12] = [
    "key_aa", "key_ab", "key_ac", "key_ad", "key_ae", "key_af", "key_ag", "key_ah", "key_ai",
    "key_aj", "key_ak", "key_al",
];
const VALUES: [&str; 16] = [
    "val_ba", "val_bb", "val_bc", "val_bd", "val_be", "val_bf", "val_bg", "val_bh", "val_bi",
    "val_bj", "val_bk", "val_bl", "val_bm", "val_bn", "val_bo", "val_bp",
];
const LOCALS: [&str; 8] = [
    "tmp_ca", "tmp_cb", "tmp_cc", "tmp_cd", "tmp_ce", "tmp_cf", "tmp_cg", "tmp_ch",
];
const WORDS: [&str; 16] = [
    "wda", "wdb", "wdc", "wdd", "wde", "wdf", "wdg", "wdh", "wdi", "wdj", "wdk", "wdl", "wdm",
    "wdn", "wdo", "wdp",
];
const FUNCS: [&str; 8] = [
    "step_ea", "step_eb", "step_ec", "step_ed", "step_ee", "step_ef", "step_eg", "step_eh",
];
const ALIASES: [&str; 10] = [
    "alias_fa", "alias_fb", "alias_fc", "alias_fd", "alias_fe", "alias_ff", "alias_fg",
    "alias_fh", "alias_fi", "alias_fj",
];
const MODULES: [&str; 6] = ["mod_ga", "mod_gb", "mod_gc", "mod_gd", "mod_ge", "mod_gf"];
const METHODS: [&str; 12] = [
    "meth_ha", "meth_hb", "meth_hc", "meth_hd", "meth_he", "meth_hf", "meth_hg", "meth_hh",
    "meth_hi", "meth_hj", "meth_hk", "meth_hl",
];
const BOUNDS: [&str; 6] = [
    "limit_ia", "limit_ib", "limit_ic", "limit_id", "limit_ie", "limit_if",
];
const BUFFERS: [&str; 4] = ["buf_ja", "buf_jb", "buf_jc", "buf_jd"];
const INTS: [&str; 4] = ["64", "96", "128", "160"];

/// Per-example random stream, independent of generation order.
pub(crate) fn example_rng(seed: u64, index: usize, salt: &str) -> ChaCha20Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(&seed.to_le_bytes());
    eat(&(index as u64).to_le_bytes());
    eat(salt.as_bytes());
    ChaCha20Rng::seed_from_u64(h)
}

/// Line buffer that tracks its lexed token count as it grows.
struct Composer {
    lines: Vec<String>,
    tokens: usize,
}

impl Composer {
    fn new() -> Self {
        Self {
            lines: Vec::new(),
            tokens: 0,
        }
    }

    fn push(&mut self, line: String) {
        self.tokens += lex(&line).len();
        self.lines.push(line);
    }

    /// Module-level filler (calls and `pass`) until exactly `target` tokens.
    fn fill_module(&mut self, rng: &mut ChaCha20Rng, target: usize) {
        while self.tokens < target {
            let gap = target - self.tokens;
            if gap >= 6 && rng.random_bool(0.6) {
                let a = WORDS[rng.random_range(0..WORDS.len())];
                let b = WORDS[rng.random_range(0..WORDS.len())];
                self.push(format!("run({a}, {b})"));
            } else if gap >= 4 && rng.random_bool(0.6) {
                let a = WORDS[rng.random_range(0..WORDS.len())];
                self.push(format!("use({a})"));
            } else {
                self.push("pass".to_string());
            }
        }
    }

    /// Function-body filler until exactly `target` tokens.
    fn fill_body(&mut self, rng: &mut ChaCha20Rng, target: usize) {
        while self.tokens < target {
            let gap = target - self.tokens;
            if gap >= 4 && rng.random_bool(0.6) {
                let a = WORDS[rng.random_range(0..WORDS.len())];
                self.push(format!("    run({a})"));
            } else {
                self.push("    pass".to_string());
            }
        }
    }

    fn source(self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

fn pick_distinct<'a>(rng: &mut ChaCha20Rng, pool: &[&'a str], n: usize) -> Vec<&'a str> {
    rand::seq::index::sample(rng, pool.len(), n)
        .iter()
        .map(|i| pool[i])
        .collect()
}

fn intern_target(vocab: &Vocab, text: &str) -> usize {
    let id = vocab.id_of(text);
    assert_ne!(id, OOV_ID, "generated answer {text:?} missing from vocabulary");
    id
}

/// Generate a dataset for `spec.task`.
pub fn gen_dataset(spec: &SyntheticTaskSpec) -> Result<Dataset, HarnessError> {
    spec.validate()?;
    match spec.task {
        TaskKind::Recall => gen_recall_task(spec),
        TaskKind::Api => gen_api_task(spec),
        TaskKind::Vuln => gen_vuln_task(spec),
    }
}

fn finish_ranked(
    spec: &SyntheticTaskSpec,
    task: TaskKind,
    sources: Vec<String>,
    answers: Vec<String>,
) -> Result<Dataset, HarnessError> {
    let vocab = Vocab::build(sources.iter().map(String::as_str));
    if vocab.len() > spec.vocab_budget {
        return Err(HarnessError::VocabBudget {
            budget: spec.vocab_budget,
            got: vocab.len(),
        });
    }
    let examples = sources
        .into_iter()
        .zip(answers)
        .map(|(source, answer)| RankedExample {
            target_id: intern_target(&vocab, &answer),
            source,
        })
        .collect();
    Ok(Dataset {
        task,
        vocab,
        examples: Examples::Ranked(examples),
    })
}

/// Name-to-value recall.
///
/// Even examples bind three module constants in the first snippet and query
/// one of them; odd examples query a local bound inside a function that
/// starts two snippets before the end. The query name is always the final
/// token and the answer is the token bound to it.
pub fn gen_recall_task(spec: &SyntheticTaskSpec) -> Result<Dataset, HarnessError> {
    let mut sources = Vec::with_capacity(spec.size);
    let mut answers = Vec::with_capacity(spec.size);
    for index in 0..spec.size {
        let mut rng = example_rng(spec.seed, index, "recall");
        let n = rng.random_range(spec.num_snippets_range.0..=spec.num_snippets_range.1);
        let total = n * spec.snippet_len;
        let chain = index % 2 == 1;
        let keys = pick_distinct(&mut rng, &KEYS, 3);
        let values = pick_distinct(&mut rng, &VALUES, 4);
        let func = FUNCS[rng.random_range(0..FUNCS.len())];
        let mut c = Composer::new();
        let (query, answer) = if chain {
            for i in 0..2 {
                c.push(format!("{} = {}", keys[i], values[i]));
            }
            let local = LOCALS[rng.random_range(0..LOCALS.len())];
            (local, values[3])
        } else {
            for i in 0..3 {
                c.push(format!("{} = {}", keys[i], values[i]));
            }
            let pick = rng.random_range(0..3);
            (keys[pick], values[pick])
        };
        c.fill_module(&mut rng, (n - 2) * spec.snippet_len - 5);
        c.push(format!("def {func}():"));
        if chain {
            c.push(format!("    {query} = {answer}"));
        }
        c.fill_body(&mut rng, total - 1);
        c.push(query.to_string());
        debug_assert_eq!(lex(&c.lines.join("\n")).len(), total);
        sources.push(c.source());
        answers.push(answer.to_string());
    }
    finish_ranked(spec, TaskKind::Recall, sources, answers)
}

/// Alias-to-method recall.
///
/// Three module aliases of the form `alias = module.method` open the
/// document after their imports; the final token repeats one alias and the
/// answer is the method name behind it.
pub fn gen_api_task(spec: &SyntheticTaskSpec) -> Result<Dataset, HarnessError> {
    let mut sources = Vec::with_capacity(spec.size);
    let mut answers = Vec::with_capacity(spec.size);
    for index in 0..spec.size {
        let mut rng = example_rng(spec.seed, index, "api");
        let n = rng.random_range(spec.num_snippets_range.0..=spec.num_snippets_range.1);
        let total = n * spec.snippet_len;
        let aliases = pick_distinct(&mut rng, &ALIASES, 3);
        let modules = pick_distinct(&mut rng, &MODULES, 2);
        let methods = pick_distinct(&mut rng, &METHODS, 3);
        let func = FUNCS[rng.random_range(0..FUNCS.len())];
        let mut c = Composer::new();
        for m in &modules {
            c.push(format!("import {m}"));
        }
        for i in 0..3 {
            c.push(format!("{} = {}.{}", aliases[i], modules[i % 2], methods[i]));
        }
        let pick = rng.random_range(0..3);
        c.fill_module(&mut rng, (n - 2) * spec.snippet_len - 5);
        c.push(format!("def {func}():"));
        c.fill_body(&mut rng, total - 1);
        c.push(aliases[pick].to_string());
        sources.push(c.source());
        answers.push(methods[pick].to_string());
    }
    finish_ranked(spec, TaskKind::Api, sources, answers)
}

/// Bounds-check classification.
///
/// The first line binds the real bound, the second a decoy, and an array
/// write happens inside a function near the end of the document. Even
/// examples guard the write with the real bound (label 0); odd examples
/// either guard with the decoy or skip the guard entirely (label 1).
pub fn gen_vuln_task(spec: &SyntheticTaskSpec) -> Result<Dataset, HarnessError> {
    let mut sources = Vec::with_capacity(spec.size);
    let mut examples = Vec::with_capacity(spec.size);
    for index in 0..spec.size {
        let mut rng = example_rng(spec.seed, index, "vuln");
        let n = rng.random_range(spec.num_snippets_range.0..=spec.num_snippets_range.1);
        let total = n * spec.snippet_len;
        let bounds = pick_distinct(&mut rng, &BOUNDS, 2);
        let ints = pick_distinct(&mut rng, &INTS, 2);
        let buf = BUFFERS[rng.random_range(0..BUFFERS.len())];
        let word = WORDS[rng.random_range(0..WORDS.len())];
        let func = FUNCS[rng.random_range(0..FUNCS.len())];
        let safe = index % 2 == 0;
        let missing_guard = (index / 2) % 2 == 1;
        let mut c = Composer::new();
        c.push(format!("{} = {}", bounds[0], ints[0]));
        c.push(format!("{} = {}", bounds[1], ints[1]));
        c.push(format!("{buf} = make({})", bounds[0]));
        c.fill_module(&mut rng, (n - 2) * spec.snippet_len - 5);
        c.push(format!("def {func}():"));
        if safe {
            c.push(format!("    if ix < {}:", bounds[0]));
            c.push(format!("        {buf}[ix] = {word}"));
        } else if missing_guard {
            c.push(format!("    {buf}[ix] = {word}"));
        } else {
            c.push(format!("    if ix < {}:", bounds[1]));
            c.push(format!("        {buf}[ix] = {word}"));
        }
        c.fill_body(&mut rng, total);
        sources.push(c.source());
        examples.push(u8::from(!safe));
    }
    let vocab = Vocab::build(sources.iter().map(String::as_str));
    if vocab.len() > spec.vocab_budget {
        return Err(HarnessError::VocabBudget {
            budget: spec.vocab_budget,
            got: vocab.len(),
        });
    }
    let examples = sources
        .into_iter()
        .zip(examples)
        .map(|(source, label)| LabeledExample { source, label })
        .collect();
    Ok(Dataset {
        task: TaskKind::Vuln,
        vocab,
        examples: Examples::Labeled(examples),
    })
}

/// Label a recall or api source by scanning its tokens, without a model.
///
/// The query is the final token; the answer is the value bound to it by the
/// rightmost `name = ...` statement, following one `.` hop for alias
/// bindings. Returns the answer token text.
pub fn scan_oracle_ranked(source: &str) -> Option<String> {
    let toks: Vec<&str> = lex(source).iter().map(|t| t.text).collect();
    let query = *toks.last()?;
    for i in (0..toks.len().saturating_sub(3)).rev() {
        if toks[i] == query && toks[i + 1] == "=" {
            if toks.len() > i + 4 && toks[i + 3] == "." {
                return Some(toks[i + 4].to_string());
            }
            return Some(toks[i + 2].to_string());
        }
    }
    None
}

/// Label a vuln source by scanning its tokens, without a model.
///
/// The bound is the target of the first assignment; the document is safe
/// exactly when some `if _ < bound` guard appears later.
pub fn scan_oracle_vuln(source: &str) -> Option<u8> {
    let toks: Vec<&str> = lex(source).iter().map(|t| t.text).collect();
    let bound = *toks.first()?;
    let guarded = toks
        .windows(4)
        .any(|w| w[0] == "if" && w[2] == "<" && w[3] == bound);
    Some(u8::from(!guarded))
}
