//! Question reduction: tokenize, drop stopwords, lemmatize.
//!
//! The lemmatizer is a small rule-based depluralizer with `-ing`/`-ed`
//! handling and an exception table. Rules are applied until none fires, and
//! exception lemmas are never rewritten, so `lemmatize` is idempotent.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const WH_WORDS: [&str; 7] = ["what", "who", "where", "why", "how", "which", "when"];

const DEFAULT_STOPWORDS: &str = include_str!("../resources/stopwords.txt");
const DEFAULT_EXCEPTIONS: &str = include_str!("../resources/lemma_exceptions.txt");

pub const STOPWORDS_FILE: &str = "stopwords.txt";
pub const EXCEPTIONS_FILE: &str = "lemma_exceptions.txt";

/// Ordered concept tokens of a question.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReducedForm(Vec<String>);

impl ReducedForm {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        ReducedForm(tokens.into_iter().map(Into::into).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for ReducedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

/// Suffix rewrites, tried in order. Each one strictly shortens the word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuffixRule {
    /// `man's` -> `man`
    Possessive,
    /// `skies` -> `sky`
    IesToY,
    /// `boxes` -> `box`, `glasses` -> `glass`
    SibilantEs,
    /// `cones` -> `cone`
    PluralS,
    /// `fried` -> `fry`
    IedToY,
    /// `riding` -> `ride`, `running` -> `run`
    Ing,
    /// `baked` -> `bake`, `parked` -> `park`
    Ed,
}

impl SuffixRule {
    pub const DEFAULT_ORDER: [SuffixRule; 7] = [
        SuffixRule::Possessive,
        SuffixRule::IesToY,
        SuffixRule::SibilantEs,
        SuffixRule::PluralS,
        SuffixRule::IedToY,
        SuffixRule::Ing,
        SuffixRule::Ed,
    ];

    fn apply(self, w: &str) -> Option<String> {
        if self == SuffixRule::Possessive {
            return w
                .strip_suffix("'s")
                .filter(|s| s.chars().last().is_some_and(char::is_alphanumeric))
                .map(str::to_string);
        }
        if !is_rule_word(w) {
            return None;
        }
        match self {
            SuffixRule::Possessive => unreachable!(),
            SuffixRule::IesToY => {
                if w.len() >= 5 && w.ends_with("ies") && !w.ends_with("eies") && !w.ends_with("aies") {
                    Some(format!("{}y", &w[..w.len() - 3]))
                } else {
                    None
                }
            }
            SuffixRule::SibilantEs => ["sses", "ches", "shes", "xes", "zzes"]
                .iter()
                .find(|suf| w.ends_with(*suf) && w.len() > suf.len() + 1)
                .map(|_| w[..w.len() - 2].to_string()),
            SuffixRule::PluralS => {
                let keep = ["ss", "us", "is"].iter().any(|s| w.ends_with(s));
                (w.ends_with('s') && !keep && w.len() >= 4).then(|| w[..w.len() - 1].to_string())
            }
            SuffixRule::IedToY => {
                (w.len() >= 5 && w.ends_with("ied")).then(|| format!("{}y", &w[..w.len() - 3]))
            }
            SuffixRule::Ing => w.strip_suffix("ing").and_then(restore_stem),
            SuffixRule::Ed => {
                if w.ends_with("eed") {
                    None
                } else {
                    w.strip_suffix("ed").and_then(restore_stem)
                }
            }
        }
    }
}

/// Lowercase ASCII letters and hyphens, ending in a letter.
fn is_rule_word(w: &str) -> bool {
    w.bytes().all(|b| b.is_ascii_lowercase() || b == b'-')
        && w.bytes().last().is_some_and(|b| b.is_ascii_lowercase())
}

fn is_consonant(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(w, i - 1),
        _ => true,
    }
}

/// Number of vowel-consonant sequences in `w`.
fn measure(w: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..w.len() {
        let cons = is_consonant(w, i);
        if cons && prev_vowel {
            m += 1;
        }
        prev_vowel = !cons;
    }
    m
}

fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_consonant(w, n - 3)
        && !is_consonant(w, n - 2)
        && is_consonant(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

/// Repairs a stem left by removing `-ing`/`-ed`.
fn restore_stem(stem: &str) -> Option<String> {
    let b = stem.as_bytes();
    let n = b.len();
    if n < 3 || !(0..n).any(|i| !is_consonant(b, i)) {
        return None;
    }
    if b[n - 1] == b[n - 2] && is_consonant(b, n - 1) && !matches!(b[n - 1], b'l' | b's' | b'z') {
        return Some(stem[..n - 1].to_string());
    }
    if measure(b) == 1 && ends_cvc(b) {
        return Some(format!("{stem}e"));
    }
    Some(stem.to_string())
}

/// Normalization resources: stopwords, lemma exceptions and suffix rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormConfig {
    stopwords: BTreeSet<String>,
    lemma_exceptions: BTreeMap<String, String>,
    /// Exception lemmas; never rewritten.
    protected: BTreeSet<String>,
    suffix_rules: Vec<SuffixRule>,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig::from_text(DEFAULT_STOPWORDS, DEFAULT_EXCEPTIONS)
            .expect("bundled normalization resources are valid")
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormConfigFile {
    stopwords: Option<PathBuf>,
    lemma_exceptions: Option<PathBuf>,
}

impl NormConfig {
    pub fn new(
        stopwords: impl IntoIterator<Item = String>,
        lemma_exceptions: impl IntoIterator<Item = (String, String)>,
        suffix_rules: Vec<SuffixRule>,
    ) -> Result<Self> {
        let stopwords: BTreeSet<String> = stopwords.into_iter().map(|s| s.to_lowercase()).collect();
        if let Some(wh) = WH_WORDS.iter().find(|w| stopwords.contains(**w)) {
            return Err(Error::Config(format!("wh-word {wh:?} may not be a stopword")));
        }
        let lemma_exceptions: BTreeMap<String, String> = lemma_exceptions
            .into_iter()
            .map(|(f, l)| (f.to_lowercase(), l.to_lowercase()))
            .collect();
        let protected = lemma_exceptions.values().cloned().collect();
        Ok(NormConfig {
            stopwords,
            lemma_exceptions,
            protected,
            suffix_rules,
        })
    }

    /// Parses the plain-text resource formats.
    pub fn from_text(stopwords: &str, exceptions: &str) -> Result<Self> {
        let stop = content_lines(stopwords).map(|(_, l)| l.trim().to_string());
        let mut exc = Vec::new();
        for (line, l) in content_lines(exceptions) {
            let (form, lemma) = l.split_once('\t').ok_or_else(|| {
                Error::Config(format!("lemma exceptions line {line}: expected form<TAB>lemma"))
            })?;
            let (form, lemma) = (form.trim(), lemma.trim());
            if form.is_empty() || lemma.is_empty() {
                return Err(Error::Config(format!(
                    "lemma exceptions line {line}: empty form or lemma"
                )));
            }
            exc.push((form.to_string(), lemma.to_string()));
        }
        NormConfig::new(stop, exc, SuffixRule::DEFAULT_ORDER.to_vec())
    }

    pub fn from_files(stopwords: &Path, exceptions: &Path) -> Result<Self> {
        let read = |p: &Path| fs::read_to_string(p).map_err(|e| Error::io(p, e));
        NormConfig::from_text(&read(stopwords)?, &read(exceptions)?)
    }

    /// Loads resources from a directory holding `stopwords.txt` and
    /// `lemma_exceptions.txt`, or from a TOML file naming either file
    /// (missing entries fall back to the bundled defaults).
    pub fn load(path: &Path) -> Result<Self> {
        if path.is_dir() {
            return NormConfig::from_files(&path.join(STOPWORDS_FILE), &path.join(EXCEPTIONS_FILE));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: NormConfigFile =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let read = |p: Option<PathBuf>, default: &str| -> Result<String> {
            match p {
                Some(p) => {
                    let p = base.join(p);
                    fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
                }
                None => Ok(default.to_string()),
            }
        };
        NormConfig::from_text(
            &read(file.stopwords, DEFAULT_STOPWORDS)?,
            &read(file.lemma_exceptions, DEFAULT_EXCEPTIONS)?,
        )
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn lemma_exceptions(&self) -> &BTreeMap<String, String> {
        &self.lemma_exceptions
    }

    pub fn suffix_rules(&self) -> &[SuffixRule] {
        &self.suffix_rules
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    /// SHA-256 over the canonical resource contents, for manifests.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for s in &self.stopwords {
            h.update(b"s\0");
            h.update(s.as_bytes());
            h.update(b"\n");
        }
        for (f, l) in &self.lemma_exceptions {
            h.update(b"e\0");
            h.update(f.as_bytes());
            h.update(b"\t");
            h.update(l.as_bytes());
            h.update(b"\n");
        }
        for r in &self.suffix_rules {
            h.update(format!("r\0{r:?}\n").as_bytes());
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}'
                | '\u{2019}'
                | '\u{201c}'
                | '\u{201d}'
                | '\u{ab}'
                | '\u{bb}'
                | '\u{2026}'
                | '\u{bf}'
                | '\u{a1}'
        )
}

/// Whitespace split, lowercase, trim surrounding punctuation.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.to_lowercase())
        .map(|t| t.trim_matches(is_punct).to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Maps a lowercase token to its lemma.
pub fn lemmatize(token: &str, cfg: &NormConfig) -> String {
    let mut cur = token.to_string();
    loop {
        if cfg.protected.contains(&cur) {
            return cur;
        }
        if let Some(lemma) = cfg.lemma_exceptions.get(&cur) {
            return lemma.clone();
        }
        match cfg.suffix_rules.iter().find_map(|r| r.apply(&cur)) {
            Some(next) => cur = next,
            None => return cur,
        }
    }
}

/// Reduces a question to its concept tokens.
///
/// A lemma that lands on a stopword (`there's` -> `there`) is dropped too.
pub fn reduce(question: &str, cfg: &NormConfig) -> ReducedForm {
    ReducedForm(
        tokenize(question)
            .into_iter()
            .filter(|t| !cfg.is_stopword(t))
            .map(|t| lemmatize(&t, cfg))
            .filter(|t| !cfg.is_stopword(t))
            .collect(),
    )
}

/// Tokenized, lemmatized answer words. Stopwords are kept.
pub fn answer_tokens(answer: &str, cfg: &NormConfig) -> Vec<String> {
    tokenize(answer).into_iter().map(|t| lemmatize(&t, cfg)).collect()
}
