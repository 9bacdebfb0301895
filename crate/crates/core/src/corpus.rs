//! Bijankhan-style corpus parsing and construction of the three task
//! datasets, plus deterministic train/validation/test splitting.
//!
//! A corpus holds one `word<TAB>tag` row per word and a lone `#` between
//! sentences. Multi-word expressions occupy a single row and may contain
//! spaces or ZWNJs; punctuation rows carry the tag `DELM`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::textproc::{normalize, punct_class, strip_punctuation, tokenize, NormalizationConfig};
use crate::types::{Label, LabeledSequence, PunctClass, Separator, Task, Token};

pub const DELIMITER_TAG: &str = "DELM";
pub const SENTENCE_DELIMITER: &str = "#";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusEntry {
    pub word: String,
    pub tag: String,
}

impl CorpusEntry {
    pub fn new(word: impl Into<String>, tag: impl Into<String>) -> CorpusEntry {
        CorpusEntry {
            word: word.into(),
            tag: tag.into(),
        }
    }

    pub fn is_delimiter(&self) -> bool {
        self.tag == DELIMITER_TAG
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusSentence {
    pub entries: Vec<CorpusEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("line {line}: expected `word<TAB>tag`")]
    MalformedLine { line: usize },
    #[error("invalid UTF-8 at byte offset {offset}")]
    InvalidEncoding { offset: usize },
}

/// Incremental line parser; the std crate drives it from a reader.
#[derive(Debug, Default)]
pub struct CorpusParser {
    current: Vec<CorpusEntry>,
}

impl CorpusParser {
    pub fn new() -> CorpusParser {
        CorpusParser::default()
    }

    /// Feeds one line (1-based `line_no` for diagnostics). Returns a sentence
    /// when the line closes a non-empty one.
    pub fn push_line(
        &mut self,
        line: &str,
        line_no: usize,
    ) -> Result<Option<CorpusSentence>, CorpusError> {
        let line = line.trim_end_matches(['\n', '\r']);
        if line.trim() == SENTENCE_DELIMITER {
            return Ok(self.take());
        }
        if line.trim().is_empty() {
            return Ok(None);
        }
        let (word, tag) = line
            .split_once('\t')
            .map(|(w, t)| (w, t.trim_start_matches('\t')))
            .ok_or(CorpusError::MalformedLine { line: line_no })?;
        if word.is_empty() || tag.is_empty() {
            return Err(CorpusError::MalformedLine { line: line_no });
        }
        self.current.push(CorpusEntry::new(word, tag));
        Ok(None)
    }

    /// Flushes a trailing sentence that had no closing delimiter.
    pub fn finish(mut self) -> Option<CorpusSentence> {
        self.take()
    }

    fn take(&mut self) -> Option<CorpusSentence> {
        if self.current.is_empty() {
            None
        } else {
            Some(CorpusSentence {
                entries: core::mem::take(&mut self.current),
            })
        }
    }
}

pub fn parse_corpus(text: &str) -> Result<Vec<CorpusSentence>, CorpusError> {
    let mut parser = CorpusParser::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(s) = parser.push_line(line, i + 1)? {
            out.push(s);
        }
    }
    out.extend(parser.finish());
    Ok(out)
}

/// Canonical serialization: one tab per row, `#` after every sentence.
pub fn write_corpus(sentences: &[CorpusSentence]) -> String {
    let mut out = String::new();
    for sentence in sentences {
        for e in &sentence.entries {
            out.push_str(&e.word);
            out.push('\t');
            out.push_str(&e.tag);
            out.push('\n');
        }
        out.push_str(SENTENCE_DELIMITER);
        out.push('\n');
    }
    out
}

/// Word pieces of one corpus row as the pipeline would see them: normalized,
/// tokenized, in-word punctuation stripped.
pub fn expand_word(word: &str) -> Vec<Token> {
    let normalized = normalize(word, &NormalizationConfig::default());
    strip_punctuation(&tokenize(&normalized)).0
}

fn delimiter_class(word: &str) -> Option<PunctClass> {
    let mut chars = word.trim().chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => punct_class(c),
        _ => None,
    }
}

/// Collects word pieces and per-piece labels, joining words with spaces.
struct SequenceBuilder {
    tokens: Vec<Token>,
    labels: Vec<Label>,
}

impl SequenceBuilder {
    fn new() -> Self {
        SequenceBuilder {
            tokens: Vec::new(),
            labels: Vec::new(),
        }
    }

    /// Appends one word's pieces; `label_for(piece, is_last)` labels them.
    fn push_word(&mut self, pieces: Vec<Token>, mut label_for: impl FnMut(&Token, bool) -> Label) {
        if pieces.is_empty() {
            return;
        }
        if let Some(last) = self.tokens.last_mut() {
            last.sep_after = Separator::Space;
        }
        let n = pieces.len();
        for (i, piece) in pieces.into_iter().enumerate() {
            self.labels.push(label_for(&piece, i + 1 == n));
            self.tokens.push(piece);
        }
    }

    fn finish(mut self, task: Task) -> Option<LabeledSequence> {
        let last = self.tokens.last_mut()?;
        last.sep_after = Separator::None;
        LabeledSequence::new(task, self.tokens, self.labels).ok()
    }
}

/// Punctuation dataset: in-class `DELM` rows label the last piece of the
/// preceding word; all `DELM` rows leave the token stream.
pub fn build_punct_dataset(sentences: &[CorpusSentence]) -> Vec<LabeledSequence> {
    let unk = Label::Punct(PunctClass::Unk);
    sentences
        .iter()
        .filter_map(|sentence| {
            let mut b = SequenceBuilder::new();
            let mut labeled = false;
            for e in &sentence.entries {
                if e.is_delimiter() {
                    if let (false, Some(class), Some(label)) =
                        (labeled, delimiter_class(&e.word), b.labels.last_mut())
                    {
                        *label = Label::Punct(class);
                        labeled = true;
                    }
                    continue;
                }
                let pieces = expand_word(&e.word);
                if !pieces.is_empty() {
                    labeled = false;
                }
                b.push_word(pieces, |_, _| unk);
            }
            b.finish(Task::Punctuation)
        })
        .collect()
}

/// Default ezafe predicate: the tag contains `EZ`, ignoring ASCII case.
pub fn tag_has_ezafe(tag: &str) -> bool {
    tag.as_bytes()
        .windows(2)
        .any(|w| w.eq_ignore_ascii_case(b"EZ"))
}

/// Ezafe dataset: a word's final piece is labeled 1 when `has_ezafe(tag)`.
pub fn build_ezafe_dataset(
    sentences: &[CorpusSentence],
    has_ezafe: &dyn Fn(&str) -> bool,
) -> Vec<LabeledSequence> {
    sentences
        .iter()
        .filter_map(|sentence| {
            let mut b = SequenceBuilder::new();
            for e in sentence.entries.iter().filter(|e| !e.is_delimiter()) {
                let positive = has_ezafe(&e.tag);
                b.push_word(expand_word(&e.word), |_, last| Label::Ezafe(last && positive));
            }
            b.finish(Task::Ezafe)
        })
        .collect()
}

/// ZWNJ dataset: words are split at their ZWNJs, every piece that was
/// followed by a ZWNJ is labeled 1, and all emitted separators are spaces.
pub fn build_zwnj_dataset(sentences: &[CorpusSentence]) -> Vec<LabeledSequence> {
    sentences
        .iter()
        .filter_map(|sentence| {
            let mut b = SequenceBuilder::new();
            for e in sentence.entries.iter().filter(|e| !e.is_delimiter()) {
                let mut pieces = expand_word(&e.word);
                let joined: Vec<bool> = pieces
                    .iter()
                    .map(|p| p.sep_after == Separator::Zwnj)
                    .collect();
                for p in &mut pieces {
                    p.sep_after = Separator::Space;
                }
                let mut i = 0;
                b.push_word(pieces, |_, _| {
                    i += 1;
                    Label::Zwnj(joined[i - 1])
                });
            }
            b.finish(Task::Zwnj)
        })
        .collect()
}

/// True when the sequence has at least one ZWNJ join.
pub fn is_zwnj_bearing(seq: &LabeledSequence) -> bool {
    seq.labels().contains(&Label::Zwnj(true))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("cannot split an empty dataset")]
    EmptyDataset,
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
}

/// Exact rational split ratios over a common denominator, plus the shuffle
/// seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSpec {
    train: u64,
    val: u64,
    test: u64,
    denominator: u64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: 8,
            val: 1,
            test: 1,
            denominator: 10,
            seed: DEFAULT_SEED,
        }
    }
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn parse_ratio(s: &str) -> Option<(u128, u128)> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: u128 = n.trim().parse().ok()?;
        let d: u128 = d.trim().parse().ok()?;
        return (d > 0).then_some((n, d));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if (int.is_empty() && frac.is_empty())
        || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit())
        || frac.len() > 18
    {
        return None;
    }
    let den = 10u128.pow(frac.len() as u32);
    let int: u128 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let frac: u128 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    Some((int.checked_mul(den)? + frac, den))
}

impl SplitSpec {
    /// Ratios `train/denominator`, `val/denominator`, `test/denominator`;
    /// they must sum to exactly one.
    pub fn new(train: u64, val: u64, test: u64, denominator: u64, seed: u64) -> Result<SplitSpec, SplitError> {
        let sum = u128::from(train) + u128::from(val) + u128::from(test);
        if denominator == 0 || sum != u128::from(denominator) {
            return Err(SplitError::InvalidRatios(
                "ratios must be in [0,1] and sum to exactly 1".to_string(),
            ));
        }
        Ok(SplitSpec {
            train,
            val,
            test,
            denominator,
            seed,
        })
    }

    /// Parses `train:val:test` where each part is a decimal (`0.8`) or a
    /// fraction (`1/3`).
    pub fn parse(ratios: &str, seed: u64) -> Result<SplitSpec, SplitError> {
        let bad = || SplitError::InvalidRatios(ratios.to_string());
        let parts: Vec<(u128, u128)> = ratios
            .split(':')
            .map(parse_ratio)
            .collect::<Option<_>>()
            .ok_or_else(bad)?;
        let [a, b, c] = parts[..] else {
            return Err(bad());
        };
        let mut den = 1u128;
        for (_, d) in [a, b, c] {
            den = den.checked_mul(d / gcd(den, d)).ok_or_else(bad)?;
        }
        let scale = |(n, d): (u128, u128)| n.checked_mul(den / d).and_then(|v| u64::try_from(v).ok());
        let (Some(train), Some(val), Some(test), Ok(den)) = (scale(a), scale(b), scale(c), u64::try_from(den)) else {
            return Err(bad());
        };
        SplitSpec::new(train, val, test, den, seed)
    }

    pub fn ratios(&self) -> (f64, f64, f64) {
        let d = self.denominator as f64;
        (self.train as f64 / d, self.val as f64 / d, self.test as f64 / d)
    }

    /// Partition sizes for `n` items: floors for train and validation, the
    /// remainder to test.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let n128 = n as u128;
        let den = u128::from(self.denominator);
        let train = (n128 * u128::from(self.train) / den) as usize;
        let val = (n128 * u128::from(self.val) / den) as usize;
        (train, val, n - train - val)
    }
}

impl FromStr for SplitSpec {
    type Err = SplitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SplitSpec::parse(s, DEFAULT_SEED)
    }
}

/// Train, validation and test parts.
pub type Splits<T> = (Vec<T>, Vec<T>, Vec<T>);

/// Shuffles with ChaCha8 seeded from `spec.seed`, then partitions.
pub fn split_dataset<T>(mut items: Vec<T>, spec: &SplitSpec) -> Result<Splits<T>, SplitError> {
    if items.is_empty() {
        return Err(SplitError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    items.shuffle(&mut rng);
    let (n_train, n_val, _) = spec.sizes(items.len());
    let mut rest = items.split_off(n_train);
    let test = rest.split_off(n_val);
    Ok((items, rest, test))
}
