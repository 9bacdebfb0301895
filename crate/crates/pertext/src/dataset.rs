//! JSON Lines dataset files, one labeled sequence per line:
//!
//! ```json
//! {"tokens":[{"s":"می","sep":"sp"}],"labels":["1"],"task":"zwnj"}
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use pertext_core::textproc::is_punct_char;
use pertext_core::types::label_set_for;
use pertext_core::{Label, LabeledSequence, Separator, Task, Token};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub s: String,
    pub sep: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub tokens: Vec<TokenRecord>,
    pub labels: Vec<String>,
    pub task: String,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error("line {line}: expected task {expected}, found {found}")]
    TaskMismatch { line: usize, expected: Task, found: Task },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn token_record(t: &Token) -> TokenRecord {
    TokenRecord {
        s: t.surface.clone(),
        sep: t.sep_after.as_str().to_string(),
    }
}

/// Rebuilds a token; single inventory marks become punctuation tokens.
pub fn token_from_record(r: &TokenRecord) -> Option<Token> {
    let sep = Separator::parse(&r.sep)?;
    let mut chars = r.s.chars();
    let is_punct = matches!((chars.next(), chars.next()), (Some(c), None) if is_punct_char(c));
    let token = Token {
        surface: r.s.clone(),
        sep_after: sep,
        is_punct,
    };
    token.is_valid().then_some(token)
}

impl From<&LabeledSequence> for SequenceRecord {
    fn from(seq: &LabeledSequence) -> Self {
        SequenceRecord {
            tokens: seq.tokens().iter().map(token_record).collect(),
            labels: seq.labels().iter().map(|l| l.name().to_string()).collect(),
            task: seq.task().as_str().to_string(),
        }
    }
}

impl SequenceRecord {
    pub fn into_sequence(self) -> Result<LabeledSequence, String> {
        let task: Task = self.task.parse().map_err(|e| format!("{e}"))?;
        let tokens = self
            .tokens
            .iter()
            .map(|r| token_from_record(r).ok_or_else(|| format!("invalid token {:?}", r.s)))
            .collect::<Result<Vec<_>, _>>()?;
        let labels = self
            .labels
            .iter()
            .map(|l| Label::parse(task, l).ok_or_else(|| format!("`{l}` is not a {task} label")))
            .collect::<Result<Vec<_>, _>>()?;
        LabeledSequence::new(task, tokens, labels).map_err(|e| e.to_string())
    }
}

pub fn write_dataset<W: Write>(mut w: W, data: &[LabeledSequence]) -> io::Result<()> {
    for seq in data {
        serde_json::to_writer(&mut w, &SequenceRecord::from(seq))?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_dataset_file(path: &Path, data: &[LabeledSequence]) -> io::Result<()> {
    write_dataset(BufWriter::new(File::create(path)?), data)
}

/// Reads a dataset. With `expect`, every sequence must be of that task.
/// Blank lines are skipped.
pub fn read_dataset<R: BufRead>(reader: R, expect: Option<Task>) -> Result<Vec<LabeledSequence>, DatasetError> {
    let mut out = Vec::new();
    let mut first_task = expect;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let invalid = |reason: String| DatasetError::Invalid { line: i + 1, reason };
        let record: SequenceRecord = serde_json::from_str(&line).map_err(|e| invalid(e.to_string()))?;
        let seq = record.into_sequence().map_err(invalid)?;
        match first_task {
            Some(t) if t != seq.task() => {
                return Err(DatasetError::TaskMismatch {
                    line: i + 1,
                    expected: t,
                    found: seq.task(),
                })
            }
            _ => first_task = Some(seq.task()),
        }
        out.push(seq);
    }
    Ok(out)
}

pub fn read_dataset_file(path: &Path, expect: Option<Task>) -> Result<Vec<LabeledSequence>, DatasetError> {
    read_dataset(BufReader::new(File::open(path)?), expect)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitStats {
    pub sequences: usize,
    pub tokens: usize,
    pub classes: BTreeMap<String, usize>,
}

pub fn split_stats(task: Task, data: &[LabeledSequence]) -> SplitStats {
    let mut classes: BTreeMap<String, usize> = label_set_for(task).classes.iter().map(|c| (c.to_string(), 0)).collect();
    for seq in data {
        for l in seq.labels() {
            *classes.entry(l.name().to_string()).or_default() += 1;
        }
    }
    SplitStats {
        sequences: data.len(),
        tokens: data.iter().map(LabeledSequence::len).sum(),
        classes,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetStats {
    pub task: String,
    pub seed: u64,
    pub ratios: String,
    pub sentences_read: usize,
    pub train: SplitStats,
    pub val: SplitStats,
    pub test: SplitStats,
}
