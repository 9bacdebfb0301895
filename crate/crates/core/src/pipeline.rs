//! Mapping and output layers: apply each task's labels to the token stream
//! and compose punctuation, then ZWNJ, then ezafe into one refinement.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::tagger::{Tagger, TaggerError};
use crate::textproc::{detokenize, normalize, punct_glyph, strip_punctuation, tokenize, NormalizationConfig};
use crate::types::{Label, Separator, Task, Token, ZWNJ};
#[cfg(test)]
use crate::types::PunctClass;

pub const KASRA: char = '\u{0650}';
pub const EZAFE_YE: char = 'ی';
const YE_SUFFIX: &str = "\u{200C}ی";
/// Final letters after which ezafe is written as a ye suffix.
pub const VOWEL_FINALS: [char; 4] = ['ا', 'و', 'ه', 'ی'];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EzafeMarker {
    /// Append U+0650.
    #[default]
    Kasra,
    /// Append ZWNJ + ye after a vowel-final letter, kasra otherwise.
    SuffixYe,
    /// Leave surfaces untouched; labels are only reported in the trace.
    TagOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApplyError {
    #[error("{tokens} tokens but {labels} labels")]
    LengthMismatch { tokens: usize, labels: usize },
    #[error("expected {expected} labels, got a {found} label")]
    WrongTask { expected: Task, found: Task },
}

fn check(task: Task, tokens: &[Token], labels: &[Label]) -> Result<(), ApplyError> {
    if tokens.len() != labels.len() {
        return Err(ApplyError::LengthMismatch {
            tokens: tokens.len(),
            labels: labels.len(),
        });
    }
    match labels.iter().find(|l| l.task() != task) {
        Some(l) => Err(ApplyError::WrongTask {
            expected: task,
            found: l.task(),
        }),
        None => Ok(()),
    }
}

/// Inserts a mark after every word labeled with a punctuation class. The
/// mark takes over the word's separator and the word abuts it.
pub fn apply_punct(tokens: &[Token], labels: &[Label]) -> Result<Vec<Token>, ApplyError> {
    check(Task::Punctuation, tokens, labels)?;
    let mut out = Vec::with_capacity(tokens.len() * 2);
    for (token, label) in tokens.iter().zip(labels) {
        let glyph = match label {
            Label::Punct(class) if !token.is_punct => punct_glyph(*class),
            _ => None,
        };
        match glyph {
            Some(g) => {
                let mut word = token.clone();
                let sep = core::mem::replace(&mut word.sep_after, Separator::None);
                out.push(word);
                let mut mark = String::new();
                mark.push(g);
                out.push(Token::punct(mark, sep));
            }
            None => out.push(token.clone()),
        }
    }
    Ok(out)
}

/// Turns space separators labeled 1 into ZWNJs and ZWNJs labeled 0 back into
/// spaces. `None` separators and punctuation tokens are left alone.
pub fn apply_zwnj(tokens: &[Token], labels: &[Label]) -> Result<Vec<Token>, ApplyError> {
    check(Task::Zwnj, tokens, labels)?;
    Ok(tokens
        .iter()
        .zip(labels)
        .map(|(token, label)| {
            let mut t = token.clone();
            if !t.is_punct {
                t.sep_after = match (t.sep_after, label) {
                    (Separator::Space, Label::Zwnj(true)) => Separator::Zwnj,
                    (Separator::Zwnj, Label::Zwnj(false)) => Separator::Space,
                    (sep, _) => sep,
                };
            }
            t
        })
        .collect())
}

/// Renders ezafe on words labeled 1 according to `marker`.
pub fn apply_ezafe(tokens: &[Token], labels: &[Label], marker: EzafeMarker) -> Result<Vec<Token>, ApplyError> {
    check(Task::Ezafe, tokens, labels)?;
    Ok(tokens
        .iter()
        .zip(labels)
        .map(|(token, label)| {
            let mut t = token.clone();
            if t.is_punct || *label != Label::Ezafe(true) {
                return t;
            }
            match marker {
                EzafeMarker::Kasra => t.surface.push(KASRA),
                EzafeMarker::SuffixYe => {
                    if t.surface.chars().last().is_some_and(|c| VOWEL_FINALS.contains(&c)) {
                        t.surface.push(ZWNJ);
                        t.surface.push(EZAFE_YE);
                    } else {
                        t.surface.push(KASRA);
                    }
                }
                EzafeMarker::TagOnly => {}
            }
            t
        })
        .collect())
}

/// What a stage tagger sees: the word tokens only, with separators that
/// pointed at a punctuation mark replaced by a space and the last one `None`.
/// This matches the shape of the training datasets.
pub fn stage_view(tokens: &[Token]) -> Vec<Token> {
    let mut view: Vec<Token> = tokens.iter().filter(|t| !t.is_punct).cloned().collect();
    for t in &mut view {
        if t.sep_after == Separator::None {
            t.sep_after = Separator::Space;
        }
    }
    if let Some(last) = view.last_mut() {
        last.sep_after = Separator::None;
    }
    view
}

/// Spreads labels predicted on [`stage_view`] back over the full token list;
/// punctuation tokens get the task's negative class.
pub fn spread_labels(task: Task, tokens: &[Token], view_labels: &[Label]) -> Result<Vec<Label>, ApplyError> {
    let words = tokens.iter().filter(|t| !t.is_punct).count();
    if words != view_labels.len() {
        return Err(ApplyError::LengthMismatch {
            tokens: words,
            labels: view_labels.len(),
        });
    }
    let mut it = view_labels.iter();
    Ok(tokens
        .iter()
        .map(|t| {
            if t.is_punct {
                Label::negative(task)
            } else {
                *it.next().expect("counted above")
            }
        })
        .collect())
}

#[derive(Clone, Copy, Default)]
pub struct PipelineConfig<'a> {
    pub punct: Option<&'a dyn Tagger>,
    pub zwnj: Option<&'a dyn Tagger>,
    pub ezafe: Option<&'a dyn Tagger>,
    pub marker: EzafeMarker,
    /// Keep existing punctuation and skip the punctuation stage.
    pub keep_punct: bool,
    pub normalization: NormalizationConfig,
}

impl PipelineConfig<'_> {
    pub fn has_stage(&self) -> bool {
        (self.punct.is_some() && !self.keep_punct) || self.zwnj.is_some() || self.ezafe.is_some()
    }
}

/// Tokens shown to one stage's tagger and the labels it returned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageTrace {
    pub task: Task,
    pub tokens: Vec<Token>,
    pub labels: Vec<Label>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefineResult {
    pub output: String,
    pub stages: Vec<StageTrace>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("{stage} stage: {source}")]
    Tagger { stage: Task, source: TaggerError },
    #[error("{stage} stage: {source}")]
    Apply { stage: Task, source: ApplyError },
}

fn run_stage(
    task: Task,
    tagger: &dyn Tagger,
    tokens: &[Token],
    stages: &mut Vec<StageTrace>,
) -> Result<Vec<Label>, PipelineError> {
    if tagger.task() != task {
        return Err(PipelineError::Tagger {
            stage: task,
            source: TaggerError::WrongTask {
                expected: task,
                found: tagger.task(),
            },
        });
    }
    let view = stage_view(tokens);
    let labels = tagger
        .tag(&view)
        .map_err(|source| PipelineError::Tagger { stage: task, source })?;
    let spread = spread_labels(task, tokens, &labels).map_err(|source| PipelineError::Apply { stage: task, source })?;
    stages.push(StageTrace {
        task,
        tokens: view,
        labels,
    });
    Ok(spread)
}

/// Processing-layer normal form: normalized, tokenized, and (unless
/// `keep_punct`) stripped of punctuation.
pub fn prepare(text: &str, cfg: &PipelineConfig<'_>) -> Vec<Token> {
    let tokens = tokenize(&normalize(text, &cfg.normalization));
    if cfg.keep_punct {
        tokens
    } else {
        strip_punctuation(&tokens).0
    }
}

/// Runs the full refinement: prepare, then punctuation, ZWNJ and ezafe
/// stages in that order, then detokenize. Missing taggers are skipped.
pub fn refine(text: &str, cfg: &PipelineConfig<'_>) -> Result<RefineResult, PipelineError> {
    let mut tokens = prepare(text, cfg);
    let mut stages = Vec::new();
    if !tokens.is_empty() {
        let apply_err = |stage| move |source| PipelineError::Apply { stage, source };
        if let (Some(t), false) = (cfg.punct, cfg.keep_punct) {
            let labels = run_stage(Task::Punctuation, t, &tokens, &mut stages)?;
            tokens = apply_punct(&tokens, &labels).map_err(apply_err(Task::Punctuation))?;
        }
        if let Some(t) = cfg.zwnj {
            let labels = run_stage(Task::Zwnj, t, &tokens, &mut stages)?;
            tokens = apply_zwnj(&tokens, &labels).map_err(apply_err(Task::Zwnj))?;
        }
        if let Some(t) = cfg.ezafe {
            let labels = run_stage(Task::Ezafe, t, &tokens, &mut stages)?;
            tokens = apply_ezafe(&tokens, &labels, cfg.marker).map_err(apply_err(Task::Ezafe))?;
        }
    }
    Ok(RefineResult {
        output: detokenize(&tokens),
        stages,
    })
}

/// Undoes [`apply_ezafe`] rendering on a surface.
pub fn strip_ezafe_marker(surface: &str) -> &str {
    surface
        .strip_suffix(KASRA)
        .or_else(|| surface.strip_suffix(YE_SUFFIX))
        .unwrap_or(surface)
}
