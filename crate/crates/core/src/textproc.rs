//! Processing layer: normalization, tokenization, detokenization and
//! punctuation stripping.

use alloc::string::String;
use alloc::vec::Vec;

use crate::types::{Label, PunctClass, Separator, Token, ZWNJ};

/// Every mark the tokenizer splits off as its own token.
pub const PUNCT_INVENTORY: [char; 14] = [
    '.', ':', '،', '؟', '!', '؛', '(', ')', '«', '»', ',', '?', ';', '"',
];

/// Invisible format characters removed by `strip_controls` (ZWNJ excluded).
const INVISIBLE: [char; 18] = [
    '\u{061C}', '\u{200B}', '\u{200D}', '\u{200E}', '\u{200F}', '\u{202A}', '\u{202B}',
    '\u{202C}', '\u{202D}', '\u{202E}', '\u{2060}', '\u{2061}', '\u{2062}', '\u{2063}',
    '\u{2064}', '\u{2066}', '\u{2067}', '\u{FEFF}',
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NormalizationConfig {
    /// Map ASCII and Arabic-Indic digits to Extended Arabic-Indic (Persian).
    pub convert_digits: bool,
    /// Collapse whitespace runs into a single U+0020 and drop stray ZWNJs.
    pub collapse_whitespace: bool,
    /// Drop control and invisible format characters. ZWNJ is always kept.
    pub strip_controls: bool,
    /// Fold Arabic yeh/alef maksura/kaf into their Persian forms.
    pub fold_arabic_letters: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            convert_digits: true,
            collapse_whitespace: true,
            strip_controls: true,
            fold_arabic_letters: false,
        }
    }
}

pub fn is_punct_char(c: char) -> bool {
    PUNCT_INVENTORY.contains(&c)
}

/// Class of an in-class mark; `None` for everything else, including
/// inventory marks such as `«` that are recognized but never restored.
pub fn punct_class(c: char) -> Option<PunctClass> {
    match c {
        '.' => Some(PunctClass::Period),
        ':' => Some(PunctClass::Colon),
        '،' | ',' => Some(PunctClass::Comma),
        '؟' | '?' => Some(PunctClass::Question),
        _ => None,
    }
}

/// Persian glyph written for a restored class.
pub fn punct_glyph(class: PunctClass) -> Option<char> {
    match class {
        PunctClass::Period => Some('.'),
        PunctClass::Colon => Some(':'),
        PunctClass::Comma => Some('،'),
        PunctClass::Question => Some('؟'),
        PunctClass::Unk => None,
    }
}

fn token_class(token: &Token) -> Option<PunctClass> {
    let mut chars = token.surface.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => punct_class(c),
        _ => None,
    }
}

fn is_stripped(c: char) -> bool {
    c != ZWNJ && ((c.is_control() && !c.is_whitespace()) || INVISIBLE.contains(&c))
}

fn map_char(c: char, cfg: &NormalizationConfig) -> char {
    if cfg.convert_digits {
        let shifted = match c {
            '0'..='9' => Some(c as u32 - '0' as u32),
            '\u{0660}'..='\u{0669}' => Some(c as u32 - 0x0660),
            _ => None,
        };
        if let Some(d) = shifted.and_then(|d| char::from_u32(0x06F0 + d)) {
            return d;
        }
    }
    if cfg.fold_arabic_letters {
        match c {
            '\u{064A}' | '\u{0649}' => return '\u{06CC}',
            '\u{0643}' => return '\u{06A9}',
            _ => {}
        }
    }
    c
}

/// Normalizes raw text. Total and idempotent; output never has leading or
/// trailing whitespace. With `collapse_whitespace`, a ZWNJ survives only
/// between two visible characters.
pub fn normalize(text: &str, cfg: &NormalizationConfig) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    let mut pending_zwnj = false;
    for c in text.chars() {
        if cfg.strip_controls && is_stripped(c) {
            continue;
        }
        if c == ZWNJ && cfg.collapse_whitespace {
            pending_zwnj = !pending_space && !out.is_empty();
            continue;
        }
        if c.is_whitespace() {
            if cfg.collapse_whitespace {
                pending_space = true;
                pending_zwnj = false;
            } else if !out.is_empty() {
                out.push(c);
            }
            continue;
        }
        if pending_space && !out.is_empty() {
            out.push(' ');
        } else if pending_zwnj {
            out.push(ZWNJ);
        }
        pending_space = false;
        pending_zwnj = false;
        out.push(map_char(c, cfg));
    }
    let trimmed = out.trim_end().len();
    out.truncate(trimmed);
    out
}

/// Splits text at spaces, ZWNJs and punctuation marks.
///
/// Every inventory mark becomes its own token. A token directly abutting the
/// next one gets `Separator::None`, as does the final token.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens: Vec<Token> = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        let sep = if c == ZWNJ {
            Some(Separator::Zwnj)
        } else if c.is_whitespace() {
            Some(Separator::Space)
        } else {
            None
        };
        match sep {
            Some(sep) => {
                if !word.is_empty() {
                    tokens.push(Token::word(core::mem::take(&mut word), sep));
                } else if let Some(last) = tokens.last_mut() {
                    if last.sep_after == Separator::None {
                        last.sep_after = sep;
                    }
                }
            }
            None if is_punct_char(c) => {
                if !word.is_empty() {
                    tokens.push(Token::word(core::mem::take(&mut word), Separator::None));
                }
                let mut mark = String::new();
                mark.push(c);
                tokens.push(Token::punct(mark, Separator::None));
            }
            None => word.push(c),
        }
    }
    if !word.is_empty() {
        tokens.push(Token::word(word, Separator::None));
    }
    if let Some(last) = tokens.last_mut() {
        last.sep_after = Separator::None;
    }
    tokens
}

/// Joins surfaces with their separators; inverse of [`tokenize`] on
/// normalized text.
pub fn detokenize(tokens: &[Token]) -> String {
    let mut out = String::with_capacity(tokens.iter().map(|t| t.surface.len() + 1).sum());
    for token in tokens {
        out.push_str(&token.surface);
        if let Some(c) = token.sep_after.as_char() {
            out.push(c);
        }
    }
    out
}

fn wider(a: Separator, b: Separator) -> Separator {
    match (a, b) {
        (Separator::Space, _) | (_, Separator::Space) => Separator::Space,
        (Separator::Zwnj, _) | (_, Separator::Zwnj) => Separator::Zwnj,
        _ => Separator::None,
    }
}

/// Removes punctuation tokens and turns the in-class ones into labels on the
/// preceding word.
///
/// Only the first in-class mark after a word labels it. A word followed by a
/// removed mark takes the wider of its own separator and the mark's (space
/// beats ZWNJ beats none), except at the end of the sequence where it takes
/// the mark's. Two words that only a mark kept apart are split by a space.
/// Leading marks have no word to attach to and are dropped.
pub fn strip_punctuation(tokens: &[Token]) -> (Vec<Token>, Vec<Label>) {
    let mut words: Vec<Token> = Vec::with_capacity(tokens.len());
    let mut labels: Vec<Label> = Vec::with_capacity(tokens.len());
    let mut labeled = false;
    for (i, token) in tokens.iter().enumerate() {
        if !token.is_punct {
            if let Some(prev) = words.last_mut() {
                if prev.sep_after == Separator::None {
                    prev.sep_after = Separator::Space;
                }
            }
            words.push(token.clone());
            labels.push(Label::Punct(PunctClass::Unk));
            labeled = false;
            continue;
        }
        let (Some(word), Some(label)) = (words.last_mut(), labels.last_mut()) else {
            continue;
        };
        if !labeled {
            if let Some(class) = token_class(token) {
                *label = Label::Punct(class);
                labeled = true;
            }
        }
        word.sep_after = if i + 1 == tokens.len() {
            token.sep_after
        } else {
            wider(word.sep_after, token.sep_after)
        };
    }
    (words, labels)
}
