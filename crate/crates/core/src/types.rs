//! Domain vocabulary shared by every stage: tasks, tokens, labels.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

pub const ZWNJ: char = '\u{200C}';

/// One of the three refinement tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    Punctuation,
    Zwnj,
    Ezafe,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Punctuation, Task::Zwnj, Task::Ezafe];

    /// Wire name used in datasets, the remote protocol and CLI flags.
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Punctuation => "punct",
            Task::Zwnj => "zwnj",
            Task::Ezafe => "ezafe",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Task::Punctuation => 0,
            Task::Zwnj => 1,
            Task::Ezafe => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Task> {
        Task::ALL.into_iter().find(|t| t.code() == code)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown task `{0}` (expected punct, zwnj or ezafe)")]
pub struct UnknownTask(pub String);

impl FromStr for Task {
    type Err = UnknownTask;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| UnknownTask(s.into()))
    }
}

/// What follows a token in the surface text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Separator {
    Space,
    Zwnj,
    /// Directly abutting the next token (punctuation) or end of sequence.
    None,
}

impl Separator {
    pub fn as_str(self) -> &'static str {
        match self {
            Separator::Space => "sp",
            Separator::Zwnj => "zwnj",
            Separator::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Separator> {
        match s {
            "sp" => Some(Separator::Space),
            "zwnj" => Some(Separator::Zwnj),
            "none" => Some(Separator::None),
            _ => None,
        }
    }

    pub fn as_char(self) -> Option<char> {
        match self {
            Separator::Space => Some(' '),
            Separator::Zwnj => Some(ZWNJ),
            Separator::None => None,
        }
    }
}

/// A surface word piece plus the separator that follows it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    pub sep_after: Separator,
    pub is_punct: bool,
}

impl Token {
    pub fn word(surface: impl Into<String>, sep_after: Separator) -> Token {
        Token {
            surface: surface.into(),
            sep_after,
            is_punct: false,
        }
    }

    pub fn punct(surface: impl Into<String>, sep_after: Separator) -> Token {
        Token {
            surface: surface.into(),
            sep_after,
            is_punct: true,
        }
    }

    /// Checks the tokenizer invariants: non-empty surface with no whitespace
    /// or ZWNJ, and punctuation tokens holding exactly one inventory mark.
    pub fn is_valid(&self) -> bool {
        if self.surface.is_empty()
            || self
                .surface
                .chars()
                .any(|c| c.is_whitespace() || c == ZWNJ)
        {
            return false;
        }
        let mut chars = self.surface.chars();
        let single_mark = matches!(
            (chars.next(), chars.next()),
            (Some(c), None) if crate::textproc::is_punct_char(c)
        );
        if self.is_punct {
            single_mark
        } else {
            !single_mark
        }
    }
}

/// The four restorable punctuation classes plus `Unk` for "no mark".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PunctClass {
    Period,
    Colon,
    Comma,
    Question,
    Unk,
}

impl PunctClass {
    pub const ALL: [PunctClass; 5] = [
        PunctClass::Period,
        PunctClass::Colon,
        PunctClass::Comma,
        PunctClass::Question,
        PunctClass::Unk,
    ];

    pub fn name(self) -> &'static str {
        PUNCT_CLASSES[self as usize]
    }
}

const PUNCT_CLASSES: [&str; 5] = ["PERIOD", "COLON", "COMMA", "QUESTION", "UNK"];
const BINARY_CLASSES: [&str; 2] = ["1", "0"];

/// A per-token class for one task.
///
/// Binary tasks carry `true` for class "1" (change required) and `false` for
/// class "0".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Punct(PunctClass),
    Zwnj(bool),
    Ezafe(bool),
}

impl Label {
    pub fn task(self) -> Task {
        match self {
            Label::Punct(_) => Task::Punctuation,
            Label::Zwnj(_) => Task::Zwnj,
            Label::Ezafe(_) => Task::Ezafe,
        }
    }

    /// Position of this label in its task's [`LabelSet`].
    pub fn index(self) -> usize {
        match self {
            Label::Punct(c) => c as usize,
            Label::Zwnj(b) | Label::Ezafe(b) => usize::from(!b),
        }
    }

    pub fn from_index(task: Task, index: usize) -> Option<Label> {
        match task {
            Task::Punctuation => PunctClass::ALL.get(index).copied().map(Label::Punct),
            Task::Zwnj | Task::Ezafe if index < 2 => {
                let positive = index == 0;
                Some(if task == Task::Zwnj {
                    Label::Zwnj(positive)
                } else {
                    Label::Ezafe(positive)
                })
            }
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        label_set_for(self.task()).classes[self.index()]
    }

    /// Parses a class name ("PERIOD", "1", ...) for the given task.
    pub fn parse(task: Task, name: &str) -> Option<Label> {
        let index = label_set_for(task)
            .classes
            .iter()
            .position(|c| *c == name)?;
        Label::from_index(task, index)
    }

    /// The "no change" class: `Unk` or `0`.
    pub fn negative(task: Task) -> Label {
        match task {
            Task::Punctuation => Label::Punct(PunctClass::Unk),
            Task::Zwnj => Label::Zwnj(false),
            Task::Ezafe => Label::Ezafe(false),
        }
    }

    pub fn is_negative(self) -> bool {
        self == Label::negative(self.task())
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ordered class inventory of a task. Order is part of the model format.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LabelSet {
    pub task: Task,
    pub classes: &'static [&'static str],
}

impl LabelSet {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn label(&self, index: usize) -> Option<Label> {
        Label::from_index(self.task, index)
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        (0..self.len()).filter_map(move |i| self.label(i))
    }
}

pub fn label_set_for(task: Task) -> LabelSet {
    let classes: &'static [&'static str] = match task {
        Task::Punctuation => &PUNCT_CLASSES,
        Task::Zwnj | Task::Ezafe => &BINARY_CLASSES,
    };
    LabelSet { task, classes }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SequenceError {
    #[error("{tokens} tokens but {labels} labels")]
    LengthMismatch { tokens: usize, labels: usize },
    #[error("label for task {found} in a {expected} sequence")]
    MixedTasks { expected: Task, found: Task },
}

/// Tokens paired with one label each, all for the same task.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledSequence {
    task: Task,
    tokens: Vec<Token>,
    labels: Vec<Label>,
}

impl LabeledSequence {
    pub fn new(
        task: Task,
        tokens: Vec<Token>,
        labels: Vec<Label>,
    ) -> Result<LabeledSequence, SequenceError> {
        if tokens.len() != labels.len() {
            return Err(SequenceError::LengthMismatch {
                tokens: tokens.len(),
                labels: labels.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|l| l.task() != task) {
            return Err(SequenceError::MixedTasks {
                expected: task,
                found: bad.task(),
            });
        }
        Ok(LabeledSequence {
            task,
            tokens,
            labels,
        })
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn into_parts(self) -> (Vec<Token>, Vec<Label>) {
        (self.tokens, self.labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_sets_are_canonical() {
        assert_eq!(
            label_set_for(Task::Punctuation).classes,
            &["PERIOD", "COLON", "COMMA", "QUESTION", "UNK"]
        );
        assert_eq!(label_set_for(Task::Zwnj).classes, &["1", "0"]);
        assert_eq!(label_set_for(Task::Ezafe).classes, &["1", "0"]);
        for task in Task::ALL {
            assert_eq!(label_set_for(task), label_set_for(task));
        }
    }

    #[test]
    fn every_label_is_a_member_of_its_set() {
        for task in Task::ALL {
            let set = label_set_for(task);
            for (i, label) in set.labels().enumerate() {
                assert_eq!(label.task(), task);
                assert_eq!(label.index(), i);
                assert_eq!(Label::parse(task, label.name()), Some(label));
            }
            assert_eq!(set.label(set.len()), None);
        }
        assert_eq!(Label::Zwnj(true).name(), "1");
        assert_eq!(Label::Ezafe(false).index(), 1);
        assert_eq!(Label::parse(Task::Zwnj, "UNK"), None);
    }

    #[test]
    fn labeled_sequence_checks_lengths_and_tasks() {
        let tokens = alloc::vec![Token::word("a", Separator::None)];
        assert!(matches!(
            LabeledSequence::new(Task::Zwnj, tokens.clone(), alloc::vec![]),
            Err(SequenceError::LengthMismatch { .. })
        ));
        assert!(matches!(
            LabeledSequence::new(Task::Zwnj, tokens.clone(), alloc::vec![Label::Ezafe(true)]),
            Err(SequenceError::MixedTasks { .. })
        ));
        assert!(LabeledSequence::new(Task::Zwnj, tokens, alloc::vec![Label::Zwnj(true)]).is_ok());
    }

    #[test]
    fn token_validity() {
        assert!(Token::word("سلام", Separator::Space).is_valid());
        assert!(Token::punct("،", Separator::Space).is_valid());
        assert!(!Token::word("a b", Separator::Space).is_valid());
        assert!(!Token::word("می\u{200C}رود", Separator::None).is_valid());
        assert!(!Token::word("", Separator::None).is_valid());
        assert!(!Token::punct("ab", Separator::None).is_valid());
        assert!(!Token::word(".", Separator::None).is_valid());
    }

    #[test]
    fn task_round_trips_through_wire_name() {
        for task in Task::ALL {
            assert_eq!(task.as_str().parse::<Task>(), Ok(task));
            assert_eq!(Task::from_code(task.code()), Some(task));
        }
        assert!("pos".parse::<Task>().is_err());
    }
}
