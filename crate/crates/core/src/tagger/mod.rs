//! Prediction layer: the tagger contract and the native averaged-perceptron
//! baseline.

mod codec;
mod features;
mod perceptron;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use thiserror::Error;

use crate::types::{Label, Task, Token};

pub use codec::{CodecError, FORMAT_VERSION, MAGIC};
pub use features::{featurize, BOS, EOS};
pub use perceptron::{majority_baseline, train, EpochReport, ModelMeta, TaggerModel, TrainConfig, TrainError};

/// Failure of a tagger to produce labels.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaggerError {
    #[error("timed out waiting for the tagger")]
    Timeout,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("remote tagger failed: {0}")]
    Remote(String),
    #[error("tagger serves {found}, expected {expected}")]
    WrongTask { expected: Task, found: Task },
}

/// Anything that assigns one label per token for a fixed task.
pub trait Tagger {
    fn task(&self) -> Task;

    /// Returns exactly `tokens.len()` labels of [`Tagger::task`].
    fn tag(&self, tokens: &[Token]) -> Result<Vec<Label>, TaggerError>;
}

impl<T: Tagger + ?Sized> Tagger for &T {
    fn task(&self) -> Task {
        (**self).task()
    }

    fn tag(&self, tokens: &[Token]) -> Result<Vec<Label>, TaggerError> {
        (**self).tag(tokens)
    }
}

impl<T: Tagger + ?Sized> Tagger for Box<T> {
    fn task(&self) -> Task {
        (**self).task()
    }

    fn tag(&self, tokens: &[Token]) -> Result<Vec<Label>, TaggerError> {
        (**self).tag(tokens)
    }
}

impl<T: Tagger + ?Sized> Tagger for Arc<T> {
    fn task(&self) -> Task {
        (**self).task()
    }

    fn tag(&self, tokens: &[Token]) -> Result<Vec<Label>, TaggerError> {
        (**self).tag(tokens)
    }
}
