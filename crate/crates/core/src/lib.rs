//! Algorithmic core for Persian text refinement.
//!
//! Three sequence-labeling tasks share one tokenization: punctuation
//! restoration, ZWNJ (half-space) joining, and ezafe marking. This crate holds
//! everything that does not touch the operating system: text processing,
//! corpus dataset construction, the averaged-perceptron tagger and its binary
//! model codec, the label appliers and the composed refinement pipeline, and
//! the evaluation metrics.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the remote
//! tagger protocol and the command line live in the `pertext` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod eval;
pub mod pipeline;
pub mod tagger;
pub mod textproc;
pub mod types;

pub use corpus::{CorpusEntry, CorpusError, CorpusSentence, SplitError, SplitSpec};
pub use eval::{ClassMetrics, EvalError, EvalReport};
pub use pipeline::{EzafeMarker, PipelineConfig, PipelineError, RefineResult, StageTrace};
pub use tagger::{Tagger, TaggerError, TaggerModel, TrainConfig};
pub use textproc::NormalizationConfig;
pub use types::{Label, LabelSet, LabeledSequence, PunctClass, Separator, Task, Token};
