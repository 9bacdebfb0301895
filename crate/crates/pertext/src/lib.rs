//! Std companion to `pertext-core`: corpus and dataset files, model files,
//! remote taggers, reports, and the command-line driver.

pub mod cli;
pub mod corpus_io;
pub mod dataset;
pub mod model_io;
pub mod remote;
pub mod report;
pub mod trace;

pub use pertext_core;
