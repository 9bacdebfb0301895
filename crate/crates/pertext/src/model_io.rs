//! Model files: the core binary codec over readers, writers and paths.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use pertext_core::tagger::CodecError;
use pertext_core::TaggerModel;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn save<W: Write>(model: &TaggerModel, mut sink: W) -> io::Result<()> {
    sink.write_all(&model.to_bytes())?;
    sink.flush()
}

pub fn load<R: Read>(mut source: R) -> Result<TaggerModel, ModelIoError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    Ok(TaggerModel::from_bytes(&bytes)?)
}

pub fn save_file(model: &TaggerModel, path: &Path) -> io::Result<()> {
    fs::write(path, model.to_bytes())
}

pub fn load_file(path: &Path) -> Result<TaggerModel, ModelIoError> {
    load(fs::File::open(path)?)
}
