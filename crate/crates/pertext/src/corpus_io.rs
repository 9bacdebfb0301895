//! Streaming reader for Bijankhan-style corpus files.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use pertext_core::corpus::{CorpusError, CorpusParser, CorpusSentence};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReadError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Reads sentences in file order. Invalid UTF-8 is reported with the byte
/// offset of the first bad byte.
pub fn read_corpus<R: BufRead>(mut reader: R) -> Result<Vec<CorpusSentence>, ReadError> {
    let mut parser = CorpusParser::new();
    let mut sentences = Vec::new();
    let mut buf = Vec::new();
    let mut offset = 0usize;
    let mut line_no = 0usize;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let line = std::str::from_utf8(&buf).map_err(|e| CorpusError::InvalidEncoding {
            offset: offset + e.valid_up_to(),
        })?;
        if let Some(s) = parser.push_line(line, line_no)? {
            sentences.push(s);
        }
        offset += n;
    }
    sentences.extend(parser.finish());
    Ok(sentences)
}

pub fn read_corpus_file(path: &Path) -> Result<Vec<CorpusSentence>, ReadError> {
    read_corpus(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pertext_core::corpus::{parse_corpus, write_corpus};

    #[test]
    fn matches_in_memory_parser() {
        let text = "کتاب\tN_EZ\nمن\tPRO\n.\tDELM\n#\nمی‌رود\tV\n#\n";
        let streamed = read_corpus(text.as_bytes()).unwrap();
        assert_eq!(streamed, parse_corpus(text).unwrap());
        assert_eq!(write_corpus(&streamed), text);
    }

    #[test]
    fn invalid_utf8_reports_offset() {
        let mut bytes = b"A\tN\nB".to_vec();
        bytes.push(0xff);
        bytes.extend_from_slice(b"\tN\n");
        match read_corpus(&bytes[..]) {
            Err(ReadError::Corpus(CorpusError::InvalidEncoding { offset })) => assert_eq!(offset, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_line_number() {
        match read_corpus("A\tN\n#\nno tab here\n".as_bytes()) {
            Err(ReadError::Corpus(CorpusError::MalformedLine { line })) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
