use std::io::BufRead;

use crate::error::{Error, Result};
use crate::np::{parse_corpus_line, Corpus, LineIssue};

/// One training chunk read from a corpus file.
#[derive(Clone, Debug)]
pub struct Chunk {
    pub corpus: Corpus,
    pub issues: Vec<LineIssue>,
    /// 1-based line number of the chunk's first line.
    pub first_line: usize,
    pub bytes: usize,
}

/// Iterator over consecutive chunks of a corpus file. A chunk is closed as
/// soon as its raw size reaches the target; lines are never split.
pub struct CorpusChunks<R> {
    reader: R,
    source: String,
    chunk_size: usize,
    line_no: usize,
    buf: String,
    done: bool,
}

pub fn split_corpus<R: BufRead>(reader: R, source: &str, chunk_size_bytes: usize) -> CorpusChunks<R> {
    CorpusChunks {
        reader,
        source: source.to_string(),
        chunk_size: chunk_size_bytes.max(1),
        line_no: 0,
        buf: String::new(),
        done: false,
    }
}

impl<R: BufRead> Iterator for CorpusChunks<R> {
    type Item = Result<Chunk>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut chunk = Chunk {
            corpus: Corpus::new(),
            issues: Vec::new(),
            first_line: self.line_no + 1,
            bytes: 0,
        };
        while chunk.bytes < self.chunk_size {
            self.buf.clear();
            let n = match self.reader.read_line(&mut self.buf) {
                Ok(n) => n,
                Err(e) => {
                    self.done = true;
                    return Some(Err(Error::format(
                        &self.source,
                        self.line_no + 1,
                        format!("read failed: {e}"),
                    )));
                }
            };
            if n == 0 {
                self.done = true;
                break;
            }
            self.line_no += 1;
            chunk.bytes += n;
            match parse_corpus_line(&self.buf) {
                Ok(Some(np)) => chunk.corpus.add(np),
                Ok(None) => {}
                Err(message) => {
                    log::warn!("{}:{}: {message}", self.source, self.line_no);
                    chunk.issues.push(LineIssue {
                        line: self.line_no,
                        message,
                    });
                }
            }
        }
        if chunk.bytes == 0 {
            return None;
        }
        Some(Ok(chunk))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::np::NounPhrase;

    #[test]
    fn small_file_is_one_chunk() {
        let text = "a b\nc d\na b\n";
        let chunks: Vec<_> = split_corpus(text.as_bytes(), "t", 1 << 20)
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].corpus.len(), 2);
        assert_eq!(chunks[0].corpus.entries()[0].count(), 2);
    }

    #[test]
    fn chunks_respect_line_boundaries() {
        let text = "aa bb\ncc dd\nee ff\ngg hh\n";
        let chunks: Vec<_> = split_corpus(text.as_bytes(), "t", 7)
            .collect::<Result<_>>()
            .unwrap();
        // each line is 6 bytes, so every chunk closes after two lines
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[1].first_line, 3);
        let firsts: Vec<_> = chunks
            .iter()
            .map(|c| c.corpus.entries()[0].clone())
            .collect();
        assert_eq!(firsts[0], NounPhrase::parse("aa bb", 1).unwrap());
        assert_eq!(firsts[1], NounPhrase::parse("ee ff", 1).unwrap());
    }

    #[test]
    fn empty_input_has_no_chunks() {
        assert_eq!(split_corpus("".as_bytes(), "t", 10).count(), 0);
    }
}
