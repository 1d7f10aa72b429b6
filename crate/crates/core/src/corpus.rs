//! JSON Lines corpora of pre-tokenized sentences with candidate term pairs.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::ops::Range;
use std::path::Path;

use indexmap::IndexMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inventory::{RelationInventory, NAMED_RELATIONS};

/// Inclusive token index range `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermSpan(pub usize, pub usize);

impl TermSpan {
    pub fn start(self) -> usize {
        self.0
    }

    pub fn end(self) -> usize {
        self.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSentence {
    pub id: String,
    pub tokens: Vec<String>,
    pub term1: TermSpan,
    pub term2: TermSpan,
    #[serde(default)]
    pub ds_labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<IndexMap<String, f64>>,
}

impl CorpusSentence {
    /// Token range strictly between the earlier and the later term span.
    /// Assumes validated spans.
    pub fn between_terms(&self) -> Range<usize> {
        let (first, second) = if self.term1.start() <= self.term2.start() {
            (self.term1, self.term2)
        } else {
            (self.term2, self.term1)
        };
        (first.end() + 1)..second.start().max(first.end() + 1)
    }

    /// Checks that both spans lie within the tokens and do not overlap.
    pub fn validate_spans(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidSentence {
            id: self.id.clone(),
            reason,
        };
        for (name, span) in [("term1", self.term1), ("term2", self.term2)] {
            if span.start() > span.end() || span.end() >= self.tokens.len() {
                return Err(invalid(format!(
                    "{name} span [{}, {}] outside {} tokens",
                    span.start(),
                    span.end(),
                    self.tokens.len()
                )));
            }
        }
        if self.term1.start() <= self.term2.end() && self.term2.start() <= self.term1.end() {
            return Err(invalid("term spans overlap".into()));
        }
        Ok(())
    }

    /// Checks the spans and resolves DS labels to a 0/1 vector over the 16
    /// named relations.
    pub fn validate(&self, inventory: &RelationInventory) -> Result<Vec<f64>> {
        self.validate_spans()?;
        let mut ds = vec![0.0; NAMED_RELATIONS];
        for label in &self.ds_labels {
            let r = inventory
                .relation_index(label)
                .map_err(|_| Error::InventoryMismatch(format!("sentence `{}`: unknown DS relation `{label}`", self.id)))?;
            ds[r] = 1.0;
        }
        Ok(ds)
    }
}

/// Streaming JSON Lines reader; blank lines are skipped and parse errors
/// carry the 1-based line number.
pub struct JsonLines<R, T> {
    reader: R,
    line: u64,
    buf: String,
    _marker: std::marker::PhantomData<T>,
}

impl<R: BufRead, T: DeserializeOwned> JsonLines<R, T> {
    pub fn new(reader: R) -> Self {
        Self {
            reader,
            line: 0,
            buf: String::new(),
            _marker: std::marker::PhantomData,
        }
    }
}

impl<R: BufRead, T: DeserializeOwned> Iterator for JsonLines<R, T> {
    type Item = Result<T>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line += 1;
            if self.buf.trim().is_empty() {
                continue;
            }
            return Some(
                serde_json::from_str(&self.buf)
                    .map_err(|e| Error::Malformed(e.to_string()).at_line(self.line)),
            );
        }
    }
}

pub fn open_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<JsonLines<BufReader<File>, T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(JsonLines::new(BufReader::new(file)))
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusSentence>> {
    open_jsonl(path)?.collect()
}

pub fn write_jsonl<W: Write, T: Serialize>(mut writer: W, items: impl IntoIterator<Item = T>) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, &item).map_err(|e| Error::Malformed(e.to_string()))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
