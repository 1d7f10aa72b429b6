//! Word vectors and restricted-span sentence representations.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSentence;
use crate::error::{Error, Result};

/// On-disk layout of a word vector file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorFormat {
    /// `<count> <dim>` header, then `token v1 ... vdim` per line.
    Text,
    /// Same ASCII header, then per vector the token, a space and `dim`
    /// little-endian `f32` values.
    Binary,
}

/// Token to dense vector map with a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
}

/// Bookkeeping from a load.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadStats {
    pub declared: usize,
    pub retained: usize,
    pub duplicates: usize,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            tokens: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    /// Adds a vector. Returns `false` (and keeps the existing vector) when
    /// the token is already present.
    pub fn insert(&mut self, token: &str, vector: &[f32]) -> Result<bool> {
        if vector.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: vector.len(),
            });
        }
        if self.index.contains_key(token) {
            return Ok(false);
        }
        self.index.insert(token.to_string(), self.tokens.len());
        self.tokens.push(token.to_string());
        self.data.extend_from_slice(vector);
        Ok(true)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Exact-match lookup.
    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.index
            .get(token)
            .map(|&i| &self.data[i * self.dimension..(i + 1) * self.dimension])
    }

    /// Exact match first, then the lowercased token.
    pub fn lookup(&self, token: &str) -> Option<&[f32]> {
        self.get(token).or_else(|| {
            let lower = token.to_lowercase();
            if lower != token {
                self.get(&lower)
            } else {
                None
            }
        })
    }

    pub fn write<W: Write>(&self, mut writer: W, format: VectorFormat) -> Result<()> {
        writeln!(writer, "{} {}", self.len(), self.dimension)?;
        for (i, token) in self.tokens.iter().enumerate() {
            let v = &self.data[i * self.dimension..(i + 1) * self.dimension];
            match format {
                VectorFormat::Text => {
                    write!(writer, "{token}")?;
                    for x in v {
                        write!(writer, " {x}")?;
                    }
                    writeln!(writer)?;
                }
                VectorFormat::Binary => {
                    writer.write_all(token.as_bytes())?;
                    writer.write_all(b" ")?;
                    for x in v {
                        writer.write_all(&x.to_le_bytes())?;
                    }
                    writer.write_all(b"\n")?;
                }
            }
        }
        Ok(())
    }
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let mut parts = line.split_whitespace();
    let mut next = |what: &str| -> Result<usize> {
        parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| Error::Malformed(format!("vector header: missing or invalid {what}")).at_line(1))
    };
    let count = next("vector count")?;
    let dim = next("dimension")?;
    if dim == 0 {
        return Err(Error::Malformed("vector header: dimension must be positive".into()).at_line(1));
    }
    Ok((count, dim))
}

/// Streams a vector file into a table. With `filter`, only tokens in the
/// filter set are retained; everything else is parsed and dropped.
pub fn read_embeddings<R: BufRead>(
    mut reader: R,
    format: VectorFormat,
    filter: Option<&HashSet<String>>,
) -> Result<(EmbeddingTable, LoadStats)> {
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let (declared, dim) = parse_header(&header)?;
    let mut table = EmbeddingTable::new(dim);
    let mut stats = LoadStats {
        declared,
        ..Default::default()
    };
    let keep = |token: &str| filter.is_none_or(|f| f.contains(token));
    let mut add = |table: &mut EmbeddingTable, token: &str, v: &[f32]| -> Result<()> {
        if keep(token) && !table.insert(token, v)? {
            stats.duplicates += 1;
            log::warn!("duplicate token `{token}` in vector file; keeping the first vector");
        }
        Ok(())
    };

    match format {
        VectorFormat::Text => {
            let mut line = String::new();
            let mut values = Vec::with_capacity(dim);
            let mut found = 0;
            let mut line_no = 1u64;
            loop {
                line.clear();
                if reader.read_line(&mut line)? == 0 {
                    break;
                }
                line_no += 1;
                let trimmed = line.trim_end_matches(['\n', '\r']);
                if trimmed.trim().is_empty() {
                    continue;
                }
                if found == declared {
                    return Err(Error::ExcessVectors { declared }.at_line(line_no));
                }
                let mut fields = trimmed.split(' ').filter(|f| !f.is_empty());
                let token = fields.next().unwrap_or_default();
                values.clear();
                for f in fields {
                    let x: f32 = f
                        .parse()
                        .map_err(|_| Error::Malformed(format!("invalid number `{f}`")).at_line(line_no))?;
                    values.push(x);
                }
                if values.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: values.len(),
                    }
                    .at_line(line_no));
                }
                add(&mut table, token, &values)?;
                found += 1;
            }
            if found < declared {
                return Err(Error::TruncatedVectors { declared, found });
            }
        }
        VectorFormat::Binary => {
            let mut token = Vec::new();
            let mut raw = vec![0u8; dim * 4];
            let mut values = vec![0f32; dim];
            for found in 0..declared {
                token.clear();
                // Tokens are preceded by optional newlines and end at a space.
                loop {
                    let mut byte = [0u8; 1];
                    if reader.read(&mut byte)? == 0 {
                        return Err(Error::TruncatedVectors { declared, found });
                    }
                    match byte[0] {
                        b' ' if !token.is_empty() => break,
                        b'\n' | b'\r' if token.is_empty() => {}
                        b => token.push(b),
                    }
                }
                if let Err(e) = reader.read_exact(&mut raw) {
                    return match e.kind() {
                        std::io::ErrorKind::UnexpectedEof => Err(Error::TruncatedVectors { declared, found }),
                        _ => Err(e.into()),
                    };
                }
                for (x, chunk) in values.iter_mut().zip(raw.chunks_exact(4)) {
                    *x = f32::from_le_bytes(chunk.try_into().expect("4-byte chunk"));
                }
                add(&mut table, &String::from_utf8_lossy(&token), &values)?;
            }
            let mut rest = Vec::new();
            reader.read_to_end(&mut rest)?;
            if rest.iter().any(|b| !b.is_ascii_whitespace()) {
                return Err(Error::ExcessVectors { declared });
            }
        }
    }
    stats.retained = table.len();
    Ok((table, stats))
}

pub fn load_embeddings(
    path: impl AsRef<Path>,
    format: VectorFormat,
    filter: Option<&HashSet<String>>,
) -> Result<(EmbeddingTable, LoadStats)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_embeddings(BufReader::with_capacity(1 << 20, file), format, filter)
}

/// Tokens of the given sentences plus their lowercase forms, for use as a
/// load filter.
pub fn vocabulary_filter<'a>(sentences: impl IntoIterator<Item = &'a CorpusSentence>) -> HashSet<String> {
    let mut vocab = HashSet::new();
    for s in sentences {
        for t in &s.tokens {
            let lower = t.to_lowercase();
            if lower != *t {
                vocab.insert(lower);
            }
            vocab.insert(t.clone());
        }
    }
    vocab
}

/// Which tokens form a sentence's representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanPolicy {
    /// Tokens strictly between the two term spans.
    #[default]
    BetweenTerms,
    WholeSentence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceVector {
    pub sentence_id: String,
    pub vector: Vec<f64>,
    pub in_vocab_count: usize,
    pub empty: bool,
}

/// Mean of the in-vocabulary token vectors selected by `policy`.
///
/// Spans must already be validated; out-of-vocabulary tokens are skipped and
/// a sentence with no contributing token yields a zero vector with
/// `empty == true`.
pub fn sentence_vector(sentence: &CorpusSentence, table: &EmbeddingTable, policy: SpanPolicy) -> SentenceVector {
    let tokens = match policy {
        SpanPolicy::WholeSentence => &sentence.tokens[..],
        SpanPolicy::BetweenTerms => {
            let between = sentence.between_terms();
            &sentence.tokens[between]
        }
    };
    let mut sum = vec![0.0f64; table.dimension()];
    let mut count = 0;
    for token in tokens {
        if let Some(v) = table.lookup(token) {
            for (acc, &x) in sum.iter_mut().zip(v) {
                *acc += x as f64;
            }
            count += 1;
        }
    }
    if count > 0 {
        let n = count as f64;
        for acc in &mut sum {
            *acc /= n;
        }
    }
    SentenceVector {
        sentence_id: sentence.id.clone(),
        vector: sum,
        in_vocab_count: count,
        empty: count == 0,
    }
}

/// Representation used for propagation: between-terms (or the configured
/// policy) first, whole sentence when that span contributes nothing. The
/// flag reports whether the fallback was taken.
pub fn sentence_vector_with_fallback(
    sentence: &CorpusSentence,
    table: &EmbeddingTable,
    policy: SpanPolicy,
) -> (SentenceVector, bool) {
    let v = sentence_vector(sentence, table, policy);
    if v.empty && policy != SpanPolicy::WholeSentence {
        (sentence_vector(sentence, table, SpanPolicy::WholeSentence), true)
    } else {
        (v, false)
    }
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na * nb).sqrt()).clamp(-1.0, 1.0))
}
