//! Exact cosine nearest-neighbor search over the crowd-labeled sentences.
//!
//! Labeled vectors are stored L2-normalized and zero-padded to a multiple of
//! [`LANES`], so the scan is a blocked dot-product sweep. Every (query,
//! labeled) dot product is evaluated with the same lane-wise summation order
//! whatever the blocking or thread count, which keeps results bit-identical
//! across parallelism degrees. The winner's similarity is then recomputed
//! with [`cosine_similarity`] on the raw vectors.

use crate::embedding::{cosine_similarity, SentenceVector};
use crate::error::{Error, Result};
use crate::par::prelude::*;

const LANES: usize = 8;
/// Labeled rows per cache tile.
const TILE_ROWS: usize = 256;
/// Queries per parallel work item.
const QUERY_BLOCK: usize = 32;

#[inline(always)]
fn reduce(acc: &[f64; LANES]) -> f64 {
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]))
}

#[inline(always)]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; LANES];
    for (ca, cb) in a.chunks_exact(LANES).zip(b.chunks_exact(LANES)) {
        for l in 0..LANES {
            acc[l] += ca[l] * cb[l];
        }
    }
    reduce(&acc)
}

/// Four dot products against one query at once. Each result is bit-equal to
/// [`dot`]; the rows only share the loop.
#[inline(always)]
fn dot4(q: &[f64], rows: [&[f64]; 4]) -> [f64; 4] {
    let mut acc = [[0.0f64; LANES]; 4];
    let chunks = q
        .chunks_exact(LANES)
        .zip(rows[0].chunks_exact(LANES))
        .zip(rows[1].chunks_exact(LANES))
        .zip(rows[2].chunks_exact(LANES))
        .zip(rows[3].chunks_exact(LANES));
    for ((((cq, c0), c1), c2), c3) in chunks {
        for l in 0..LANES {
            acc[0][l] += cq[l] * c0[l];
            acc[1][l] += cq[l] * c1[l];
            acc[2][l] += cq[l] * c2[l];
            acc[3][l] += cq[l] * c3[l];
        }
    }
    [reduce(&acc[0]), reduce(&acc[1]), reduce(&acc[2]), reduce(&acc[3])]
}

/// Updates `best` with the rows of `tile`, the first of which has index
/// `first`. Rows are visited in index order and only a strictly larger score
/// replaces the current best.
#[inline(always)]
fn scan_rows(q: &[f64], tile: &[f64], stride: usize, first: usize, best: &mut (usize, f64)) {
    let groups = tile.chunks_exact(4 * stride);
    let tail = groups.remainder();
    let mut index = first;
    for group in groups {
        let (r0, rest) = group.split_at(stride);
        let (r1, rest) = rest.split_at(stride);
        let (r2, r3) = rest.split_at(stride);
        for score in dot4(q, [r0, r1, r2, r3]) {
            if score > best.1 {
                *best = (index, score);
            }
            index += 1;
        }
    }
    for row in tail.chunks_exact(stride) {
        let score = dot(q, row);
        if score > best.1 {
            *best = (index, score);
        }
        index += 1;
    }
}

type ScanFn = fn(&[f64], &[f64], usize, usize, &mut (usize, f64));

/// Same arithmetic compiled for AVX2. Multiplies and adds stay separate
/// (no FMA), so results match the portable path bit for bit.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
fn scan_rows_avx2(q: &[f64], tile: &[f64], stride: usize, first: usize, best: &mut (usize, f64)) {
    scan_rows(q, tile, stride, first, best)
}

fn scan_kernel() -> ScanFn {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports AVX2, checked just above.
        return |q, tile, stride, first, best| unsafe { scan_rows_avx2(q, tile, stride, first, best) };
    }
    scan_rows
}

/// Best match for one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Position in [`LabeledIndex::ids`].
    pub index: usize,
    /// Raw cosine similarity in `[-1, 1]`.
    pub similarity: f64,
}

#[derive(Debug, Clone)]
pub struct LabeledIndex {
    dim: usize,
    stride: usize,
    ids: Vec<String>,
    raw: Vec<f64>,
    normalized: Vec<f64>,
}

impl LabeledIndex {
    /// Builds an index; entries are ordered by id so that scanning in index
    /// order and keeping the first strict maximum breaks ties toward the
    /// lexicographically smallest id.
    pub fn build(dim: usize, entries: impl IntoIterator<Item = (String, Vec<f64>)>) -> Result<Self> {
        let mut entries: Vec<(String, Vec<f64>)> = entries.into_iter().collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Malformed(format!("duplicate labeled sentence id `{}`", w[0].0)));
        }
        let stride = dim.div_ceil(LANES) * LANES;
        let mut ids = Vec::with_capacity(entries.len());
        let mut raw = Vec::with_capacity(entries.len() * dim);
        let mut normalized = vec![0.0; entries.len() * stride];
        for (i, (id, v)) in entries.into_iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            normalize_into(&v, &mut normalized[i * stride..i * stride + dim]);
            raw.extend_from_slice(&v);
            ids.push(id);
        }
        Ok(Self {
            dim,
            stride,
            ids,
            raw,
            normalized,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn raw_vector(&self, index: usize) -> &[f64] {
        &self.raw[index * self.dim..(index + 1) * self.dim]
    }

    fn check_query(&self, query: &[f64]) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyLabeledSet);
        }
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: query.len(),
            });
        }
        if query.iter().all(|&x| x == 0.0) {
            return Err(Error::EmptyQuery);
        }
        Ok(())
    }

    pub fn nearest(&self, query: &[f64]) -> Result<Neighbor> {
        Ok(self.nearest_batch(&[query])?[0])
    }

    /// Nearest labeled entry for every query, in query order.
    pub fn nearest_batch(&self, queries: &[&[f64]]) -> Result<Vec<Neighbor>> {
        for q in queries {
            self.check_query(q)?;
        }
        let blocks: Vec<Vec<Neighbor>> = queries
            .par_chunks(QUERY_BLOCK)
            .map(|block| self.scan_block(block))
            .collect::<Result<_>>()?;
        Ok(blocks.into_iter().flatten().collect())
    }

    fn scan_block(&self, block: &[&[f64]]) -> Result<Vec<Neighbor>> {
        let stride = self.stride;
        let mut normalized = vec![0.0; block.len() * stride];
        for (q, chunk) in block.iter().zip(normalized.chunks_exact_mut(stride)) {
            normalize_into(q, &mut chunk[..self.dim]);
        }
        let mut best = vec![(0usize, f64::NEG_INFINITY); block.len()];
        let scan = scan_kernel();
        let n = self.len();
        for tile_start in (0..n).step_by(TILE_ROWS) {
            let tile_end = (tile_start + TILE_ROWS).min(n);
            let tile = &self.normalized[tile_start * stride..tile_end * stride];
            for (q, slot) in normalized.chunks_exact(stride).zip(best.iter_mut()) {
                scan(q, tile, stride, tile_start, slot);
            }
        }
        block
            .iter()
            .zip(best)
            .map(|(q, (index, _))| {
                Ok(Neighbor {
                    index,
                    similarity: cosine_similarity(q, self.raw_vector(index))?,
                })
            })
            .collect()
    }
}

fn normalize_into(v: &[f64], out: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (o, x) in out.iter_mut().zip(v) {
            *o = x / norm;
        }
    }
}

/// The labeled sentence most similar to `query`, with its raw cosine.
pub fn nearest_labeled<'a>(query: &SentenceVector, labeled: &'a LabeledIndex) -> Result<(&'a str, f64)> {
    if labeled.is_empty() {
        return Err(Error::EmptyLabeledSet);
    }
    if query.empty {
        return Err(Error::EmptyQuery);
    }
    let hit = labeled.nearest(&query.vector)?;
    Ok((&labeled.ids()[hit.index], hit.similarity))
}
