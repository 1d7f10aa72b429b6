//! Single-neighbor semantic label propagation from crowd-labeled sentences
//! onto a distant-supervision corpus.
//!
//! Each DS sentence `s` takes the crowd sentence `l'` with the highest raw
//! cosine similarity and blends its sentence-relation scores into the DS
//! labels:
//!
//! ```text
//! DS*(s, r) = (DS(s, r) + c * srs(l', r)) / (1 + c)
//! ```
//!
//! where `c = max(0, cos(s, l'))` unless clamping is disabled.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSentence;
use crate::embedding::{sentence_vector_with_fallback, EmbeddingTable, SentenceVector, SpanPolicy};
use crate::error::{Error, Result};
use crate::inventory::{RelationInventory, NAMED_RELATIONS};
use crate::metrics::QualityScores;
use crate::par::prelude::*;
use crate::search::LabeledIndex;

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    pub span_policy: SpanPolicy,
    /// Use `max(0, cos)` as the blending weight.
    pub clamp_similarity: bool,
    /// DS sentences per work batch; bounds memory for large corpora.
    pub batch_size: usize,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            span_policy: SpanPolicy::BetweenTerms,
            clamp_similarity: true,
            batch_size: 8192,
        }
    }
}

/// Propagated labels for one DS sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationResult {
    pub id: String,
    pub neighbor: Option<String>,
    pub sim: Option<f64>,
    pub sim_clamped: Option<f64>,
    /// One score per named relation, in inventory order.
    pub scores: IndexMap<String, f64>,
    pub propagated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityHistogram {
    pub lower: f64,
    pub upper: f64,
    pub counts: Vec<u64>,
}

impl Default for SimilarityHistogram {
    fn default() -> Self {
        Self {
            lower: -1.0,
            upper: 1.0,
            counts: vec![0; HISTOGRAM_BINS],
        }
    }
}

impl SimilarityHistogram {
    pub fn add(&mut self, sim: f64) {
        let width = (self.upper - self.lower) / self.counts.len() as f64;
        let bin = ((sim - self.lower) / width).floor();
        let bin = (bin.max(0.0) as usize).min(self.counts.len() - 1);
        self.counts[bin] += 1;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    pub ds_sentences: usize,
    pub propagated: usize,
    pub unpropagatable: usize,
    pub whole_sentence_fallbacks: usize,
    pub labeled_indexed: usize,
    pub labeled_whole_sentence_fallbacks: usize,
    pub labeled_excluded: usize,
    pub similarity_histogram: SimilarityHistogram,
    pub warnings: Vec<String>,
}

/// Blends one DS label with the neighbor's srs, weighted by similarity.
#[inline]
pub fn blended_score(ds: f64, similarity: f64, srs: f64) -> f64 {
    (ds + similarity * srs) / (1.0 + similarity)
}

/// Blends a DS label vector with the neighbor's srs vector. `similarity` is
/// the (normally clamped) blending weight; relations are aligned by index.
pub fn propagate_sentence(ds_labels: &[f64], neighbor_srs: &[f64], similarity: f64) -> Vec<f64> {
    ds_labels
        .iter()
        .zip(neighbor_srs)
        .map(|(&ds, &srs)| blended_score(ds, similarity, srs))
        .collect()
}

/// Crowd-labeled sentences indexed for neighbor search, each with its
/// 16-relation srs vector.
#[derive(Debug, Clone)]
pub struct LabeledSet {
    index: LabeledIndex,
    srs: Vec<Vec<f64>>,
    excluded: usize,
    fallbacks: usize,
    warnings: Vec<String>,
}

impl LabeledSet {
    /// Scores come from `quality` when given, otherwise from each crowd
    /// sentence's own `scores` field (absent relations count as 0).
    pub fn build(
        crowd: &[CorpusSentence],
        quality: Option<&QualityScores>,
        table: &EmbeddingTable,
        inventory: &RelationInventory,
        policy: SpanPolicy,
    ) -> Result<Self> {
        if let Some(q) = quality {
            if q.relations != inventory.names() {
                return Err(Error::InventoryMismatch(
                    "quality scores were computed against a different relation inventory".into(),
                ));
            }
        }
        let prepared: Vec<(SentenceVector, bool, Vec<f64>)> = crowd
            .par_iter()
            .map(|s| {
                s.validate(inventory)?;
                let srs = crowd_srs(s, quality, inventory)?;
                let (v, fell_back) = sentence_vector_with_fallback(s, table, policy);
                Ok((v, fell_back, srs))
            })
            .collect::<Result<_>>()?;

        let mut warnings = Vec::new();
        let mut entries = Vec::new();
        let mut srs_by_id = std::collections::HashMap::new();
        let (mut excluded, mut fallbacks) = (0, 0);
        for (v, fell_back, srs) in prepared {
            if v.empty {
                excluded += 1;
                let msg = format!("crowd sentence `{}` has no in-vocabulary tokens; excluded", v.sentence_id);
                log::warn!("{msg}");
                warnings.push(msg);
                continue;
            }
            fallbacks += fell_back as usize;
            srs_by_id.insert(v.sentence_id.clone(), srs);
            entries.push((v.sentence_id, v.vector));
        }
        let index = LabeledIndex::build(table.dimension(), entries)?;
        let srs = index
            .ids()
            .iter()
            .map(|id| srs_by_id.remove(id).expect("srs recorded for every indexed id"))
            .collect();
        Ok(Self {
            index,
            srs,
            excluded,
            fallbacks,
            warnings,
        })
    }

    pub fn index(&self) -> &LabeledIndex {
        &self.index
    }

    pub fn srs(&self, index: usize) -> &[f64] {
        &self.srs[index]
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn excluded(&self) -> usize {
        self.excluded
    }
}

pub(crate) fn crowd_srs(s: &CorpusSentence, quality: Option<&QualityScores>, inventory: &RelationInventory) -> Result<Vec<f64>> {
    if let Some(q) = quality {
        let v = q.srs_vector(&s.id).ok_or_else(|| Error::MissingSrs(s.id.clone()))?;
        return Ok(v[..NAMED_RELATIONS].to_vec());
    }
    let scores = s.scores.as_ref().ok_or_else(|| Error::MissingSrs(s.id.clone()))?;
    let mut srs = vec![0.0; NAMED_RELATIONS];
    for (name, &value) in scores {
        if name == crate::inventory::NONE {
            continue;
        }
        let r = inventory
            .relation_index(name)
            .map_err(|_| Error::InventoryMismatch(format!("crowd sentence `{}`: unknown relation `{name}`", s.id)))?;
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidSentence {
                id: s.id.clone(),
                reason: format!("score {value} for `{name}` outside [0, 1]"),
            });
        }
        srs[r] = value;
    }
    Ok(srs)
}

fn labels_map(inventory: &RelationInventory, values: &[f64]) -> IndexMap<String, f64> {
    inventory.relations().iter().cloned().zip(values.iter().copied()).collect()
}

/// Propagates crowd scores onto every DS sentence, calling `sink` once per
/// sentence in input order.
pub fn propagate_corpus<I, F>(
    ds: I,
    labeled: &LabeledSet,
    table: &EmbeddingTable,
    inventory: &RelationInventory,
    config: &PropagationConfig,
    mut sink: F,
) -> Result<PropagationReport>
where
    I: IntoIterator<Item = Result<CorpusSentence>>,
    F: FnMut(PropagationResult) -> Result<()>,
{
    if config.batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be at least 1".into()));
    }
    if labeled.index.dimension() != table.dimension() {
        return Err(Error::DimensionMismatch {
            expected: table.dimension(),
            found: labeled.index.dimension(),
        });
    }
    let mut report = PropagationReport {
        labeled_indexed: labeled.len(),
        labeled_whole_sentence_fallbacks: labeled.fallbacks,
        labeled_excluded: labeled.excluded,
        warnings: labeled.warnings.clone(),
        ..Default::default()
    };
    let mut ds = ds.into_iter();
    let mut batch = Vec::with_capacity(config.batch_size);
    loop {
        batch.clear();
        for item in ds.by_ref().take(config.batch_size) {
            batch.push(item?);
        }
        if batch.is_empty() {
            break;
        }
        let results = propagate_batch(&batch, labeled, table, inventory, config, &mut report)?;
        for r in results {
            sink(r)?;
        }
    }
    Ok(report)
}

fn propagate_batch(
    batch: &[CorpusSentence],
    labeled: &LabeledSet,
    table: &EmbeddingTable,
    inventory: &RelationInventory,
    config: &PropagationConfig,
    report: &mut PropagationReport,
) -> Result<Vec<PropagationResult>> {
    let prepared: Vec<(Vec<f64>, SentenceVector, bool)> = batch
        .par_iter()
        .map(|s| {
            let ds = s.validate(inventory)?;
            if ds.iter().all(|&x| x == 0.0) {
                return Err(Error::InvalidSentence {
                    id: s.id.clone(),
                    reason: "DS sentence has no DS label".into(),
                });
            }
            let (v, fell_back) = sentence_vector_with_fallback(s, table, config.span_policy);
            Ok((ds, v, fell_back))
        })
        .collect::<Result<_>>()?;

    let queries: Vec<&[f64]> = prepared
        .iter()
        .filter(|(_, v, _)| !v.empty)
        .map(|(_, v, _)| v.vector.as_slice())
        .collect();
    let neighbors = if queries.is_empty() {
        Vec::new()
    } else {
        labeled.index.nearest_batch(&queries)?
    };

    let mut neighbors = neighbors.into_iter();
    let mut results = Vec::with_capacity(batch.len());
    for (ds, v, fell_back) in prepared {
        report.ds_sentences += 1;
        report.whole_sentence_fallbacks += fell_back as usize;
        let hit = if v.empty { None } else { neighbors.next() };
        let result = match hit {
            Some(hit) => {
                let raw = hit.similarity;
                let weight = if config.clamp_similarity { raw.max(0.0) } else { raw };
                if 1.0 + weight > 0.0 {
                    report.propagated += 1;
                    report.similarity_histogram.add(raw);
                    let scores = propagate_sentence(&ds, labeled.srs(hit.index), weight);
                    PropagationResult {
                        id: v.sentence_id,
                        neighbor: Some(labeled.index.ids()[hit.index].clone()),
                        sim: Some(raw),
                        sim_clamped: Some(weight),
                        scores: labels_map(inventory, &scores),
                        propagated: true,
                    }
                } else {
                    report.unpropagatable += 1;
                    unpropagated(v.sentence_id, inventory, &ds)
                }
            }
            None => {
                report.unpropagatable += 1;
                unpropagated(v.sentence_id, inventory, &ds)
            }
        };
        results.push(result);
    }
    Ok(results)
}

fn unpropagated(id: String, inventory: &RelationInventory, ds: &[f64]) -> PropagationResult {
    PropagationResult {
        id,
        neighbor: None,
        sim: None,
        sim_clamped: None,
        scores: labels_map(inventory, ds),
        propagated: false,
    }
}
