//! Disagreement-aware quality metrics over an annotation matrix.
//!
//! Worker, sentence and relation quality are mutually dependent and are
//! computed as the fixed point of a synchronous (Jacobi) iteration started
//! from all-ones:
//!
//! * sentence quality: mean pairwise cosine between the worker vectors on the
//!   sentence, each pair weighted by the product of the two worker qualities;
//! * worker quality: mean over the worker's sentences of the cosine between
//!   the worker's vector and the sum of the other workers' vectors, weighted
//!   by sentence quality;
//! * relation quality: over ordered worker pairs on the same sentence where
//!   the first worker picked the relation, the weighted fraction in which the
//!   second worker picked it too (weights are worker-quality products).
//!
//! Whenever every weight in a mean is zero the unweighted mean is used
//! instead, and a mean with no terms at all (a sentence read by one worker, a
//! worker sharing no sentence, a relation nobody picked on a shared sentence)
//! is defined as 1.
//!
//! The sentence-relation score (srs) is the worker-quality weighted fraction
//! of the sentence's workers who picked the relation.

use std::io::{Read, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::annotation::AnnotationMatrix;
use crate::error::{Error, Result};
use crate::inventory::{RelationInventory, INVENTORY_SIZE};
use crate::par::prelude::*;

/// How relation quality enters the sentence-relation score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SrsRelationWeighting {
    /// Relation quality cancels out of the ratio and is not applied.
    #[default]
    Off,
    /// Every pick of relation `r` counts `relation_quality(r)` instead of 1,
    /// while each reading worker still counts once in the denominator.
    PerChoice,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub srs_relation_weighting: SrsRelationWeighting,
    /// Also report the plain fraction of workers who picked each relation.
    pub report_unweighted: bool,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 100,
            srs_relation_weighting: SrsRelationWeighting::Off,
            report_unweighted: false,
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Converged quality weights and sentence-relation scores.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityScores {
    pub relations: Vec<String>,
    pub worker_quality: IndexMap<String, f64>,
    pub sentence_quality: IndexMap<String, f64>,
    /// Indexed like `relations` (all 17 inventory components).
    pub relation_quality: Vec<f64>,
    /// Per sentence, one score per inventory component.
    pub srs: IndexMap<String, Vec<f64>>,
    pub unweighted_srs: Option<IndexMap<String, Vec<f64>>>,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl QualityScores {
    pub fn srs_vector(&self, sentence_id: &str) -> Option<&[f64]> {
        self.srs.get(sentence_id).map(Vec::as_slice)
    }

    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<()> {
        let doc = QualityDoc::from_scores(self);
        serde_json::to_writer_pretty(&mut writer, &doc)
            .map_err(|e| Error::Malformed(e.to_string()))?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    /// Reads a quality document, checking that its relation keys match the
    /// inventory. Scores are re-ordered to inventory order.
    pub fn read_json<R: Read>(reader: R, inventory: &RelationInventory) -> Result<Self> {
        let doc: QualityDoc = serde_json::from_reader(reader)
            .map_err(|e| Error::Malformed(format!("quality scores: {e}")))?;
        doc.into_scores(inventory)
    }
}

#[derive(Serialize, Deserialize)]
struct QualityDoc {
    worker_quality: IndexMap<String, f64>,
    sentence_quality: IndexMap<String, f64>,
    relation_quality: IndexMap<String, f64>,
    srs: IndexMap<String, IndexMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unweighted_srs: Option<IndexMap<String, IndexMap<String, f64>>>,
    iterations: usize,
    converged: bool,
    #[serde(default)]
    warnings: Vec<String>,
}

impl QualityDoc {
    fn from_scores(q: &QualityScores) -> Self {
        let named = |v: &[f64]| -> IndexMap<String, f64> {
            q.relations.iter().cloned().zip(v.iter().copied()).collect()
        };
        let per_sentence = |m: &IndexMap<String, Vec<f64>>| {
            m.iter().map(|(id, v)| (id.clone(), named(v))).collect()
        };
        QualityDoc {
            worker_quality: q.worker_quality.clone(),
            sentence_quality: q.sentence_quality.clone(),
            relation_quality: named(&q.relation_quality),
            srs: per_sentence(&q.srs),
            unweighted_srs: q.unweighted_srs.as_ref().map(per_sentence),
            iterations: q.iterations,
            converged: q.converged,
            warnings: q.warnings.clone(),
        }
    }

    fn into_scores(self, inventory: &RelationInventory) -> Result<QualityScores> {
        let ordered = |what: &str, map: &IndexMap<String, f64>| -> Result<Vec<f64>> {
            if map.len() != inventory.len() {
                return Err(Error::InventoryMismatch(format!(
                    "{what} has {} relations, inventory has {}",
                    map.len(),
                    inventory.len()
                )));
            }
            inventory
                .names()
                .iter()
                .map(|name| {
                    let v = *map.get(name).ok_or_else(|| {
                        Error::InventoryMismatch(format!("{what} lacks relation `{name}`"))
                    })?;
                    check_unit(what, v)
                })
                .collect()
        };
        let per_sentence = |what: &str, m: IndexMap<String, IndexMap<String, f64>>| {
            m.into_iter()
                .map(|(id, scores)| Ok((id.clone(), ordered(&format!("{what}[{id}]"), &scores)?)))
                .collect::<Result<IndexMap<_, _>>>()
        };
        for (what, map) in [
            ("worker_quality", &self.worker_quality),
            ("sentence_quality", &self.sentence_quality),
        ] {
            for &v in map.values() {
                check_unit(what, v)?;
            }
        }
        Ok(QualityScores {
            relations: inventory.names().to_vec(),
            relation_quality: ordered("relation_quality", &self.relation_quality)?,
            srs: per_sentence("srs", self.srs)?,
            unweighted_srs: self
                .unweighted_srs
                .map(|u| per_sentence("unweighted_srs", u))
                .transpose()?,
            worker_quality: self.worker_quality,
            sentence_quality: self.sentence_quality,
            iterations: self.iterations,
            converged: self.converged,
            warnings: self.warnings,
        })
    }
}

fn check_unit(what: &str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::Malformed(format!("{what}: score {v} outside [0, 1]")))
    }
}

/// Mean of `(value, weight)` pairs; falls back to the unweighted mean when
/// the weights sum to zero. `None` for an empty input.
fn weighted_mean(pairs: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let (mut num, mut den, mut plain, mut n) = (0.0, 0.0, 0.0, 0usize);
    for (value, weight) in pairs {
        num += weight * value;
        den += weight;
        plain += value;
        n += 1;
    }
    if n == 0 {
        None
    } else if den > 0.0 {
        Some(num / den)
    } else {
        Some(plain / n as f64)
    }
}

/// Quantities that do not depend on the quality weights.
struct Precomputed {
    /// Per sentence, cosines of unordered row pairs (i < j) in row order.
    pair_cosines: Vec<Vec<f64>>,
    /// Per row, cosine with the sum of the other rows on its sentence.
    agreement_with_rest: Vec<Option<f64>>,
}

fn precompute(matrix: &AnnotationMatrix) -> Precomputed {
    let n_sentences = matrix.sentence_ids().len();
    let pair_cosines = (0..n_sentences)
        .into_par_iter()
        .map(|s| {
            let rows = matrix.sentence_rows(s);
            let mut out = Vec::with_capacity(rows.len() * rows.len().saturating_sub(1) / 2);
            for (i, a) in rows.iter().enumerate() {
                for b in &rows[i + 1..] {
                    out.push(a.choices.cosine(b.choices));
                }
            }
            out
        })
        .collect();

    let mut agreement_with_rest = Vec::with_capacity(matrix.len());
    for s in 0..n_sentences {
        let rows = matrix.sentence_rows(s);
        let mut totals = [0u64; INVENTORY_SIZE];
        for row in rows {
            for r in row.choices.indices() {
                totals[r] += 1;
            }
        }
        for row in rows {
            if rows.len() < 2 {
                agreement_with_rest.push(None);
                continue;
            }
            let mut dot = 0u64;
            let mut rest_norm2 = 0u64;
            for (r, &total) in totals.iter().enumerate() {
                let rest = total - row.choices.contains(r) as u64;
                rest_norm2 += rest * rest;
                if row.choices.contains(r) {
                    dot += rest;
                }
            }
            let norms = row.choices.count() as f64 * rest_norm2 as f64;
            agreement_with_rest.push(Some(dot as f64 / norms.sqrt()));
        }
    }
    Precomputed {
        pair_cosines,
        agreement_with_rest,
    }
}

fn update_sentence_quality(matrix: &AnnotationMatrix, pre: &Precomputed, wq: &[f64]) -> Vec<f64> {
    (0..matrix.sentence_ids().len())
        .into_par_iter()
        .map(|s| {
            let rows = matrix.sentence_rows(s);
            let weights = rows.iter().enumerate().flat_map(|(i, a)| {
                rows[i + 1..].iter().map(move |b| wq[a.worker] * wq[b.worker])
            });
            weighted_mean(pre.pair_cosines[s].iter().copied().zip(weights)).unwrap_or(1.0)
        })
        .collect()
}

fn update_worker_quality(matrix: &AnnotationMatrix, pre: &Precomputed, sq: &[f64]) -> Vec<f64> {
    (0..matrix.worker_ids().len())
        .into_par_iter()
        .map(|w| {
            let terms = matrix.worker_rows(w).iter().filter_map(|&row| {
                let cos = pre.agreement_with_rest[row]?;
                Some((cos, sq[matrix.rows()[row].sentence]))
            });
            weighted_mean(terms).unwrap_or(1.0)
        })
        .collect()
}

fn update_relation_quality(matrix: &AnnotationMatrix, wq: &[f64]) -> Vec<f64> {
    (0..INVENTORY_SIZE)
        .into_par_iter()
        .map(|r| {
            let terms = (0..matrix.sentence_ids().len()).flat_map(|s| {
                let rows = matrix.sentence_rows(s);
                rows.iter()
                    .enumerate()
                    .filter(move |(_, a)| a.choices.contains(r))
                    .flat_map(move |(i, a)| {
                        rows.iter().enumerate().filter(move |&(j, _)| j != i).map(move |(_, b)| {
                            let agree = if b.choices.contains(r) { 1.0 } else { 0.0 };
                            (agree, wq[a.worker] * wq[b.worker])
                        })
                    })
            });
            weighted_mean(terms).unwrap_or(1.0)
        })
        .collect()
}

fn max_abs_change(old: &[f64], new: &[f64]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Computes converged worker, sentence and relation quality plus srs.
pub fn compute_quality_scores(matrix: &AnnotationMatrix, config: &FixedPointConfig) -> Result<QualityScores> {
    config.validate()?;
    if matrix.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let pre = precompute(matrix);

    let mut warnings = Vec::new();
    for (w, id) in matrix.worker_ids().iter().enumerate() {
        let shares = matrix
            .worker_rows(w)
            .iter()
            .any(|&row| pre.agreement_with_rest[row].is_some());
        if !shares {
            let msg = format!("worker `{id}` shares no sentence with another worker; quality fixed at 1");
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }

    let mut wq = vec![1.0; matrix.worker_ids().len()];
    let mut sq = vec![1.0; matrix.sentence_ids().len()];
    let mut rq = vec![1.0; INVENTORY_SIZE];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        let sq_next = update_sentence_quality(matrix, &pre, &wq);
        let wq_next = update_worker_quality(matrix, &pre, &sq);
        let rq_next = update_relation_quality(matrix, &wq);
        let change = max_abs_change(&sq, &sq_next)
            .max(max_abs_change(&wq, &wq_next))
            .max(max_abs_change(&rq, &rq_next));
        sq = sq_next;
        wq = wq_next;
        rq = rq_next;
        iterations += 1;
        if change < config.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("quality iteration stopped after {iterations} iterations without converging");
    }

    let srs: IndexMap<String, Vec<f64>> = matrix
        .sentence_ids()
        .iter()
        .enumerate()
        .map(|(s, id)| {
            let scores = (0..INVENTORY_SIZE)
                .map(|r| weighted_srs(matrix, &wq, &rq, s, r, config.srs_relation_weighting))
                .collect();
            (id.clone(), scores)
        })
        .collect();
    let unweighted_srs = config.report_unweighted.then(|| {
        let ones = vec![1.0; wq.len()];
        matrix
            .sentence_ids()
            .iter()
            .enumerate()
            .map(|(s, id)| {
                let scores = (0..INVENTORY_SIZE)
                    .map(|r| weighted_srs(matrix, &ones, &rq, s, r, SrsRelationWeighting::Off))
                    .collect();
                (id.clone(), scores)
            })
            .collect()
    });

    Ok(QualityScores {
        relations: matrix.inventory().names().to_vec(),
        worker_quality: matrix.worker_ids().iter().cloned().zip(wq).collect(),
        sentence_quality: matrix.sentence_ids().iter().cloned().zip(sq).collect(),
        relation_quality: rq,
        srs,
        unweighted_srs,
        iterations,
        converged,
        warnings,
    })
}

fn weighted_srs(
    matrix: &AnnotationMatrix,
    wq: &[f64],
    rq: &[f64],
    sentence: usize,
    relation: usize,
    weighting: SrsRelationWeighting,
) -> f64 {
    let (mut picked, mut total) = (0.0, 0.0);
    for row in matrix.sentence_rows(sentence) {
        let q = wq[row.worker];
        total += q;
        if row.choices.contains(relation) {
            picked += q;
        }
    }
    if total == 0.0 {
        return 0.0;
    }
    let ratio = picked / total;
    match weighting {
        SrsRelationWeighting::Off => ratio,
        SrsRelationWeighting::PerChoice => rq[relation] * ratio,
    }
}

/// Sentence-relation score of one (sentence, relation) pair under the
/// default weighting: the worker-quality weighted fraction of the
/// sentence's workers that picked the relation. Zero when every worker on
/// the sentence has quality 0.
pub fn sentence_relation_score(
    matrix: &AnnotationMatrix,
    quality: &QualityScores,
    sentence_id: &str,
    relation: usize,
) -> Result<f64> {
    let s = matrix
        .sentence_index(sentence_id)
        .ok_or_else(|| Error::UnknownSentence(sentence_id.to_string()))?;
    if relation >= INVENTORY_SIZE {
        return Err(Error::UnknownRelation(relation.to_string()));
    }
    let wq: Vec<f64> = matrix
        .worker_ids()
        .iter()
        .map(|id| quality.worker_quality.get(id).copied().unwrap_or(0.0))
        .collect();
    Ok(weighted_srs(
        matrix,
        &wq,
        &quality.relation_quality,
        s,
        relation,
        SrsRelationWeighting::Off,
    ))
}
