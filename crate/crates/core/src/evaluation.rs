//! Evaluation of relation scores against crowd gold: micro precision/recall
//! with AUC, per-sentence cosine similarity, and the DS false-positive ratio.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSentence;
use crate::embedding::cosine_similarity;
use crate::error::{Error, Result};
use crate::inventory::{RelationInventory, NAMED_RELATIONS, NONE};
use crate::metrics::QualityScores;
use crate::propagation::crowd_srs;

pub const DEFAULT_GOLD_THRESHOLD: f64 = 0.5;

/// One line of a prediction (or gold) file: `{id, scores: {relation: real}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub id: String,
    pub scores: IndexMap<String, f64>,
}

impl ScoreRecord {
    /// Gold records (16 named relations) from computed srs.
    pub fn from_quality(quality: &QualityScores) -> Vec<ScoreRecord> {
        quality
            .srs
            .iter()
            .map(|(id, v)| ScoreRecord {
                id: id.clone(),
                scores: quality.relations[..NAMED_RELATIONS]
                    .iter()
                    .cloned()
                    .zip(v.iter().copied())
                    .collect(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub sentence_id: String,
    pub relation: usize,
    pub predicted: f64,
    pub gold: f64,
}

/// Predictions and gold aligned per sentence over the 16 named relations.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinedScores {
    pub relations: Vec<String>,
    pub sentence_ids: Vec<String>,
    pub predicted: Vec<Vec<f64>>,
    pub gold: Vec<Vec<f64>>,
}

impl JoinedScores {
    pub fn pairs(&self) -> Vec<ScoredPair> {
        let mut out = Vec::with_capacity(self.sentence_ids.len() * NAMED_RELATIONS);
        for (s, id) in self.sentence_ids.iter().enumerate() {
            for r in 0..self.relations.len() {
                out.push(ScoredPair {
                    sentence_id: id.clone(),
                    relation: r,
                    predicted: self.predicted[s][r],
                    gold: self.gold[s][r],
                });
            }
        }
        out
    }
}

fn dense_scores(record: &ScoreRecord, inventory: &RelationInventory) -> Result<Vec<f64>> {
    let mut v = vec![f64::NAN; NAMED_RELATIONS];
    for (name, &value) in &record.scores {
        if name == NONE {
            continue;
        }
        let r = inventory.relation_index(name).map_err(|_| {
            Error::InventoryMismatch(format!("sentence `{}`: unknown relation `{name}`", record.id))
        })?;
        if !value.is_finite() {
            return Err(Error::Malformed(format!(
                "sentence `{}`: non-finite score for `{name}`",
                record.id
            )));
        }
        v[r] = value;
    }
    if let Some(r) = v.iter().position(|x| x.is_nan()) {
        return Err(Error::MissingRelation {
            sentence: record.id.clone(),
            relation: inventory.name(r).to_string(),
        });
    }
    Ok(v)
}

/// Joins prediction and gold records by sentence id. Every id must appear
/// on both sides with scores for all 16 named relations; output follows
/// prediction order.
pub fn join_scores(
    predictions: Vec<ScoreRecord>,
    gold: Vec<ScoreRecord>,
    inventory: &RelationInventory,
) -> Result<JoinedScores> {
    let mut gold_by_id: HashMap<String, ScoreRecord> = HashMap::with_capacity(gold.len());
    for g in gold {
        if gold_by_id.contains_key(&g.id) {
            return Err(Error::Malformed(format!("duplicate gold sentence `{}`", g.id)));
        }
        gold_by_id.insert(g.id.clone(), g);
    }

    let mut seen = HashSet::with_capacity(predictions.len());
    let mut orphans = Vec::new();
    let mut missing_in_gold = 0;
    for p in &predictions {
        if !seen.insert(p.id.as_str()) {
            return Err(Error::Malformed(format!("duplicate prediction sentence `{}`", p.id)));
        }
        if !gold_by_id.contains_key(&p.id) {
            missing_in_gold += 1;
            orphans.push(p.id.clone());
        }
    }
    let mut gold_only: Vec<&String> = gold_by_id.keys().filter(|id| !seen.contains(id.as_str())).collect();
    gold_only.sort();
    if missing_in_gold > 0 || !gold_only.is_empty() {
        orphans.extend(gold_only.iter().map(|s| s.to_string()));
        orphans.truncate(10);
        return Err(Error::JoinMismatch {
            missing_in_gold,
            missing_in_predictions: gold_only.len(),
            orphans,
        });
    }

    let mut joined = JoinedScores {
        relations: inventory.relations().to_vec(),
        sentence_ids: Vec::with_capacity(predictions.len()),
        predicted: Vec::with_capacity(predictions.len()),
        gold: Vec::with_capacity(predictions.len()),
    };
    for p in predictions {
        let g = &gold_by_id[&p.id];
        joined.gold.push(dense_scores(g, inventory)?);
        joined.predicted.push(dense_scores(&p, inventory)?);
        joined.sentence_ids.push(p.id);
    }
    Ok(joined)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    /// One point per distinct predicted score, ascending threshold.
    pub points: Vec<PrPoint>,
    pub auc: f64,
    pub pairs: usize,
    pub gold_positives: usize,
}

fn check_threshold(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("gold threshold must lie in (0, 1), got {t}")))
    }
}

/// Micro precision/recall over all sentence-relation pairs.
///
/// A pair is gold-positive when its gold score is at least
/// `gold_threshold`. At each distinct predicted score `t` every pair scoring
/// `>= t` is predicted positive, so tied pairs move together. AUC is the
/// trapezoidal area under precision over recall, with the curve extended
/// horizontally from the highest-threshold point to recall 0.
pub fn pr_curve(pairs: &[ScoredPair], gold_threshold: f64) -> Result<PrCurve> {
    check_threshold(gold_threshold)?;
    if pairs.is_empty() {
        return Err(Error::Malformed("no scored pairs".into()));
    }
    let mut seen = HashSet::with_capacity(pairs.len());
    for p in pairs {
        if !seen.insert((p.sentence_id.as_str(), p.relation)) {
            return Err(Error::DuplicateScoredPair {
                sentence: p.sentence_id.clone(),
                relation: p.relation.to_string(),
            });
        }
        if !p.predicted.is_finite() {
            return Err(Error::Malformed(format!(
                "non-finite prediction for ({}, {})",
                p.sentence_id, p.relation
            )));
        }
    }
    let positives = pairs.iter().filter(|p| p.gold >= gold_threshold).count();
    if positives == 0 {
        return Err(Error::NoGoldPositives(gold_threshold));
    }

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| pairs[b].predicted.total_cmp(&pairs[a].predicted));

    let mut sweep = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let cut = pairs[order[i]].predicted;
        while i < order.len() && pairs[order[i]].predicted == cut {
            if pairs[order[i]].gold >= gold_threshold {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        sweep.push(PrPoint {
            threshold: cut,
            precision: tp as f64 / (tp + fp) as f64,
            recall: tp as f64 / positives as f64,
        });
    }

    let mut auc = 0.0;
    let (mut prev_recall, mut prev_precision) = (0.0, sweep[0].precision);
    for p in &sweep {
        auc += (p.recall - prev_recall) * (p.precision + prev_precision) / 2.0;
        prev_recall = p.recall;
        prev_precision = p.precision;
    }

    sweep.reverse();
    Ok(PrCurve {
        points: sweep,
        auc,
        pairs: pairs.len(),
        gold_positives: positives,
    })
}

/// Cosine between each sentence's predicted and gold score vectors, in
/// sentence order; 0 when either vector is all zeros.
pub fn cosine_eval(joined: &JoinedScores) -> Vec<(String, f64)> {
    joined
        .sentence_ids
        .iter()
        .zip(joined.predicted.iter().zip(&joined.gold))
        .map(|(id, (p, g))| {
            let c = cosine_similarity(p, g).expect("joined vectors share a dimension");
            (id.clone(), c)
        })
        .collect()
}

/// Per named relation, the fraction of DS-positive crowd sentences whose
/// srs is below `gold_threshold`; `None` when the relation has no DS
/// positive.
pub fn false_positive_ratio(
    crowd: &[CorpusSentence],
    quality: Option<&QualityScores>,
    inventory: &RelationInventory,
    gold_threshold: f64,
) -> Result<Vec<(String, Option<f64>)>> {
    check_threshold(gold_threshold)?;
    let mut positives = [0usize; NAMED_RELATIONS];
    let mut false_pos = [0usize; NAMED_RELATIONS];
    for s in crowd {
        let ds = s.validate(inventory)?;
        let srs = crowd_srs(s, quality, inventory)?;
        for r in 0..NAMED_RELATIONS {
            if ds[r] == 1.0 {
                positives[r] += 1;
                if srs[r] < gold_threshold {
                    false_pos[r] += 1;
                }
            }
        }
    }
    Ok(inventory
        .relations()
        .iter()
        .enumerate()
        .map(|(r, name)| {
            let ratio = (positives[r] > 0).then(|| false_pos[r] as f64 / positives[r] as f64);
            (name.clone(), ratio)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub gold_threshold: f64,
    pub sentences: usize,
    pub pairs: usize,
    pub gold_positives: usize,
    pub auc: f64,
    pub pr_curve: Vec<PrPoint>,
    pub mean_cosine: f64,
    pub cosine_per_sentence: IndexMap<String, f64>,
}

pub fn evaluate(joined: &JoinedScores, gold_threshold: f64) -> Result<EvalReport> {
    let curve = pr_curve(&joined.pairs(), gold_threshold)?;
    let cosines = cosine_eval(joined);
    let mean_cosine = if cosines.is_empty() {
        0.0
    } else {
        cosines.iter().map(|(_, c)| c).sum::<f64>() / cosines.len() as f64
    };
    Ok(EvalReport {
        gold_threshold,
        sentences: joined.sentence_ids.len(),
        pairs: curve.pairs,
        gold_positives: curve.gold_positives,
        auc: curve.auc,
        pr_curve: curve.points,
        mean_cosine,
        cosine_per_sentence: cosines.into_iter().collect(),
    })
}

pub fn write_pr_csv<W: Write>(mut w: W, points: &[PrPoint]) -> Result<()> {
    writeln!(w, "threshold,precision,recall")?;
    for p in points {
        writeln!(w, "{},{},{}", p.threshold, p.precision, p.recall)?;
    }
    Ok(())
}

pub fn write_cosine_csv<W: Write>(mut w: W, cosines: &IndexMap<String, f64>) -> Result<()> {
    writeln!(w, "sentence_id,cosine")?;
    for (id, c) in cosines {
        writeln!(w, "{id},{c}")?;
    }
    Ok(())
}

/// Undefined ratios are written as empty fields.
pub fn write_fp_csv<W: Write>(mut w: W, ratios: &[(String, Option<f64>)]) -> Result<()> {
    writeln!(w, "relation,fp_ratio")?;
    for (name, ratio) in ratios {
        match ratio {
            Some(r) => writeln!(w, "{name},{r}")?,
            None => writeln!(w, "{name},")?,
        }
    }
    Ok(())
}
