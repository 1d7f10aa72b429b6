use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use crowdprop::corpus::{open_jsonl, read_corpus};
use crowdprop::embedding::{sentence_vector_with_fallback, vocabulary_filter, LoadStats};
use crowdprop::evaluation::{self, ScoreRecord, DEFAULT_GOLD_THRESHOLD};
use crowdprop::{
    compute_quality_scores, load_embeddings, parse_annotations, propagate_corpus, sentence_vector, CorpusSentence,
    Error, FixedPointConfig, LabeledSet, PropagationConfig, QualityScores, RelationInventory, SpanPolicy,
    VectorFormat,
};
use serde::Serialize;

use crate::config::{optional, required, vector_format, RunConfig};
use crate::{AggregateArgs, EmbedStatsArgs, EvaluateArgs, FpRatioArgs, PropagateArgs};

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(BufWriter::new(file))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    finish(w, path)
}

fn read_quality(path: &Path, inventory: &RelationInventory) -> Result<QualityScores> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    QualityScores::read_json(std::io::BufReader::new(file), inventory)
        .with_context(|| format!("reading {}", path.display()))
}

fn with_path<T>(r: crowdprop::Result<T>, path: &Path) -> Result<T> {
    r.with_context(|| format!("reading {}", path.display()))
}

pub fn aggregate(args: &AggregateArgs, cfg: &RunConfig) -> Result<()> {
    let inventory_path = required(&args.inventory, &cfg.inventory, "inventory")?;
    let annotations_path = required(&args.annotations, &cfg.annotations, "annotations")?;
    let out = required(&args.out, &cfg.out, "out")?;
    let defaults = FixedPointConfig::default();
    let config = FixedPointConfig {
        tolerance: optional(&args.tolerance, &cfg.tolerance).unwrap_or(defaults.tolerance),
        max_iterations: optional(&args.max_iterations, &cfg.max_iterations).unwrap_or(defaults.max_iterations),
        srs_relation_weighting: args
            .srs_relation_weighting
            .map(Into::into)
            .or(cfg.srs_relation_weighting)
            .unwrap_or_default(),
        report_unweighted: args.report_unweighted || cfg.report_unweighted.unwrap_or(false),
    };

    let inventory = with_path(RelationInventory::from_path(&inventory_path), &inventory_path)?;
    let matrix = with_path(parse_annotations(&annotations_path, &inventory), &annotations_path)?;
    let quality = compute_quality_scores(&matrix, &config)?;

    let mut w = create(&out)?;
    quality.write_json(&mut w)?;
    finish(w, &out)?;
    println!(
        "aggregated {} judgments: {} workers, {} sentences, {} iterations, converged={}",
        matrix.len(),
        matrix.worker_ids().len(),
        matrix.sentence_ids().len(),
        quality.iterations,
        quality.converged
    );
    Ok(())
}

/// Streams a corpus once to collect its vocabulary.
fn scan_vocabulary(path: &Path, vocab: &mut HashSet<String>) -> Result<usize> {
    let mut n = 0;
    for s in open_jsonl::<CorpusSentence>(path)? {
        let s = with_path(s, path)?;
        vocab.extend(vocabulary_filter([&s]));
        n += 1;
    }
    Ok(n)
}

fn load_filtered(path: &Path, format: VectorFormat, vocab: &HashSet<String>) -> Result<(crowdprop::EmbeddingTable, LoadStats)> {
    with_path(load_embeddings(path, format, Some(vocab)), path)
}

pub fn propagate(args: &PropagateArgs, cfg: &RunConfig) -> Result<()> {
    let inventory_path = required(&args.inventory, &cfg.inventory, "inventory")?;
    let embeddings = required(&args.embeddings, &cfg.embeddings, "embeddings")?;
    let crowd_path = required(&args.crowd, &cfg.crowd, "crowd")?;
    let ds_path = required(&args.ds, &cfg.ds, "ds")?;
    let out = required(&args.out, &cfg.out, "out")?;
    let report_path = optional(&args.report, &cfg.report).unwrap_or_else(|| {
        let mut p = out.clone().into_os_string();
        p.push(".report.json");
        PathBuf::from(p)
    });
    let format = vector_format(args.embeddings_format.map(Into::into), cfg.embeddings_format, &embeddings);
    let defaults = PropagationConfig::default();
    let config = PropagationConfig {
        span_policy: args.span_policy.map(Into::into).or(cfg.span_policy).unwrap_or_default(),
        clamp_similarity: !args.no_clamp && cfg.clamp_similarity.unwrap_or(true),
        batch_size: optional(&args.batch_size, &cfg.batch_size).unwrap_or(defaults.batch_size),
    };

    let inventory = with_path(RelationInventory::from_path(&inventory_path), &inventory_path)?;
    let quality = optional(&args.quality, &cfg.quality)
        .map(|p| read_quality(&p, &inventory))
        .transpose()?;
    let crowd = with_path(read_corpus(&crowd_path), &crowd_path)?;

    let mut vocab = vocabulary_filter(&crowd);
    scan_vocabulary(&ds_path, &mut vocab)?;
    let (table, stats) = load_filtered(&embeddings, format, &vocab)?;
    log::info!("loaded {} of {} vectors (dimension {})", stats.retained, stats.declared, table.dimension());

    let labeled = LabeledSet::build(&crowd, quality.as_ref(), &table, &inventory, config.span_policy)
        .with_context(|| format!("indexing {}", crowd_path.display()))?;

    let mut w = create(&out)?;
    let report = propagate_corpus(open_jsonl(&ds_path)?, &labeled, &table, &inventory, &config, |r| {
        serde_json::to_writer(&mut w, &r).map_err(|e| Error::Malformed(e.to_string()))?;
        w.write_all(b"\n")?;
        Ok(())
    })
    .with_context(|| format!("propagating {}", ds_path.display()))?;
    finish(w, &out)?;
    write_json(&report_path, &report)?;
    println!(
        "propagated {} of {} DS sentences ({} unpropagatable) from {} crowd sentences",
        report.propagated, report.ds_sentences, report.unpropagatable, report.labeled_indexed
    );
    Ok(())
}

fn read_records(path: &Path) -> Result<Vec<ScoreRecord>> {
    with_path(open_jsonl(path)?.collect(), path)
}

pub fn evaluate(args: &EvaluateArgs, cfg: &RunConfig) -> Result<()> {
    let inventory_path = required(&args.inventory, &cfg.inventory, "inventory")?;
    let predictions_path = required(&args.predictions, &cfg.predictions, "predictions")?;
    let out_dir = required(&args.out_dir, &cfg.out_dir, "out_dir")?;
    let threshold = optional(&args.gold_threshold, &cfg.gold_threshold).unwrap_or(DEFAULT_GOLD_THRESHOLD);

    let inventory = with_path(RelationInventory::from_path(&inventory_path), &inventory_path)?;
    let predictions = read_records(&predictions_path)?;
    let gold = match (&args.gold, &args.quality) {
        (Some(gold), _) => read_records(gold)?,
        (None, Some(q)) => ScoreRecord::from_quality(&read_quality(q, &inventory)?),
        (None, None) => match (&cfg.gold, &cfg.quality) {
            (Some(gold), _) => read_records(gold)?,
            (None, Some(q)) => ScoreRecord::from_quality(&read_quality(q, &inventory)?),
            (None, None) => {
                return Err(crate::config::ConfigError("missing --gold or --quality".into()).into());
            }
        },
    };

    let joined = evaluation::join_scores(predictions, gold, &inventory)?;
    let report = evaluation::evaluate(&joined, threshold)?;

    fs::create_dir_all(&out_dir).map_err(|source| Error::Io {
        path: out_dir.clone(),
        source,
    })?;
    write_json(&out_dir.join("report.json"), &report)?;
    let pr_path = out_dir.join("pr_curve.csv");
    let mut w = create(&pr_path)?;
    evaluation::write_pr_csv(&mut w, &report.pr_curve)?;
    finish(w, &pr_path)?;
    let cos_path = out_dir.join("cosine.csv");
    let mut w = create(&cos_path)?;
    evaluation::write_cosine_csv(&mut w, &report.cosine_per_sentence)?;
    finish(w, &cos_path)?;
    println!(
        "evaluated {} sentences ({} pairs, {} gold positives): AUC={} mean cosine={}",
        report.sentences, report.pairs, report.gold_positives, report.auc, report.mean_cosine
    );
    Ok(())
}

pub fn fp_ratio(args: &FpRatioArgs, cfg: &RunConfig) -> Result<()> {
    let inventory_path = required(&args.inventory, &cfg.inventory, "inventory")?;
    let crowd_path = required(&args.crowd, &cfg.crowd, "crowd")?;
    let out = required(&args.out, &cfg.out, "out")?;
    let threshold = optional(&args.gold_threshold, &cfg.gold_threshold).unwrap_or(DEFAULT_GOLD_THRESHOLD);

    let inventory = with_path(RelationInventory::from_path(&inventory_path), &inventory_path)?;
    let quality = optional(&args.quality, &cfg.quality)
        .map(|p| read_quality(&p, &inventory))
        .transpose()?;
    let crowd = with_path(read_corpus(&crowd_path), &crowd_path)?;
    let ratios = evaluation::false_positive_ratio(&crowd, quality.as_ref(), &inventory, threshold)?;

    let mut w = create(&out)?;
    evaluation::write_fp_csv(&mut w, &ratios)?;
    finish(w, &out)?;
    for (name, ratio) in &ratios {
        match ratio {
            Some(r) => println!("{name}\t{r:.4}"),
            None => println!("{name}\t-"),
        }
    }
    Ok(())
}

#[derive(Serialize, Default)]
struct CorpusCoverage {
    path: PathBuf,
    sentences: usize,
    tokens: usize,
    exact_hits: usize,
    lowercase_hits: usize,
    oov_tokens: usize,
    token_coverage: f64,
    distinct_tokens: usize,
    distinct_in_vocab: usize,
    empty_span: usize,
    whole_sentence_fallbacks: usize,
    unrepresentable: usize,
}

#[derive(Serialize)]
struct EmbedStats {
    embeddings: PathBuf,
    format: VectorFormat,
    dimension: usize,
    declared_vectors: usize,
    retained_vectors: usize,
    duplicate_tokens: usize,
    span_policy: SpanPolicy,
    corpora: Vec<CorpusCoverage>,
}

pub fn embed_stats(args: &EmbedStatsArgs, cfg: &RunConfig) -> Result<()> {
    let embeddings = required(&args.embeddings, &cfg.embeddings, "embeddings")?;
    let format = vector_format(args.embeddings_format.map(Into::into), cfg.embeddings_format, &embeddings);
    let policy: SpanPolicy = args.span_policy.map(Into::into).or(cfg.span_policy).unwrap_or_default();

    let mut vocab = HashSet::new();
    for path in &args.corpora {
        scan_vocabulary(path, &mut vocab)?;
    }
    let (table, stats) = load_filtered(&embeddings, format, &vocab)?;

    let mut corpora = Vec::new();
    for path in &args.corpora {
        let mut c = CorpusCoverage {
            path: path.clone(),
            ..Default::default()
        };
        let mut distinct = HashSet::new();
        for s in open_jsonl::<CorpusSentence>(path)? {
            let s = with_path(s, path)?;
            c.sentences += 1;
            for t in &s.tokens {
                c.tokens += 1;
                if table.get(t).is_some() {
                    c.exact_hits += 1;
                } else if table.lookup(t).is_some() {
                    c.lowercase_hits += 1;
                } else {
                    c.oov_tokens += 1;
                }
                if distinct.insert(t.as_str().to_owned()) && table.lookup(t).is_some() {
                    c.distinct_in_vocab += 1;
                }
            }
            if s.validate_spans().is_ok() {
                if sentence_vector(&s, &table, policy).empty {
                    c.empty_span += 1;
                }
                let (v, fell_back) = sentence_vector_with_fallback(&s, &table, policy);
                c.whole_sentence_fallbacks += fell_back as usize;
                c.unrepresentable += v.empty as usize;
            } else {
                c.unrepresentable += 1;
            }
        }
        c.distinct_tokens = distinct.len();
        c.token_coverage = if c.tokens == 0 {
            0.0
        } else {
            (c.exact_hits + c.lowercase_hits) as f64 / c.tokens as f64
        };
        corpora.push(c);
    }

    let report = EmbedStats {
        embeddings,
        format,
        dimension: table.dimension(),
        declared_vectors: stats.declared,
        retained_vectors: stats.retained,
        duplicate_tokens: stats.duplicates,
        span_policy: policy,
        corpora,
    };
    match optional(&args.out, &cfg.out) {
        Some(out) => write_json(&out, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}
