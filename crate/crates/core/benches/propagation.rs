use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use crowdprop::propagation::PropagationConfig;
use crowdprop::{
    compute_quality_scores, propagate_corpus, AnnotationMatrix, Choices, CorpusSentence, EmbeddingTable,
    FixedPointConfig, LabeledIndex, LabeledSet, RelationInventory, SpanPolicy, TermSpan, WorkerVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODE: &str = if cfg!(feature = "parallel") { "parallel" } else { "sequential" };

fn vectors(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

fn search(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dim = 300;
    let labeled = vectors(&mut rng, 2050, dim);
    let index = LabeledIndex::build(dim, labeled.into_iter().enumerate().map(|(i, v)| (format!("l{i:05}"), v))).unwrap();
    let mut group = c.benchmark_group("search");
    for queries in [256, 4096] {
        let qs = vectors(&mut rng, queries, dim);
        let refs: Vec<&[f64]> = qs.iter().map(Vec::as_slice).collect();
        group.throughput(Throughput::Elements(queries as u64));
        group.bench_with_input(BenchmarkId::new(MODE, queries), &refs, |b, refs| {
            b.iter(|| index.nearest_batch(refs).unwrap())
        });
    }
    group.finish();
}

fn sentence(rng: &mut ChaCha8Rng, id: String, vocab: usize, scores: bool) -> CorpusSentence {
    let inner = rng.random_range(1..10);
    let mut tokens = vec!["A".to_owned()];
    tokens.extend((0..inner).map(|_| format!("t{}", rng.random_range(0..vocab))));
    tokens.push("B".to_owned());
    let scores = scores.then(|| (0..16).map(|r| (format!("r{r:02}"), rng.random_range(0.0..1.0))).collect());
    CorpusSentence {
        id,
        term1: TermSpan(0, 0),
        term2: TermSpan(inner + 1, inner + 1),
        tokens,
        ds_labels: vec![format!("r{:02}", rng.random_range(0..16))],
        scores,
    }
}

fn propagation(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let inventory = RelationInventory::new((0..16).map(|i| format!("r{i:02}"))).unwrap();
    let (vocab, dim) = (5000, 300);
    let mut table = EmbeddingTable::new(dim);
    for t in 0..vocab {
        let v: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        table.insert(&format!("t{t}"), &v).unwrap();
    }
    let crowd: Vec<CorpusSentence> = (0..2050).map(|i| sentence(&mut rng, format!("c{i}"), vocab, true)).collect();
    let ds: Vec<CorpusSentence> = (0..10_000).map(|i| sentence(&mut rng, format!("d{i}"), vocab, false)).collect();
    let labeled = LabeledSet::build(&crowd, None, &table, &inventory, SpanPolicy::BetweenTerms).unwrap();
    let config = PropagationConfig::default();

    let mut group = c.benchmark_group("propagate_corpus");
    group.sample_size(10);
    group.throughput(Throughput::Elements(ds.len() as u64));
    group.bench_function(BenchmarkId::new(MODE, ds.len()), |b| {
        b.iter(|| {
            let mut n = 0usize;
            propagate_corpus(ds.iter().cloned().map(Ok), &labeled, &table, &inventory, &config, |_| {
                n += 1;
                Ok(())
            })
            .unwrap();
            n
        })
    });
    group.finish();
}

fn quality(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let inventory = RelationInventory::new((0..16).map(|i| format!("r{i:02}"))).unwrap();
    let mut rows = Vec::new();
    for s in 0..2050 {
        let favored = rng.random_range(0..16u32);
        for w in 0..15 {
            let pick = if rng.random_bool(0.7) { favored } else { rng.random_range(0..17) };
            rows.push(WorkerVector {
                worker_id: format!("w{}", (s * 7 + w * 13) % 400),
                sentence_id: format!("s{s}"),
                choices: Choices::from_bits(1 << pick),
            });
        }
    }
    let matrix = AnnotationMatrix::from_vectors(inventory, rows).unwrap();
    let mut group = c.benchmark_group("quality_scores");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new(MODE, "2050x15"), |b| {
        b.iter(|| compute_quality_scores(&matrix, &FixedPointConfig::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, search, propagation, quality);
criterion_main!(benches);
