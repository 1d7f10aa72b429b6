use std::collections::HashSet;
use std::io::Write;

use crowdprop::embedding::{read_embeddings, sentence_vector, vocabulary_filter};
use crowdprop::{load_embeddings, CorpusSentence, EmbeddingTable, Error, SpanPolicy, TermSpan, VectorFormat};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_table(rng: &mut ChaCha8Rng, tokens: usize, dim: usize) -> EmbeddingTable {
    let mut table = EmbeddingTable::new(dim);
    for t in 0..tokens {
        let v: Vec<f32> = (0..dim).map(|_| rng.random_range(-3.0f32..3.0)).collect();
        table.insert(&format!("tok{t}"), &v).unwrap();
    }
    table
}

fn encode(table: &EmbeddingTable, format: VectorFormat) -> Vec<u8> {
    let mut buf = Vec::new();
    table.write(&mut buf, format).unwrap();
    buf
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn both_formats_round_trip_exactly(seed in any::<u64>(), tokens in 0usize..60, dim in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = random_table(&mut rng, tokens, dim);
        for format in [VectorFormat::Text, VectorFormat::Binary] {
            let (back, stats) = read_embeddings(&encode(&table, format)[..], format, None).unwrap();
            prop_assert_eq!(stats.declared, tokens);
            prop_assert_eq!(back.tokens(), table.tokens());
            for t in table.tokens() {
                prop_assert_eq!(back.get(t), table.get(t));
            }
        }
    }

    #[test]
    fn filtered_load_keeps_exactly_the_intersection(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = random_table(&mut rng, 300, 8);
        let filter: HashSet<String> = (0..200).map(|_| format!("tok{}", rng.random_range(0..450))).collect();
        for format in [VectorFormat::Text, VectorFormat::Binary] {
            let bytes = encode(&table, format);
            let (loaded, stats) = read_embeddings(&bytes[..], format, Some(&filter)).unwrap();
            // Independent scan of the text rendering for the expected count.
            let text = String::from_utf8(encode(&table, VectorFormat::Text)).unwrap();
            let expected = text
                .lines()
                .skip(1)
                .filter(|l| filter.contains(l.split(' ').next().unwrap()))
                .count();
            prop_assert_eq!(loaded.len(), expected);
            prop_assert_eq!(stats.retained, expected);
            prop_assert_eq!(stats.declared, 300);
        }
    }
}

#[test]
fn short_binary_file_is_truncated() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let table = random_table(&mut rng, 9, 5);
    let mut bytes = encode(&table, VectorFormat::Binary);
    let header_end = bytes.iter().position(|&b| b == b'\n').unwrap();
    bytes.splice(..header_end, b"10 5".iter().copied());
    match read_embeddings(&bytes[..], VectorFormat::Binary, None) {
        Err(Error::TruncatedVectors { declared: 10, found: 9 }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn text_errors_carry_line_numbers() {
    let short_row = "2 3\na 1 0 0\nb 0 1\n";
    let err = read_embeddings(short_row.as_bytes(), VectorFormat::Text, None).unwrap_err();
    assert!(err.to_string().starts_with("line 3"), "{err}");

    let extra = "1 2\na 1 0\nb 0 1\n";
    assert!(read_embeddings(extra.as_bytes(), VectorFormat::Text, None).is_err());

    let (table, stats) = read_embeddings("2 3\na 1 0 0\nb 0 1 0".as_bytes(), VectorFormat::Text, None).unwrap();
    assert_eq!((table.len(), table.dimension(), stats.duplicates), (2, 3, 0));
}

#[test]
fn duplicate_tokens_keep_the_first_vector() {
    let (table, stats) = read_embeddings("2 2\nx 1 2\nx 3 4\n".as_bytes(), VectorFormat::Text, None).unwrap();
    assert_eq!(stats.duplicates, 1);
    assert_eq!(table.get("x"), Some(&[1.0f32, 2.0][..]));
}

#[test]
fn load_from_disk_matches_in_memory_read() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let table = random_table(&mut rng, 40, 12);
    let mut file = tempfile::Builder::new().suffix(".bin").tempfile().unwrap();
    file.write_all(&encode(&table, VectorFormat::Binary)).unwrap();
    let (loaded, _) = load_embeddings(file.path(), VectorFormat::Binary, None).unwrap();
    assert_eq!(loaded.tokens(), table.tokens());
    let missing = load_embeddings("/nonexistent/vectors.bin", VectorFormat::Binary, None).unwrap_err();
    assert!(missing.is_io());
}

fn corpus_sentence(tokens: &[&str], term1: (usize, usize), term2: (usize, usize)) -> CorpusSentence {
    CorpusSentence {
        id: "s".into(),
        tokens: tokens.iter().map(|t| t.to_string()).collect(),
        term1: TermSpan(term1.0, term1.1),
        term2: TermSpan(term2.0, term2.1),
        ds_labels: vec![],
        scores: None,
    }
}

#[test]
fn span_mean_skips_unknown_tokens() {
    let (table, _) = read_embeddings(
        "3 2\nwas 1 3\nin 0.5 -1\nA 9 9\n".as_bytes(),
        VectorFormat::Text,
        None,
    )
    .unwrap();
    let s = corpus_sentence(&["A", "was", "zzz", "in", "B"], (0, 0), (4, 4));
    let v = sentence_vector(&s, &table, SpanPolicy::BetweenTerms);
    assert_eq!(v.in_vocab_count, 2);
    assert_eq!(v.vector, vec![0.75, 1.0]);

    let one = corpus_sentence(&["A"], (0, 0), (0, 0));
    let whole = sentence_vector(&one, &table, SpanPolicy::WholeSentence);
    assert_eq!(whole.vector, vec![9.0, 9.0]);

    let adjacent = corpus_sentence(&["A", "B"], (0, 0), (1, 1));
    let v = sentence_vector(&adjacent, &table, SpanPolicy::BetweenTerms);
    assert!(v.empty && v.vector.iter().all(|&x| x == 0.0));
}

#[test]
fn vocabulary_filter_includes_lowercase_forms() {
    let s = corpus_sentence(&["Paris", "is", "big"], (0, 0), (2, 2));
    let vocab = vocabulary_filter([&s]);
    for t in ["Paris", "paris", "is", "big"] {
        assert!(vocab.contains(t), "{t}");
    }
}
