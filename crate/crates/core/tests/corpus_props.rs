use std::collections::HashMap;

use dsembed::corpus::{self, CooccurrenceCounts, SimilarityMatrix};
use proptest::prelude::*;

fn brute_force(tokens: &[String], vocab: &corpus::Vocabulary, window: usize) -> HashMap<(u32, u32), f64> {
    let mut out = HashMap::new();
    for a in 0..tokens.len() {
        for b in 0..tokens.len() {
            if a >= b || b - a > window {
                continue;
            }
            let (Some(x), Some(y)) = (vocab.id_of(&tokens[a]), vocab.id_of(&tokens[b])) else {
                continue;
            };
            if x != y {
                let key = (x.min(y) as u32, x.max(y) as u32);
                *out.entry(key).or_insert(0.0) += 1.0;
            }
        }
    }
    out
}

fn token_stream() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(0u8..12, 2..120).prop_map(|ids| ids.into_iter().map(|i| format!("t{i}")).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn window_counts_match_double_loop(tokens in token_stream(), window in 1usize..10, max_vocab in 1usize..14) {
        let vocab = corpus::build_vocab(&tokens, max_vocab).unwrap();
        let counts = corpus::count_cooccurrences(&tokens, &vocab, window).unwrap();
        let expected = brute_force(&tokens, &vocab, window);
        let got: HashMap<(u32, u32), f64> = counts.iter().collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn shard_count_does_not_change_counts(tokens in token_stream(), window in 1usize..10, shards in 1usize..9) {
        let vocab = corpus::build_vocab(&tokens, 20).unwrap();
        let one = corpus::count_cooccurrences(&tokens, &vocab, window).unwrap();
        let many = corpus::count_cooccurrences_sharded(&tokens, &vocab, window, shards).unwrap();
        prop_assert_eq!(one, many);
    }

    #[test]
    fn similarity_mass_and_symmetry(tokens in token_stream(), window in 1usize..6) {
        let vocab = corpus::build_vocab(&tokens, 20).unwrap();
        let counts = corpus::count_cooccurrences(&tokens, &vocab, window).unwrap();
        prop_assume!(!counts.is_empty());
        let s = corpus::build_similarity(&counts, vocab.len()).unwrap();
        let retained = s.n() - s.empty_rows().len();
        prop_assert!((s.total() - retained as f64).abs() <= 1e-9 * retained as f64);
        for i in 0..s.n() {
            prop_assert_eq!(s.get(i, i), 0.0);
            let (cols, vals) = s.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                prop_assert!(v > 0.0);
                prop_assert_eq!(s.get(j as usize, i), v);
            }
        }
        let (compact, kept) = s.compact();
        prop_assert!(compact.empty_rows().is_empty());
        prop_assert_eq!(compact.n(), kept.len());
        prop_assert!((compact.total() - s.total()).abs() <= 1e-12 * s.total());
    }

    #[test]
    fn vocabulary_is_frequency_sorted(tokens in token_stream(), max_vocab in 1usize..14) {
        let vocab = corpus::build_vocab(&tokens, max_vocab).unwrap();
        prop_assert!(vocab.len() <= max_vocab);
        prop_assert!(vocab.counts().windows(2).all(|w| w[0] >= w[1]));
        for (id, word) in vocab.words().iter().enumerate() {
            let count = tokens.iter().filter(|t| *t == word).count() as u64;
            prop_assert_eq!(vocab.counts()[id], count);
            prop_assert_eq!(vocab.id_of(word), Some(id));
        }
    }

    #[test]
    fn tokenizer_output_is_alphanumeric(text in "\\PC{0,200}", lowercase in any::<bool>()) {
        let tokens = corpus::tokenize(&text, lowercase);
        for tok in &tokens {
            prop_assert!(!tok.is_empty());
            prop_assert!(tok.chars().all(|c| c.is_alphanumeric()));
        }
        prop_assert_eq!(&corpus::tokenize(&tokens.join(" "), lowercase), &tokens);
    }
}

#[test]
fn case_folding_does_not_leave_marks() {
    assert_eq!(
        corpus::tokenize("İstanbul ΣΟΦΙΑ", true),
        vec!["i", "stanbul", "σοφια"]
    );
    assert_eq!(corpus::tokenize("İstanbul", false), vec!["İstanbul"]);
}

#[test]
fn counting_is_deterministic_across_runs() {
    let text =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/wiki_sample.txt")).unwrap();
    let tokens: Vec<String> = corpus::tokenize(&text, true).into_iter().take(20_000).collect();
    let vocab = corpus::build_vocab(&tokens, 500).unwrap();
    let a = corpus::build_similarity(
        &corpus::count_cooccurrences(&tokens, &vocab, 8).unwrap(),
        vocab.len(),
    )
    .unwrap();
    let b = corpus::build_similarity(
        &corpus::count_cooccurrences_sharded(&tokens, &vocab, 8, 4).unwrap(),
        vocab.len(),
    )
    .unwrap();
    assert_eq!(a, b);
}

#[test]
fn empty_and_degenerate_inputs() {
    let none: Vec<String> = Vec::new();
    assert_eq!(corpus::build_vocab(&none, 10).unwrap_err().exit_code(), 3);
    let single = vec!["a".to_string(), "a".to_string()];
    let vocab = corpus::build_vocab(&single, 10).unwrap();
    let counts = corpus::count_cooccurrences(&single, &vocab, 3).unwrap();
    assert!(counts.is_empty());
    assert!(corpus::build_similarity(&counts, vocab.len()).is_err());
    assert!(corpus::count_cooccurrences(&single, &vocab, 0).is_err());
}

#[test]
fn triplet_validation() {
    assert!(SimilarityMatrix::from_upper_triplets(2, &[(0, 0, 1.0)]).is_err());
    assert!(SimilarityMatrix::from_upper_triplets(2, &[(0, 2, 1.0)]).is_err());
    assert!(SimilarityMatrix::from_upper_triplets(2, &[(0, 1, -1.0)]).is_err());
    assert!(SimilarityMatrix::from_upper_triplets(2, &[(0, 1, f64::NAN)]).is_err());
    assert!(SimilarityMatrix::from_upper_triplets(3, &[(0, 1, 1.0), (1, 0, 1.0)]).is_err());
    let s = SimilarityMatrix::from_triplets_with_diagonal(2, &[(0, 0, 0.5), (0, 1, 0.5)]).unwrap();
    assert_eq!(s.upper_nnz(), 2);
    assert_eq!(s.nnz(), 3);
    let mut c = CooccurrenceCounts::new();
    c.add(1, 1, 5.0);
    assert!(c.is_empty());
}
