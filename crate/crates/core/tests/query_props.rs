#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use dsembed::corpus::Vocabulary;
use dsembed::query::{self, Index, Metric};
use dsembed::solver::EmbeddingMatrix;
use proptest::prelude::*;

fn vocab(n: usize) -> Vocabulary {
    Vocabulary::from_entries((0..n).map(|i| (format!("w{i}"), (n - i) as u64)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rows_are_distributions_and_symmetric(seed in any::<u64>(), n in 2usize..30, r in 1usize..6) {
        let r = r.min(n);
        let w = random_embedding(&mut rng(seed), n, r, true);
        let rows: Vec<Vec<f64>> = (0..n).map(|i| query::similarity_row(&w, i).unwrap()).collect();
        for i in 0..n {
            prop_assert!((rows[i].iter().sum::<f64>() - 1.0).abs() <= 1e-10);
            for j in 0..n {
                prop_assert!(rows[i][j] >= 0.0);
                prop_assert!((rows[i][j] - rows[j][i]).abs() <= 1e-12);
            }
        }
        let dense = shat(&w_dense(&w));
        for i in 0..n {
            prop_assert!(max_abs(&rows[i], &dense[i]) <= 1e-12);
        }
    }

    #[test]
    fn ranking_ignores_monotone_rescaling(row in prop::collection::vec(0.0f64..1.0, 2..40), k in 1usize..10, exclude in 0usize..40) {
        let exclude = exclude % row.len();
        let base = query::top_k(&row, exclude, k);
        let scaled: Vec<f64> = row.iter().map(|v| 3.0 * v.powi(3) + 0.5).collect();
        prop_assert_eq!(&base, &query::top_k(&scaled, exclude, k));
        prop_assert_eq!(base.len(), k.min(row.len() - 1));
        prop_assert!(!base.contains(&exclude));
        for pair in base.windows(2) {
            prop_assert!(row[pair[0]] > row[pair[1]] || (row[pair[0]] == row[pair[1]] && pair[0] < pair[1]));
        }
        // nothing left out beats the last kept entry
        if let Some(&last) = base.last() {
            for j in (0..row.len()).filter(|j| *j != exclude && !base.contains(j)) {
                prop_assert!(row[j] < row[last] || (row[j] == row[last] && j > last));
            }
        }
    }

    #[test]
    fn knn_is_consistent_with_the_similarity_row(seed in any::<u64>(), n in 3usize..25, k in 1usize..8) {
        let w = random_embedding(&mut rng(seed), n, 3.min(n), true);
        let v = vocab(n);
        let idx = Index::new(&w, &v).unwrap();
        let list = idx.knn("w0", k).unwrap();
        let row = idx.similarity_row(0).unwrap();
        let expected = query::top_k(&row, 0, k);
        let got: Vec<String> = list.neighbors.iter().map(|(w, _)| w.clone()).collect();
        let want: Vec<String> = expected.iter().map(|&j| format!("w{j}")).collect();
        prop_assert_eq!(got, want);
    }
}

#[test]
fn identity_embedding_breaks_ties_by_id() {
    let n = 6;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|k| f64::from(u8::from(i == k))).collect())
        .collect();
    let w = EmbeddingMatrix::from_rows(&rows).unwrap();
    let v = vocab(n);
    let idx = Index::new(&w, &v).unwrap();
    for i in 0..n {
        let list = idx.knn(&format!("w{i}"), 3).unwrap();
        let expected: Vec<String> = (0..n)
            .filter(|&j| j != i)
            .take(3)
            .map(|j| format!("w{j}"))
            .collect();
        let got: Vec<String> = list.neighbors.iter().map(|(w, _)| w.clone()).collect();
        assert_eq!(got, expected);
        assert!(list.neighbors.iter().all(|(_, s)| *s == 0.0));
    }
}

#[test]
fn block_model_neighbors_stay_in_block() {
    // two disjoint topics, three words each
    let w = EmbeddingMatrix::from_rows(&[
        vec![0.99, 0.01],
        vec![0.98, 0.02],
        vec![0.97, 0.03],
        vec![0.02, 0.98],
        vec![0.01, 0.99],
        vec![0.03, 0.97],
    ])
    .unwrap();
    let v = vocab(6);
    let idx = Index::new(&w, &v).unwrap();
    for i in 0..6 {
        let list = idx.knn(&format!("w{i}"), 1).unwrap();
        let j: usize = list.neighbors[0].0[1..].parse().unwrap();
        assert_eq!(i / 3, j / 3, "w{i} -> w{j}");
        let cos = idx.knn_with(&format!("w{i}"), 1, Metric::Cosine).unwrap();
        let j: usize = cos.neighbors[0].0[1..].parse().unwrap();
        assert_eq!(i / 3, j / 3);
    }
}

#[test]
fn unknown_words_get_suggestions() {
    let v = Vocabulary::from_entries(vec![
        ("planet".into(), 5),
        ("plane".into(), 4),
        ("orbit".into(), 3),
    ])
    .unwrap();
    let w = random_embedding(&mut rng(1), 3, 2, true);
    let idx = Index::new(&w, &v).unwrap();
    match idx.knn("planets", 2) {
        Err(dsembed::Error::UnknownWord { suggestions, .. }) => assert_eq!(suggestions[0], "planet"),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(idx.knn("planet", 0).unwrap_err().exit_code(), 2);
}
