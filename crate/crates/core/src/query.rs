//! Nearest-neighbor retrieval under `Ŝ_ij = P(word_j | word_i)`.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt::Write as _;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::solver::EmbeddingMatrix;

/// Similarity used to rank neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    /// The learned doubly stochastic similarity.
    #[default]
    Learned,
    /// Cosine over rows of `W`, for comparison only.
    Cosine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub query: String,
    /// `(word, similarity)`, descending; ties by ascending id.
    pub neighbors: Vec<(String, f64)>,
}

/// Read-only retrieval over a trained model.
///
/// `pruned` lists words that exist in the original vocabulary but were
/// dropped before training; they get a dedicated error instead of a
/// suggestion list.
#[derive(Debug, Clone)]
pub struct Index<'a> {
    w: &'a EmbeddingMatrix,
    vocab: &'a Vocabulary,
    inv_col_sums: Vec<f64>,
    pruned: HashSet<String>,
}

impl<'a> Index<'a> {
    pub fn new(w: &'a EmbeddingMatrix, vocab: &'a Vocabulary) -> Result<Self> {
        if w.n() != vocab.len() {
            return Err(Error::input(format!(
                "model has {} rows but vocabulary has {} words",
                w.n(),
                vocab.len()
            )));
        }
        let inv_col_sums = w.column_sums().iter().map(|s| 1.0 / s).collect();
        Ok(Index {
            w,
            vocab,
            inv_col_sums,
            pruned: HashSet::new(),
        })
    }

    pub fn with_pruned<I: IntoIterator<Item = String>>(mut self, pruned: I) -> Self {
        self.pruned.extend(pruned);
        self
    }

    pub fn embedding(&self) -> &EmbeddingMatrix {
        self.w
    }

    pub fn vocab(&self) -> &Vocabulary {
        self.vocab
    }

    pub fn resolve(&self, word: &str) -> Result<usize> {
        if let Some(id) = self.vocab.id_of(word) {
            return Ok(id);
        }
        if self.pruned.contains(word) {
            return Err(Error::NoEmbedding(word.to_owned()));
        }
        Err(Error::UnknownWord {
            word: word.to_owned(),
            suggestions: self.vocab.suggestions(word, 5),
        })
    }

    /// `Ŝ_i·`, computed in `O(n·r)`.
    pub fn similarity_row(&self, i: usize) -> Result<Vec<f64>> {
        check_id(self.w, i)?;
        Ok(learned_row(self.w, &self.inv_col_sums, i))
    }

    pub fn cosine_row(&self, i: usize) -> Result<Vec<f64>> {
        check_id(self.w, i)?;
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let qi = self.w.row(i);
        let qn = norm(qi);
        Ok(self
            .w
            .rows()
            .map(|row| row.iter().zip(qi).map(|(a, b)| a * b).sum::<f64>() / (qn * norm(row)))
            .collect())
    }

    pub fn knn(&self, word: &str, k: usize) -> Result<NeighborList> {
        self.knn_with(word, k, Metric::Learned)
    }

    pub fn knn_with(&self, word: &str, k: usize, metric: Metric) -> Result<NeighborList> {
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let id = self.resolve(word)?;
        let row = match metric {
            Metric::Learned => self.similarity_row(id)?,
            Metric::Cosine => self.cosine_row(id)?,
        };
        let neighbors = top_k(&row, id, k)
            .into_iter()
            .map(|j| (self.vocab.word(j).to_owned(), row[j]))
            .collect();
        Ok(NeighborList {
            query: word.to_owned(),
            neighbors,
        })
    }

    /// Neighbor lists for several queries; failures are collected rather than
    /// aborting the whole table.
    pub fn neighbor_table(
        &self,
        queries: &[String],
        k: usize,
        metric: Metric,
    ) -> (Vec<NeighborList>, Vec<Error>) {
        let mut rows = Vec::new();
        let mut errors = Vec::new();
        for q in queries {
            match self.knn_with(q, k, metric) {
                Ok(list) => rows.push(list),
                Err(e) => errors.push(e),
            }
        }
        (rows, errors)
    }
}

fn check_id(w: &EmbeddingMatrix, i: usize) -> Result<()> {
    if i >= w.n() {
        return Err(Error::input(format!(
            "word id {i} out of range for {} words",
            w.n()
        )));
    }
    Ok(())
}

// Ŝ_ij = Σ_k (W_ik / s_k) W_jk
fn learned_row(w: &EmbeddingMatrix, inv_col_sums: &[f64], i: usize) -> Vec<f64> {
    let scaled: Vec<f64> = w.row(i).iter().zip(inv_col_sums).map(|(a, b)| a * b).collect();
    w.rows()
        .map(|row| row.iter().zip(&scaled).map(|(a, b)| a * b).sum())
        .collect()
}

/// `Ŝ_i·` for a row-normalized `W`.
pub fn similarity_row(w: &EmbeddingMatrix, i: usize) -> Result<Vec<f64>> {
    check_id(w, i)?;
    let inv: Vec<f64> = w.column_sums().iter().map(|s| 1.0 / s).collect();
    Ok(learned_row(w, &inv, i))
}

/// Indices of the `k` largest entries of `row`, skipping `exclude`.
/// Descending by value, ties by ascending index. Only the ordering of values
/// matters, so any strictly increasing transform of `row` gives the same answer.
pub fn top_k(row: &[f64], exclude: usize, k: usize) -> Vec<usize> {
    let cmp = |a: &usize, b: &usize| {
        row[*b]
            .partial_cmp(&row[*a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    };
    let mut ids: Vec<usize> = (0..row.len()).filter(|&j| j != exclude).collect();
    if k < ids.len() {
        ids.select_nth_unstable_by(k, cmp);
        ids.truncate(k);
    }
    ids.sort_unstable_by(cmp);
    ids
}

/// Render `word<TAB>n1, n2, ...`, one line per query.
pub fn format_table(rows: &[NeighborList], with_scores: bool) -> String {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .neighbors
            .iter()
            .map(|(w, s)| {
                if with_scores {
                    format!("{w} ({s:.4})")
                } else {
                    w.clone()
                }
            })
            .collect();
        let _ = writeln!(out, "{}\t{}", row.query, cells.join(", "));
    }
    out
}
