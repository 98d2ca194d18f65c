//! Corpus statistics: tokenization, vocabulary, windowed co-occurrence
//! counts and the normalized sparse similarity matrix fed to the solver.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Split text into maximal alphanumeric runs.
///
/// Case is folded before splitting, since folding can emit combining marks
/// (`İ` becomes `i` + U+0307) that are not alphanumeric themselves.
pub fn tokenize(text: &str, lowercase: bool) -> Vec<String> {
    let split = |t: &str| {
        t.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_owned)
            .collect()
    };
    if lowercase {
        split(&text.to_lowercase())
    } else {
        split(text)
    }
}

/// Like [`tokenize`] but validates UTF-8 first, reporting the offending byte offset.
pub fn tokenize_bytes(bytes: &[u8], lowercase: bool) -> Result<Vec<String>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Encoding {
        offset: e.valid_up_to(),
    })?;
    Ok(tokenize(text, lowercase))
}

/// Word/id mapping. Ids are dense and follow non-increasing frequency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Build from `(word, count)` pairs already in id order.
    ///
    /// Fails on duplicates or if counts increase along the id order.
    pub fn from_entries(entries: Vec<(String, u64)>) -> Result<Self> {
        let mut words = Vec::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        for (id, (word, count)) in entries.into_iter().enumerate() {
            if let Some(&prev) = counts.last() {
                if count > prev {
                    return Err(Error::input(format!(
                        "vocabulary not in frequency order at id {id} ({word:?})"
                    )));
                }
            }
            if index.insert(word.clone(), id as u32).is_some() {
                return Err(Error::input(format!("duplicate vocabulary word {word:?}")));
            }
            words.push(word);
            counts.push(count);
        }
        Ok(Vocabulary { words, counts, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn id_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).map(|&i| i as usize)
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn count_of(&self, word: &str) -> Option<u64> {
        self.id_of(word).map(|i| self.counts[i])
    }

    /// Keep only the given ids (ascending), re-densifying the id space.
    pub fn retain_ids(&self, keep: &[usize]) -> Vocabulary {
        let entries = keep
            .iter()
            .map(|&i| (self.words[i].clone(), self.counts[i]))
            .collect();
        // order and uniqueness are inherited from self
        Vocabulary::from_entries(entries).expect("subset of a valid vocabulary")
    }

    /// Up to `limit` vocabulary words closest to `word` by edit distance.
    pub fn suggestions(&self, word: &str, limit: usize) -> Vec<String> {
        let mut scored: Vec<(usize, usize)> = self
            .words
            .iter()
            .enumerate()
            .map(|(id, w)| (strsim::levenshtein(word, w), id))
            .collect();
        scored.sort_unstable();
        scored
            .into_iter()
            .take(limit)
            .map(|(_, id)| self.words[id].clone())
            .collect()
    }
}

/// Count tokens and keep the `max_vocab` most frequent.
///
/// Frequency ties are broken by first appearance in the stream.
pub fn build_vocab<S: AsRef<str>>(tokens: &[S], max_vocab: usize) -> Result<Vocabulary> {
    if max_vocab == 0 {
        return Err(Error::Config("max_vocab must be at least 1".into()));
    }
    if tokens.is_empty() {
        return Err(Error::input(
            "cannot build a vocabulary from an empty token stream",
        ));
    }
    // word -> (count, first position)
    let mut seen: HashMap<&str, (u64, usize)> = HashMap::new();
    for (pos, tok) in tokens.iter().enumerate() {
        seen.entry(tok.as_ref()).or_insert((0, pos)).0 += 1;
    }
    let mut ranked: Vec<(&str, u64, usize)> = seen.into_iter().map(|(w, (c, first))| (w, c, first)).collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    ranked.truncate(max_vocab);
    Vocabulary::from_entries(ranked.into_iter().map(|(w, c, _)| (w.to_owned(), c)).collect())
}

/// Symmetric pair counts keyed by `(lo, hi)` with `lo < hi`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CooccurrenceCounts {
    entries: BTreeMap<(u32, u32), f64>,
}

impl CooccurrenceCounts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add weight to the unordered pair `{i, j}`. Diagonal pairs and
    /// non-positive weights are ignored.
    pub fn add(&mut self, i: u32, j: u32, weight: f64) {
        if i == j || weight <= 0.0 {
            return;
        }
        let key = if i < j { (i, j) } else { (j, i) };
        *self.entries.entry(key).or_insert(0.0) += weight;
    }

    pub fn get(&self, i: u32, j: u32) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.entries.get(&key).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Iterate `((lo, hi), count)` in key order.
    pub fn iter(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    fn merge(&mut self, other: HashMap<(u32, u32), f64>) {
        for (k, v) in other {
            *self.entries.entry(k).or_insert(0.0) += v;
        }
    }
}

fn token_ids<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> Vec<Option<u32>> {
    tokens
        .iter()
        .map(|t| vocab.id_of(t.as_ref()).map(|i| i as u32))
        .collect()
}

fn count_range(ids: &[Option<u32>], start: usize, end: usize, window: usize) -> HashMap<(u32, u32), f64> {
    let mut local = HashMap::new();
    for t in start..end {
        let Some(a) = ids[t] else { continue };
        let stop = (t + window).min(ids.len() - 1);
        for b in ids[t + 1..=stop].iter().flatten() {
            if *b != a {
                let key = if a < *b { (a, *b) } else { (*b, a) };
                *local.entry(key).or_insert(0.0) += 1.0;
            }
        }
    }
    local
}

/// Uniform-weight windowed co-occurrence counting.
///
/// Every in-vocabulary position pairs with each in-vocabulary token up to
/// `window` positions ahead. OOV tokens still occupy positions.
pub fn count_cooccurrences<S: AsRef<str>>(
    tokens: &[S],
    vocab: &Vocabulary,
    window: usize,
) -> Result<CooccurrenceCounts> {
    count_cooccurrences_sharded(tokens, vocab, window, 1)
}

/// Sharded variant of [`count_cooccurrences`]. Each shard owns a range of
/// starting positions and reads up to `window` tokens past its end. Counts
/// are integral, so the merged result does not depend on `shards`.
pub fn count_cooccurrences_sharded<S: AsRef<str>>(
    tokens: &[S],
    vocab: &Vocabulary,
    window: usize,
    shards: usize,
) -> Result<CooccurrenceCounts> {
    if window == 0 {
        return Err(Error::Config("window must be at least 1".into()));
    }
    let ids = token_ids(tokens, vocab);
    let mut counts = CooccurrenceCounts::new();
    if ids.is_empty() {
        return Ok(counts);
    }
    let shards = shards.clamp(1, ids.len());
    let chunk = ids.len().div_ceil(shards);
    let partials: Vec<_> = if shards == 1 {
        vec![count_range(&ids, 0, ids.len(), window)]
    } else {
        (0..shards)
            .into_par_iter()
            .map(|s| {
                let start = s * chunk;
                let end = ((s + 1) * chunk).min(ids.len());
                count_range(&ids, start, end.max(start), window)
            })
            .collect()
    };
    for p in partials {
        counts.merge(p);
    }
    Ok(counts)
}

/// Sparse symmetric nonnegative matrix in CSR form. Both `(i, j)` and
/// `(j, i)` are stored; columns within a row are sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    diag: usize,
}

impl SimilarityMatrix {
    /// Build from upper-triangle entries `(i, j, value)` with `i < j`.
    ///
    /// Entries with `i > j` are accepted and mirrored; diagonal entries,
    /// non-positive or non-finite values and duplicate pairs are rejected.
    pub fn from_upper_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        Self::build(n, triplets, false)
    }

    /// Like [`from_upper_triplets`](Self::from_upper_triplets) but also
    /// accepts diagonal entries, for similarity matrices defined outside the
    /// corpus pipeline.
    pub fn from_triplets_with_diagonal(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        Self::build(n, triplets, true)
    }

    fn build(n: usize, triplets: &[(usize, usize, f64)], allow_diagonal: bool) -> Result<Self> {
        let mut per_row: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        let mut diag = 0;
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::input(format!(
                    "entry ({i}, {j}) out of range for dimension {n}"
                )));
            }
            if i == j && !allow_diagonal {
                return Err(Error::input(format!("diagonal entry ({i}, {i}) not allowed")));
            }
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::input(format!(
                    "entry ({i}, {j}) has non-positive or non-finite value {v}"
                )));
            }
            per_row[i].push((j as u32, v));
            if i == j {
                diag += 1;
            } else {
                per_row[j].push((i as u32, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (i, mut row) in per_row.into_iter().enumerate() {
            row.sort_unstable_by_key(|e| e.0);
            if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::input(format!("duplicate entry ({i}, {})", w[0].0)));
            }
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(SimilarityMatrix {
            n,
            row_ptr,
            cols,
            vals,
            diag,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries, counting both triangles.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Number of stored entries with `i ≤ j`.
    pub fn upper_nnz(&self) -> usize {
        (self.vals.len() - self.diag) / 2 + self.diag
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[span.clone()], &self.vals[span])
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn cols(&self) -> &[u32] {
        &self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&(j as u32)) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// `Σ_ij S_ij` over both triangles.
    pub fn total(&self) -> f64 {
        self.vals.iter().sum()
    }

    /// Entries `(i, j, value)` with `i ≤ j`, row-major.
    pub fn iter_upper(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter()
                .zip(vals)
                .filter(move |(&c, _)| (c as usize) >= i)
                .map(move |(&c, &v)| (i, c as usize, v))
        })
    }

    /// Ids whose row has no stored entries.
    pub fn empty_rows(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| self.row_ptr[i] == self.row_ptr[i + 1])
            .collect()
    }

    /// Drop empty rows and renumber the rest densely. Returns the compacted
    /// matrix and the original id of each retained row.
    pub fn compact(&self) -> (SimilarityMatrix, Vec<usize>) {
        let kept: Vec<usize> = (0..self.n)
            .filter(|&i| self.row_ptr[i] < self.row_ptr[i + 1])
            .collect();
        let mut remap = vec![u32::MAX; self.n];
        for (new, &old) in kept.iter().enumerate() {
            remap[old] = new as u32;
        }
        let mut row_ptr = Vec::with_capacity(kept.len() + 1);
        row_ptr.push(0);
        let mut cols = Vec::with_capacity(self.cols.len());
        for &old in &kept {
            let (c, _) = self.row(old);
            // remap is monotone, so sorted order is preserved
            cols.extend(c.iter().map(|&j| remap[j as usize]));
            row_ptr.push(cols.len());
        }
        let m = SimilarityMatrix {
            n: kept.len(),
            row_ptr,
            cols,
            vals: self.vals.clone(),
            diag: self.diag,
        };
        (m, kept)
    }
}

/// Scale co-occurrence counts into a symmetric similarity matrix whose total
/// mass equals the number of ids with nonzero co-occurrence.
///
/// Ids without any co-occurrence keep an empty row; see
/// [`SimilarityMatrix::empty_rows`] and [`SimilarityMatrix::compact`].
pub fn build_similarity(counts: &CooccurrenceCounts, n: usize) -> Result<SimilarityMatrix> {
    if counts.is_empty() {
        return Err(Error::input("no co-occurrences: every row is empty"));
    }
    let mut has_mass = vec![false; n];
    for ((i, j), _) in counts.iter() {
        if j as usize >= n {
            return Err(Error::input(format!(
                "co-occurrence id {j} out of range for dimension {n}"
            )));
        }
        has_mass[i as usize] = true;
        has_mass[j as usize] = true;
    }
    let retained = has_mass.iter().filter(|&&b| b).count();
    let scale = retained as f64 / (2.0 * counts.total());
    let triplets: Vec<_> = counts
        .iter()
        .map(|((i, j), c)| (i as usize, j as usize, c * scale))
        .collect();
    SimilarityMatrix::from_upper_triplets(n, &triplets)
}
