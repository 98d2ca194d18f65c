//! Dense reference implementations and instance generators shared by the
//! integration tests. Everything here works on full `n × n` arrays and never
//! calls into the sparse solver kernels, so it can serve as an oracle.

#![allow(dead_code, clippy::needless_range_loop)]

use dsembed::corpus::SimilarityMatrix;
use dsembed::solver::EmbeddingMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random symmetric sparse similarity with zero diagonal, every row nonempty,
/// scaled to total mass `n`. A ring guarantees support; `density` adds extra
/// random pairs.
pub fn random_similarity(rng: &mut ChaCha8Rng, n: usize, density: f64) -> SimilarityMatrix {
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let ring = j == i + 1 || (i == 0 && j == n - 1);
            if ring || rng.random::<f64>() < density {
                triplets.push((i, j, rng.random_range(0.1..2.0)));
            }
        }
    }
    let total: f64 = 2.0 * triplets.iter().map(|t| t.2).sum::<f64>();
    let scale = n as f64 / total;
    for t in &mut triplets {
        t.2 *= scale;
    }
    SimilarityMatrix::from_upper_triplets(n, &triplets).unwrap()
}

/// Strictly positive `n × r` matrix, optionally row-normalized.
pub fn random_embedding(rng: &mut ChaCha8Rng, n: usize, r: usize, normalize: bool) -> EmbeddingMatrix {
    let data: Vec<f64> = (0..n * r).map(|_| rng.random_range(0.05..1.0)).collect();
    let mut w = EmbeddingMatrix::from_vec(n, r, data).unwrap();
    if normalize {
        w.normalize_rows();
    }
    w
}

pub fn to_dense(s: &SimilarityMatrix) -> Dense {
    let n = s.n();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        let (cols, vals) = s.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            d[i][j as usize] = v;
        }
    }
    d
}

pub fn w_dense(w: &EmbeddingMatrix) -> Dense {
    w.rows().map(|r| r.to_vec()).collect()
}

pub fn col_sums(w: &Dense) -> Vec<f64> {
    let r = w[0].len();
    (0..r).map(|k| w.iter().map(|row| row[k]).sum()).collect()
}

pub fn shat(w: &Dense) -> Dense {
    let n = w.len();
    let r = w[0].len();
    let s = col_sums(w);
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = (0..r).map(|k| w[i][k] * w[j][k] / s[k]).sum();
        }
    }
    out
}

pub fn z(s: &Dense, sh: &Dense) -> Dense {
    s.iter()
        .zip(sh)
        .map(|(sr, hr)| {
            sr.iter()
                .zip(hr)
                .map(|(&a, &b)| if a > 0.0 { a / b } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Generalized KL divergence summed over every cell, including the zeros of `S`.
pub fn divergence(s: &Dense, w: &Dense) -> f64 {
    let sh = shat(w);
    let mut d = 0.0;
    for (sr, hr) in s.iter().zip(&sh) {
        for (&a, &b) in sr.iter().zip(hr) {
            if a > 0.0 {
                d += a * (a / b).ln() - a;
            }
            d += b;
        }
    }
    d
}

/// `(∇⁻, ∇⁺)` with `∇⁺` expanded to `n × r`.
pub fn gradient_parts(s: &Dense, w: &Dense) -> (Dense, Dense) {
    let n = w.len();
    let r = w[0].len();
    let cs = col_sums(w);
    let zz = z(s, &shat(w));
    let mut zw = vec![vec![0.0; r]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..r {
                zw[i][k] += zz[i][j] * w[j][k];
            }
        }
    }
    let plus_k: Vec<f64> = (0..r)
        .map(|k| (0..n).map(|i| w[i][k] * zw[i][k]).sum::<f64>() / (cs[k] * cs[k]))
        .collect();
    let minus = zw
        .iter()
        .map(|row| row.iter().zip(&cs).map(|(v, c)| 2.0 * v / c).collect())
        .collect();
    let plus = vec![plus_k; n];
    (minus, plus)
}

/// Central finite differences of [`divergence`] with respect to each `W_ik`.
pub fn fd_gradient(s: &Dense, w: &Dense, h: f64) -> Dense {
    let mut g = vec![vec![0.0; w[0].len()]; w.len()];
    let mut wp = w.clone();
    for i in 0..w.len() {
        for k in 0..w[0].len() {
            let orig = w[i][k];
            wp[i][k] = orig + h;
            let up = divergence(s, &wp);
            wp[i][k] = orig - h;
            let down = divergence(s, &wp);
            wp[i][k] = orig;
            g[i][k] = (up - down) / (2.0 * h);
        }
    }
    g
}

/// Block-diagonal similarity: cliques of the given sizes with uniform weight,
/// no cross-block mass, each row summing to 1.
pub fn block_similarity(sizes: &[usize]) -> (SimilarityMatrix, Vec<usize>) {
    let n: usize = sizes.iter().sum();
    let mut labels = Vec::with_capacity(n);
    let mut triplets = Vec::new();
    let mut start = 0;
    for (b, &m) in sizes.iter().enumerate() {
        let v = 1.0 / (m - 1) as f64;
        for i in start..start + m {
            labels.push(b);
            for j in i + 1..start + m {
                triplets.push((i, j, v));
            }
        }
        start += m;
    }
    (
        SimilarityMatrix::from_upper_triplets(n, &triplets).unwrap(),
        labels,
    )
}

/// Whether every intra-block word outranks every cross-block word in row `i`.
pub fn block_separated(row: &[f64], labels: &[usize], i: usize) -> bool {
    let mut intra_min = f64::INFINITY;
    let mut cross_max = f64::NEG_INFINITY;
    for (j, &v) in row.iter().enumerate() {
        if j == i {
            continue;
        }
        if labels[j] == labels[i] {
            intra_min = intra_min.min(v);
        } else {
            cross_max = cross_max.max(v);
        }
    }
    intra_min > cross_max
}

pub fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Values of the dense matrix at the stored nonzeros of `s`, in CSR order.
pub fn on_support(s: &SimilarityMatrix, d: &Dense) -> Vec<f64> {
    let mut out = Vec::with_capacity(s.nnz());
    for i in 0..s.n() {
        let (cols, _) = s.row(i);
        out.extend(cols.iter().map(|&j| d[i][j as usize]));
    }
    out
}
