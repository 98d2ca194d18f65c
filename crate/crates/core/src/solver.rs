//! Relaxed multiplicative updates for the simplex-constrained factorization
//! `Ŝ_ij = Σ_k W_ik W_jk / s_k`, `s_k = Σ_v W_vk`, minimizing the
//! generalized KL divergence `D(S‖Ŝ)` over row-stochastic `W`.
//!
//! Everything is evaluated on the sparsity pattern of `S`; the dense `Ŝ` is
//! never formed. Per iteration the cost is `O(nnz·r + n·r)`.

// Checks like `!(x > 0.0)` are written so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::SimilarityMatrix;
use crate::error::{Error, Result};

/// Values of `Ŝ` at nonzeros of `S` below this are treated as collapse.
pub const SHAT_FLOOR: f64 = 1e-300;

/// Dense row-major `n × r` matrix; row `i` holds `P(topic_k | word_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n: usize,
    r: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn from_vec(n: usize, r: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * r {
            return Err(Error::input(format!(
                "embedding data has {} values, expected {n}×{r}",
                data.len()
            )));
        }
        Ok(EmbeddingMatrix { n, r, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != r) {
            return Err(Error::input("ragged embedding rows"));
        }
        Self::from_vec(rows.len(), r, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.r..(i + 1) * self.r]
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.r + k]
    }

    pub fn set(&mut self, i: usize, k: usize, v: f64) {
        self.data[i * self.r + k] = v;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.r.max(1))
    }

    /// `s_k = Σ_v W_vk`.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.r];
        for row in self.rows() {
            for (acc, &w) in s.iter_mut().zip(row) {
                *acc += w;
            }
        }
        s
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max_i |Σ_k W_ik − 1|`.
    pub fn max_row_sum_error(&self) -> f64 {
        self.rows()
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Scale every row to sum to one.
    pub fn normalize_rows(&mut self) {
        for row in self.data.chunks_exact_mut(self.r.max(1)) {
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|w| *w /= total);
        }
    }

    /// Max-norm distance to another matrix of the same shape.
    pub fn max_abs_diff(&self, other: &EmbeddingMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Copy of the matrix with rows reordered: row `i` of the result is row
    /// `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> EmbeddingMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for &src in perm {
            data.extend_from_slice(self.row(src));
        }
        EmbeddingMatrix {
            n: self.n,
            r: self.r,
            data,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Number of topics (embedding dimension).
    pub rank: usize,
    pub max_iters: usize,
    /// Stop when `max_ik |W_new − W| < conv_tol`.
    pub conv_tol: f64,
    /// Row-sum tolerance expected at exit, before the final renormalization.
    pub simplex_tol: f64,
    pub seed: u64,
    /// Record the objective every this many iterations (the last one is always recorded).
    pub objective_every: usize,
    /// Worker threads; 1 forces sequential, bit-reproducible reductions.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            rank: 200,
            max_iters: 500,
            conv_tol: 1e-6,
            simplex_tol: 1e-3,
            seed: 0,
            objective_every: 1,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::Config("rank must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.conv_tol > 0.0 && self.simplex_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.objective_every == 0 {
            return Err(Error::Config("objective_every must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }
}

/// Random positive start: i.i.d. uniform on `[0.5, 1.5)`, rows scaled to sum 1.
pub fn initialize(n: usize, r: usize, seed: u64) -> Result<EmbeddingMatrix> {
    if r == 0 {
        return Err(Error::Config("rank must be at least 1".into()));
    }
    if r > n {
        return Err(Error::Config(format!("rank {r} exceeds vocabulary size {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * r).map(|_| rng.random_range(0.5..1.5)).collect();
    let mut w = EmbeddingMatrix { n, r, data };
    w.normalize_rows();
    Ok(w)
}

/// The two nonnegative parts of the gradient of the `−S log Ŝ` term.
///
/// `∇⁺_ik` does not depend on `i` and is stored once per topic.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientParts {
    r: usize,
    /// `∇⁻_ik = 2 (ZW)_ik / s_k`, row-major `n × r`.
    pub minus: Vec<f64>,
    /// `∇⁺_k = (WᵀZW)_kk / s_k²`.
    pub plus: Vec<f64>,
    /// `s_k = Σ_v W_vk`.
    pub col_sums: Vec<f64>,
}

impl GradientParts {
    pub fn minus(&self, i: usize, k: usize) -> f64 {
        self.minus[i * self.r + k]
    }

    pub fn plus(&self, _i: usize, k: usize) -> f64 {
        self.plus[k]
    }

    pub fn minus_row(&self, i: usize) -> &[f64] {
        &self.minus[i * self.r..(i + 1) * self.r]
    }
}

/// Per-row coefficients of the relaxed constraint handling.
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    /// `a_i = Σ_l W_il / ∇⁺_il`
    pub a: Vec<f64>,
    /// `b_i = Σ_l W_il ∇⁻_il / ∇⁺_il`
    pub b: Vec<f64>,
    /// `λ_i = (b_i − 1) / a_i`
    pub lambda: Vec<f64>,
}

fn check_shapes(s: &SimilarityMatrix, w: &EmbeddingMatrix) -> Result<()> {
    if s.n() != w.n() {
        return Err(Error::input(format!(
            "similarity matrix has {} rows but embedding has {}",
            s.n(),
            w.n()
        )));
    }
    Ok(())
}

fn check_col_sums(col_sums: &[f64]) -> Result<()> {
    if let Some(k) = col_sums.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::collapse(format!(
            "topic {k} has column sum {}",
            col_sums[k]
        )));
    }
    Ok(())
}

/// Split a per-nonzero buffer into contiguous row blocks.
fn nz_blocks<'a>(
    row_ptr: &[usize],
    mut buf: &'a mut [f64],
    blocks: usize,
) -> Vec<(Range<usize>, &'a mut [f64])> {
    let n = row_ptr.len() - 1;
    let step = n.div_ceil(blocks.max(1)).max(1);
    let mut out = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + step).min(n);
        let len = row_ptr[end] - row_ptr[start];
        let (head, tail) = std::mem::take(&mut buf).split_at_mut(len);
        out.push((start..end, head));
        buf = tail;
        start = end;
    }
    out
}

/// Run `f(row, values_of_row)` over every row of a per-nonzero buffer,
/// optionally in parallel over row blocks.
fn for_each_nz_row<F>(row_ptr: &[usize], buf: &mut [f64], parallel: bool, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let run = |rows: Range<usize>, block: &mut [f64]| {
        let base = row_ptr[rows.start];
        for i in rows {
            f(i, &mut block[row_ptr[i] - base..row_ptr[i + 1] - base]);
        }
    };
    if parallel {
        let blocks = nz_blocks(row_ptr, buf, rayon::current_num_threads() * 4);
        blocks.into_par_iter().for_each(|(rows, block)| run(rows, block));
    } else {
        run(0..row_ptr.len() - 1, buf);
    }
}

fn shat_into(s: &SimilarityMatrix, w: &EmbeddingMatrix, col_sums: &[f64], out: &mut [f64], parallel: bool) {
    let r = w.rank();
    let inv: Vec<f64> = col_sums.iter().map(|v| 1.0 / v).collect();
    for_each_nz_row(s.row_ptr(), out, parallel, |i, vals| {
        let wi: Vec<f64> = w.row(i).iter().zip(&inv).map(|(a, b)| a * b).collect();
        let (cols, _) = s.row(i);
        for (v, &j) in vals.iter_mut().zip(cols) {
            let wj = &w.data[j as usize * r..(j as usize + 1) * r];
            *v = wi.iter().zip(wj).map(|(a, b)| a * b).sum();
        }
    });
}

/// `Ŝ_ij` at every stored nonzero of `S`, in CSR order.
pub fn compute_shat_at(s: &SimilarityMatrix, w: &EmbeddingMatrix) -> Result<Vec<f64>> {
    check_shapes(s, w)?;
    let col_sums = w.column_sums();
    check_col_sums(&col_sums)?;
    let mut out = vec![0.0; s.nnz()];
    shat_into(s, w, &col_sums, &mut out, false);
    Ok(out)
}

fn z_into(s_vals: &[f64], shat: &[f64], out: &mut [f64]) -> Result<()> {
    for (idx, ((z, &sv), &sh)) in out.iter_mut().zip(s_vals).zip(shat).enumerate() {
        if !(sh >= SHAT_FLOOR) {
            return Err(Error::collapse(format!(
                "Ŝ = {sh:e} at stored nonzero {idx} is below the floor {SHAT_FLOOR:e}"
            )));
        }
        *z = sv / sh;
    }
    Ok(())
}

/// `Z_ij = S_ij / Ŝ_ij` at stored nonzeros; zero elsewhere by convention.
pub fn compute_z(s: &SimilarityMatrix, shat: &[f64]) -> Result<Vec<f64>> {
    if shat.len() != s.nnz() {
        return Err(Error::input("Ŝ buffer does not match the nonzero count of S"));
    }
    let mut out = vec![0.0; s.nnz()];
    z_into(s.values(), shat, &mut out)?;
    Ok(out)
}

fn zw_into(s: &SimilarityMatrix, z: &[f64], w: &EmbeddingMatrix, out: &mut [f64], parallel: bool) {
    let r = w.rank();
    let row_ptr = s.row_ptr();
    let cols = s.cols();
    let body = |i: usize, acc: &mut [f64]| {
        acc.iter_mut().for_each(|v| *v = 0.0);
        for p in row_ptr[i]..row_ptr[i + 1] {
            let j = cols[p] as usize;
            let zij = z[p];
            for (a, &wj) in acc.iter_mut().zip(&w.data[j * r..(j + 1) * r]) {
                *a += zij * wj;
            }
        }
    };
    if parallel {
        out.par_chunks_mut(r)
            .enumerate()
            .for_each(|(i, acc)| body(i, acc));
    } else {
        out.chunks_mut(r).enumerate().for_each(|(i, acc)| body(i, acc));
    }
}

/// Turn `ZW` (stored in `minus`) into both gradient parts in place.
fn finish_gradient(w: &EmbeddingMatrix, zw_then_minus: &mut [f64], col_sums: &[f64], plus: &mut [f64]) {
    let r = w.rank();
    plus.iter_mut().for_each(|v| *v = 0.0);
    for (wrow, zrow) in w.rows().zip(zw_then_minus.chunks(r)) {
        for k in 0..r {
            plus[k] += wrow[k] * zrow[k];
        }
    }
    for (p, &sk) in plus.iter_mut().zip(col_sums) {
        *p /= sk * sk;
    }
    for zrow in zw_then_minus.chunks_mut(r) {
        for (v, &sk) in zrow.iter_mut().zip(col_sums) {
            *v = 2.0 * *v / sk;
        }
    }
}

fn check_support(s: &SimilarityMatrix) -> Result<()> {
    if let Some(&i) = s.empty_rows().first() {
        return Err(Error::input(format!(
            "row {i} of the similarity matrix has no nonzeros; prune isolated words before training"
        )));
    }
    Ok(())
}

/// `∇⁻ = 2 (ZW) / s` and `∇⁺_k = (WᵀZW)_kk / s_k²`, with `Z` given on
/// the support of `S`.
pub fn gradient_parts(s: &SimilarityMatrix, z: &[f64], w: &EmbeddingMatrix) -> Result<GradientParts> {
    check_shapes(s, w)?;
    check_support(s)?;
    if z.len() != s.nnz() {
        return Err(Error::input("Z buffer does not match the nonzero count of S"));
    }
    let col_sums = w.column_sums();
    check_col_sums(&col_sums)?;
    let r = w.rank();
    let mut minus = vec![0.0; w.n() * r];
    let mut plus = vec![0.0; r];
    zw_into(s, z, w, &mut minus, false);
    finish_gradient(w, &mut minus, &col_sums, &mut plus);
    Ok(GradientParts {
        r,
        minus,
        plus,
        col_sums,
    })
}

fn multipliers_into(w: &EmbeddingMatrix, g: &GradientParts, m: &mut Multipliers) -> Result<()> {
    if let Some(k) = g.plus.iter().position(|&p| !(p > 0.0)) {
        return Err(Error::collapse(format!("∇⁺ vanished for topic {k}")));
    }
    for (i, wrow) in w.rows().enumerate() {
        let mut a = 0.0;
        let mut b = 0.0;
        for ((&wil, &gm), &gp) in wrow.iter().zip(g.minus_row(i)).zip(&g.plus) {
            a += wil / gp;
            b += wil * gm / gp;
        }
        m.a[i] = a;
        m.b[i] = b;
        m.lambda[i] = (b - 1.0) / a;
    }
    Ok(())
}

/// `a_i`, `b_i` and `λ_i = (b_i − 1)/a_i`.
pub fn lagrange_coefficients(w: &EmbeddingMatrix, g: &GradientParts) -> Result<Multipliers> {
    let n = w.n();
    let mut m = Multipliers {
        a: vec![0.0; n],
        b: vec![0.0; n],
        lambda: vec![0.0; n],
    };
    multipliers_into(w, g, &mut m)?;
    Ok(m)
}

fn update_into(w: &EmbeddingMatrix, g: &GradientParts, m: &Multipliers, out: &mut EmbeddingMatrix) -> f64 {
    let r = w.rank();
    let mut max_delta: f64 = 0.0;
    for i in 0..w.n() {
        let (a, b) = (m.a[i], m.b[i]);
        for k in 0..r {
            let old = w.data[i * r + k];
            let new = old * (g.minus[i * r + k] * a + 1.0) / (g.plus[k] * a + b);
            out.data[i * r + k] = new;
            max_delta = max_delta.max((new - old).abs());
        }
    }
    max_delta
}

/// One multiplicative step: `W_ik ← W_ik (∇⁻_ik a_i + 1) / (∇⁺_ik a_i + b_i)`.
pub fn update(w: &EmbeddingMatrix, g: &GradientParts, m: &Multipliers) -> EmbeddingMatrix {
    let mut out = w.clone();
    update_into(w, g, m, &mut out);
    out
}

fn divergence_terms(s_vals: &[f64], shat: &[f64]) -> f64 {
    s_vals
        .iter()
        .zip(shat)
        .map(|(&sv, &sh)| sv * (sv / sh).ln() - sv)
        .sum()
}

/// `D(S‖Ŝ) = Σ_ij (S_ij log(S_ij/Ŝ_ij) − S_ij + Ŝ_ij)`, using `Σ_ij Ŝ_ij = Σ_k s_k`.
pub fn objective(s: &SimilarityMatrix, w: &EmbeddingMatrix) -> Result<f64> {
    let shat = compute_shat_at(s, w)?;
    if let Some(p) = shat.iter().position(|&v| !(v >= SHAT_FLOOR)) {
        return Err(Error::collapse(format!(
            "Ŝ = {:e} at stored nonzero {p} is below the floor",
            shat[p]
        )));
    }
    Ok(divergence_terms(s.values(), &shat) + w.column_sums().iter().sum::<f64>())
}

/// Lagrangian of the row-sum constraints, `L(W, λ) = D(S‖Ŝ) + Σ_i (λ_i − 1)(Σ_k W_ik − 1)`.
///
/// `λ` is the multiplier produced by [`lagrange_coefficients`], which is derived
/// from the gradient of the `−S log Ŝ` part alone. The `Σ Ŝ = Σ_k s_k` mass
/// term of `D` adds a constant `+1` to every gradient entry, so measured
/// against `D` the multiplier of row `i` is `λ_i − 1`. The multiplicative
/// update never increases this quantity for fixed `λ`.
pub fn lagrangian(s: &SimilarityMatrix, w: &EmbeddingMatrix, lambda: &[f64]) -> Result<f64> {
    if lambda.len() != w.n() {
        return Err(Error::input("one multiplier per row is required"));
    }
    let d = objective(s, w)?;
    let penalty: f64 = w
        .rows()
        .zip(lambda)
        .map(|(row, l)| (l - 1.0) * (row.iter().sum::<f64>() - 1.0))
        .sum();
    Ok(d + penalty)
}

/// `D(S‖Ŝ)` at `W` with its rows scaled onto the simplex.
///
/// The relaxed updates let rows leave the simplex, where `D` can dip below
/// its constrained values and climb back as rows return; evaluated at the
/// normalized iterate it tracks the embedding training would emit.
pub fn simplex_objective(s: &SimilarityMatrix, w: &EmbeddingMatrix) -> Result<f64> {
    let mut normalized = w.clone();
    normalized.normalize_rows();
    objective(s, &normalized)
}

/// Reusable work buffers for one solver iteration.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub shat_nz: Vec<f64>,
    pub z_nz: Vec<f64>,
    pub grad: GradientParts,
    pub multipliers: Multipliers,
    scratch: Option<EmbeddingMatrix>,
}

impl SolverState {
    pub fn new(s: &SimilarityMatrix, r: usize) -> Self {
        let n = s.n();
        SolverState {
            shat_nz: vec![0.0; s.nnz()],
            z_nz: vec![0.0; s.nnz()],
            grad: GradientParts {
                r,
                minus: vec![0.0; n * r],
                plus: vec![0.0; r],
                col_sums: vec![0.0; r],
            },
            multipliers: Multipliers {
                a: vec![0.0; n],
                b: vec![0.0; n],
                lambda: vec![0.0; n],
            },
            scratch: None,
        }
    }

    /// [`simplex_objective`] reusing the state's buffers. Clobbers `shat_nz`.
    pub fn simplex_objective(
        &mut self,
        s: &SimilarityMatrix,
        w: &EmbeddingMatrix,
        parallel: bool,
    ) -> Result<f64> {
        let normalized = self.scratch.get_or_insert_with(|| w.clone());
        normalized.data.copy_from_slice(&w.data);
        normalized.normalize_rows();
        let col_sums = normalized.column_sums();
        check_col_sums(&col_sums)?;
        shat_into(s, normalized, &col_sums, &mut self.shat_nz, parallel);
        if let Some(p) = self.shat_nz.iter().position(|&v| !(v >= SHAT_FLOOR)) {
            return Err(Error::collapse(format!(
                "Ŝ = {:e} at stored nonzero {p} is below the floor",
                self.shat_nz[p]
            )));
        }
        Ok(divergence_terms(s.values(), &self.shat_nz) + col_sums.iter().sum::<f64>())
    }

    /// Evaluate `Ŝ`, `Z`, `∇±` and the multipliers at `w`. Returns `D(S‖Ŝ)` at `w`.
    pub fn evaluate(&mut self, s: &SimilarityMatrix, w: &EmbeddingMatrix, parallel: bool) -> Result<f64> {
        self.grad.col_sums = w.column_sums();
        check_col_sums(&self.grad.col_sums)?;
        shat_into(s, w, &self.grad.col_sums, &mut self.shat_nz, parallel);
        z_into(s.values(), &self.shat_nz, &mut self.z_nz)?;
        let div = if parallel {
            s.values()
                .par_iter()
                .zip(self.shat_nz.par_iter())
                .map(|(&sv, &sh)| sv * (sv / sh).ln() - sv)
                .sum::<f64>()
        } else {
            divergence_terms(s.values(), &self.shat_nz)
        };
        zw_into(s, &self.z_nz, w, &mut self.grad.minus, parallel);
        finish_gradient(w, &mut self.grad.minus, &self.grad.col_sums, &mut self.grad.plus);
        multipliers_into(w, &self.grad, &mut self.multipliers)?;
        Ok(div + self.grad.col_sums.iter().sum::<f64>())
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Number of updates applied.
    pub iter: usize,
    /// `D(S‖Ŝ)` after `iter` updates, at the row-normalized iterate.
    pub objective: f64,
    pub max_row_sum_err: f64,
    /// Max-norm change of the last update.
    pub max_delta: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Final embedding, rows renormalized to the simplex.
    pub embedding: EmbeddingMatrix,
    pub trace: Vec<TraceRecord>,
    pub iterations: usize,
    pub converged: bool,
    /// `max_i |Σ_k W_ik − 1|` before the final renormalization.
    pub residual: f64,
}

impl TrainOutcome {
    pub fn within_simplex_tol(&self, config: &TrainConfig) -> bool {
        self.residual <= config.simplex_tol
    }
}

/// Train from a seeded random start.
pub fn train(s: &SimilarityMatrix, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let w0 = initialize(s.n(), config.rank, config.seed)?;
    train_from(s, w0, config)
}

/// Train from a given strictly positive start.
pub fn train_from(s: &SimilarityMatrix, w0: EmbeddingMatrix, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    check_shapes(s, &w0)?;
    check_support(s)?;
    if w0.rank() != config.rank {
        return Err(Error::Config(format!(
            "initial embedding has rank {} but config asks for {}",
            w0.rank(),
            config.rank
        )));
    }
    if !(w0.min_entry() > 0.0) {
        return Err(Error::input("initial embedding must be strictly positive"));
    }
    if config.threads == 1 {
        run(s, w0, config, false)
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
        pool.install(|| run(s, w0, config, true))
    }
}

fn run(
    s: &SimilarityMatrix,
    mut w: EmbeddingMatrix,
    config: &TrainConfig,
    parallel: bool,
) -> Result<TrainOutcome> {
    let mut state = SolverState::new(s, config.rank);
    let mut next = w.clone();
    let mut trace = Vec::new();
    let mut last_delta = f64::NAN;
    let mut converged = false;
    let mut iterations = 0;

    let tag = |e: Error, iter: usize| match e {
        Error::Collapse { message, .. } => Error::Collapse {
            message,
            iteration: Some(iter),
        },
        other => other,
    };

    loop {
        let raw = state.evaluate(s, &w, parallel).map_err(|e| tag(e, iterations))?;
        if !raw.is_finite() {
            return Err(tag(Error::collapse(format!("objective is {raw}")), iterations));
        }
        if iterations > 0
            && (iterations % config.objective_every == 0 || converged || iterations == config.max_iters)
        {
            let obj = state
                .simplex_objective(s, &w, parallel)
                .map_err(|e| tag(e, iterations))?;
            trace.push(TraceRecord {
                iter: iterations,
                objective: obj,
                max_row_sum_err: w.max_row_sum_error(),
                max_delta: last_delta,
            });
        }
        if converged || iterations == config.max_iters {
            break;
        }
        last_delta = update_into(&w, &state.grad, &state.multipliers, &mut next);
        iterations += 1;
        if !last_delta.is_finite() || !(next.min_entry() > 0.0) {
            return Err(tag(
                Error::collapse("embedding left the positive orthant or became non-finite"),
                iterations,
            ));
        }
        std::mem::swap(&mut w, &mut next);
        converged = last_delta < config.conv_tol;
        log::debug!("iter {iterations}: D {raw:.10e}, max delta {last_delta:.3e}");
    }

    let residual = w.max_row_sum_error();
    if converged && residual > config.simplex_tol {
        log::warn!(
            "converged with row-sum residual {residual:.3e} above simplex_tol {:.1e}",
            config.simplex_tol
        );
    }
    w.normalize_rows();
    Ok(TrainOutcome {
        embedding: w,
        trace,
        iterations,
        converged,
        residual,
    })
}
