//! Word embeddings on the probability simplex, learned by low-rank doubly
//! stochastic decomposition of a sparse co-occurrence similarity matrix.
//!
//! Pipeline: [`corpus`] turns text into a vocabulary and a normalized
//! symmetric similarity matrix, [`solver`] fits the row-stochastic factor
//! `W` with relaxed multiplicative updates, and [`query`] ranks neighbors by
//! the learned similarity `Ŝ_ij = P(word_j | word_i)`.

pub mod corpus;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod query;
pub mod solver;

pub use error::{Error, Result};
