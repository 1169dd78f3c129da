//! Compositional train/test splits for question-answer corpora.
//!
//! The pipeline reduces each question to its concept words ([`textnorm`]),
//! groups records that share a reduced question and an answer
//! ([`grouping`]), and assigns whole groups to train or test so that no group
//! straddles the split while train covers as many test concepts as possible
//! ([`splitter`]). [`analysis`] audits the result, [`priors`] measures how a
//! frequency-prior answerer degrades on it, and [`synth`] produces corpora
//! with controlled answer bias for experiments.

pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod grouping;
pub mod priors;
pub mod splitter;
pub mod synth;
pub mod textnorm;

pub use error::{Error, Result};
