//! Extractive multi-document summarization by concept coverage, with an
//! optional low-rank completion of the sentence-bigram co-occurrence matrix.

pub mod analysis;
pub mod cli;
pub mod completion;
pub mod concepts;
pub mod corpus;
pub mod error;
pub mod linalg;
pub mod rouge;
pub mod solver;
pub mod summarize;

pub use error::{Error, Result};
