//! Controlled corpus experiments on CBOW word embeddings.
//!
//! The crate injects frequency- and noise-controlled pseudowords into a
//! text corpus, trains a CBOW model with negative sampling, and measures
//! how vector length and direction respond.

pub mod analysis;
pub mod cbow;
pub mod corpus;
pub mod pipeline;
pub mod pseudoword;
pub mod rng;
pub mod synth;
