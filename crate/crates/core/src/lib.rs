//! Weak-supervision training data for neural ranking models.
//!
//! A headline/content corpus is turned into `(query, positive, negative)`
//! triples by two filters:
//!
//! - the [ranking filter](ranking_filter) keeps a headline only when BM25
//!   retrieves its own article within `n_rank`, and takes the top `n_neg`
//!   other hits as hard negatives;
//! - the [interaction filter](interaction_filter) keeps a surviving pair only
//!   when its mock interaction vector is among the `n_sim` nearest, under
//!   aligned MSE, to the vector of some template pair.
//!
//! [`trec`] evaluates re-ranked runs with nDCG@k and ERR@k.

pub mod bm25;
pub mod config;
pub mod corpus;
pub mod error;
pub mod interaction;
pub mod interaction_filter;
pub mod parallel;
pub mod pipeline;
pub mod ranking_filter;
pub mod synthetic;
pub mod trec;
pub mod triples;

pub use bm25::{Bm25Params, Index, ScoredHit};
pub use config::{FilterConfig, PipelineConfig};
pub use corpus::{ingest_corpus, tokenize, Corpus, Document, Field, TokenizedText};
pub use error::{Error, Result};
pub use interaction::{
    amse, mock_embedding, mse, shift, EmbeddingTable, InteractionVector, SimilarityMatrix,
};
pub use ranking_filter::{apply_ranking_filter, RankedPair};
pub use triples::TrainingTriple;
