//! Retrieval of past news articles that can continue an incomplete,
//! event-centric narrative.
//!
//! The crate covers the whole offline pipeline: building query/relevant-article
//! datasets from hyperlinked news corpora, BM25 first-stage retrieval,
//! reranking with BM25, recency and semantic rankers fused by reciprocal
//! rank fusion, evaluation, and the per-bin result analyses.

pub mod analysis;
pub mod corpus;
pub mod dataset;
pub mod eval;
pub mod histogram;
pub mod index;
pub mod rankers;
pub mod synth;
pub mod ranking;
pub mod time;

pub use corpus::{Article, Corpus, OutLink};
pub use dataset::{Query, QrelPair};
pub use index::{Bm25Params, Index};
pub use ranking::{RankedList, RankerId, Scored};
pub use time::Timestamp;
