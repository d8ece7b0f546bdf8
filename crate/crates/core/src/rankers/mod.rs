//! Second-stage rankers over the BM25 candidate list and their fusion.
//!
//! Every ranker returns a [`RankedList`] holding exactly the candidate set it
//! was given. Ties always resolve by score, then more recent publish time,
//! then ascending article id.

mod external;
mod pipeline;
mod rrf;
mod semantic;

use crate::corpus::{join_nonempty, Corpus};
use crate::ranking::{sort_entries, RankedList, RankerId, Scored};
use crate::time::Timestamp;

pub use self::external::{ExternalError, ExternalScorer, ScoreRequest, ScoreRequestCandidate, ScoreResponse, DEFAULT_TIMEOUT};
pub use self::pipeline::{Pipeline, PipelineOutput, System};
pub use self::rrf::{rrf_fuse, RrfConfig, DEFAULT_RRF_K};
pub use self::semantic::{
    cosine, embed_articles, embed_query, rerank_semantic, score_semantic, CosineRanker, EmbeddingError, EmbeddingStore,
    QueryEncoder, WordVectors,
};

#[derive(Debug, thiserror::Error)]
pub enum RankError {
    #[error("article {0:?} is not in the corpus")]
    UnknownArticle(String),
    #[error("no vector for article {0:?} in the embedding store")]
    MissingVector(String),
    #[error("query vector has dimension {got}, store expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no query vector available for {0:?}")]
    NoQueryVector(String),
    #[error("rank fusion needs at least one list")]
    EmptyFusion,
    #[error("invalid fusion config: {0}")]
    InvalidRrf(String),
    #[error("system {0} needs a semantic ranker, none configured")]
    SemanticUnavailable(System),
    #[error("external scorer: {0}")]
    External(#[from] ExternalError),
}

/// The query as seen by rankers. Mode selection (event only, context only,
/// both, link sentence) happens before this point.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryInput {
    pub qid: String,
    pub event_text: String,
    pub context_text: String,
    pub timestamp: Timestamp,
    /// Key into a precomputed query-vector store, when one applies.
    pub vector_key: Option<String>,
}

impl QueryInput {
    /// Event and context concatenated, as fed to BM25.
    pub fn lexical_text(&self) -> String {
        join_nonempty([self.event_text.as_str(), self.context_text.as_str()])
    }
}

pub(crate) fn published_in(corpus: &Corpus) -> impl Fn(&str) -> Timestamp + '_ {
    |id| corpus.get(id).map(|a| a.published_at).unwrap_or_default()
}

/// Reverse chronological order; score is the publish time in epoch seconds.
pub fn rerank_recency(candidates: &RankedList, corpus: &Corpus) -> Result<RankedList, RankError> {
    let mut entries = candidates
        .entries
        .iter()
        .map(|e| {
            let a = corpus
                .get(&e.article_id)
                .ok_or_else(|| RankError::UnknownArticle(e.article_id.clone()))?;
            Ok(Scored::new(e.article_id.clone(), a.published_at.as_secs() as f64))
        })
        .collect::<Result<Vec<_>, RankError>>()?;
    sort_entries(&mut entries, published_in(corpus));
    Ok(RankedList::new(candidates.qid.clone(), RankerId::Recency, entries))
}

/// A ranker that orders candidates by semantic match with the query.
pub trait SemanticScorer: Send + Sync {
    fn rerank(&self, query: &QueryInput, candidates: &RankedList, corpus: &Corpus) -> Result<RankedList, RankError>;
}
