use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{rerank_recency, rrf_fuse, QueryInput, RankError, RrfConfig, SemanticScorer, DEFAULT_RRF_K};
use crate::corpus::Corpus;
use crate::index::{Index, DEFAULT_FIRST_STAGE_DEPTH};
use crate::ranking::{RankedList, RankerId};

/// The end-to-end systems. `RrfRecency` fuses BM25 with the semantic ranker
/// only; `Rrf` adds the recency ranker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    Bm25,
    Recency,
    Semantic,
    RrfRecency,
    Rrf,
}

impl System {
    pub const ALL: [System; 5] = [Self::Bm25, Self::Recency, Self::Semantic, Self::RrfRecency, Self::Rrf];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bm25 => "bm25",
            Self::Recency => "recency",
            Self::Semantic => "semantic",
            Self::RrfRecency => "rrf-recency",
            Self::Rrf => "rrf",
        }
    }

    /// Rankers whose lists make up this system's output.
    pub fn members(self) -> &'static [RankerId] {
        match self {
            Self::Bm25 => &[RankerId::Bm25],
            Self::Recency => &[RankerId::Recency],
            Self::Semantic => &[RankerId::Semantic],
            Self::RrfRecency => &[RankerId::Bm25, RankerId::Semantic],
            Self::Rrf => &[RankerId::Bm25, RankerId::Semantic, RankerId::Recency],
        }
    }

    pub fn needs_semantic(self) -> bool {
        self.members().contains(&RankerId::Semantic)
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for System {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|sys| sys.as_str() == s)
            .ok_or_else(|| format!("unknown system {s:?}; expected one of bm25, recency, semantic, rrf-recency, rrf"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    /// Final ranking, truncated to the requested depth.
    pub ranked: RankedList,
    /// Full member rankings over the candidate set, in [`System::members`] order.
    pub members: Vec<RankedList>,
}

/// BM25 candidate generation followed by the selected reranking.
#[derive(Clone, Copy)]
pub struct Pipeline<'a> {
    pub corpus: &'a Corpus,
    pub index: &'a Index,
    pub semantic: Option<&'a dyn SemanticScorer>,
    pub rrf_k: f64,
    pub first_stage_depth: usize,
}

impl<'a> Pipeline<'a> {
    pub fn new(corpus: &'a Corpus, index: &'a Index) -> Self {
        Self {
            corpus,
            index,
            semantic: None,
            rrf_k: DEFAULT_RRF_K,
            first_stage_depth: DEFAULT_FIRST_STAGE_DEPTH,
        }
    }

    pub fn with_semantic(mut self, scorer: &'a dyn SemanticScorer) -> Self {
        self.semantic = Some(scorer);
        self
    }

    pub fn first_stage(&self, query: &QueryInput) -> RankedList {
        self.index
            .search(&query.lexical_text(), query.timestamp, self.first_stage_depth)
            .with_qid(query.qid.clone())
    }

    pub fn run(&self, query: &QueryInput, system: System, depth: usize) -> Result<PipelineOutput, RankError> {
        let candidates = self.first_stage(query);
        let semantic = if system.needs_semantic() {
            Some(self.semantic.ok_or(RankError::SemanticUnavailable(system))?)
        } else {
            None
        };

        let mut members = Vec::with_capacity(system.members().len());
        for ranker in system.members() {
            members.push(match ranker {
                RankerId::Bm25 => candidates.clone(),
                RankerId::Recency => rerank_recency(&candidates, self.corpus)?,
                RankerId::Semantic => semantic.expect("checked above").rerank(query, &candidates, self.corpus)?,
                RankerId::RrfComposite => unreachable!("composites are not members"),
            });
        }

        let mut ranked = if members.len() == 1 {
            members[0].clone()
        } else {
            let config = RrfConfig::new(self.rrf_k, system.members().to_vec())?;
            rrf_fuse(&members, &config, |id| self.index.published_at(id).unwrap_or_default())?
        };
        ranked.truncate(depth);
        Ok(PipelineOutput { ranked, members })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Article;
    use crate::rankers::{CosineRanker, EmbeddingStore, QueryEncoder};
    use crate::time::Timestamp;
    use crate::Bm25Params;

    fn art(id: &str, day: i64, text: &str) -> Article {
        Article {
            id: id.into(),
            url: format!("https://x/{id}"),
            headline: String::new(),
            paragraphs: vec![vec![text.into()]],
            published_at: Timestamp::from_secs(day * 86_400),
            section: "news".into(),
            out_links: vec![],
            entities: None,
        }
    }

    fn query(text: &str, day: i64) -> QueryInput {
        QueryInput {
            qid: "q1".into(),
            event_text: text.into(),
            context_text: String::new(),
            timestamp: Timestamp::from_secs(day * 86_400),
            vector_key: Some("q1".into()),
        }
    }

    #[test]
    fn system_names() {
        for s in System::ALL {
            assert_eq!(s.as_str().parse::<System>().unwrap(), s);
        }
        assert!("bert".parse::<System>().is_err());
    }

    #[test]
    fn bm25_mode_is_truncated_first_stage() {
        let corpus = Corpus::from_articles((0..10).map(|i| art(&format!("d{i}"), i, &"storm ".repeat(i as usize + 1)))).unwrap();
        let index = Index::build(&corpus, Bm25Params::default()).unwrap();
        let p = Pipeline::new(&corpus, &index);
        let q = query("storm", 100);
        let out = p.run(&q, System::Bm25, 3).unwrap();
        let mut stage1 = p.first_stage(&q);
        stage1.truncate(3);
        assert_eq!(out.ranked, stage1);
        assert_eq!(out.ranked.qid, "q1");
    }

    #[test]
    fn semantic_systems_need_a_scorer() {
        let corpus = Corpus::from_articles([art("a", 1, "storm")]).unwrap();
        let index = Index::build(&corpus, Bm25Params::default()).unwrap();
        let err = Pipeline::new(&corpus, &index).run(&query("storm", 5), System::Rrf, 10).unwrap_err();
        assert!(matches!(err, RankError::SemanticUnavailable(System::Rrf)));
        assert!(Pipeline::new(&corpus, &index).run(&query("storm", 5), System::Recency, 10).is_ok());
    }

    /// The relevant article `rel` matches the query weakly but is the newest
    /// and semantically closest; fusion should lift it above its BM25 rank.
    #[test]
    fn fusion_lifts_weak_but_recent_article() {
        let corpus = Corpus::from_articles([
            art("strong1", 1, "migrant ship storm migrant ship"),
            art("strong2", 2, "migrant ship storm migrant"),
            art("strong3", 3, "migrant ship ship"),
            art("rel", 9, "migrant rescue italy ports"),
        ])
        .unwrap();
        let index = Index::build(&corpus, Bm25Params::default()).unwrap();
        let mut articles = EmbeddingStore::new(2);
        articles.insert("strong1", vec![1.0, 0.0]).unwrap();
        articles.insert("strong2", vec![0.9, 0.1]).unwrap();
        articles.insert("strong3", vec![0.8, 0.3]).unwrap();
        articles.insert("rel", vec![0.1, 1.0]).unwrap();
        let mut queries = EmbeddingStore::new(2);
        queries.insert("q1", vec![0.0, 1.0]).unwrap();
        let ranker = CosineRanker {
            articles,
            queries: QueryEncoder::Precomputed { vectors: queries, fallback: None },
        };
        let p = Pipeline::new(&corpus, &index).with_semantic(&ranker);
        let q = query("migrant ship storm", 10);
        let bm25 = p.run(&q, System::Bm25, 10).unwrap().ranked;
        let rrf = p.run(&q, System::Rrf, 10).unwrap();
        assert_eq!(bm25.rank_of("rel"), Some(4));
        assert!(rrf.ranked.rank_of("rel").unwrap() < 4);
        assert_eq!(rrf.members.len(), 3);

        let candidates: std::collections::BTreeSet<_> = p.first_stage(&q).ids().map(String::from).collect();
        for sys in System::ALL {
            let out = p.run(&q, sys, 1000).unwrap();
            let got: std::collections::BTreeSet<_> = out.ranked.ids().map(String::from).collect();
            assert_eq!(got, candidates, "{sys}");
        }
    }
}
