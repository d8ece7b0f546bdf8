//! Inverted index and BM25 first-stage retrieval.
//!
//! Articles are indexed over headline plus every body sentence. Scoring is
//! classic Robertson BM25 with the smoothed IDF
//! `ln(1 + (N - df + 0.5) / (df + 0.5))`, which is never negative.

mod persist;
mod tokenize;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::ranking::{tie_order, RankedList, RankerId, Scored};
use crate::time::Timestamp;

pub use self::persist::{IndexFormatError, FORMAT_VERSION};
pub use self::tokenize::tokenize;

/// Depth of the first retrieval stage.
pub const DEFAULT_FIRST_STAGE_DEPTH: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self, IndexError> {
        if !(k1 >= 0.0 && k1.is_finite()) || !(0.0..=1.0).contains(&b) {
            return Err(IndexError::InvalidParams { k1, b });
        }
        Ok(Self { k1, b })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("cannot index an empty corpus")]
    EmptyCorpus,
    #[error("invalid BM25 parameters k1={k1} b={b}")]
    InvalidParams { k1: f64, b: f64 },
    #[error("article {0:?} is not in the index")]
    UnknownArticle(String),
    #[error(transparent)]
    Format(#[from] IndexFormatError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexStats {
    pub documents: usize,
    pub vocabulary: usize,
    pub avg_doc_len: f64,
    pub params: Bm25Params,
}

/// Immutable inverted index. Safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    params: Bm25Params,
    doc_ids: Vec<String>,
    published: Vec<Timestamp>,
    doc_lens: Vec<u32>,
    total_len: u64,
    postings: BTreeMap<String, Vec<Posting>>,
    doc_lookup: HashMap<String, u32>,
}

impl Index {
    pub fn build(corpus: &Corpus, params: Bm25Params) -> Result<Self, IndexError> {
        if corpus.is_empty() {
            return Err(IndexError::EmptyCorpus);
        }
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_ids = Vec::with_capacity(corpus.len());
        let mut published = Vec::with_capacity(corpus.len());
        let mut doc_lens = Vec::with_capacity(corpus.len());
        for (doc, article) in corpus.articles().iter().enumerate() {
            let tokens = tokenize(&article.full_text());
            let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
            for t in &tokens {
                *tf.entry(t.as_str()).or_default() += 1;
            }
            for (term, count) in tf {
                postings.entry(term.to_string()).or_default().push(Posting {
                    doc: doc as u32,
                    tf: count,
                });
            }
            doc_ids.push(article.id.clone());
            published.push(article.published_at);
            doc_lens.push(tokens.len() as u32);
        }
        Ok(Self::from_parts(params, doc_ids, published, doc_lens, postings))
    }

    fn from_parts(
        params: Bm25Params,
        doc_ids: Vec<String>,
        published: Vec<Timestamp>,
        doc_lens: Vec<u32>,
        postings: BTreeMap<String, Vec<Posting>>,
    ) -> Self {
        let total_len = doc_lens.iter().map(|&l| u64::from(l)).sum();
        let doc_lookup = doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        Self {
            params,
            doc_ids,
            published,
            doc_lens,
            total_len,
            postings,
            doc_lookup,
        }
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.total_len as f64 / self.doc_ids.len() as f64
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn doc_len(&self, article_id: &str) -> Option<u32> {
        self.doc_lookup.get(article_id).map(|&d| self.doc_lens[d as usize])
    }

    pub fn published_at(&self, article_id: &str) -> Option<Timestamp> {
        self.doc_lookup.get(article_id).map(|&d| self.published[d as usize])
    }

    pub fn contains(&self, article_id: &str) -> bool {
        self.doc_lookup.contains_key(article_id)
    }

    pub fn stats(&self) -> IndexStats {
        IndexStats {
            documents: self.doc_count(),
            vocabulary: self.postings.len(),
            avg_doc_len: self.avg_doc_len(),
            params: self.params,
        }
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.doc_ids.len() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn term_weight(&self, qtf: usize, idf: f64, tf: u32, dl: u32, params: Bm25Params, avgdl: f64) -> f64 {
        let (k1, b) = (params.k1, params.b);
        let tf = f64::from(tf);
        qtf as f64 * idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * f64::from(dl) / avgdl))
    }

    /// BM25 of one article under the index's own parameters.
    pub fn bm25_score(&self, query_tokens: &[String], article_id: &str) -> Result<f64, IndexError> {
        self.bm25_score_with(query_tokens, article_id, self.params)
    }

    pub fn bm25_score_with(&self, query_tokens: &[String], article_id: &str, params: Bm25Params) -> Result<f64, IndexError> {
        let doc = *self
            .doc_lookup
            .get(article_id)
            .ok_or_else(|| IndexError::UnknownArticle(article_id.to_string()))?;
        let dl = self.doc_lens[doc as usize];
        let avgdl = self.avg_doc_len();
        let mut score = 0.0;
        for (term, qtf) in query_terms(query_tokens) {
            let Some(list) = self.postings.get(term) else { continue };
            if let Ok(pos) = list.binary_search_by_key(&doc, |p| p.doc) {
                score += self.term_weight(qtf, self.idf(list.len()), list[pos].tf, dl, params, avgdl);
            }
        }
        Ok(score)
    }

    /// Top-`k` articles published strictly before `cutoff` that match at
    /// least one query term. The returned list has an empty qid.
    pub fn search(&self, query_text: &str, cutoff: Timestamp, k: usize) -> RankedList {
        let tokens = tokenize(query_text);
        let avgdl = self.avg_doc_len();
        let mut acc = vec![0.0f64; self.doc_ids.len()];
        let mut touched: Vec<u32> = Vec::new();
        for (term, qtf) in query_terms(&tokens) {
            let Some(list) = self.postings.get(term) else { continue };
            let idf = self.idf(list.len());
            for p in list {
                let d = p.doc as usize;
                if self.published[d] >= cutoff {
                    continue;
                }
                if acc[d] == 0.0 {
                    touched.push(p.doc);
                }
                acc[d] += self.term_weight(qtf, idf, p.tf, self.doc_lens[d], self.params, avgdl);
            }
        }

        let key = |d: u32| {
            let d = d as usize;
            (acc[d], self.published[d], self.doc_ids[d].as_str())
        };
        let cmp = |a: &u32, b: &u32| tie_order(key(*a), key(*b));
        if k == 0 {
            touched.clear();
        } else if touched.len() > k {
            touched.select_nth_unstable_by(k - 1, cmp);
            touched.truncate(k);
        }
        touched.sort_unstable_by(cmp);

        let entries = touched
            .into_iter()
            .map(|d| Scored::new(self.doc_ids[d as usize].clone(), acc[d as usize]))
            .collect();
        RankedList::new(String::new(), RankerId::Bm25, entries)
    }
}

/// Distinct query terms in first-occurrence order with their multiplicity.
fn query_terms(tokens: &[String]) -> Vec<(&str, usize)> {
    let mut out: Vec<(&str, usize)> = Vec::new();
    for t in tokens {
        match out.iter_mut().find(|(term, _)| *term == t.as_str()) {
            Some((_, n)) => *n += 1,
            None => out.push((t.as_str(), 1)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Article;

    pub(crate) fn doc(id: &str, text: &str, day: u32) -> Article {
        Article {
            id: id.into(),
            url: format!("https://x/{id}"),
            headline: String::new(),
            paragraphs: vec![vec![text.into()]],
            published_at: Timestamp::from_secs(i64::from(day) * 86_400),
            section: "news".into(),
            out_links: vec![],
            entities: None,
        }
    }

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn df_and_avgdl() {
        let corpus = Corpus::from_articles([
            doc("a", "x y y y y y y y y y", 1),
            doc("b", "x z z z z z z z z z z z z z z z z z z z", 2),
        ])
        .unwrap();
        let index = Index::build(&corpus, Bm25Params::default()).unwrap();
        assert_eq!(index.doc_freq("x"), 2);
        assert_eq!(index.avg_doc_len(), 15.0);
        assert_eq!(Index::build(&corpus, Bm25Params::default()).unwrap(), index);
    }

    #[test]
    fn closed_form_two_doc_example() {
        let corpus = Corpus::from_articles([doc("doc1", "a b a", 1), doc("doc2", "c d", 2)]).unwrap();
        let index = Index::build(&corpus, Bm25Params::default()).unwrap();
        // ln(2) * 3.8 / 2.972, evaluated independently: 0.8862581716446137
        let expected = 0.886_258_171_644_613_7;
        let got = index.bm25_score(&toks("a"), "doc1").unwrap();
        assert!((got - expected).abs() < 1e-12, "{got}");
        assert!((got - std::f64::consts::LN_2 * 3.8 / 2.972).abs() < 1e-12);
    }

    #[test]
    fn absent_terms_score_zero() {
        let corpus = Corpus::from_articles([doc("doc1", "a b a", 1), doc("doc2", "c d", 2)]).unwrap();
        let index = Index::build(&corpus, Bm25Params::default()).unwrap();
        assert_eq!(index.bm25_score(&toks("c"), "doc1").unwrap(), 0.0);
        assert_eq!(index.bm25_score(&toks("q r"), "doc1").unwrap(), 0.0);
        assert!(matches!(index.bm25_score(&toks("a"), "nope"), Err(IndexError::UnknownArticle(_))));
    }

    #[test]
    fn repeated_query_terms_count_per_occurrence() {
        let corpus = Corpus::from_articles([doc("doc1", "a b a", 1), doc("doc2", "c d", 2)]).unwrap();
        let index = Index::build(&corpus, Bm25Params::default()).unwrap();
        let once = index.bm25_score(&toks("a"), "doc1").unwrap();
        let twice = index.bm25_score(&toks("a a"), "doc1").unwrap();
        assert_eq!(twice, 2.0 * once);
    }

    #[test]
    fn temporal_filter_excludes_cutoff_and_later() {
        let corpus = Corpus::from_articles([doc("a", "storm", 5), doc("b", "storm", 10)]).unwrap();
        let index = Index::build(&corpus, Bm25Params::default()).unwrap();
        let cutoff = Timestamp::from_secs(10 * 86_400);
        let ids: Vec<_> = index.search("storm", cutoff, 10).ids().map(String::from).collect();
        assert_eq!(ids, ["a"]);
        assert!(index.search("storm", Timestamp::from_secs(0), 10).is_empty());
    }

    #[test]
    fn equal_scores_prefer_recent() {
        let corpus = Corpus::from_articles([doc("a", "storm", 5), doc("b", "storm", 6), doc("c", "storm", 6)]).unwrap();
        let index = Index::build(&corpus, Bm25Params::default()).unwrap();
        let ids: Vec<_> = index.search("storm", Timestamp::from_secs(i64::MAX), 10).ids().map(String::from).collect();
        assert_eq!(ids, ["b", "c", "a"]);
    }

    #[test]
    fn invalid_params() {
        assert!(Bm25Params::new(-1.0, 0.5).is_err());
        assert!(Bm25Params::new(1.2, 1.5).is_err());
        assert!(Bm25Params::new(1.2, 0.75).is_ok());
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(Index::build(&Corpus::default(), Bm25Params::default()), Err(IndexError::EmptyCorpus)));
    }
}
