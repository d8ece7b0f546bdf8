//! Run scoring against single-relevant qrels: reciprocal rank, R@20 and
//! R@1000 per query, their means, and paired t-tests between systems.
//!
//! With exactly one relevant article per query, MRR coincides with MAP and
//! recall at a cutoff is a 0/1 flag per query.

mod experiment;
mod special;
mod trec;
mod ttest;

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::QrelPair;
use crate::ranking::RankedList;

pub use self::experiment::{query_input, run_experiment, ExperimentConfig, ExperimentPaths, QueryMode};
pub use self::special::{ln_gamma, regularized_incomplete_beta, student_t_two_sided};
pub use self::trec::{read_qrels, read_run, write_qrels, write_run};
pub use self::ttest::{paired_ttest, paired_ttest_differences, TTest, SIGNIFICANCE_LEVEL};

pub const RECALL_CUTOFFS: (usize, usize) = (20, 1000);

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("run has query {0:?} with no qrel")]
    UnjudgedQuery(String),
    #[error("run list for {qid:?} repeats article {article_id:?}")]
    DuplicateDoc { qid: String, article_id: String },
    #[error("qrels list more than one relevant article for {0:?}")]
    MultipleRelevant(String),
    #[error("reports cover different query sets")]
    MismatchedQueries,
    #[error("paired t-test needs at least 2 queries, got {0}")]
    TooFewQueries(usize),
    #[error("differences have zero variance; t and p are undefined")]
    ZeroVariance,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("query {qid:?}: {message}")]
    BadQuery { qid: String, message: String },
    #[error(transparent)]
    Rank(#[from] crate::rankers::RankError),
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// qid to its single relevant article.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    map: BTreeMap<String, String>,
}

impl Qrels {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = &'a QrelPair>) -> Result<Self, EvalError> {
        let mut map = BTreeMap::new();
        for p in pairs {
            if p.relevance == 0 {
                continue;
            }
            if map.insert(p.qid.clone(), p.relevant_article_id.clone()).is_some() {
                return Err(EvalError::MultipleRelevant(p.qid.clone()));
            }
        }
        Ok(Self { map })
    }

    pub fn get(&self, qid: &str) -> Option<&str> {
        self.map.get(qid).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(q, d)| (q.as_str(), d.as_str()))
    }
}

/// One ranked list per query, plus the run tag written to TREC files.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Run {
    pub tag: String,
    pub lists: BTreeMap<String, RankedList>,
}

impl Run {
    pub fn new(tag: impl Into<String>) -> Self {
        Self {
            tag: tag.into(),
            lists: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, list: RankedList) {
        self.lists.insert(list.qid.clone(), list);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "mrr")]
    ReciprocalRank,
    #[serde(rename = "r@20")]
    RecallAt20,
    #[serde(rename = "r@1000")]
    RecallAt1000,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Self::ReciprocalRank, Self::RecallAt20, Self::RecallAt1000];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ReciprocalRank => "mrr",
            Self::RecallAt20 => "r@20",
            Self::RecallAt1000 => "r@1000",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub qid: String,
    /// 1-based rank of the relevant article, if retrieved.
    pub rank: Option<usize>,
    pub reciprocal_rank: f64,
    pub recall_at_20: bool,
    pub recall_at_1000: bool,
}

impl QueryResult {
    pub fn from_rank(qid: impl Into<String>, rank: Option<usize>) -> Self {
        Self {
            qid: qid.into(),
            rank,
            reciprocal_rank: rank.map_or(0.0, |r| 1.0 / r as f64),
            recall_at_20: rank.is_some_and(|r| r <= RECALL_CUTOFFS.0),
            recall_at_1000: rank.is_some_and(|r| r <= RECALL_CUTOFFS.1),
        }
    }

    pub fn value(&self, metric: Metric) -> f64 {
        match metric {
            Metric::ReciprocalRank => self.reciprocal_rank,
            Metric::RecallAt20 => f64::from(u8::from(self.recall_at_20)),
            Metric::RecallAt1000 => f64::from(u8::from(self.recall_at_1000)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub system: String,
    /// Sorted by qid.
    pub per_query: Vec<QueryResult>,
    pub queries: usize,
    pub mrr: f64,
    pub recall_at_20: f64,
    pub recall_at_1000: f64,
    /// Paired t-tests against a baseline, when requested.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub significance: Vec<TTest>,
}

impl EvalReport {
    pub fn from_results(system: impl Into<String>, mut per_query: Vec<QueryResult>) -> Self {
        per_query.sort_by(|a, b| a.qid.cmp(&b.qid));
        let n = per_query.len();
        let mean = |m: Metric| {
            if n == 0 {
                0.0
            } else {
                per_query.iter().map(|q| q.value(m)).sum::<f64>() / n as f64
            }
        };
        Self {
            system: system.into(),
            queries: n,
            mrr: mean(Metric::ReciprocalRank),
            recall_at_20: mean(Metric::RecallAt20),
            recall_at_1000: mean(Metric::RecallAt1000),
            per_query,
            significance: Vec::new(),
        }
    }

    pub fn aggregate(&self, metric: Metric) -> f64 {
        match metric {
            Metric::ReciprocalRank => self.mrr,
            Metric::RecallAt20 => self.recall_at_20,
            Metric::RecallAt1000 => self.recall_at_1000,
        }
    }

    pub fn result(&self, qid: &str) -> Option<&QueryResult> {
        self.per_query
            .binary_search_by(|q| q.qid.as_str().cmp(qid))
            .ok()
            .map(|i| &self.per_query[i])
    }

    /// Attaches paired t-tests of `self - baseline` for every metric.
    /// Metrics with zero-variance differences are left out.
    pub fn compare_to(&mut self, baseline: &EvalReport) -> Result<(), EvalError> {
        self.significance.clear();
        for m in Metric::ALL {
            match paired_ttest(self, baseline, m) {
                Ok(t) => self.significance.push(t),
                Err(EvalError::ZeroVariance) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    /// `metric\tqid\tvalue` lines in trec_eval style, per query then `all`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for q in &self.per_query {
            let _ = writeln!(out, "rank\t{}\t{}", q.qid, q.rank.map_or("-".to_string(), |r| r.to_string()));
            for m in Metric::ALL {
                let _ = writeln!(out, "{}\t{}\t{:.6}", m.as_str(), q.qid, q.value(m));
            }
        }
        let _ = writeln!(out, "num_q\tall\t{}", self.queries);
        for m in Metric::ALL {
            let _ = writeln!(out, "{}\tall\t{:.6}", m.as_str(), self.aggregate(m));
        }
        for t in &self.significance {
            let flag = if t.significant { "*" } else { "" };
            let _ = writeln!(
                out,
                "ttest_{}\tvs:{}\tt={:.6}\tp={:.6e}{flag}",
                t.metric.as_str(),
                t.baseline,
                t.t,
                t.p
            );
        }
        out
    }
}

/// Which queries an evaluation covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalScope {
    /// Only queries present in the run.
    #[default]
    RunQueries,
    /// Every judged query; those missing from the run score 0.
    AllQrels,
}

pub fn evaluate(run: &Run, qrels: &Qrels, scope: EvalScope) -> Result<EvalReport, EvalError> {
    let mut results = Vec::new();
    for (qid, list) in &run.lists {
        let relevant = qrels.get(qid).ok_or_else(|| EvalError::UnjudgedQuery(qid.clone()))?;
        let mut seen = HashSet::with_capacity(list.len());
        let mut rank = None;
        for (pos, e) in list.entries.iter().enumerate() {
            if !seen.insert(e.article_id.as_str()) {
                return Err(EvalError::DuplicateDoc {
                    qid: qid.clone(),
                    article_id: e.article_id.clone(),
                });
            }
            if rank.is_none() && e.article_id == relevant {
                rank = Some(pos + 1);
            }
        }
        results.push(QueryResult::from_rank(qid.clone(), rank));
    }
    if scope == EvalScope::AllQrels {
        for (qid, _) in qrels.iter() {
            if !run.lists.contains_key(qid) {
                results.push(QueryResult::from_rank(qid, None));
            }
        }
    }
    Ok(EvalReport::from_results(run.tag.clone(), results))
}
