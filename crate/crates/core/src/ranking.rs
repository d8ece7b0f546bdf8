//! Ranked lists shared by every ranker, the fusion step and evaluation.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankerId {
    Bm25,
    Recency,
    Semantic,
    RrfComposite,
}

impl RankerId {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bm25 => "bm25",
            Self::Recency => "recency",
            Self::Semantic => "semantic",
            Self::RrfComposite => "rrf-composite",
        }
    }
}

impl fmt::Display for RankerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RankerId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bm25" => Ok(Self::Bm25),
            "recency" => Ok(Self::Recency),
            "semantic" => Ok(Self::Semantic),
            "rrf-composite" => Ok(Self::RrfComposite),
            other => Err(format!("unknown ranker {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub article_id: String,
    pub score: f64,
}

impl Scored {
    pub fn new(article_id: impl Into<String>, score: f64) -> Self {
        Self {
            article_id: article_id.into(),
            score,
        }
    }
}

/// Ordered results for one query, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub qid: String,
    pub ranker: RankerId,
    pub entries: Vec<Scored>,
}

impl RankedList {
    pub fn new(qid: impl Into<String>, ranker: RankerId, entries: Vec<Scored>) -> Self {
        Self {
            qid: qid.into(),
            ranker,
            entries,
        }
    }

    pub fn with_qid(mut self, qid: impl Into<String>) -> Self {
        self.qid = qid.into();
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.article_id.as_str())
    }

    /// 1-based position of `article_id`, if present.
    pub fn rank_of(&self, article_id: &str) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| e.article_id == article_id)
            .map(|p| p + 1)
    }

    pub fn truncate(&mut self, depth: usize) {
        self.entries.truncate(depth);
    }
}

/// The global ordering: score descending, then more recent first, then
/// ascending article id.
pub fn tie_order(a: (f64, Timestamp, &str), b: (f64, Timestamp, &str)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then_with(|| b.1.cmp(&a.1))
        .then_with(|| a.2.cmp(b.2))
}

/// Sorts `entries` by [`tie_order`], resolving publish times through `published`.
pub fn sort_entries<F>(entries: &mut [Scored], published: F)
where
    F: Fn(&str) -> Timestamp,
{
    let mut keyed: Vec<(Timestamp, usize)> = entries
        .iter()
        .enumerate()
        .map(|(i, e)| (published(&e.article_id), i))
        .collect();
    keyed.sort_by(|&(ta, ia), &(tb, ib)| {
        let (a, b) = (&entries[ia], &entries[ib]);
        tie_order((a.score, ta, &a.article_id), (b.score, tb, &b.article_id))
    });
    let sorted: Vec<Scored> = keyed.iter().map(|&(_, i)| entries[i].clone()).collect();
    entries.clone_from_slice(&sorted);
}
