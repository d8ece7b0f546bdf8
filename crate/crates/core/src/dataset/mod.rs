//! Automatic construction of (incomplete narrative, relevant article) pairs
//! from hyperlinks that journalists placed inside news articles.
//!
//! For an article `d` and a link sentence `a_{i,j}` with `i > 1` and `j > 1`
//! whose link resolves to an earlier article `d*`, the query is
//! `(e, c, t)` with `e` = headline + lead of `d`, `c` = `a_{i,1} .. a_{i,j-1}`
//! and `t` = publish time of `d`. The link sentence itself never enters the
//! query; it is kept only for link-sentence experiments.

mod split;
mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{join_nonempty, Article, Corpus};
use crate::time::Timestamp;

pub use self::split::{chronological_split, DatasetSplit, SplitError, SplitFractions, SplitName};
pub use self::stats::{dataset_stats, DatasetStats, SplitStats, Summary};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub qid: String,
    pub event_text: String,
    pub context_text: String,
    pub timestamp: Timestamp,
    pub source_article_id: String,
    pub link_paragraph_index: usize,
    pub link_sentence_index: usize,
    pub link_sentence_text: String,
    pub relevant_article_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QrelPair {
    pub qid: String,
    pub relevant_article_id: String,
    pub relevance: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SkipReason {
    LeadParagraph,
    FirstSentence,
    UnresolvableTarget,
    SelfLink,
    NonPastTarget,
}

impl SkipReason {
    pub const ALL: [SkipReason; 5] = [
        Self::LeadParagraph,
        Self::FirstSentence,
        Self::UnresolvableTarget,
        Self::SelfLink,
        Self::NonPastTarget,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::LeadParagraph => "lead-paragraph link",
            Self::FirstSentence => "first-sentence link",
            Self::UnresolvableTarget => "unresolvable target",
            Self::SelfLink => "self link",
            Self::NonPastTarget => "non-past target",
        }
    }
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SkipReport {
    pub counts: BTreeMap<SkipReason, usize>,
}

impl SkipReport {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn get(&self, reason: SkipReason) -> usize {
        self.counts.get(&reason).copied().unwrap_or(0)
    }

    /// Tab-separated `reason\tcount`, every reason listed.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "reason\tcount")?;
        for r in SkipReason::ALL {
            writeln!(w, "{}\t{}", r.label(), self.get(r))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub queries: Vec<Query>,
    pub qrels: Vec<QrelPair>,
    pub skipped: SkipReport,
    /// Every out-link examined.
    pub links_seen: usize,
}

/// Deterministic query id for the `ordinal`-th link (1-based) in sentence
/// `(paragraph, sentence)` of `source`.
pub fn query_id(source: &str, paragraph: usize, sentence: usize, ordinal: usize) -> String {
    format!("{source}#{paragraph}.{sentence}.{ordinal}")
}

pub fn event_text(article: &Article) -> String {
    article.headline_and_lead()
}

/// Emits one query per qualifying hyperlink. Output is ordered by source
/// id, paragraph, sentence and link ordinal regardless of corpus order.
pub fn build_dataset(corpus: &Corpus) -> Dataset {
    let mut sources: Vec<&Article> = corpus.articles().iter().collect();
    sources.sort_by(|a, b| a.id.cmp(&b.id));

    let mut out = Dataset::default();
    for d in sources {
        let mut links: Vec<(usize, usize, usize)> = d
            .out_links
            .iter()
            .enumerate()
            .map(|(n, l)| (l.paragraph_index, l.sentence_index, n))
            .collect();
        links.sort();

        let event = event_text(d);
        let mut ordinal = 0;
        let mut last_sentence = (0, 0);
        for (i, j, n) in links {
            if (i, j) != last_sentence {
                last_sentence = (i, j);
                ordinal = 0;
            }
            ordinal += 1;
            out.links_seen += 1;
            let link = &d.out_links[n];
            match qualify(corpus, d, i, j, &link.target_url) {
                Err(reason) => *out.skipped.counts.entry(reason).or_default() += 1,
                Ok(target) => {
                    let qid = query_id(&d.id, i, j, ordinal);
                    let paragraph = &d.paragraphs[i - 1];
                    out.qrels.push(QrelPair {
                        qid: qid.clone(),
                        relevant_article_id: target.id.clone(),
                        relevance: 1,
                    });
                    out.queries.push(Query {
                        qid,
                        event_text: event.clone(),
                        context_text: join_nonempty(paragraph[..j - 1].iter().map(String::as_str)),
                        timestamp: d.published_at,
                        source_article_id: d.id.clone(),
                        link_paragraph_index: i,
                        link_sentence_index: j,
                        link_sentence_text: paragraph[j - 1].clone(),
                        relevant_article_id: target.id.clone(),
                    });
                }
            }
        }
    }
    out
}

fn qualify<'c>(corpus: &'c Corpus, d: &Article, i: usize, j: usize, target_url: &str) -> Result<&'c Article, SkipReason> {
    if i <= 1 {
        return Err(SkipReason::LeadParagraph);
    }
    if j <= 1 {
        return Err(SkipReason::FirstSentence);
    }
    let target = corpus.get_by_url(target_url).ok_or(SkipReason::UnresolvableTarget)?;
    if target.id == d.id {
        return Err(SkipReason::SelfLink);
    }
    if target.published_at >= d.published_at {
        return Err(SkipReason::NonPastTarget);
    }
    Ok(target)
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetIoError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub fn write_queries<W: Write>(queries: &[Query], mut w: W) -> std::io::Result<()> {
    for q in queries {
        serde_json::to_writer(&mut w, q)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_queries<R: BufRead>(r: R) -> Result<Vec<Query>, DatasetIoError> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| DatasetIoError::Malformed {
            line: n + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Qrels for a set of queries, one pair per qid.
pub fn qrels_for(queries: &[Query]) -> Vec<QrelPair> {
    queries
        .iter()
        .map(|q| QrelPair {
            qid: q.qid.clone(),
            relevant_article_id: q.relevant_article_id.clone(),
            relevance: 1,
        })
        .collect()
}
