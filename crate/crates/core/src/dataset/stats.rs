use std::collections::HashSet;

use serde::Serialize;

use super::Query;
use crate::corpus::Corpus;
use crate::histogram::Histogram;

pub const TOKEN_BIN_WIDTH: u64 = 10;
pub const DAY_BIN_WIDTH: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
}

impl Summary {
    /// `None` for empty input. Even counts take the mean of the middle pair.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        Some(Self {
            mean: sorted.iter().sum::<f64>() / n as f64,
            median,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitStats {
    pub name: String,
    pub queries: usize,
    pub unique_sources: usize,
    pub unique_relevant: usize,
    pub paragraph_index: Option<Summary>,
    pub sentence_index: Option<Summary>,
    /// Whitespace tokens in the event text.
    pub event_tokens: Histogram,
    /// Whitespace tokens in the context text.
    pub context_tokens: Histogram,
    /// Days between the query and its relevant article.
    pub day_difference: Histogram,
    /// Queries whose relevant article is missing from the corpus.
    pub unresolved: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub splits: Vec<SplitStats>,
}

impl DatasetStats {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "split\tqueries\tuniq_source\tuniq_relevant\ti_mean\ti_median\tj_mean\tj_median\n",
        );
        let fmt = |s: Option<Summary>| match s {
            Some(s) => (format!("{:.1}", s.mean), format!("{}", s.median)),
            None => ("-".into(), "-".into()),
        };
        for s in &self.splits {
            let (im, imed) = fmt(s.paragraph_index);
            let (jm, jmed) = fmt(s.sentence_index);
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{im}\t{imed}\t{jm}\t{jmed}\n",
                s.name, s.queries, s.unique_sources, s.unique_relevant
            ));
        }
        out
    }
}

pub fn dataset_stats(splits: &[(&str, Vec<&Query>)], corpus: &Corpus) -> DatasetStats {
    DatasetStats {
        splits: splits.iter().map(|(name, qs)| split_stats(name, qs, corpus)).collect(),
    }
}

fn split_stats(name: &str, queries: &[&Query], corpus: &Corpus) -> SplitStats {
    let sources: HashSet<&str> = queries.iter().map(|q| q.source_article_id.as_str()).collect();
    let relevant: HashSet<&str> = queries.iter().map(|q| q.relevant_article_id.as_str()).collect();
    let is: Vec<f64> = queries.iter().map(|q| q.link_paragraph_index as f64).collect();
    let js: Vec<f64> = queries.iter().map(|q| q.link_sentence_index as f64).collect();
    let words = |s: &str| s.split_whitespace().count() as u64;

    let mut day_difference = Histogram::new(DAY_BIN_WIDTH);
    let mut unresolved = 0;
    for q in queries {
        match corpus.get(&q.relevant_article_id) {
            Some(d) => day_difference.add(q.timestamp.days_since(d.published_at).max(0) as u64),
            None => unresolved += 1,
        }
    }
    SplitStats {
        name: name.to_string(),
        queries: queries.len(),
        unique_sources: sources.len(),
        unique_relevant: relevant.len(),
        paragraph_index: Summary::of(&is),
        sentence_index: Summary::of(&js),
        event_tokens: Histogram::from_values(TOKEN_BIN_WIDTH, queries.iter().map(|q| words(&q.event_text))),
        context_tokens: Histogram::from_values(TOKEN_BIN_WIDTH, queries.iter().map(|q| words(&q.context_text))),
        day_difference,
        unresolved,
    }
}
