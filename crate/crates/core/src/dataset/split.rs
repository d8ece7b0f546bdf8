use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Query;
use crate::time::Timestamp;

const PPM: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Dev => "dev",
            Self::Test => "test",
        }
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SplitName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Self::Train),
            "dev" => Ok(Self::Dev),
            "test" => Ok(Self::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("need at least 3 queries to populate three splits, got {0}")]
    TooFewQueries(usize),
    #[error("split fractions must be non-negative and sum to 1, got {0:?}")]
    BadFractions([f64; 3]),
}

/// Train/dev/test fractions, held as parts per million so the floor rule
/// is exact integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitFractions {
    train_ppm: u64,
    dev_ppm: u64,
}

impl SplitFractions {
    pub fn new(train: f64, dev: f64, test: f64) -> Result<Self, SplitError> {
        let raw = [train, dev, test];
        if raw.iter().any(|f| !(0.0..=1.0).contains(f)) || ((train + dev + test) - 1.0).abs() > 1e-6 {
            return Err(SplitError::BadFractions(raw));
        }
        Ok(Self {
            train_ppm: (train * PPM as f64).round() as u64,
            dev_ppm: (dev * PPM as f64).round() as u64,
        })
    }

    /// Parses `"0.9,0.05,0.05"`.
    pub fn parse(s: &str) -> Result<Self, SplitError> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().unwrap_or(f64::NAN))
            .collect();
        match parts[..] {
            [a, b, c] => Self::new(a, b, c),
            _ => Err(SplitError::BadFractions([f64::NAN; 3])),
        }
    }

    /// `(train, dev, test)` sizes for `n` queries:
    /// `floor(f_train n)`, `floor((f_train + f_dev) n) - floor(f_train n)`, rest.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let n64 = n as u64;
        let train = (n64 * self.train_ppm / PPM) as usize;
        let dev_end = ((n64 * (self.train_ppm + self.dev_ppm) / PPM) as usize).min(n);
        (train, dev_end - train, n - dev_end)
    }
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self::new(0.90, 0.05, 0.05).expect("default fractions are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub qids: Vec<String>,
    /// Earliest and latest query timestamp; `None` for an empty split.
    pub span: Option<(Timestamp, Timestamp)>,
}

impl DatasetSplit {
    /// The split's queries, in split order.
    pub fn select<'q>(&self, queries: &'q [Query]) -> Vec<&'q Query> {
        let wanted: HashSet<&str> = self.qids.iter().map(String::as_str).collect();
        let mut picked: Vec<&Query> = queries.iter().filter(|q| wanted.contains(q.qid.as_str())).collect();
        picked.sort_by(|a, b| (a.timestamp, &a.qid).cmp(&(b.timestamp, &b.qid)));
        picked
    }
}

/// Orders queries by `(timestamp, qid)` and cuts them by the floor rule.
pub fn chronological_split(queries: &[Query], fractions: SplitFractions) -> Result<[DatasetSplit; 3], SplitError> {
    let n = queries.len();
    if n < 3 {
        return Err(SplitError::TooFewQueries(n));
    }
    let mut order: Vec<&Query> = queries.iter().collect();
    order.sort_by(|a, b| (a.timestamp, &a.qid).cmp(&(b.timestamp, &b.qid)));
    let (train, dev, _) = fractions.sizes(n);

    let make = |name, part: &[&Query]| DatasetSplit {
        name,
        qids: part.iter().map(|q| q.qid.clone()).collect(),
        span: part.first().zip(part.last()).map(|(a, b)| (a.timestamp, b.timestamp)),
    };
    Ok([
        make(SplitName::Train, &order[..train]),
        make(SplitName::Dev, &order[train..train + dev]),
        make(SplitName::Test, &order[train + dev..]),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(qid: &str, secs: i64) -> Query {
        Query {
            qid: qid.into(),
            event_text: "e".into(),
            context_text: "c".into(),
            timestamp: Timestamp::from_secs(secs),
            source_article_id: "s".into(),
            link_paragraph_index: 2,
            link_sentence_index: 2,
            link_sentence_text: "l".into(),
            relevant_article_id: "r".into(),
        }
    }

    /// Floor arithmetic done by hand: 0.9*33 = 29.7, 0.95*33 = 31.35.
    #[test]
    fn thirty_three_queries() {
        assert_eq!(SplitFractions::default().sizes(33), (29, 2, 2));
    }

    #[test]
    fn hundred_queries() {
        let queries: Vec<Query> = (0..100).map(|i| q(&format!("q{i:03}"), 100 - i)).collect();
        let [train, dev, test] = chronological_split(&queries, SplitFractions::default()).unwrap();
        assert_eq!((train.qids.len(), dev.qids.len(), test.qids.len()), (90, 5, 5));
        assert!(train.span.unwrap().1 <= dev.span.unwrap().0);
        assert!(dev.span.unwrap().1 <= test.span.unwrap().0);
    }

    #[test]
    fn equal_timestamps_break_by_qid() {
        let queries = vec![q("c", 1), q("a", 1), q("b", 1)];
        let [train, dev, test] = chronological_split(&queries, SplitFractions::new(0.34, 0.33, 0.33).unwrap()).unwrap();
        assert_eq!(train.qids, ["a"]);
        assert_eq!(dev.qids, ["b"]);
        assert_eq!(test.qids, ["c"]);
    }

    #[test]
    fn too_few() {
        assert_eq!(
            chronological_split(&[q("a", 1), q("b", 2)], SplitFractions::default()),
            Err(SplitError::TooFewQueries(2))
        );
    }

    #[test]
    fn fractions_parse_and_validate() {
        assert_eq!(SplitFractions::parse("0.9,0.05,0.05").unwrap(), SplitFractions::default());
        assert!(SplitFractions::parse("0.9,0.2,0.05").is_err());
        assert!(SplitFractions::parse("0.9,0.1").is_err());
        assert!(SplitFractions::parse("a,b,c").is_err());
    }
}
