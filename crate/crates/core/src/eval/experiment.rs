use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, EvalError, EvalReport, EvalScope, Qrels, Run};
use crate::dataset::{qrels_for, Query, SplitFractions, SplitName};
use crate::index::DEFAULT_FIRST_STAGE_DEPTH;
use crate::rankers::{Pipeline, QueryInput, System, DEFAULT_RRF_K};

/// Which parts of the query reach the rankers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryMode {
    /// Event only.
    E,
    /// Context only.
    C,
    /// Event and context concatenated.
    EC,
    /// The link sentence alone.
    LS,
}

impl QueryMode {
    pub const ALL: [QueryMode; 4] = [Self::E, Self::C, Self::EC, Self::LS];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::E => "e",
            Self::C => "c",
            Self::EC => "ec",
            Self::LS => "ls",
        }
    }
}

impl fmt::Display for QueryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QueryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown query mode {s:?}; expected e, c, ec or ls"))
    }
}

/// Builds the ranker input for `query` under `mode`. Precomputed query
/// vectors describe the full query, so only EC mode uses them.
pub fn query_input(query: &Query, mode: QueryMode) -> Result<QueryInput, EvalError> {
    let (event, context) = match mode {
        QueryMode::E => (query.event_text.clone(), String::new()),
        QueryMode::C => (String::new(), query.context_text.clone()),
        QueryMode::EC => (query.event_text.clone(), query.context_text.clone()),
        QueryMode::LS => {
            if query.link_sentence_text.trim().is_empty() {
                return Err(EvalError::BadQuery {
                    qid: query.qid.clone(),
                    message: "link-sentence mode needs link_sentence_text".into(),
                });
            }
            (query.link_sentence_text.clone(), String::new())
        }
    };
    Ok(QueryInput {
        qid: query.qid.clone(),
        event_text: event,
        context_text: context,
        timestamp: query.timestamp,
        vector_key: (mode == QueryMode::EC).then(|| query.qid.clone()),
    })
}

/// Runs `system` for every query (in parallel, output independent of
/// thread count) and scores the run against the queries' own qrels.
pub fn run_experiment(
    pipeline: &Pipeline<'_>,
    queries: &[&Query],
    mode: QueryMode,
    system: System,
    depth: usize,
) -> Result<(Run, EvalReport), EvalError> {
    let lists = queries
        .par_iter()
        .map(|q| {
            let input = query_input(q, mode)?;
            Ok(pipeline.run(&input, system, depth)?.ranked)
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let mut run = Run::new(system.as_str());
    for list in lists {
        run.insert(list);
    }
    let owned: Vec<Query> = queries.iter().map(|q| (*q).clone()).collect();
    let qrels = Qrels::from_pairs(&qrels_for(&owned))?;
    let report = evaluate(&run, &qrels, EvalScope::RunQueries)?;
    Ok((run, report))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPaths {
    pub corpus: PathBuf,
    pub queries: PathBuf,
    /// Prebuilt index; built from the corpus when absent.
    pub index: Option<PathBuf>,
    pub article_vectors: Option<PathBuf>,
    pub query_vectors: Option<PathBuf>,
    pub word_vectors: Option<PathBuf>,
    pub run_out: Option<PathBuf>,
    pub report_out: Option<PathBuf>,
}

fn default_depth() -> usize {
    DEFAULT_FIRST_STAGE_DEPTH
}

fn default_rrf_k() -> f64 {
    DEFAULT_RRF_K
}

fn default_mode() -> QueryMode {
    QueryMode::EC
}

/// Declarative batch experiment, read from TOML:
///
/// ```toml
/// system = "rrf"
/// mode = "ec"
/// split = "test"
/// depth = 1000
///
/// [paths]
/// corpus = "corpus.jsonl"
/// queries = "queries.jsonl"
/// article_vectors = "articles.vec"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: System,
    #[serde(default = "default_mode")]
    pub mode: QueryMode,
    /// Restrict to one chronological split; all queries when absent.
    pub split: Option<SplitName>,
    /// Train/dev/test fractions used when `split` is set.
    pub fractions: Option<[f64; 3]>,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_depth")]
    pub first_stage_depth: usize,
    #[serde(default = "default_rrf_k")]
    pub rrf_k: f64,
    pub k1: Option<f64>,
    pub b: Option<f64>,
    /// `host:port` of an external semantic scorer, used instead of vectors.
    pub external_scorer: Option<String>,
    pub external_timeout_secs: Option<u64>,
    pub paths: ExperimentPaths,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, EvalError> {
        let cfg: Self = toml::from_str(text).map_err(|e| EvalError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.depth == 0 || self.first_stage_depth == 0 {
            return Err(EvalError::Config("depths must be at least 1".into()));
        }
        if !(self.rrf_k > 0.0 && self.rrf_k.is_finite()) {
            return Err(EvalError::Config(format!("rrf_k must be positive, got {}", self.rrf_k)));
        }
        self.split_fractions()?;
        Ok(())
    }

    pub fn split_fractions(&self) -> Result<SplitFractions, EvalError> {
        match self.fractions {
            None => Ok(SplitFractions::default()),
            Some([a, b, c]) => SplitFractions::new(a, b, c).map_err(|e| EvalError::Config(e.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Article, Corpus};
    use crate::index::Index;
    use crate::time::Timestamp;
    use crate::Bm25Params;

    fn query(qid: &str, day: i64, rel: &str, link: &str) -> Query {
        Query {
            qid: qid.into(),
            event_text: "flood warning river".into(),
            context_text: "dam repairs delayed".into(),
            timestamp: Timestamp::from_secs(day * 86_400),
            source_article_id: "src".into(),
            link_paragraph_index: 2,
            link_sentence_index: 2,
            link_sentence_text: link.into(),
            relevant_article_id: rel.into(),
        }
    }

    fn art(id: &str, day: i64, headline: &str, body: &str) -> Article {
        Article {
            id: id.into(),
            url: format!("https://x/{id}"),
            headline: headline.into(),
            paragraphs: vec![vec![body.into()]],
            published_at: Timestamp::from_secs(day * 86_400),
            section: "news".into(),
            out_links: vec![],
            entities: None,
        }
    }

    #[test]
    fn modes_select_text() {
        let q = query("q", 10, "d", "Council approves new levee budget");
        let e = query_input(&q, QueryMode::E).unwrap();
        assert_eq!((e.event_text.as_str(), e.context_text.as_str()), ("flood warning river", ""));
        assert_eq!(e.vector_key, None);
        let c = query_input(&q, QueryMode::C).unwrap();
        assert_eq!(c.lexical_text(), "dam repairs delayed");
        let ec = query_input(&q, QueryMode::EC).unwrap();
        assert_eq!(ec.lexical_text(), "flood warning river dam repairs delayed");
        assert_eq!(ec.vector_key.as_deref(), Some("q"));
        assert_eq!(query_input(&q, QueryMode::LS).unwrap().lexical_text(), "Council approves new levee budget");
        assert!(query_input(&query("q", 1, "d", " "), QueryMode::LS).is_err());
    }

    #[test]
    fn link_sentence_repeating_headline_ranks_first() {
        let corpus = Corpus::from_articles([
            art("d", 3, "Council approves new levee budget", "The vote was close."),
            art("n1", 4, "River flood warning issued", "Dam repairs delayed again amid flood fears."),
            art("n2", 5, "Flood warning for river towns", "Residents told to prepare."),
        ])
        .unwrap();
        let index = Index::build(&corpus, Bm25Params::default()).unwrap();
        let p = Pipeline::new(&corpus, &index);
        let q = query("q", 10, "d", "Council approves new levee budget");
        let (_, ls) = run_experiment(&p, &[&q], QueryMode::LS, System::Bm25, 1000).unwrap();
        assert_eq!(ls.mrr, 1.0);
        let (_, ec) = run_experiment(&p, &[&q], QueryMode::EC, System::Bm25, 1000).unwrap();
        assert!(ec.mrr < 1.0);
    }

    #[test]
    fn bm25_depth_1000_is_first_stage() {
        let corpus = Corpus::from_articles((0..30).map(|i| art(&format!("a{i}"), i, "flood", &"river ".repeat(i as usize % 7 + 1)))).unwrap();
        let index = Index::build(&corpus, Bm25Params::default()).unwrap();
        let p = Pipeline::new(&corpus, &index);
        let q = query("q", 100, "a3", "");
        let (run, _) = run_experiment(&p, &[&q], QueryMode::EC, System::Bm25, 1000).unwrap();
        let stage1 = p.first_stage(&query_input(&q, QueryMode::EC).unwrap());
        assert_eq!(run.lists["q"], stage1);
    }

    #[test]
    fn config_parsing() {
        let cfg = ExperimentConfig::from_toml(
            "system = \"rrf-recency\"\nmode = \"c\"\nsplit = \"test\"\n[paths]\ncorpus = \"c.jsonl\"\nqueries = \"q.jsonl\"\n",
        )
        .unwrap();
        assert_eq!(cfg.system, System::RrfRecency);
        assert_eq!(cfg.mode, QueryMode::C);
        assert_eq!(cfg.depth, 1000);
        assert_eq!(cfg.rrf_k, 60.0);
        assert!(ExperimentConfig::from_toml("system = \"bert\"\n[paths]\ncorpus=\"a\"\nqueries=\"b\"").is_err());
        assert!(ExperimentConfig::from_toml("system = \"bm25\"\ndepth = 0\n[paths]\ncorpus=\"a\"\nqueries=\"b\"").is_err());
        assert!(ExperimentConfig::from_toml("system = \"bm25\"\nfractions = [0.5, 0.6, 0.1]\n[paths]\ncorpus=\"a\"\nqueries=\"b\"").is_err());
    }
}
