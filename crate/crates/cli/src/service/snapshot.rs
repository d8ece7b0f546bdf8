//! Immutable retrieval state served by one generation of the service.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use storyline_core::corpus::{Corpus, IngestOptions};
use storyline_core::index::DEFAULT_FIRST_STAGE_DEPTH;
use storyline_core::rankers::{
    CosineRanker, EmbeddingStore, ExternalScorer, Pipeline, QueryEncoder, SemanticScorer, System, WordVectors,
    DEFAULT_RRF_K,
};
use storyline_core::{Bm25Params, Index};

fn default_first_stage_depth() -> usize {
    DEFAULT_FIRST_STAGE_DEPTH
}

fn default_rrf_k() -> f64 {
    DEFAULT_RRF_K
}

fn default_system() -> System {
    System::Rrf
}

/// Service configuration, read from TOML. Relative paths resolve against
/// the config file's directory.
///
/// ```toml
/// corpus = "corpus.jsonl"
/// index = "corpus.idx"
/// article_vectors = "articles.vec"
/// word_vectors = "words.vec"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeConfig {
    pub corpus: PathBuf,
    /// Prebuilt index; built from the corpus at load time when absent.
    pub index: Option<PathBuf>,
    pub article_vectors: Option<PathBuf>,
    /// Word vectors used to embed ad-hoc queries for the semantic ranker.
    pub word_vectors: Option<PathBuf>,
    /// `host:port` of an external scorer, used instead of vectors.
    pub external_scorer: Option<String>,
    pub external_timeout_secs: Option<u64>,
    #[serde(default = "default_system")]
    pub default_system: System,
    #[serde(default = "default_first_stage_depth")]
    pub first_stage_depth: usize,
    #[serde(default = "default_rrf_k")]
    pub rrf_k: f64,
    pub k1: Option<f64>,
    pub b: Option<f64>,
}

impl ServeConfig {
    pub fn minimal(corpus: impl Into<PathBuf>) -> Self {
        Self {
            corpus: corpus.into(),
            index: None,
            article_vectors: None,
            word_vectors: None,
            external_scorer: None,
            external_timeout_secs: None,
            default_system: default_system(),
            first_stage_depth: default_first_stage_depth(),
            rrf_k: default_rrf_k(),
            k1: None,
            b: None,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.corpus);
        for p in [&mut cfg.index, &mut cfg.article_vectors, &mut cfg.word_vectors].into_iter().flatten() {
            resolve(p);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.first_stage_depth == 0 {
            bail!("first_stage_depth must be at least 1");
        }
        if !(self.rrf_k > 0.0 && self.rrf_k.is_finite()) {
            bail!("rrf_k must be positive, got {}", self.rrf_k);
        }
        if self.external_scorer.is_some() && self.article_vectors.is_some() {
            bail!("configure either external_scorer or article_vectors, not both");
        }
        if self.article_vectors.is_some() != self.word_vectors.is_some() {
            bail!("article_vectors and word_vectors must be given together");
        }
        Ok(())
    }
}

pub struct Snapshot {
    pub version: u64,
    pub corpus: Corpus,
    pub index: Index,
    pub semantic: Option<Box<dyn SemanticScorer>>,
    pub default_system: System,
    pub first_stage_depth: usize,
    pub rrf_k: f64,
}

impl Snapshot {
    /// Loads everything `cfg` names. The version is assigned on install.
    pub fn load(cfg: &ServeConfig) -> Result<Self> {
        cfg.validate()?;
        let corpus = load_corpus(&cfg.corpus)?;
        let index = match &cfg.index {
            Some(path) => {
                let f = File::open(path).with_context(|| format!("opening index {}", path.display()))?;
                let index = Index::read_from(BufReader::new(f)).with_context(|| format!("reading index {}", path.display()))?;
                if index.doc_count() != corpus.len() {
                    bail!(
                        "index {} covers {} documents but the corpus has {}",
                        path.display(),
                        index.doc_count(),
                        corpus.len()
                    );
                }
                index
            }
            None => {
                let defaults = Bm25Params::default();
                let params = Bm25Params::new(cfg.k1.unwrap_or(defaults.k1), cfg.b.unwrap_or(defaults.b))?;
                Index::build(&corpus, params)?
            }
        };
        let semantic: Option<Box<dyn SemanticScorer>> = match (&cfg.external_scorer, &cfg.article_vectors, &cfg.word_vectors) {
            (Some(endpoint), _, _) => {
                let mut scorer = ExternalScorer::new(endpoint.clone());
                if let Some(secs) = cfg.external_timeout_secs {
                    scorer = scorer.with_timeout(Duration::from_secs(secs));
                }
                Some(Box::new(scorer))
            }
            (None, Some(articles), Some(words)) => Some(Box::new(CosineRanker {
                articles: load_embeddings(articles)?,
                queries: QueryEncoder::WordMean(load_word_vectors(words)?),
            })),
            _ => None,
        };
        Self::from_parts(corpus, index, semantic, cfg)
    }

    pub fn from_parts(
        corpus: Corpus,
        index: Index,
        semantic: Option<Box<dyn SemanticScorer>>,
        cfg: &ServeConfig,
    ) -> Result<Self> {
        if cfg.default_system.needs_semantic() && semantic.is_none() {
            bail!("default system {} needs a semantic ranker; configure vectors or an external scorer", cfg.default_system);
        }
        Ok(Self {
            version: 0,
            corpus,
            index,
            semantic,
            default_system: cfg.default_system,
            first_stage_depth: cfg.first_stage_depth,
            rrf_k: cfg.rrf_k,
        })
    }

    pub fn pipeline(&self) -> Pipeline<'_> {
        let mut p = Pipeline::new(&self.corpus, &self.index);
        p.semantic = self.semantic.as_deref();
        p.first_stage_depth = self.first_stage_depth;
        p.rrf_k = self.rrf_k;
        p
    }

    pub fn systems(&self) -> Vec<System> {
        System::ALL
            .into_iter()
            .filter(|s| self.semantic.is_some() || !s.needs_semantic())
            .collect()
    }
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let f = File::open(path).with_context(|| format!("opening corpus {}", path.display()))?;
    let (corpus, _) = Corpus::ingest(BufReader::new(f), IngestOptions { strict: true, ..Default::default() })
        .with_context(|| format!("reading corpus {}", path.display()))?;
    Ok(corpus)
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingStore> {
    let f = File::open(path).with_context(|| format!("opening vectors {}", path.display()))?;
    EmbeddingStore::read(BufReader::new(f)).with_context(|| format!("reading vectors {}", path.display()))
}

pub fn load_word_vectors(path: &Path) -> Result<WordVectors> {
    let f = File::open(path).with_context(|| format!("opening word vectors {}", path.display()))?;
    WordVectors::read(BufReader::new(f)).with_context(|| format!("reading word vectors {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_paths_resolve_against_the_file() {
        let dir = tempfile::TempDir::new().unwrap();
        let path = dir.path().join("serve.toml");
        std::fs::write(&path, "corpus = \"c.jsonl\"\nindex = \"/abs/c.idx\"\ndefault_system = \"bm25\"\n").unwrap();
        let cfg = ServeConfig::from_file(&path).unwrap();
        assert_eq!(cfg.corpus, dir.path().join("c.jsonl"));
        assert_eq!(cfg.index.as_deref(), Some(Path::new("/abs/c.idx")));
        assert_eq!(cfg.default_system, System::Bm25);
        assert_eq!((cfg.first_stage_depth, cfg.rrf_k), (1000, 60.0));
    }

    #[test]
    fn config_rejects_inconsistent_settings() {
        let parse = |s: &str| toml::from_str::<ServeConfig>(s).map_err(|e| e.to_string()).and_then(|c| c.validate().map_err(|e| e.to_string()));
        assert!(parse("corpus = \"c\"\nbogus = 1\n").unwrap_err().contains("bogus"));
        assert!(parse("corpus = \"c\"\nrrf_k = 0\n").is_err());
        assert!(parse("corpus = \"c\"\narticle_vectors = \"a\"\n").is_err());
        assert!(parse("corpus = \"c\"\nexternal_scorer = \"h:1\"\narticle_vectors = \"a\"\nword_vectors = \"w\"\n").is_err());
        assert!(parse("corpus = \"c\"\nexternal_scorer = \"h:1\"\n").is_ok());
    }

    #[test]
    fn default_rrf_needs_a_semantic_ranker() {
        let corpus = Corpus::ingest(
            r#"{"id":"a","url":"https://x.example/a","headline":"A","paragraphs":[["One."]],"published_at":"2020-01-01","section":"news"}"#.as_bytes(),
            Default::default(),
        )
        .unwrap()
        .0;
        let index = Index::build(&corpus, Bm25Params::default()).unwrap();
        let err = Snapshot::from_parts(corpus, index, None, &ServeConfig::minimal("c")).err().unwrap();
        assert!(err.to_string().contains("semantic"));
    }
}
