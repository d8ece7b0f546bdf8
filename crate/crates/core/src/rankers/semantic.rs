//! Dense-vector semantic ranker.
//!
//! Article vectors come from a sidecar file and by convention embed the
//! headline and lead only. Query vectors either come from a second sidecar
//! keyed by qid, produced by the same external tool, or are the mean of
//! word vectors over the query tokens.
//!
//! Sidecar format: a `count dim` header line, then one `id v1 .. vdim` line
//! per item, whitespace separated.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{published_in, QueryInput, RankError, SemanticScorer};
use crate::corpus::Corpus;
use crate::index::tokenize;
use crate::ranking::{sort_entries, RankedList, RankerId, Scored};

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("header declares {declared} vectors, file has {found}")]
    CountMismatch { declared: usize, found: usize },
    #[error("vector for {id:?} has dimension {got}, expected {expected}")]
    Dimension { id: String, expected: usize, got: usize },
    #[error("vector for {0:?} has a non-finite entry")]
    NonFinite(String),
    #[error("duplicate vector for {0:?}")]
    Duplicate(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<(), EmbeddingError> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(EmbeddingError::Dimension {
                id,
                expected: self.dim,
                got: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(EmbeddingError::NonFinite(id));
        }
        if self.vectors.contains_key(&id) {
            return Err(EmbeddingError::Duplicate(id));
        }
        self.vectors.insert(id, vector);
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, EmbeddingError> {
        let mut lines = r.lines().enumerate();
        let (count, dim) = loop {
            let Some((n, line)) = lines.next() else {
                return Err(EmbeddingError::Malformed {
                    line: 1,
                    message: "missing `count dim` header".into(),
                });
            };
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let nums: Vec<usize> = line.split_whitespace().filter_map(|t| t.parse().ok()).collect();
            match (nums.as_slice(), line.split_whitespace().count()) {
                ([c, d], 2) => break (*c, *d),
                _ => {
                    return Err(EmbeddingError::Malformed {
                        line: n + 1,
                        message: "header must be `count dim`".into(),
                    })
                }
            }
        };
        let mut store = Self::new(dim);
        for (n, line) in lines {
            let line = line?;
            let mut fields = line.split_whitespace();
            let Some(id) = fields.next() else { continue };
            let vector = fields
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| EmbeddingError::Malformed {
                    line: n + 1,
                    message: e.to_string(),
                })?;
            store.insert(id, vector)?;
        }
        if store.len() != count {
            return Err(EmbeddingError::CountMismatch {
                declared: count,
                found: store.len(),
            });
        }
        Ok(store)
    }

    /// Writes the sidecar with ids in ascending order.
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.vectors.len(), self.dim)?;
        let mut ids: Vec<&String> = self.vectors.keys().collect();
        ids.sort();
        for id in ids {
            w.write_all(id.as_bytes())?;
            for x in &self.vectors[id] {
                write!(w, " {x}")?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Word vectors in the usual text format: `word v1 .. vdim` per line, with
/// an optional `count dim` header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WordVectors {
    dim: usize,
    words: HashMap<String, Vec<f64>>,
}

impl WordVectors {
    pub fn from_map(dim: usize, words: HashMap<String, Vec<f64>>) -> Self {
        Self { dim, words }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, EmbeddingError> {
        let mut dim = None;
        let mut words = HashMap::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if n == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
                continue;
            }
            let vector = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| EmbeddingError::Malformed {
                    line: n + 1,
                    message: e.to_string(),
                })?;
            let expected = *dim.get_or_insert(vector.len());
            if vector.len() != expected {
                return Err(EmbeddingError::Dimension {
                    id: fields[0].to_string(),
                    expected,
                    got: vector.len(),
                });
            }
            if vector.iter().any(|x| !x.is_finite()) {
                return Err(EmbeddingError::NonFinite(fields[0].to_string()));
            }
            words.insert(fields[0].to_lowercase(), vector);
        }
        Ok(Self {
            dim: dim.unwrap_or(0),
            words,
        })
    }

    /// Mean of the vectors of known tokens; the zero vector if none is known.
    pub fn embed(&self, text: &str) -> Vec<f64> {
        let mut sum = vec![0.0; self.dim];
        let mut known = 0usize;
        for t in tokenize(text) {
            if let Some(v) = self.words.get(&t) {
                for (s, x) in sum.iter_mut().zip(v) {
                    *s += x;
                }
                known += 1;
            }
        }
        if known > 0 {
            for s in &mut sum {
                *s /= known as f64;
            }
        }
        sum
    }
}

/// Article vectors built from word vectors over headline and lead.
pub fn embed_articles(corpus: &Corpus, words: &WordVectors) -> EmbeddingStore {
    let mut store = EmbeddingStore::new(words.dim());
    for a in corpus.articles() {
        store
            .insert(a.id.clone(), words.embed(&a.headline_and_lead()))
            .expect("ids are unique and word vectors finite");
    }
    store
}

#[derive(Debug, Clone)]
pub enum QueryEncoder {
    /// Vectors keyed by [`QueryInput::vector_key`], falling back to word
    /// vectors when the key is absent or missing from the store.
    Precomputed {
        vectors: EmbeddingStore,
        fallback: Option<WordVectors>,
    },
    WordMean(WordVectors),
}

pub fn embed_query(query: &QueryInput, encoder: &QueryEncoder) -> Result<Vec<f64>, RankError> {
    match encoder {
        QueryEncoder::WordMean(words) => Ok(words.embed(&query.lexical_text())),
        QueryEncoder::Precomputed { vectors, fallback } => {
            if let Some(v) = query.vector_key.as_deref().and_then(|k| vectors.get(k)) {
                return Ok(v.to_vec());
            }
            match fallback {
                Some(words) => Ok(words.embed(&query.lexical_text())),
                None => Err(RankError::NoQueryVector(query.qid.clone())),
            }
        }
    }
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb).sqrt()).clamp(-1.0, 1.0)
}

pub fn score_semantic(query_vector: &[f64], article_id: &str, store: &EmbeddingStore) -> Result<f64, RankError> {
    let v = store
        .get(article_id)
        .ok_or_else(|| RankError::MissingVector(article_id.to_string()))?;
    if query_vector.len() != store.dim() {
        return Err(RankError::DimensionMismatch {
            expected: store.dim(),
            got: query_vector.len(),
        });
    }
    Ok(cosine(query_vector, v))
}

/// Orders candidates by cosine with `query_vector`. Candidates without a
/// stored vector go last, in id order, with score `-inf`.
pub fn rerank_semantic(
    candidates: &RankedList,
    query_vector: &[f64],
    store: &EmbeddingStore,
    corpus: &Corpus,
) -> Result<RankedList, RankError> {
    let mut scored = Vec::with_capacity(candidates.len());
    let mut missing = Vec::new();
    for e in &candidates.entries {
        match score_semantic(query_vector, &e.article_id, store) {
            Ok(s) => scored.push(Scored::new(e.article_id.clone(), s)),
            Err(RankError::MissingVector(id)) => missing.push(id),
            Err(other) => return Err(other),
        }
    }
    sort_entries(&mut scored, published_in(corpus));
    missing.sort();
    scored.extend(missing.into_iter().map(|id| Scored::new(id, f64::NEG_INFINITY)));
    Ok(RankedList::new(candidates.qid.clone(), RankerId::Semantic, scored))
}

/// The built-in semantic ranker: cosine over precomputed vectors.
#[derive(Debug, Clone)]
pub struct CosineRanker {
    pub articles: EmbeddingStore,
    pub queries: QueryEncoder,
}

impl SemanticScorer for CosineRanker {
    fn rerank(&self, query: &QueryInput, candidates: &RankedList, corpus: &Corpus) -> Result<RankedList, RankError> {
        let qv = embed_query(query, &self.queries)?;
        rerank_semantic(candidates, &qv, &self.articles, corpus)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rankers::tests::{corpus_with_days, list};

    fn store(entries: &[(&str, Vec<f64>)]) -> EmbeddingStore {
        let mut s = EmbeddingStore::new(entries[0].1.len());
        for (id, v) in entries {
            s.insert(*id, v.clone()).unwrap();
        }
        s
    }

    #[test]
    fn cosine_basics() {
        let v = [0.3, -1.2, 4.0];
        assert!((cosine(&v, &v) - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 5.0]), 0.0);
        let doubled: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
        assert!((cosine(&v, &doubled) - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn matching_vector_ranks_first() {
        let corpus = corpus_with_days(&[("a", 1), ("b", 2), ("c", 3)]);
        let s = store(&[("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0]), ("c", vec![0.6, 0.8])]);
        let out = rerank_semantic(&list(&["a", "b", "c"]), &[0.0, 1.0], &s, &corpus).unwrap();
        assert_eq!(out.ids().collect::<Vec<_>>(), ["b", "c", "a"]);
        assert!(rerank_semantic(&list(&[]), &[0.0, 1.0], &s, &corpus).unwrap().is_empty());
    }

    #[test]
    fn missing_vectors_go_last_in_id_order() {
        let corpus = corpus_with_days(&[("a", 1), ("b", 2), ("z", 3), ("y", 3)]);
        let s = store(&[("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0])]);
        let out = rerank_semantic(&list(&["z", "a", "y", "b"]), &[1.0, 0.1], &s, &corpus).unwrap();
        assert_eq!(out.ids().collect::<Vec<_>>(), ["a", "b", "y", "z"]);
        assert!(matches!(score_semantic(&[1.0, 0.0], "z", &s), Err(RankError::MissingVector(_))));
    }

    #[test]
    fn sidecar_round_trip_and_validation() {
        let s = store(&[("b", vec![0.25, -1.0]), ("a", vec![1e-3, 2.0])]);
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "2 2\na 0.001 2\nb 0.25 -1\n");
        assert_eq!(EmbeddingStore::read(buf.as_slice()).unwrap(), s);
        assert!(matches!(
            EmbeddingStore::read(&b"2 2\na 1 2\n"[..]),
            Err(EmbeddingError::CountMismatch { declared: 2, found: 1 })
        ));
        assert!(matches!(EmbeddingStore::read(&b"1 2\na 1 2 3\n"[..]), Err(EmbeddingError::Dimension { .. })));
        assert!(matches!(EmbeddingStore::read(&b"1 2\na 1 NaN\n"[..]), Err(EmbeddingError::NonFinite(_))));
    }

    #[test]
    fn word_mean_skips_unknown_tokens() {
        let wv = WordVectors::read(&b"2 2\nmalta 1 0\nitaly 0 1\n"[..]).unwrap();
        assert_eq!(wv.embed("Malta and Italy"), vec![0.5, 0.5]);
        assert_eq!(wv.embed("nothing known"), vec![0.0, 0.0]);
    }

    #[test]
    fn precomputed_queries_fall_back_to_words() {
        let wv = WordVectors::read(&b"malta 1 0\n"[..]).unwrap();
        let enc = QueryEncoder::Precomputed {
            vectors: store(&[("q1", vec![0.0, 1.0])]),
            fallback: Some(wv),
        };
        let mut q = QueryInput {
            qid: "q1".into(),
            event_text: "Malta".into(),
            context_text: String::new(),
            timestamp: Default::default(),
            vector_key: Some("q1".into()),
        };
        assert_eq!(embed_query(&q, &enc).unwrap(), vec![0.0, 1.0]);
        q.vector_key = None;
        assert_eq!(embed_query(&q, &enc).unwrap(), vec![1.0, 0.0]);
    }
}
