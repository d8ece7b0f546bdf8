//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use rand::prelude::*;
use storyline_core::corpus::{Article, Corpus, IngestOptions, OutLink};
use storyline_core::index::tokenize;
use storyline_core::ranking::RankedList;
use storyline_core::{Bm25Params, Timestamp};

pub const VOCAB: [&str; 24] = [
    "storm", "ship", "migrant", "port", "italy", "malta", "rescue", "vessel", "crisis", "europe", "border", "court",
    "vote", "budget", "river", "flood", "dam", "school", "teacher", "market", "bank", "rate", "fire", "coast",
];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn golden_corpus() -> Corpus {
    let f = std::fs::File::open(fixture_path("golden_corpus.jsonl")).expect("fixture present");
    Corpus::ingest(std::io::BufReader::new(f), IngestOptions::default())
        .expect("fixture ingests")
        .0
}

pub fn sentence<R: Rng>(rng: &mut R, words: usize) -> String {
    let mut s: Vec<&str> = (0..words).map(|_| *VOCAB.choose(rng).expect("nonempty")).collect();
    if s.is_empty() {
        s.push("empty");
    }
    format!("{}.", s.join(" "))
}

/// A corpus of up to `max_docs` articles over a small vocabulary, with
/// links aimed at real, unknown, self and future targets and frequent
/// equal timestamps.
pub fn random_corpus<R: Rng>(rng: &mut R, max_docs: usize) -> Corpus {
    let n = rng.random_range(1..=max_docs);
    let mut articles: Vec<Article> = (0..n)
        .map(|d| {
            let paragraphs: Vec<Vec<String>> = (0..rng.random_range(1..=5))
                .map(|_| {
                    (0..rng.random_range(1..=4))
                        .map(|_| {
                            let w = rng.random_range(1..=12);
                            sentence(rng, w)
                        })
                        .collect()
                })
                .collect();
            let day = rng.random_range(0..20i64);
            // a coarse clock makes equal timestamps common
            let secs = day * 86_400 + rng.random_range(0..3i64) * 3_600;
            let headline_words = rng.random_range(0..8);
            Article {
                id: format!("a{d:03}"),
                url: format!("https://news.example/a{d:03}"),
                headline: sentence(rng, headline_words).trim_end_matches('.').to_string(),
                paragraphs,
                published_at: Timestamp::from_secs(secs),
                section: ["news", "world", "opinion"].choose(rng).expect("nonempty").to_string(),
                out_links: vec![],
                entities: None,
            }
        })
        .collect();
    for d in 0..n {
        for _ in 0..rng.random_range(0..=4) {
            let np = articles[d].paragraphs.len();
            let i = rng.random_range(1..=np);
            let j = rng.random_range(1..=articles[d].paragraphs[i - 1].len());
            let target_url = match rng.random_range(0..10) {
                0 | 1 => format!("https://elsewhere.example/{}", rng.random_range(0..100)),
                2 => articles[d].url.clone(),
                3 => format!("{}/", articles[rng.random_range(0..n)].url),
                _ => articles[rng.random_range(0..n)].url.clone(),
            };
            articles[d].out_links.push(OutLink {
                paragraph_index: i,
                sentence_index: j,
                target_url,
                anchor_text: "link".into(),
            });
        }
    }
    articles.shuffle(rng);
    Corpus::from_articles(articles).expect("unique ids and urls")
}

/// Direct-formula BM25 over raw token streams, sharing no code with the index.
pub struct Bm25Oracle {
    docs: Vec<(String, Timestamp, Vec<String>)>,
    params: Bm25Params,
}

impl Bm25Oracle {
    pub fn new(corpus: &Corpus, params: Bm25Params) -> Self {
        let docs = corpus
            .articles()
            .iter()
            .map(|a| {
                let mut text = a.headline.clone();
                for s in a.paragraphs.iter().flatten() {
                    text.push(' ');
                    text.push_str(s);
                }
                (a.id.clone(), a.published_at, tokenize(&text))
            })
            .collect();
        Self { docs, params }
    }

    pub fn score(&self, query: &[String], id: &str) -> f64 {
        let n = self.docs.len() as f64;
        let avgdl = self.docs.iter().map(|d| d.2.len() as u64).sum::<u64>() as f64 / n;
        let doc = &self.docs.iter().find(|d| d.0 == id).expect("known id").2;
        let dl = doc.len() as f64;
        let mut seen: Vec<&str> = Vec::new();
        let mut score = 0.0;
        for t in query {
            if seen.contains(&t.as_str()) {
                continue;
            }
            seen.push(t);
            let qtf = query.iter().filter(|q| *q == t).count() as f64;
            let tf = doc.iter().filter(|w| *w == t).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = self.docs.iter().filter(|d| d.2.contains(t)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let (k1, b) = (self.params.k1, self.params.b);
            score += qtf * idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * dl / avgdl));
        }
        score
    }

    /// Every matching article before `cutoff`, fully sorted, cut to `k`.
    pub fn search(&self, query: &str, cutoff: Timestamp, k: usize) -> Vec<(String, f64)> {
        let q = tokenize(query);
        let terms: HashSet<&String> = q.iter().collect();
        let mut hits: Vec<(String, f64, Timestamp)> = self
            .docs
            .iter()
            .filter(|d| d.1 < cutoff && d.2.iter().any(|w| terms.contains(w)))
            .map(|d| (d.0.clone(), self.score(&q, &d.0), d.1))
            .collect();
        // score desc, then newer first, then id asc
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.2.cmp(&a.2)).then(a.0.cmp(&b.0)));
        hits.truncate(k);
        hits.into_iter().map(|(id, s, _)| (id, s)).collect()
    }
}

/// Linear scan for the relevant article: `(rr, r@20, r@1000)`.
pub fn scan_metrics(list: &RankedList, relevant: &str) -> (f64, f64, f64) {
    for (pos, e) in list.entries.iter().enumerate() {
        if e.article_id == relevant {
            let rank = pos + 1;
            return (1.0 / rank as f64, f64::from(u8::from(rank <= 20)), f64::from(u8::from(rank <= 1000)));
        }
    }
    (0.0, 0.0, 0.0)
}

/// Reciprocal-rank fusion written out per article from rank lookups.
pub fn rrf_oracle(lists: &[Vec<String>], k: f64) -> BTreeMap<String, f64> {
    let mut terms: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for l in lists {
        let mut seen = HashSet::new();
        for (pos, id) in l.iter().enumerate() {
            if seen.insert(id) {
                terms.entry(id.clone()).or_default().push(1.0 / (k + (pos + 1) as f64));
            }
        }
    }
    terms
        .into_iter()
        .map(|(id, mut t)| {
            t.sort_by(f64::total_cmp);
            (id, t.iter().sum())
        })
        .collect()
}
