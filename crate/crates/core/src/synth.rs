//! Seeded synthetic news collections with planted hyperlinks.
//!
//! Articles belong to storylines that share topic words, an entity set and a
//! topic direction in vector space. Every article also has a handful of
//! private "aspect" words. A source article links to an earlier article
//! `d*` from a paragraph whose opening sentences talk about `d*`'s aspects,
//! so the three relevance signals are planted independently:
//!
//! * lexical: topic words shared with the event, aspect words with the context;
//! * semantic: the query vector is `d*`'s vector plus independent noise;
//! * recency: `d*` is usually the latest earlier article in the storyline.
//!
//! Some links cross storylines (the event shares nothing with `d*`) and some
//! contexts say nothing about `d*`, so event-only and context-only queries
//! each miss relevant articles that the combined query finds.

use std::collections::HashMap;

use rand::prelude::*;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Zipf};

use crate::corpus::{Article, Corpus, OutLink};
use crate::dataset::build_dataset;
use crate::rankers::EmbeddingStore;
use crate::time::{Timestamp, SECONDS_PER_DAY};

const SYLLABLES: [&str; 16] = [
    "ba", "de", "fi", "go", "ka", "le", "mi", "no", "pu", "ra", "se", "ti", "vo", "wu", "ze", "lo",
];
const STOPWORDS: [&str; 8] = ["the", "of", "and", "to", "in", "a", "on", "for"];
const SECTIONS: [&str; 4] = ["news", "world", "national", "business"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub storylines: usize,
    pub articles_per_storyline: usize,
    pub general_vocab: usize,
    pub topic_words: usize,
    pub aspect_words: usize,
    pub dim: usize,
    pub start: Timestamp,
    pub mean_gap_days: f64,
    /// Chance that an eligible article carries a planted link.
    pub link_rate: f64,
    /// Planted links pointing into a different storyline.
    pub cross_story_rate: f64,
    /// Planted links whose context does not mention `d*`.
    pub vague_context_rate: f64,
    /// Planted links to the latest earlier storyline article rather than an
    /// older one.
    pub latest_target_rate: f64,
    /// Extra links that must be skipped (lead paragraph, first sentence,
    /// unknown url, future target, self link), per article.
    pub noise_link_rate: f64,
    /// Fraction of articles filed under a non-news section.
    pub opinion_rate: f64,
    /// Standard deviation of the per-component query-vector noise.
    pub vector_noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            storylines: 60,
            articles_per_storyline: 40,
            general_vocab: 1500,
            topic_words: 12,
            aspect_words: 5,
            dim: 32,
            start: Timestamp::from_secs(1_451_606_400), // 2016-01-01
            mean_gap_days: 12.0,
            link_rate: 0.8,
            cross_story_rate: 0.2,
            vague_context_rate: 0.2,
            latest_target_rate: 0.7,
            noise_link_rate: 0.3,
            opinion_rate: 0.0,
            vector_noise: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthBenchmark {
    pub corpus: Corpus,
    pub article_vectors: EmbeddingStore,
    /// Keyed by query id, describing the combined event and context.
    pub query_vectors: EmbeddingStore,
    /// Out-links planted to qualify; the rest are planted to be skipped.
    pub planted_valid: usize,
    pub planted_total: usize,
}

/// Base-16 syllable spelling of `n` with at least `min_len` syllables.
fn pseudo_word(mut n: usize, min_len: usize) -> String {
    let mut out = String::new();
    let mut len = 0;
    while n > 0 || len < min_len {
        out.push_str(SYLLABLES[n % SYLLABLES.len()]);
        n /= SYLLABLES.len();
        len += 1;
    }
    out
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

struct Story {
    topic: Vec<String>,
    entities: Vec<String>,
    direction: Vec<f64>,
}

struct Draft {
    story: usize,
    id: String,
    url: String,
    section: &'static str,
    published: Timestamp,
    aspects: Vec<String>,
    entities: Vec<String>,
    headline: String,
    paragraphs: Vec<Vec<String>>,
}

struct Gen {
    rng: ChaCha8Rng,
    general: Vec<String>,
    zipf: Zipf<f64>,
}

impl Gen {
    fn general_word(&mut self) -> String {
        let k = self.zipf.sample(&mut self.rng) as usize - 1;
        self.general[k.min(self.general.len() - 1)].clone()
    }

    /// A sentence of roughly `len` words drawing `picks` from `pool`.
    fn sentence(&mut self, len: usize, pool: &[String], picks: usize, extra: &[String]) -> String {
        let mut words: Vec<String> = Vec::with_capacity(len + extra.len());
        for _ in 0..picks {
            if let Some(w) = pool.choose(&mut self.rng) {
                words.push(w.clone());
            }
        }
        words.extend(extra.iter().cloned());
        while words.len() < len {
            if self.rng.random_bool(0.3) {
                words.push(STOPWORDS.choose(&mut self.rng).expect("nonempty").to_string());
            } else {
                words.push(self.general_word());
            }
        }
        words.shuffle(&mut self.rng);
        let mut s = capitalize(&words[0]);
        for w in &words[1..] {
            s.push(' ');
            s.push_str(w);
        }
        s.push('.');
        s
    }

    fn unit_gaussian(&mut self, dim: usize) -> Vec<f64> {
        let n = Normal::new(0.0, 1.0).expect("valid");
        let v: Vec<f64> = (0..dim).map(|_| n.sample(&mut self.rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / norm).collect()
    }
}

fn add_scaled(a: &mut [f64], b: &[f64], s: f64) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += s * y;
    }
}

pub fn generate(cfg: &SynthConfig) -> SynthBenchmark {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        general: (0..cfg.general_vocab).map(|k| pseudo_word(k + SYLLABLES.len() * SYLLABLES.len(), 3)).collect(),
        zipf: Zipf::new(cfg.general_vocab.max(1) as f64, 1.0).expect("valid zipf"),
    };

    let stories: Vec<Story> = (0..cfg.storylines)
        .map(|s| Story {
            topic: (0..cfg.topic_words).map(|k| format!("{}x{}", pseudo_word(s, 2), pseudo_word(k, 1))).collect(),
            entities: (0..3).map(|k| capitalize(&format!("{}{}n", pseudo_word(s, 2), pseudo_word(k, 1)))).collect(),
            direction: g.unit_gaussian(cfg.dim),
        })
        .collect();
    let popular: Vec<String> = (0..6).map(|k| capitalize(&format!("{}q", pseudo_word(k, 2)))).collect();

    let span_days = cfg.mean_gap_days * cfg.articles_per_storyline as f64;
    let gap = Exp::new(1.0 / cfg.mean_gap_days.max(1e-6)).expect("positive rate");
    let mut drafts: Vec<Draft> = Vec::new();
    let mut article_vectors = EmbeddingStore::new(cfg.dim);
    for (s, story) in stories.iter().enumerate() {
        let mut day = g.rng.random_range(0.0..span_days.max(1.0));
        for k in 0..cfg.articles_per_storyline {
            day += gap.sample(&mut g.rng) + 0.05;
            let secs = cfg.start.as_secs() + (day * SECONDS_PER_DAY as f64) as i64;
            let id = format!("s{s:03}-{k:03}");
            let section = if g.rng.random_bool(cfg.opinion_rate) {
                "opinion"
            } else {
                SECTIONS[(s + k) % SECTIONS.len()]
            };
            let aspects: Vec<String> = (0..cfg.aspect_words).map(|a| format!("{}z{}", pseudo_word(s * 1000 + k, 3), pseudo_word(a, 1))).collect();
            let mut entities: Vec<String> = story.entities.clone();
            entities.shuffle(&mut g.rng);
            entities.truncate(2);
            if g.rng.random_bool(0.5) {
                entities.push(popular.choose(&mut g.rng).expect("nonempty").clone());
            }

            let mut head_extra: Vec<String> = aspects.iter().take(2).cloned().collect();
            head_extra.push(entities[0].clone());
            let headline = g.sentence(9, &story.topic, 2, &head_extra).trim_end_matches('.').to_string();
            let lead = (0..2)
                .map(|n| {
                    let extra = [aspects[(2 + n) % aspects.len()].clone(), entities[n % entities.len()].clone()];
                    g.sentence(14, &story.topic, 2, &extra)
                })
                .collect();
            let mut paragraphs = vec![lead];
            for _ in 0..g.rng.random_range(3..=5) {
                let n = g.rng.random_range(3..=5);
                paragraphs.push((0..n).map(|_| g.sentence(12, &story.topic, 1, &[])).collect());
            }

            let mut v = g.unit_gaussian(cfg.dim);
            add_scaled(&mut v, &story.direction, 1.0);
            article_vectors.insert(id.clone(), v).expect("fresh id");

            drafts.push(Draft {
                story: s,
                url: format!("https://news.example/{section}/{id}"),
                id,
                section,
                published: Timestamp::from_secs(secs),
                aspects,
                entities,
                headline,
                paragraphs,
            });
        }
    }

    let by_story: Vec<Vec<usize>> = (0..cfg.storylines)
        .map(|s| (0..drafts.len()).filter(|&d| drafts[d].story == s).collect())
        .collect();
    let mut links: Vec<Vec<OutLink>> = vec![Vec::new(); drafts.len()];
    let mut planted_valid = 0;
    let mut planted_total = 0;
    let mut order: Vec<usize> = (0..drafts.len()).collect();
    order.sort_by_key(|&d| drafts[d].published);

    for &d in &order {
        let story = drafts[d].story;
        let pos = by_story[story].iter().position(|&x| x == d).expect("member");
        if pos >= 1 && g.rng.random_bool(cfg.link_rate) {
            let cross = g.rng.random_bool(cfg.cross_story_rate) && cfg.storylines > 1;
            let target = if cross {
                let mut other = g.rng.random_range(0..cfg.storylines - 1);
                if other >= story {
                    other += 1;
                }
                by_story[other].iter().copied().filter(|&x| drafts[x].published < drafts[d].published).max_by_key(|&x| drafts[x].published)
            } else if g.rng.random_bool(cfg.latest_target_rate) {
                Some(by_story[story][pos - 1])
            } else {
                Some(by_story[story][g.rng.random_range(0..pos)])
            };
            if let Some(t) = target {
                let vague = !cross && g.rng.random_bool(cfg.vague_context_rate);
                let i = g.rng.random_range(2..=drafts[d].paragraphs.len());
                let plen = drafts[d].paragraphs[i - 1].len();
                let j = g.rng.random_range(2..=plen);
                let target_aspects = drafts[t].aspects.clone();
                for s in 0..j - 1 {
                    drafts[d].paragraphs[i - 1][s] = if vague {
                        g.sentence(12, &[], 0, &[])
                    } else {
                        let extra = [target_aspects[s % target_aspects.len()].clone()];
                        g.sentence(12, &target_aspects, 1, &extra)
                    };
                }
                let head_words: Vec<String> = drafts[t].headline.split_whitespace().map(str::to_lowercase).collect();
                drafts[d].paragraphs[i - 1][j - 1] = g.sentence(12, &head_words, 3, &[]);
                let url = match g.rng.random_range(0..4) {
                    0 => format!("{}/", drafts[t].url),
                    1 => format!("{}?utm_source=twitter#comments", drafts[t].url.replacen("news.example", "NEWS.example", 1)),
                    _ => drafts[t].url.clone(),
                };
                links[d].push(OutLink {
                    paragraph_index: i,
                    sentence_index: j,
                    target_url: url,
                    anchor_text: head_words.iter().take(3).cloned().collect::<Vec<_>>().join(" "),
                });
                planted_valid += 1;
                planted_total += 1;
            }
        }
        if g.rng.random_bool(cfg.noise_link_rate) {
            let later = by_story[story].get(pos + 1).map(|&x| drafts[x].url.clone());
            let np = drafts[d].paragraphs.len();
            let (i, j, url) = match g.rng.random_range(0..5) {
                0 => (1, 1 + g.rng.random_range(0..drafts[d].paragraphs[0].len()), drafts[by_story[story][0]].url.clone()),
                1 => (g.rng.random_range(2..=np), 1, drafts[by_story[story][0]].url.clone()),
                2 => (np, drafts[d].paragraphs[np - 1].len(), format!("https://elsewhere.example/{}", drafts[d].id)),
                3 => (np, drafts[d].paragraphs[np - 1].len(), drafts[d].url.clone()),
                _ => (np, drafts[d].paragraphs[np - 1].len(), later.unwrap_or_else(|| drafts[d].url.clone())),
            };
            links[d].push(OutLink {
                paragraph_index: i,
                sentence_index: j,
                target_url: url,
                anchor_text: "more".into(),
            });
            planted_total += 1;
        }
    }

    let articles: Vec<Article> = drafts
        .into_iter()
        .zip(links)
        .map(|(d, out_links)| Article {
            id: d.id,
            url: d.url,
            headline: d.headline,
            paragraphs: d.paragraphs,
            published_at: d.published,
            section: d.section.into(),
            out_links,
            entities: Some(d.entities),
        })
        .collect();
    let corpus = Corpus::from_articles(articles).expect("generated ids and urls are unique");

    // Query vectors: the relevant article's direction plus independent noise.
    let mut qrng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x005e_ed0f_cafe);
    let noise = Normal::new(0.0, cfg.vector_noise.max(0.0)).expect("valid");
    let mut query_vectors = EmbeddingStore::new(cfg.dim);
    let relevant: HashMap<String, String> = build_dataset(&corpus)
        .queries
        .into_iter()
        .map(|q| (q.qid, q.relevant_article_id))
        .collect();
    let mut qids: Vec<&String> = relevant.keys().collect();
    qids.sort();
    for qid in qids {
        let base = article_vectors.get(&relevant[qid]).expect("every article has a vector");
        let v: Vec<f64> = base.iter().map(|x| x + noise.sample(&mut qrng)).collect();
        query_vectors.insert(qid.clone(), v).expect("unique qid");
    }
    SynthBenchmark {
        corpus,
        article_vectors,
        query_vectors,
        planted_valid,
        planted_total,
    }
}
