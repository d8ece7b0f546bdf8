//! Entity surface forms for the popularity analysis, either from ingested
//! annotations or from a capitalization heuristic.

use std::collections::{BTreeSet, HashMap};

use crate::corpus::Article;
use crate::index::tokenize;

fn clean(word: &str) -> &str {
    word.trim_matches(|c: char| !c.is_alphanumeric())
}

fn is_capitalized(word: &str) -> bool {
    word.chars().next().is_some_and(char::is_uppercase)
}

/// Heuristic entities of one sentence: maximal runs of capitalized words,
/// ignoring the sentence's first word. Approximate by construction.
pub fn heuristic_entities(sentence: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut run: Vec<&str> = Vec::new();
    let words: Vec<&str> = sentence.split_whitespace().map(clean).collect();
    for (pos, w) in words.iter().enumerate() {
        if pos > 0 && !w.is_empty() && is_capitalized(w) {
            run.push(w);
            continue;
        }
        if !run.is_empty() {
            out.push(run.join(" ").to_lowercase());
            run.clear();
        }
    }
    if !run.is_empty() {
        out.push(run.join(" ").to_lowercase());
    }
    out
}

pub fn heuristic_entities_of<'a>(sentences: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
    sentences.into_iter().flat_map(heuristic_entities).collect()
}

/// Case-folded entity set of an article under the chosen source.
pub fn article_entities(article: &Article, heuristic: bool) -> BTreeSet<String> {
    if heuristic {
        let sentences = std::iter::once(article.headline.as_str())
            .chain(article.paragraphs.iter().flatten().map(String::as_str));
        heuristic_entities_of(sentences)
    } else {
        article
            .entities
            .iter()
            .flatten()
            .map(|e| e.trim().to_lowercase())
            .filter(|e| !e.is_empty())
            .collect()
    }
}

/// Whether the token sequence of `entity` occurs contiguously in `tokens`.
pub fn mentions(tokens: &[String], entity: &str) -> bool {
    let needle = tokenize(entity);
    !needle.is_empty() && tokens.windows(needle.len()).any(|w| w == needle.as_slice())
}

/// Document frequencies over per-article entity sets.
pub fn document_frequencies<'a>(sets: impl IntoIterator<Item = &'a BTreeSet<String>>) -> HashMap<String, usize> {
    let mut df = HashMap::new();
    for set in sets {
        for e in set {
            *df.entry(e.clone()).or_insert(0) += 1;
        }
    }
    df
}

/// `ln(N / df)`.
pub fn entity_idf(n: usize, df: usize) -> f64 {
    (n as f64 / df as f64).ln()
}
