//! The news article collection: ingest, validation, section filtering and
//! id/url-keyed access.
//!
//! Corpus files are line-delimited JSON, one [`Article`] per line. A corpus
//! is immutable once ingested and can be shared across threads freely.

mod sentences;
mod url;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::histogram::Histogram;
use crate::index::tokenize;
use crate::time::Timestamp;

pub use self::sentences::naive_split_sentences;
pub use self::url::{canonicalize_url, TRACKING_PARAMS};

/// Sections kept by [`Corpus::filter_by_section`] when no allow-list is given.
pub const DEFAULT_SECTIONS: &[&str] = &[
    "news",
    "world",
    "business",
    "environment",
    "technology",
    "society",
    "science",
    "culture",
    "education",
    "global",
    "healthcare",
    "media",
    "money",
    "teacher",
    "local",
    "national",
];

/// A hyperlink placed in sentence `sentence_index` of paragraph
/// `paragraph_index`. Both indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutLink {
    pub paragraph_index: usize,
    pub sentence_index: usize,
    pub target_url: String,
    pub anchor_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub url: String,
    pub headline: String,
    /// Paragraphs in order, each a list of sentences.
    pub paragraphs: Vec<Vec<String>>,
    pub published_at: Timestamp,
    pub section: String,
    #[serde(default)]
    pub out_links: Vec<OutLink>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entities: Option<Vec<String>>,
}

impl Article {
    /// The first paragraph.
    pub fn lead(&self) -> &[String] {
        &self.paragraphs[0]
    }

    pub fn lead_text(&self) -> String {
        self.lead().join(" ")
    }

    /// Headline followed by the lead paragraph, space-joined.
    pub fn headline_and_lead(&self) -> String {
        join_nonempty([self.headline.as_str(), &self.lead_text()])
    }

    /// Headline and every sentence of the body, space-joined.
    pub fn full_text(&self) -> String {
        let mut parts = vec![self.headline.as_str()];
        parts.extend(self.paragraphs.iter().flatten().map(String::as_str));
        join_nonempty(parts)
    }

    /// Sentence `a_{i,j}` with 1-based coordinates.
    pub fn sentence(&self, paragraph: usize, sentence: usize) -> Option<&str> {
        self.paragraphs
            .get(paragraph.checked_sub(1)?)?
            .get(sentence.checked_sub(1)?)
            .map(String::as_str)
    }

    pub fn validate(&self) -> Result<(), InvalidArticle> {
        if self.id.trim().is_empty() {
            return Err(InvalidArticle::EmptyField("id"));
        }
        if self.id.chars().any(char::is_whitespace) {
            return Err(InvalidArticle::WhitespaceInId(self.id.clone()));
        }
        if self.url.trim().is_empty() {
            return Err(InvalidArticle::EmptyField("url"));
        }
        if self.paragraphs.is_empty() {
            return Err(InvalidArticle::NoParagraphs);
        }
        for (i, p) in self.paragraphs.iter().enumerate() {
            if p.is_empty() {
                return Err(InvalidArticle::EmptyParagraph(i + 1));
            }
            if let Some(j) = p.iter().position(|s| s.trim().is_empty()) {
                return Err(InvalidArticle::BlankSentence(i + 1, j + 1));
            }
        }
        for link in &self.out_links {
            if self.sentence(link.paragraph_index, link.sentence_index).is_none() {
                return Err(InvalidArticle::DanglingLink {
                    paragraph: link.paragraph_index,
                    sentence: link.sentence_index,
                });
            }
        }
        Ok(())
    }
}

pub(crate) fn join_nonempty<'a>(parts: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for p in parts {
        if p.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(p);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvalidArticle {
    #[error("field `{0}` is empty")]
    EmptyField(&'static str),
    #[error("id {0:?} contains whitespace")]
    WhitespaceInId(String),
    #[error("article has no paragraphs")]
    NoParagraphs,
    #[error("paragraph {0} has no sentences")]
    EmptyParagraph(usize),
    #[error("sentence ({0}, {1}) is blank")]
    BlankSentence(usize, usize),
    #[error("out-link references missing sentence ({paragraph}, {sentence})")]
    DanglingLink { paragraph: usize, sentence: usize },
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: InvalidArticle,
    },
    #[error("line {line}: duplicate article id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: duplicate article url {url:?}")]
    DuplicateUrl { line: usize, url: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CorpusError {
    pub fn line(&self) -> Option<usize> {
        match self {
            Self::MissingField { line, .. }
            | Self::Malformed { line, .. }
            | Self::Invalid { line, .. }
            | Self::DuplicateId { line, .. }
            | Self::DuplicateUrl { line, .. } => Some(*line),
            Self::Io(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// Abort on the first bad record instead of skipping it.
    pub strict: bool,
    /// Re-split every paragraph with [`naive_split_sentences`]. Approximate;
    /// out-link coordinates must already refer to the re-split sentences.
    pub split_sentences: bool,
}

/// Records skipped during a lenient ingest.
#[derive(Debug, Default)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected: Vec<CorpusError>,
}

const REQUIRED_FIELDS: &[&str] = &["id", "url", "headline", "paragraphs", "published_at", "section"];

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    articles: Vec<Article>,
    by_id: HashMap<String, usize>,
    by_url: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus from in-memory articles, enforcing the same checks as
    /// [`Corpus::ingest`] in strict mode. Line numbers are 1-based positions.
    pub fn from_articles(articles: impl IntoIterator<Item = Article>) -> Result<Self, CorpusError> {
        let mut corpus = Self::default();
        for (n, article) in articles.into_iter().enumerate() {
            corpus.insert(n + 1, article)?;
        }
        Ok(corpus)
    }

    pub fn ingest<R: BufRead>(reader: R, opts: IngestOptions) -> Result<(Self, IngestReport), CorpusError> {
        let mut corpus = Self::default();
        let mut report = IngestReport::default();
        for (n, line) in reader.lines().enumerate() {
            let line_no = n + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let result = parse_record(&line, line_no, opts).and_then(|a| corpus.insert(line_no, a));
            match result {
                Ok(()) => report.accepted += 1,
                Err(e) if opts.strict => return Err(e),
                Err(e) => report.rejected.push(e),
            }
        }
        Ok((corpus, report))
    }

    fn insert(&mut self, line: usize, article: Article) -> Result<(), CorpusError> {
        article
            .validate()
            .map_err(|source| CorpusError::Invalid { line, source })?;
        if self.by_id.contains_key(&article.id) {
            return Err(CorpusError::DuplicateId { line, id: article.id });
        }
        let canonical = canonicalize_url(&article.url);
        if self.by_url.contains_key(&canonical) {
            return Err(CorpusError::DuplicateUrl { line, url: article.url });
        }
        let slot = self.articles.len();
        self.by_id.insert(article.id.clone(), slot);
        self.by_url.insert(canonical, slot);
        self.articles.push(article);
        Ok(())
    }

    /// Writes one canonical JSON record per line, in ingest order.
    pub fn export<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for a in &self.articles {
            serde_json::to_writer(&mut w, a)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn articles(&self) -> &[Article] {
        &self.articles
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Article> {
        self.by_id.get(id).map(|&i| &self.articles[i])
    }

    pub fn get_by_url(&self, url: &str) -> Option<&Article> {
        self.by_url.get(&canonicalize_url(url)).map(|&i| &self.articles[i])
    }

    /// Looks `key` up as an id first, then as a url.
    pub fn lookup(&self, key: &str) -> Option<&Article> {
        self.get(key).or_else(|| self.get_by_url(key))
    }

    /// Keeps articles whose section matches the allow-list, ignoring case.
    pub fn filter_by_section<S: AsRef<str>>(&self, allowed: &[S]) -> Corpus {
        let allowed: BTreeSet<String> = allowed.iter().map(|s| s.as_ref().to_lowercase()).collect();
        let kept = self
            .articles
            .iter()
            .filter(|a| allowed.contains(&a.section.to_lowercase()))
            .cloned();
        Corpus::from_articles(kept).expect("subset of a valid corpus is valid")
    }

    pub fn stats(&self) -> CorpusStats {
        let mut sections = BTreeMap::new();
        for a in &self.articles {
            *sections.entry(a.section.to_lowercase()).or_insert(0) += 1;
        }
        CorpusStats {
            article_count: self.articles.len(),
            sections,
            earliest: self.articles.iter().map(|a| a.published_at).min(),
            latest: self.articles.iter().map(|a| a.published_at).max(),
            token_histogram: Histogram::from_values(
                TOKEN_HISTOGRAM_WIDTH,
                self.articles.iter().map(|a| tokenize(&a.full_text()).len() as u64),
            ),
        }
    }
}

const TOKEN_HISTOGRAM_WIDTH: u64 = 100;

fn parse_record(line: &str, line_no: usize, opts: IngestOptions) -> Result<Article, CorpusError> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
        line: line_no,
        message: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| CorpusError::Malformed {
        line: line_no,
        message: "record is not an object".into(),
    })?;
    for &field in REQUIRED_FIELDS {
        if obj.get(field).is_none_or(serde_json::Value::is_null) {
            return Err(CorpusError::MissingField { line: line_no, field });
        }
    }
    let mut article: Article = serde_json::from_value(value).map_err(|e| CorpusError::Malformed {
        line: line_no,
        message: e.to_string(),
    })?;
    if opts.split_sentences {
        for p in &mut article.paragraphs {
            *p = p.iter().flat_map(|s| naive_split_sentences(s)).collect();
        }
    }
    Ok(article)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub article_count: usize,
    /// Lowercased section label to article count.
    pub sections: BTreeMap<String, usize>,
    pub earliest: Option<Timestamp>,
    pub latest: Option<Timestamp>,
    /// Tokens per article over headline and body.
    pub token_histogram: Histogram,
}
