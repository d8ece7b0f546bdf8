//! Per-bin effectiveness analyses: MRR grouped by the vocabulary overlap
//! between query and relevant article, by how old the relevant article is,
//! and by how popular the query's entities are.

mod bins;
mod entities;
mod figure;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::corpus::{naive_split_sentences, Corpus};
use crate::dataset::Query;
use crate::eval::EvalReport;
use crate::index::tokenize;

pub use self::bins::{BadEdges, Bins, Closed, DAY_DIFF_EDGES, JACCARD_EDGES};
pub use self::entities::{article_entities, entity_idf, heuristic_entities, mentions};
pub use self::figure::render_svg;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("entity analysis needs a nonempty corpus")]
    EmptyCorpus,
    #[error("no report given")]
    NoReports,
}

/// |A ∩ B| / |A ∪ B| over token sets; 0 when both are empty.
pub fn jaccard(a: &str, b: &str) -> f64 {
    let sa: BTreeSet<String> = tokenize(a).into_iter().collect();
    let sb: BTreeSet<String> = tokenize(b).into_iter().collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        return 0.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dimension {
    #[serde(rename = "jaccard-q")]
    JaccardQuery,
    #[serde(rename = "jaccard-c")]
    JaccardContext,
    #[serde(rename = "daydiff")]
    DayDiff,
    #[serde(rename = "entity-idf")]
    EntityIdf,
}

impl Dimension {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::JaccardQuery => "jaccard-q",
            Self::JaccardContext => "jaccard-c",
            Self::DayDiff => "daydiff",
            Self::EntityIdf => "entity-idf",
        }
    }

    pub fn axis_label(self) -> &'static str {
        match self {
            Self::JaccardQuery => "Jaccard similarity of query and relevant article",
            Self::JaccardContext => "Jaccard similarity of context and relevant article",
            Self::DayDiff => "Days between query and relevant article",
            Self::EntityIdf => "Mean IDF of query entities",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub label: String,
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// System name to MRR over the bin's queries; `None` for an empty bin.
    pub mrr: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedReport {
    pub dimension: Dimension,
    pub closed: Closed,
    pub edges: Vec<f64>,
    pub systems: Vec<String>,
    pub bins: Vec<BinRow>,
    /// Queries with a defined value on this dimension.
    pub eligible: usize,
    /// Reason to number of queries left out.
    pub excluded: BTreeMap<String, usize>,
    /// Free-form provenance notes, e.g. that entities came from a heuristic.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BinnedReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{}\tlower\tupper\tcount", self.dimension);
        for s in &self.systems {
            let _ = write!(out, "\t{s}");
        }
        out.push('\n');
        for row in &self.bins {
            let _ = write!(out, "{}\t{}\t{}\t{}", row.label, row.lower, row.upper, row.count);
            for s in &self.systems {
                match row.mrr.get(s).copied().flatten() {
                    Some(v) => {
                        let _ = write!(out, "\t{v:.6}");
                    }
                    None => out.push_str("\t-"),
                }
            }
            out.push('\n');
        }
        let _ = writeln!(out, "# eligible\t{}", self.eligible);
        for (reason, n) in &self.excluded {
            let _ = writeln!(out, "# excluded\t{reason}\t{n}");
        }
        for note in &self.notes {
            let _ = writeln!(out, "# note\t{note}");
        }
        out
    }

    /// Plot-ready JSON: edges, per-bin counts and one MRR series per system.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub const EXCLUDED_NOT_EVALUATED: &str = "not in every report";
pub const EXCLUDED_MISSING_RELEVANT: &str = "relevant article not in corpus";
pub const EXCLUDED_OUT_OF_RANGE: &str = "outside bin range";
pub const EXCLUDED_NEGATIVE_DAYS: &str = "negative day difference";
pub const EXCLUDED_NO_ENTITIES: &str = "no entities";

/// Bins per-query values and averages each system's reciprocal ranks per bin.
/// `values` holds `(qid, value)` for eligible queries; `excluded` counts are
/// carried into the report as-is.
fn binned(
    dimension: Dimension,
    bins: &Bins,
    values: Vec<(&str, f64)>,
    reports: &[&EvalReport],
    mut excluded: BTreeMap<String, usize>,
) -> BinnedReport {
    let systems: Vec<String> = reports.iter().map(|r| r.system.clone()).collect();
    let mut members: Vec<Vec<&str>> = vec![Vec::new(); bins.len()];
    let mut eligible = 0;
    for (qid, v) in values {
        match bins.assign(v) {
            Some(b) => {
                members[b].push(qid);
                eligible += 1;
            }
            None => *excluded.entry(EXCLUDED_OUT_OF_RANGE.into()).or_insert(0) += 1,
        }
    }
    let rows = members
        .iter()
        .enumerate()
        .map(|(b, qids)| {
            let mrr = reports
                .iter()
                .map(|r| {
                    let v = (!qids.is_empty()).then(|| {
                        let sum: f64 = qids.iter().map(|q| r.result(q).map_or(0.0, |x| x.reciprocal_rank)).sum();
                        sum / qids.len() as f64
                    });
                    (r.system.clone(), v)
                })
                .collect();
            BinRow {
                label: bins.label(b),
                lower: bins.edges()[b],
                upper: bins.edges()[b + 1],
                count: qids.len(),
                mrr,
            }
        })
        .collect();
    BinnedReport {
        dimension,
        closed: bins.closed(),
        edges: bins.edges().to_vec(),
        systems,
        bins: rows,
        eligible,
        excluded,
        notes: Vec::new(),
    }
}

/// Splits `queries` into those judged by every report and a count of the
/// rest.
fn evaluated<'q>(queries: &'q [Query], reports: &[&EvalReport]) -> Result<(Vec<&'q Query>, BTreeMap<String, usize>), AnalysisError> {
    if reports.is_empty() {
        return Err(AnalysisError::NoReports);
    }
    let mut kept = Vec::new();
    let mut dropped = 0;
    for q in queries {
        if reports.iter().all(|r| r.result(&q.qid).is_some()) {
            kept.push(q);
        } else {
            dropped += 1;
        }
    }
    let mut excluded = BTreeMap::new();
    if dropped > 0 {
        excluded.insert(EXCLUDED_NOT_EVALUATED.to_string(), dropped);
    }
    Ok((kept, excluded))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapVariant {
    /// Event and context against the relevant article.
    FullQuery,
    /// Context alone.
    ContextOnly,
}

/// MRR by Jaccard overlap between the query text and the relevant article's
/// headline and lead.
pub fn vocabulary_gap_report(
    queries: &[Query],
    corpus: &Corpus,
    reports: &[&EvalReport],
    variant: GapVariant,
    bins: &Bins,
) -> Result<BinnedReport, AnalysisError> {
    let (kept, mut excluded) = evaluated(queries, reports)?;
    let mut values = Vec::with_capacity(kept.len());
    for q in kept {
        let Some(rel) = corpus.get(&q.relevant_article_id) else {
            *excluded.entry(EXCLUDED_MISSING_RELEVANT.into()).or_insert(0) += 1;
            continue;
        };
        let text = match variant {
            GapVariant::FullQuery => format!("{} {}", q.event_text, q.context_text),
            GapVariant::ContextOnly => q.context_text.clone(),
        };
        values.push((q.qid.as_str(), jaccard(&text, &rel.headline_and_lead())));
    }
    let dim = match variant {
        GapVariant::FullQuery => Dimension::JaccardQuery,
        GapVariant::ContextOnly => Dimension::JaccardContext,
    };
    Ok(binned(dim, bins, values, reports, excluded))
}

/// MRR by whole days between the query and its relevant article.
pub fn temporal_report(queries: &[Query], corpus: &Corpus, reports: &[&EvalReport], bins: &Bins) -> Result<BinnedReport, AnalysisError> {
    let (kept, mut excluded) = evaluated(queries, reports)?;
    let mut values = Vec::with_capacity(kept.len());
    for q in kept {
        let Some(rel) = corpus.get(&q.relevant_article_id) else {
            *excluded.entry(EXCLUDED_MISSING_RELEVANT.into()).or_insert(0) += 1;
            continue;
        };
        let days = q.timestamp.days_since(rel.published_at);
        if days < 0 {
            *excluded.entry(EXCLUDED_NEGATIVE_DAYS.into()).or_insert(0) += 1;
            continue;
        }
        values.push((q.qid.as_str(), days as f64));
    }
    Ok(binned(Dimension::DayDiff, bins, values, reports, excluded))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntitySource {
    /// Annotations when any article carries them, otherwise the heuristic.
    #[default]
    Auto,
    Annotations,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityOptions {
    pub source: EntitySource,
    /// Include entities of the context, not just the event.
    pub include_context: bool,
    /// Explicit bins; quintiles of the per-query values otherwise.
    pub bins: Option<Bins>,
}

impl Default for EntityOptions {
    fn default() -> Self {
        Self {
            source: EntitySource::Auto,
            include_context: true,
            bins: None,
        }
    }
}

/// The sentences making up a query's event and context, recovered from the
/// source article when it is in the corpus.
fn query_sentences(q: &Query, corpus: &Corpus, include_context: bool) -> Vec<String> {
    let mut out = Vec::new();
    match corpus.get(&q.source_article_id) {
        Some(src) => {
            out.push(src.headline.clone());
            out.extend(src.lead().iter().cloned());
            if include_context {
                if let Some(p) = src.paragraphs.get(q.link_paragraph_index.wrapping_sub(1)) {
                    out.extend(p.iter().take(q.link_sentence_index.saturating_sub(1)).cloned());
                }
            }
        }
        None => {
            out.extend(naive_split_sentences(&q.event_text));
            if include_context {
                out.extend(naive_split_sentences(&q.context_text));
            }
        }
    }
    out
}

/// MRR by the mean `ln(N / df)` of the entities mentioned in the query.
pub fn entity_idf_report(
    queries: &[Query],
    corpus: &Corpus,
    reports: &[&EvalReport],
    options: &EntityOptions,
) -> Result<BinnedReport, AnalysisError> {
    if corpus.is_empty() {
        return Err(AnalysisError::EmptyCorpus);
    }
    let heuristic = match options.source {
        EntitySource::Heuristic => true,
        EntitySource::Annotations => false,
        EntitySource::Auto => corpus.articles().iter().all(|a| a.entities.is_none()),
    };
    let sets: HashMap<&str, BTreeSet<String>> = corpus
        .articles()
        .iter()
        .map(|a| (a.id.as_str(), article_entities(a, heuristic)))
        .collect();
    let df = entities::document_frequencies(sets.values());
    let n = corpus.len();

    let (kept, mut excluded) = evaluated(queries, reports)?;
    let mut values = Vec::with_capacity(kept.len());
    for q in kept {
        let query_entities: BTreeSet<String> = if heuristic {
            entities::heuristic_entities_of(query_sentences(q, corpus, options.include_context).iter().map(String::as_str))
        } else {
            let text = if options.include_context {
                format!("{} {}", q.event_text, q.context_text)
            } else {
                q.event_text.clone()
            };
            let tokens = tokenize(&text);
            sets.get(q.source_article_id.as_str())
                .into_iter()
                .flatten()
                .filter(|e| mentions(&tokens, e))
                .cloned()
                .collect()
        };
        let idfs: Vec<f64> = query_entities
            .iter()
            .filter_map(|e| df.get(e).map(|&d| entity_idf(n, d)))
            .collect();
        if idfs.is_empty() {
            *excluded.entry(EXCLUDED_NO_ENTITIES.into()).or_insert(0) += 1;
            continue;
        }
        values.push((q.qid.as_str(), idfs.iter().sum::<f64>() / idfs.len() as f64));
    }

    let bins = match &options.bins {
        Some(b) => b.clone(),
        None => match Bins::quintiles(&values.iter().map(|v| v.1).collect::<Vec<_>>()) {
            Some(b) => b,
            // nothing eligible; a placeholder bin keeps the report shape
            None => Bins::new(vec![0.0, (n as f64).ln().max(1.0)], Closed::Left).expect("increasing"),
        },
    };
    let mut report = binned(Dimension::EntityIdf, &bins, values, reports, excluded);
    report.notes.push(if heuristic {
        "entities from heuristic: capitalized word runs not at sentence start".into()
    } else {
        "entities from ingested annotations mentioned in the query".into()
    });
    report.notes.push(format!(
        "entity scope: {}",
        if options.include_context { "event and context" } else { "event only" }
    ));
    Ok(report)
}
