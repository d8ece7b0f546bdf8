//! TREC run (`qid Q0 docid rank score tag`) and qrels (`qid 0 docid rel`)
//! files, whitespace separated.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{EvalError, Run};
use crate::dataset::QrelPair;
use crate::ranking::{RankedList, RankerId, Scored};

/// Scores are written with Rust's shortest round-trip formatting so a run
/// read back compares equal to the one written.
pub fn write_run<W: Write>(run: &Run, mut w: W) -> std::io::Result<()> {
    for (qid, list) in &run.lists {
        for (pos, e) in list.entries.iter().enumerate() {
            writeln!(w, "{qid} Q0 {} {} {} {}", e.article_id, pos + 1, e.score, run.tag)?;
        }
    }
    Ok(())
}

fn ranker_for_tag(tag: &str) -> RankerId {
    tag.parse().unwrap_or(RankerId::RrfComposite)
}

/// Lists are ordered by the rank column; the tag is taken from the first line.
pub fn read_run<R: BufRead>(r: R) -> Result<Run, EvalError> {
    let mut tag: Option<String> = None;
    let mut rows: BTreeMap<String, Vec<(usize, Scored)>> = BTreeMap::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let malformed = |message: String| EvalError::Malformed { line: n + 1, message };
        if fields.len() != 6 {
            return Err(malformed(format!("expected 6 fields, found {}", fields.len())));
        }
        let rank: usize = fields[3].parse().map_err(|_| malformed(format!("bad rank {:?}", fields[3])))?;
        let score: f64 = fields[4].parse().map_err(|_| malformed(format!("bad score {:?}", fields[4])))?;
        if tag.is_none() {
            tag = Some(fields[5].to_string());
        }
        rows.entry(fields[0].to_string())
            .or_default()
            .push((rank, Scored::new(fields[2], score)));
    }
    let tag = tag.unwrap_or_default();
    let ranker = ranker_for_tag(&tag);
    let mut run = Run::new(tag);
    for (qid, mut entries) in rows {
        entries.sort_by_key(|(rank, _)| *rank);
        run.insert(RankedList::new(qid, ranker, entries.into_iter().map(|(_, s)| s).collect()));
    }
    Ok(run)
}

pub fn write_qrels<W: Write>(qrels: &[QrelPair], mut w: W) -> std::io::Result<()> {
    for q in qrels {
        writeln!(w, "{} 0 {} {}", q.qid, q.relevant_article_id, q.relevance)?;
    }
    Ok(())
}

pub fn read_qrels<R: BufRead>(r: R) -> Result<Vec<QrelPair>, EvalError> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 4 {
            return Err(EvalError::Malformed {
                line: n + 1,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let relevance = fields[3].parse().map_err(|_| EvalError::Malformed {
            line: n + 1,
            message: format!("bad relevance {:?}", fields[3]),
        })?;
        out.push(QrelPair {
            qid: fields[0].to_string(),
            relevant_article_id: fields[2].to_string(),
            relevance,
        });
    }
    Ok(out)
}
