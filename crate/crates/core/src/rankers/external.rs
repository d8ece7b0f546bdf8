//! Out-of-process semantic scorer, e.g. a fine-tuned cross-encoder.
//!
//! One request per query over TCP: the client writes a single JSON line
//! ([`ScoreRequest`]) and reads a single JSON line back ([`ScoreResponse`])
//! with one score per candidate, in request order. See
//! `docs/external-scorer.md`.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{published_in, QueryInput, RankError, SemanticScorer};
use crate::corpus::Corpus;
use crate::ranking::{sort_entries, RankedList, RankerId, Scored};

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequestCandidate {
    pub id: String,
    pub headline: String,
    pub lead: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub version: u32,
    pub qid: String,
    pub event_text: String,
    pub context_text: String,
    pub candidates: Vec<ScoreRequestCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ExternalError {
    #[error("transport failure talking to {endpoint}: {source}")]
    Transport {
        endpoint: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("score count mismatch: sent {expected} candidates, got {got} scores")]
    CountMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone)]
pub struct ExternalScorer {
    pub endpoint: String,
    pub timeout: Duration,
}

impl ExternalScorer {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    fn transport(&self, source: std::io::Error) -> ExternalError {
        ExternalError::Transport {
            endpoint: self.endpoint.clone(),
            source,
        }
    }

    /// Sends one request and returns the raw scores after validation.
    pub fn call(&self, request: &ScoreRequest) -> Result<Vec<f64>, ExternalError> {
        let addr = self
            .endpoint
            .to_socket_addrs()
            .map_err(|e| self.transport(e))?
            .next()
            .ok_or_else(|| self.transport(std::io::Error::other("endpoint resolved to no address")))?;
        let stream = TcpStream::connect_timeout(&addr, self.timeout).map_err(|e| self.transport(e))?;
        stream.set_read_timeout(Some(self.timeout)).map_err(|e| self.transport(e))?;
        stream.set_write_timeout(Some(self.timeout)).map_err(|e| self.transport(e))?;

        let mut line = serde_json::to_vec(request).map_err(|e| ExternalError::Malformed(e.to_string()))?;
        line.push(b'\n');
        (&stream).write_all(&line).map_err(|e| self.transport(e))?;

        let mut reply = String::new();
        BufReader::new(&stream).read_line(&mut reply).map_err(|e| self.transport(e))?;
        if reply.trim().is_empty() {
            return Err(ExternalError::Malformed("empty response".into()));
        }
        let response: ScoreResponse =
            serde_json::from_str(reply.trim()).map_err(|e| ExternalError::Malformed(e.to_string()))?;
        if response.scores.len() != request.candidates.len() {
            return Err(ExternalError::CountMismatch {
                expected: request.candidates.len(),
                got: response.scores.len(),
            });
        }
        if response.scores.iter().any(|s| !s.is_finite()) {
            return Err(ExternalError::Malformed("non-finite score".into()));
        }
        Ok(response.scores)
    }
}

impl SemanticScorer for ExternalScorer {
    fn rerank(&self, query: &QueryInput, candidates: &RankedList, corpus: &Corpus) -> Result<RankedList, RankError> {
        let payload = candidates
            .entries
            .iter()
            .map(|e| {
                let a = corpus
                    .get(&e.article_id)
                    .ok_or_else(|| RankError::UnknownArticle(e.article_id.clone()))?;
                Ok(ScoreRequestCandidate {
                    id: a.id.clone(),
                    headline: a.headline.clone(),
                    lead: a.lead_text(),
                })
            })
            .collect::<Result<Vec<_>, RankError>>()?;
        let request = ScoreRequest {
            version: PROTOCOL_VERSION,
            qid: query.qid.clone(),
            event_text: query.event_text.clone(),
            context_text: query.context_text.clone(),
            candidates: payload,
        };
        let scores = if request.candidates.is_empty() {
            Vec::new()
        } else {
            self.call(&request)?
        };
        let mut entries: Vec<Scored> = candidates
            .entries
            .iter()
            .zip(scores)
            .map(|(e, s)| Scored::new(e.article_id.clone(), s))
            .collect();
        sort_entries(&mut entries, published_in(corpus));
        Ok(RankedList::new(candidates.qid.clone(), RankerId::Semantic, entries))
    }
}
