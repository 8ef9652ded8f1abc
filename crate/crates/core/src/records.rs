//! JSON-lines records for candidates, links and raw matches.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::{AcquisitionLink, AcquisitionResult};
use crate::corpus::{Corpus, VariantMatch};
use crate::grammar::{Family, VariantPattern};
use crate::term::{StatusKind, Term};

#[derive(Debug, Error)]
#[error("line {line}: {message}")]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

/// A link as stored in `links.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub source: String,
    pub candidate: String,
    pub family: Family,
    pub rule: String,
    pub head_coordination: bool,
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
    pub cycle: u32,
}

impl From<&AcquisitionLink> for LinkRecord {
    fn from(link: &AcquisitionLink) -> Self {
        LinkRecord {
            source: link.source.text(),
            candidate: link.candidate.text(),
            family: link.family,
            rule: link.rule.to_string(),
            head_coordination: link.head_coordination,
            sentence: link.sentence,
            start: link.start,
            end: link.end,
            cycle: link.cycle,
        }
    }
}

impl TryFrom<LinkRecord> for AcquisitionLink {
    type Error = String;

    fn try_from(r: LinkRecord) -> Result<Self, Self::Error> {
        let term = |text: &str| Term::parse(text).map_err(|e| format!("term {text:?}: {e}"));
        Ok(AcquisitionLink {
            cycle: r.cycle,
            source: term(&r.source)?,
            candidate: term(&r.candidate)?,
            rule: r.rule.into(),
            family: r.family,
            head_coordination: r.head_coordination,
            sentence: r.sentence,
            start: r.start,
            end: r.end,
        })
    }
}

/// An incoming link inside a candidate record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncomingLink {
    pub source: String,
    pub family: Family,
    pub rule: String,
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub term: String,
    pub cycle: u32,
    pub status: StatusKind,
    pub links: Vec<IncomingLink>,
}

/// Candidate records ordered by `(cycle, term)`.
pub fn candidate_records(result: &AcquisitionResult) -> Vec<CandidateRecord> {
    result
        .candidates()
        .into_iter()
        .map(|(term, cycle)| {
            let mut links: Vec<&AcquisitionLink> = result.incoming(term).collect();
            links.sort_by(|a, b| {
                (&a.source, &a.rule, a.sentence, a.start, a.end)
                    .cmp(&(&b.source, &b.rule, b.sentence, b.start, b.end))
            });
            CandidateRecord {
                term: term.text(),
                cycle,
                status: StatusKind::Candidate,
                links: links
                    .into_iter()
                    .map(|l| IncomingLink {
                        source: l.source.text(),
                        family: l.family,
                        rule: l.rule.to_string(),
                        sentence: l.sentence,
                        start: l.start,
                        end: l.end,
                    })
                    .collect(),
            }
        })
        .collect()
}

fn to_jsonl<T: Serialize>(records: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(&record).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn candidates_jsonl(result: &AcquisitionResult) -> String {
    to_jsonl(candidate_records(result))
}

pub fn links_jsonl(links: &[AcquisitionLink]) -> String {
    to_jsonl(links.iter().map(LinkRecord::from))
}

/// Reads `links.jsonl`. Blank lines are ignored.
pub fn parse_links_jsonl(text: &str) -> Result<Vec<AcquisitionLink>, RecordError> {
    let mut links = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| RecordError { line: idx + 1, message };
        let record: LinkRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        links.push(AcquisitionLink::try_from(record).map_err(err)?);
    }
    Ok(links)
}

/// A raw scanner match, for debugging grammars.
#[derive(Debug, Clone, Serialize)]
pub struct MatchRecord {
    pub term: String,
    pub rule: String,
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub slots: Vec<String>,
}

impl MatchRecord {
    pub fn new(corpus: &Corpus, patterns: &[VariantPattern], m: &VariantMatch) -> Self {
        let pattern = &patterns[m.pattern];
        MatchRecord {
            term: pattern.source().text(),
            rule: pattern.origin().rule_name().to_string(),
            sentence: m.sentence,
            start: m.start,
            end: m.end,
            text: corpus.span_text(m.sentence, m.start..m.end),
            slots: m
                .bindings
                .iter()
                .map(|b| corpus.span_text(m.sentence, b.clone()))
                .collect(),
        }
    }
}

pub fn matches_jsonl(corpus: &Corpus, patterns: &[VariantPattern], matches: &[VariantMatch]) -> String {
    to_jsonl(matches.iter().map(|m| MatchRecord::new(corpus, patterns, m)))
}
