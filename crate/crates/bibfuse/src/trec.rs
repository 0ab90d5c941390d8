//! TREC run and qrels file handling.
//!
//! A *run* is a system's ranked retrieval output in the classic six-column
//! format (`topic Q0 doc rank score tag`); *qrels* are graded relevance
//! judgments in the four-column format (`topic 0 doc grade`). Both parsers are
//! strict: malformed lines are reported with their line number rather than
//! silently skipped.
//!
//! Ranked lists are kept in a single canonical order everywhere in this crate:
//! descending score, ties broken by ascending lexicographic document id.
//! Rank fields read from run files are ignored — scores are the source of
//! truth and ranks are renumbered 1..L on output. This makes parsing
//! insensitive to inconsistent rank columns in submitted runs and guarantees
//! that `parse_run(write_run(r)) == r`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Default depth limit applied when reading runs: entries past this depth are
/// dropped after canonical ordering.
pub const DEFAULT_DEPTH: usize = 1000;

/// Default upper bound for relevance grades (graded judgments 0, 1, 2).
pub const DEFAULT_MAX_GRADE: u32 = 2;

/// An opaque document identifier. Guaranteed non-empty and free of
/// whitespace, so it can round-trip through whitespace-separated file formats.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DocId(String);

impl DocId {
    /// Validates and wraps a document id.
    pub fn new(value: impl Into<String>) -> Result<Self> {
        let value = value.into();
        if value.is_empty() {
            return Err(Error::invalid("document id must be non-empty"));
        }
        if value.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!(
                "document id {value:?} contains whitespace"
            )));
        }
        Ok(DocId(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for DocId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// One topic's ordering of documents with retrieval scores.
///
/// Entries are always held in canonical order (descending score, ties broken
/// by ascending document id) and contain no duplicate documents; every
/// constructor enforces this, so consumers can rely on `entries()[i]` being
/// the document at rank `i + 1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedList {
    entries: Vec<(DocId, f64)>,
}

impl RankedList {
    /// Builds a canonical list from arbitrary `(doc, score)` pairs.
    ///
    /// Scores must be finite; duplicate document ids are rejected rather than
    /// merged because a duplicate always signals an upstream bug.
    pub fn from_scores(entries: Vec<(DocId, f64)>) -> Result<Self> {
        let mut seen: HashSet<&str> = HashSet::with_capacity(entries.len());
        for (doc, score) in &entries {
            if !score.is_finite() {
                return Err(Error::invalid(format!(
                    "non-finite score {score} for document {doc}"
                )));
            }
            if !seen.insert(doc.as_str()) {
                return Err(Error::invalid(format!("duplicate document {doc} in list")));
            }
        }
        let mut entries = entries;
        sort_canonical(&mut entries);
        Ok(RankedList { entries })
    }

    /// Entries in canonical order; position `i` is rank `i + 1`.
    pub fn entries(&self) -> &[(DocId, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(DocId, f64)> {
        self.entries.iter()
    }

    pub fn docs(&self) -> impl Iterator<Item = &DocId> {
        self.entries.iter().map(|(doc, _)| doc)
    }

    pub fn contains(&self, doc: &DocId) -> bool {
        self.entries.iter().any(|(d, _)| d == doc)
    }

    /// 1-based rank of `doc`, if present. Linear scan; build a map for bulk
    /// lookups.
    pub fn rank_of(&self, doc: &DocId) -> Option<usize> {
        self.entries.iter().position(|(d, _)| d == doc).map(|i| i + 1)
    }

    /// Keeps only the `depth` highest-ranked entries.
    pub fn truncate(&mut self, depth: usize) {
        self.entries.truncate(depth);
    }

    /// Returns a copy limited to the `depth` highest-ranked entries.
    pub fn truncated(&self, depth: usize) -> Self {
        RankedList {
            entries: self.entries.iter().take(depth).cloned().collect(),
        }
    }

    /// Re-derives the canonical order from the stored scores. Lists are
    /// canonical by construction, so this is the identity; it exists so the
    /// ordering rule can be applied (and tested) as an explicit operation.
    pub fn canonicalized(&self) -> Self {
        let mut entries = self.entries.clone();
        sort_canonical(&mut entries);
        RankedList { entries }
    }
}

impl<'a> IntoIterator for &'a RankedList {
    type Item = &'a (DocId, f64);
    type IntoIter = std::slice::Iter<'a, (DocId, f64)>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

/// Descending score, ties broken by ascending document id. Scores are finite
/// by construction, so `total_cmp` agrees with the usual ordering while still
/// being a total order.
fn sort_canonical(entries: &mut [(DocId, f64)]) {
    entries.sort_by(|(doc_a, score_a), (doc_b, score_b)| {
        score_b
            .total_cmp(score_a)
            .then_with(|| doc_a.cmp(doc_b))
    });
}

/// A complete system run: one canonical [`RankedList`] per topic, plus the
/// run tag identifying the system.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    tag: String,
    topics: BTreeMap<String, RankedList>,
}

impl Run {
    pub fn new(tag: impl Into<String>, topics: BTreeMap<String, RankedList>) -> Self {
        Run {
            tag: tag.into(),
            topics,
        }
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// Replaces the run tag, keeping the rankings.
    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    /// Topic ids in ascending order with their ranked lists.
    pub fn topics(&self) -> &BTreeMap<String, RankedList> {
        &self.topics
    }

    pub fn topic(&self, topic: &str) -> Option<&RankedList> {
        self.topics.get(topic)
    }

    pub fn n_topics(&self) -> usize {
        self.topics.len()
    }

    /// Applies the canonical ordering rule to every topic list. Runs are
    /// canonical by construction, so this is idempotent.
    pub fn canonicalized(&self) -> Self {
        Run {
            tag: self.tag.clone(),
            topics: self
                .topics
                .iter()
                .map(|(topic, list)| (topic.clone(), list.canonicalized()))
                .collect(),
        }
    }
}

/// Reads a run in the six-column TREC format.
///
/// Empty lines are skipped. Each remaining line must have exactly six
/// whitespace-separated fields; the score must be a finite real number and a
/// `(topic, doc)` pair may appear at most once. The rank column is ignored,
/// the tag is taken from the first line, and each topic's entries are put in
/// canonical order and cut to the `depth_limit` highest-scoring documents.
pub fn parse_run<R: BufRead>(reader: R, depth_limit: usize) -> Result<Run> {
    if depth_limit == 0 {
        return Err(Error::invalid("depth limit must be at least 1"));
    }
    let mut tag: Option<String> = None;
    let mut topics: BTreeMap<String, Vec<(DocId, f64)>> = BTreeMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::parse(
                line_no,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        let topic = fields[0];
        let doc = DocId::new(fields[2])
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        let score: f64 = fields[4].parse().map_err(|_| {
            Error::parse(line_no, format!("invalid score {:?}", fields[4]))
        })?;
        if !score.is_finite() {
            return Err(Error::parse(
                line_no,
                format!("score {:?} is not finite", fields[4]),
            ));
        }
        if !seen.insert((topic.to_string(), doc.as_str().to_string())) {
            return Err(Error::parse(
                line_no,
                format!("duplicate document {doc} for topic {topic}"),
            ));
        }
        if tag.is_none() {
            tag = Some(fields[5].to_string());
        }
        topics
            .entry(topic.to_string())
            .or_default()
            .push((doc, score));
    }

    let tag = tag.ok_or_else(|| Error::invalid("run input contains no entries"))?;
    let topics = topics
        .into_iter()
        .map(|(topic, entries)| {
            let mut list = RankedList::from_scores(entries)?;
            list.truncate(depth_limit);
            Ok((topic, list))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(Run { tag, topics })
}

/// Writes a run in the six-column TREC format.
///
/// Topics are emitted in ascending topic-id order, ranks are renumbered
/// 1..L, and scores are printed with the shortest representation that parses
/// back to the identical value, so `parse_run(write_run(r)) == r`.
pub fn write_run<W: Write>(run: &Run, mut writer: W) -> Result<()> {
    for (topic, list) in run.topics() {
        for (i, (doc, score)) in list.iter().enumerate() {
            writeln!(
                writer,
                "{topic} Q0 {doc} {rank} {score} {tag}",
                rank = i + 1,
                tag = run.tag()
            )?;
        }
    }
    Ok(())
}

/// Convenience wrapper around [`write_run`] producing a `String`.
pub fn run_to_string(run: &Run) -> String {
    let mut buf = Vec::new();
    write_run(run, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("run output is valid UTF-8")
}

/// Graded relevance judgments: `topic -> doc -> grade`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<DocId, u32>>,
}

impl Qrels {
    /// Builds qrels from an in-memory map (mainly for tests and synthetic
    /// data).
    pub fn from_map(judgments: BTreeMap<String, BTreeMap<DocId, u32>>) -> Self {
        Qrels { judgments }
    }

    /// Topic ids in ascending order.
    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(|s| s.as_str())
    }

    pub fn n_topics(&self) -> usize {
        self.judgments.len()
    }

    /// Total number of (topic, doc) judgment pairs.
    pub fn n_judgments(&self) -> usize {
        self.judgments.values().map(|docs| docs.len()).sum()
    }

    pub fn topic_judgments(&self, topic: &str) -> Option<&BTreeMap<DocId, u32>> {
        self.judgments.get(topic)
    }

    pub fn grade(&self, topic: &str, doc: &DocId) -> Option<u32> {
        self.judgments.get(topic).and_then(|docs| docs.get(doc)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeMap<DocId, u32>)> {
        self.judgments.iter().map(|(t, docs)| (t.as_str(), docs))
    }
}

/// Reads qrels in the four-column TREC format with the standard grade range
/// 0..=2. See [`parse_qrels_with_max_grade`] for other grading schemes.
pub fn parse_qrels<R: BufRead>(reader: R) -> Result<Qrels> {
    parse_qrels_with_max_grade(reader, DEFAULT_MAX_GRADE)
}

/// Reads qrels, accepting grades in `0..=max_grade`.
///
/// Each non-empty line must have exactly four whitespace-separated fields
/// (`topic 0 doc grade`); grades outside the accepted range and repeated
/// `(topic, doc)` pairs are rejected with their line number.
pub fn parse_qrels_with_max_grade<R: BufRead>(reader: R, max_grade: u32) -> Result<Qrels> {
    let mut judgments: BTreeMap<String, BTreeMap<DocId, u32>> = BTreeMap::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                line_no,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let topic = fields[0];
        let doc = DocId::new(fields[2])
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        let grade: i64 = fields[3].parse().map_err(|_| {
            Error::parse(line_no, format!("invalid grade {:?}", fields[3]))
        })?;
        if grade < 0 || grade > i64::from(max_grade) {
            return Err(Error::parse(
                line_no,
                format!("grade {grade} outside accepted range 0..={max_grade}"),
            ));
        }
        let prev = judgments
            .entry(topic.to_string())
            .or_default()
            .insert(doc.clone(), grade as u32);
        if prev.is_some() {
            return Err(Error::parse(
                line_no,
                format!("duplicate judgment for topic {topic}, document {doc}"),
            ));
        }
    }

    Ok(Qrels { judgments })
}
