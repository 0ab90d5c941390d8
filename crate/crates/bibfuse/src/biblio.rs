//! Bibliometric metadata: loading, signal rankings, candidate pools, and
//! coverage reporting.
//!
//! Metadata lives in a delimited text table with one row per document. Five
//! signals are recognised, addressed by single letters throughout the crate:
//!
//! | letter | signal | ranking direction |
//! |--------|--------|-------------------|
//! | `C` | citation count | more citations first |
//! | `A` | altmetric score | higher attention first |
//! | `P` | publication year | more recent first |
//! | `R` | research level (1-4) | more basic research first |
//! | `I` | journal impact factor | higher impact first |
//!
//! Signal rankings are query-agnostic: the same per-document value is used
//! for every topic, only the candidate pool changes. Documents without a
//! value for a signal are omitted from that signal's ranking — absence is
//! never imputed as zero, since "unmeasured" and "measured as zero" are
//! different statements.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::trec::{DocId, Qrels, RankedList, Run};

/// One of the five bibliometric signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Signal {
    Citations,
    Altmetrics,
    PubYear,
    ResearchLevel,
    ImpactFactor,
}

impl Signal {
    /// All signals in canonical presentation order.
    pub const ALL: [Signal; 5] = [
        Signal::Citations,
        Signal::Altmetrics,
        Signal::PubYear,
        Signal::ResearchLevel,
        Signal::ImpactFactor,
    ];

    /// Single-letter code used in subset labels and CSV output.
    pub fn letter(self) -> char {
        match self {
            Signal::Citations => 'C',
            Signal::Altmetrics => 'A',
            Signal::PubYear => 'P',
            Signal::ResearchLevel => 'R',
            Signal::ImpactFactor => 'I',
        }
    }

    pub fn from_letter(c: char) -> Option<Signal> {
        match c.to_ascii_uppercase() {
            'C' => Some(Signal::Citations),
            'A' => Some(Signal::Altmetrics),
            'P' => Some(Signal::PubYear),
            'R' => Some(Signal::ResearchLevel),
            'I' => Some(Signal::ImpactFactor),
            _ => None,
        }
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// An ordered, duplicate-free subset of the five signals.
///
/// Subsets print and parse as letter strings in canonical `C A P R I` order,
/// so `"pac".parse::<SignalSet>()` and `"CAP".parse()` denote the same
/// subset and both display as `"CAP"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SignalSet {
    members: Vec<Signal>,
}

impl SignalSet {
    pub fn new(signals: impl IntoIterator<Item = Signal>) -> Self {
        let mut members: Vec<Signal> = Vec::new();
        for s in signals {
            if !members.contains(&s) {
                members.push(s);
            }
        }
        members.sort_by_key(|s| Signal::ALL.iter().position(|a| a == s));
        SignalSet { members }
    }

    pub fn empty() -> Self {
        SignalSet { members: Vec::new() }
    }

    pub fn full() -> Self {
        SignalSet::new(Signal::ALL)
    }

    pub fn members(&self) -> &[Signal] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, signal: Signal) -> bool {
        self.members.contains(&signal)
    }

    /// All 31 non-empty subsets, enumerated in binary-counter order over
    /// `(C, A, P, R, I)`: C, A, CA, P, CP, AP, CAP, R, ...
    pub fn all_non_empty() -> Vec<SignalSet> {
        SignalSet::full().subsets()
    }

    /// All non-empty subsets of this set, in binary-counter order over its
    /// members (first member is the least significant bit).
    pub fn subsets(&self) -> Vec<SignalSet> {
        let n = self.members.len() as u32;
        (1u32..(1u32 << n))
            .map(|mask| {
                SignalSet::new(
                    self.members
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, s)| *s),
                )
            })
            .collect()
    }
}

impl fmt::Display for SignalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.members {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for SignalSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut members = Vec::new();
        for c in s.trim().chars() {
            let signal = Signal::from_letter(c).ok_or_else(|| {
                Error::config(format!("unknown signal letter {c:?} in subset {s:?}"))
            })?;
            members.push(signal);
        }
        Ok(SignalSet::new(members))
    }
}

/// Bibliometric values for one document. Any field may be missing; a record
/// with no values at all is rejected at load time.
#[derive(Debug, Clone, PartialEq)]
pub struct BiblioRecord {
    pub doc: DocId,
    pub citations: Option<u64>,
    pub altmetric: Option<f64>,
    pub pub_year: Option<i32>,
    pub research_level: Option<u8>,
    pub impact_factor: Option<f64>,
}

impl BiblioRecord {
    /// A record with every field missing; fill in what is known.
    pub fn new(doc: DocId) -> Self {
        BiblioRecord {
            doc,
            citations: None,
            altmetric: None,
            pub_year: None,
            research_level: None,
            impact_factor: None,
        }
    }

    pub fn has_signal(&self, signal: Signal) -> bool {
        self.signal_score(signal).is_some()
    }

    /// The value used for ranking on `signal`, if present. All signals rank
    /// descending, so the raw value doubles as the score (research level 4 =
    /// basic research sorts first; later publication years sort first).
    pub fn signal_score(&self, signal: Signal) -> Option<f64> {
        match signal {
            Signal::Citations => self.citations.map(|c| c as f64),
            Signal::Altmetrics => self.altmetric,
            Signal::PubYear => self.pub_year.map(f64::from),
            Signal::ResearchLevel => self.research_level.map(f64::from),
            Signal::ImpactFactor => self.impact_factor,
        }
    }

    fn has_any_signal(&self) -> bool {
        Signal::ALL.iter().any(|s| self.has_signal(*s))
    }

    fn validate(&self) -> Result<()> {
        if !self.has_any_signal() {
            return Err(Error::invalid(format!(
                "record for document {} has no bibliometric values",
                self.doc
            )));
        }
        if let Some(level) = self.research_level {
            if !(1..=4).contains(&level) {
                return Err(Error::invalid(format!(
                    "research level {level} for document {} outside 1..=4",
                    self.doc
                )));
            }
        }
        for (name, value) in [
            ("altmetric", self.altmetric),
            ("impact factor", self.impact_factor),
        ] {
            if let Some(v) = value {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid(format!(
                        "{name} {v} for document {} must be finite and non-negative",
                        self.doc
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Binds the table's column names to the fields of [`BiblioRecord`], so the
/// loader survives schema drift in published metadata exports without code
/// changes.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMap {
    pub doc_id: String,
    pub citations: String,
    pub altmetric: String,
    pub pub_year: String,
    pub research_level: String,
    pub impact_factor: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            doc_id: "pmid".to_string(),
            citations: "citations".to_string(),
            altmetric: "altmetric".to_string(),
            pub_year: "pub_year".to_string(),
            research_level: "research_level".to_string(),
            impact_factor: "impact_factor".to_string(),
        }
    }
}

/// The metadata table: one validated record per document.
#[derive(Debug, Clone, Default)]
pub struct BiblioTable {
    records: BTreeMap<DocId, BiblioRecord>,
}

impl BiblioTable {
    /// Builds a table from in-memory records, enforcing the per-record
    /// invariants and uniqueness of document ids.
    pub fn from_records(records: impl IntoIterator<Item = BiblioRecord>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for record in records {
            record.validate()?;
            let doc = record.doc.clone();
            if map.insert(doc.clone(), record).is_some() {
                return Err(Error::invalid(format!("duplicate record for document {doc}")));
            }
        }
        Ok(BiblioTable { records: map })
    }

    pub fn get(&self, doc: &DocId) -> Option<&BiblioRecord> {
        self.records.get(doc)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &BiblioRecord> {
        self.records.values()
    }
}

/// Loads the metadata table from delimited text with a header row.
///
/// All six mapped columns must exist in the header. Empty cells are missing
/// values; anything else must parse for its field type (citations as a
/// non-negative integer, publication year as an integer, research level as
/// an integer in 1..=4, altmetric and impact factor as non-negative reals).
/// Rows with no values at all and repeated document ids are rejected. Errors
/// carry the offending row number.
pub fn load_biblio_table<R: Read>(
    reader: R,
    columns: &ColumnMap,
    delimiter: u8,
) -> Result<BiblioTable> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .from_reader(reader);

    let headers = csv_reader.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "column {name:?} not found in table header (available: {})",
                    headers.iter().collect::<Vec<_>>().join(", ")
                ))
            })
    };
    let doc_col = find(&columns.doc_id)?;
    let cit_col = find(&columns.citations)?;
    let alt_col = find(&columns.altmetric)?;
    let year_col = find(&columns.pub_year)?;
    let level_col = find(&columns.research_level)?;
    let impact_col = find(&columns.impact_factor)?;

    let mut records = Vec::new();
    for (idx, row) in csv_reader.records().enumerate() {
        // Row 1 is the header, so data rows start at 2.
        let row_no = idx + 2;
        let row = row?;
        let cell = |col: usize| row.get(col).map(str::trim).unwrap_or("");

        let doc = DocId::new(cell(doc_col))
            .map_err(|e| Error::parse(row_no, e.to_string()))?;
        let mut record = BiblioRecord::new(doc);
        record.citations = parse_cell(cell(cit_col), row_no, &columns.citations)?;
        record.altmetric = parse_cell(cell(alt_col), row_no, &columns.altmetric)?;
        record.pub_year = parse_cell(cell(year_col), row_no, &columns.pub_year)?;
        record.research_level = parse_cell(cell(level_col), row_no, &columns.research_level)?;
        record.impact_factor = parse_cell(cell(impact_col), row_no, &columns.impact_factor)?;
        record
            .validate()
            .map_err(|e| Error::parse(row_no, e.to_string()))?;
        records.push((row_no, record));
    }

    let mut map = BTreeMap::new();
    for (row_no, record) in records {
        let doc = record.doc.clone();
        if map.insert(doc.clone(), record).is_some() {
            return Err(Error::parse(
                row_no,
                format!("duplicate record for document {doc}"),
            ));
        }
    }
    Ok(BiblioTable { records: map })
}

/// Parses one table cell; empty means missing.
fn parse_cell<T: FromStr>(cell: &str, row_no: usize, column: &str) -> Result<Option<T>> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<T>().map(Some).map_err(|_| {
        Error::parse(
            row_no,
            format!("invalid value {cell:?} in column {column:?}"),
        )
    })
}

/// Which documents a query-agnostic signal ranking may draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolPolicy {
    /// All documents judged for the topic, any grade. The default for
    /// evaluating signals on their own.
    Judged,
    /// The documents a baseline system retrieved for the topic. Used when
    /// fusing with a system run, so fusion is a re-ranking of the system's
    /// result set.
    Run,
}

impl fmt::Display for PoolPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PoolPolicy::Judged => f.write_str("judged"),
            PoolPolicy::Run => f.write_str("run"),
        }
    }
}

impl FromStr for PoolPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "judged" => Ok(PoolPolicy::Judged),
            "run" => Ok(PoolPolicy::Run),
            other => Err(Error::config(format!(
                "unknown pool policy {other:?} (expected \"judged\" or \"run\")"
            ))),
        }
    }
}

/// Resolves the candidate documents for `topic` under `policy`.
///
/// `base_run` is only consulted for [`PoolPolicy::Run`] and must then be
/// provided. A topic missing from the required source is an error rather
/// than an empty pool, since it always signals mismatched inputs.
pub fn candidate_pool(
    policy: PoolPolicy,
    topic: &str,
    qrels: &Qrels,
    base_run: Option<&Run>,
) -> Result<BTreeSet<DocId>> {
    match policy {
        PoolPolicy::Judged => {
            let judgments = qrels.topic_judgments(topic).ok_or_else(|| {
                Error::invalid(format!("topic {topic} has no judgments"))
            })?;
            Ok(judgments.keys().cloned().collect())
        }
        PoolPolicy::Run => {
            let run = base_run.ok_or_else(|| {
                Error::invalid("run pool policy requires a baseline run".to_string())
            })?;
            let list = run.topic(topic).ok_or_else(|| {
                Error::invalid(format!(
                    "topic {topic} not present in baseline run {}",
                    run.tag()
                ))
            })?;
            Ok(list.docs().cloned().collect())
        }
    }
}

/// Ranks `candidates` by their value on `signal`, highest first, ties broken
/// by ascending document id. Candidates without a value are omitted, so the
/// result length is the number of candidates holding the signal.
pub fn signal_ranking(
    signal: Signal,
    candidates: &BTreeSet<DocId>,
    table: &BiblioTable,
) -> Result<RankedList> {
    if candidates.is_empty() {
        return Err(Error::invalid("candidate pool is empty"));
    }
    let entries: Vec<(DocId, f64)> = candidates
        .iter()
        .filter_map(|doc| {
            table
                .get(doc)
                .and_then(|record| record.signal_score(signal))
                .map(|score| (doc.clone(), score))
        })
        .collect();
    RankedList::from_scores(entries)
}

/// Per-signal coverage over the judged documents of a collection.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalCoverage {
    pub signal: Signal,
    /// Unique judged documents holding the signal.
    pub count: usize,
    /// `count` divided by the number of unique judged documents.
    pub fraction: f64,
}

/// Counts, for each signal, how many unique judged documents carry a value.
///
/// The denominator is the number of unique documents judged for any topic;
/// a document judged for several topics is counted once.
pub fn signal_coverage(qrels: &Qrels, table: &BiblioTable) -> Vec<SignalCoverage> {
    let judged: BTreeSet<&DocId> = qrels
        .iter()
        .flat_map(|(_, docs)| docs.keys())
        .collect();
    let total = judged.len();
    Signal::ALL
        .iter()
        .map(|&signal| {
            let count = judged
                .iter()
                .filter(|doc| {
                    table
                        .get(doc)
                        .map(|record| record.has_signal(signal))
                        .unwrap_or(false)
                })
                .count();
            let fraction = if total == 0 {
                0.0
            } else {
                count as f64 / total as f64
            };
            SignalCoverage {
                signal,
                count,
                fraction,
            }
        })
        .collect()
}
