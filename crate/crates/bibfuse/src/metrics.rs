//! Retrieval effectiveness metrics and batch evaluation.
//!
//! Six measures are provided, all operating on one topic's canonical ranked
//! list and that topic's graded judgments:
//!
//! * recall and precision at a cutoff (precision always divides by the
//!   cutoff, even when fewer documents were retrieved),
//! * average precision,
//! * nDCG with graded gains — linear `g` by default, `2^g - 1` as an option,
//! * bpref, which only compares judged documents and so is robust to
//!   incomplete judgment pools,
//! * rank-biased precision with patience parameter `p`.
//!
//! Graded judgments binarize as `grade >= 1` wherever a metric needs binary
//! relevance. Unjudged documents count as non-relevant for recall,
//! precision, average precision, nDCG, and RBP; bpref ignores them.
//!
//! [`evaluate_run`] applies a battery of metrics to every topic of a run and
//! macro-averages over topics. Topics without any relevant document are
//! excluded from the average rather than scored as zero, matching standard
//! evaluation-tool behavior.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::trec::{DocId, Qrels, RankedList, Run};

/// How graded relevance turns into gain for nDCG.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gain {
    /// Gain equals the grade.
    Linear,
    /// Gain is `2^grade - 1`, emphasizing highly relevant documents.
    Exponential,
}

impl std::str::FromStr for Gain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Gain::Linear),
            "exp" | "exponential" => Ok(Gain::Exponential),
            other => Err(Error::config(format!(
                "unknown gain function {other:?} (expected linear or exponential)"
            ))),
        }
    }
}

impl Gain {
    fn apply(self, grade: u32) -> f64 {
        match self {
            Gain::Linear => f64::from(grade),
            Gain::Exponential => (2.0_f64).powi(grade as i32) - 1.0,
        }
    }
}

/// A metric with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Recall { cutoff: usize },
    Precision { cutoff: usize },
    AveragePrecision { cutoff: usize },
    Ndcg { cutoff: usize, gain: Gain },
    Bpref { cutoff: usize },
    Rbp { p: f64, depth: usize },
}

impl Metric {
    /// Short name for the `metric` column of reports. The nDCG gain variant
    /// and the RBP patience parameter are part of the name, so rows remain
    /// self-describing.
    pub fn name(&self) -> String {
        match self {
            Metric::Recall { .. } => "recall".to_string(),
            Metric::Precision { .. } => "p".to_string(),
            Metric::AveragePrecision { .. } => "ap".to_string(),
            Metric::Ndcg {
                gain: Gain::Linear, ..
            } => "ndcg".to_string(),
            Metric::Ndcg {
                gain: Gain::Exponential,
                ..
            } => "ndcg_exp".to_string(),
            Metric::Bpref { .. } => "bpref".to_string(),
            Metric::Rbp { p, .. } => format!("rbp_p={p}"),
        }
    }

    /// The rank cutoff recorded in reports (the evaluation depth for RBP).
    pub fn cutoff(&self) -> usize {
        match self {
            Metric::Recall { cutoff }
            | Metric::Precision { cutoff }
            | Metric::AveragePrecision { cutoff }
            | Metric::Ndcg { cutoff, .. }
            | Metric::Bpref { cutoff } => *cutoff,
            Metric::Rbp { depth, .. } => *depth,
        }
    }

    /// `name@cutoff`, the key used for per-topic values and aggregates.
    pub fn label(&self) -> String {
        format!("{}@{}", self.name(), self.cutoff())
    }

    pub fn validate(&self) -> Result<()> {
        if self.cutoff() == 0 {
            return Err(Error::invalid(format!(
                "metric {} needs a cutoff of at least 1",
                self.name()
            )));
        }
        if let Metric::Rbp { p, .. } = self {
            if !p.is_finite() || *p <= 0.0 || *p >= 1.0 {
                return Err(Error::invalid(format!(
                    "patience parameter must lie strictly between 0 and 1, got {p}"
                )));
            }
        }
        Ok(())
    }

    /// Evaluates the metric for one topic. `None` means the topic cannot be
    /// scored for this metric and is excluded from averages.
    pub fn score(&self, list: &RankedList, judgments: &BTreeMap<DocId, u32>) -> Option<f64> {
        match self {
            Metric::Recall { cutoff } => recall_at(list, judgments, *cutoff),
            Metric::Precision { cutoff } => Some(precision_at(list, judgments, *cutoff)),
            Metric::AveragePrecision { cutoff } => average_precision(list, judgments, *cutoff),
            Metric::Ndcg { cutoff, gain } => ndcg(list, judgments, *cutoff, *gain),
            Metric::Bpref { cutoff } => bpref(list, judgments, *cutoff),
            Metric::Rbp { p, depth } => Some(rbp(list, judgments, *p, *depth)),
        }
    }
}

/// The binarization rule shared by every binary-relevance computation.
pub fn binary_relevant(grade: u32) -> bool {
    grade >= 1
}

fn n_relevant(judgments: &BTreeMap<DocId, u32>) -> usize {
    judgments.values().filter(|g| binary_relevant(**g)).count()
}

fn is_relevant(judgments: &BTreeMap<DocId, u32>, doc: &DocId) -> bool {
    judgments.get(doc).map(|g| binary_relevant(*g)).unwrap_or(false)
}

/// Fraction of the topic's relevant documents found in the top `cutoff`.
/// `None` when the topic has no relevant documents.
pub fn recall_at(
    list: &RankedList,
    judgments: &BTreeMap<DocId, u32>,
    cutoff: usize,
) -> Option<f64> {
    let total_relevant = n_relevant(judgments);
    if total_relevant == 0 {
        return None;
    }
    let hits = list
        .iter()
        .take(cutoff)
        .filter(|(doc, _)| is_relevant(judgments, doc))
        .count();
    Some(hits as f64 / total_relevant as f64)
}

/// Relevant documents in the top `cutoff`, divided by `cutoff`. The divisor
/// is the cutoff even when the list is shorter, so retrieving fewer
/// documents cannot inflate precision.
pub fn precision_at(list: &RankedList, judgments: &BTreeMap<DocId, u32>, cutoff: usize) -> f64 {
    if cutoff == 0 {
        return 0.0;
    }
    let hits = list
        .iter()
        .take(cutoff)
        .filter(|(doc, _)| is_relevant(judgments, doc))
        .count();
    hits as f64 / cutoff as f64
}

/// Mean of precision values at each relevant document's rank (within the
/// cutoff), divided by the topic's total number of relevant documents.
/// `None` when the topic has no relevant documents.
pub fn average_precision(
    list: &RankedList,
    judgments: &BTreeMap<DocId, u32>,
    cutoff: usize,
) -> Option<f64> {
    let total_relevant = n_relevant(judgments);
    if total_relevant == 0 {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, (doc, _)) in list.iter().take(cutoff).enumerate() {
        if is_relevant(judgments, doc) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / total_relevant as f64)
}

/// Normalized discounted cumulative gain at `cutoff` with a
/// `1 / log2(rank + 1)` discount. The ideal ranking orders all judged
/// documents by grade. `None` when every judged grade is zero.
pub fn ndcg(
    list: &RankedList,
    judgments: &BTreeMap<DocId, u32>,
    cutoff: usize,
    gain: Gain,
) -> Option<f64> {
    let mut grades: Vec<u32> = judgments.values().copied().collect();
    grades.sort_unstable_by(|a, b| b.cmp(a));
    if grades.first().map_or(true, |g| *g == 0) {
        return None;
    }

    let discount = |i: usize| ((i + 2) as f64).log2(); // rank i+1 → log2(rank+1)
    let dcg: f64 = list
        .iter()
        .take(cutoff)
        .enumerate()
        .map(|(i, (doc, _))| {
            let grade = judgments.get(doc).copied().unwrap_or(0);
            gain.apply(grade) / discount(i)
        })
        .sum();
    let ideal: f64 = grades
        .iter()
        .take(cutoff)
        .enumerate()
        .map(|(i, grade)| gain.apply(*grade) / discount(i))
        .sum();
    Some(dcg / ideal)
}

/// Binary preference: how often relevant documents rank above judged
/// non-relevant ones, ignoring unjudged documents entirely.
///
/// With `R` relevant and `N` judged non-relevant documents,
/// `bpref = (1/R) Σ_r (1 - min(#nonrel above r, min(R, N)) / min(R, N))`
/// summed over retrieved relevant documents within the cutoff. `None` when
/// either `R` or `N` is zero.
pub fn bpref(list: &RankedList, judgments: &BTreeMap<DocId, u32>, cutoff: usize) -> Option<f64> {
    let total_relevant = n_relevant(judgments);
    let total_nonrelevant = judgments.len() - total_relevant;
    if total_relevant == 0 || total_nonrelevant == 0 {
        return None;
    }
    let cap = total_relevant.min(total_nonrelevant) as f64;

    let mut nonrel_above = 0usize;
    let mut sum = 0.0;
    for (doc, _) in list.iter().take(cutoff) {
        match judgments.get(doc) {
            Some(grade) if binary_relevant(*grade) => {
                sum += 1.0 - (nonrel_above as f64).min(cap) / cap;
            }
            Some(_) => nonrel_above += 1,
            None => {}
        }
    }
    Some(sum / total_relevant as f64)
}

/// Rank-biased precision: `(1 - p) Σ_i r_i p^(i-1)` over the top `depth`
/// entries, with binary relevance `r_i`. Models a user who inspects the
/// next document with probability `p`; high patience weights deep ranks.
pub fn rbp(list: &RankedList, judgments: &BTreeMap<DocId, u32>, p: f64, depth: usize) -> f64 {
    let mut weight = 1.0; // p^(i-1) for the current rank
    let mut sum = 0.0;
    for (doc, _) in list.iter().take(depth) {
        if is_relevant(judgments, doc) {
            sum += weight;
        }
        weight *= p;
    }
    (1.0 - p) * sum
}

/// Per-topic and aggregate metric values for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    run_tag: String,
    metrics: Vec<Metric>,
    /// topic → metric label → value. Only scorable (topic, metric) pairs
    /// appear.
    per_topic: BTreeMap<String, BTreeMap<String, f64>>,
    /// metric label → mean over the topics that were scored for it.
    aggregate: BTreeMap<String, f64>,
}

impl EvalReport {
    pub fn run_tag(&self) -> &str {
        &self.run_tag
    }

    pub fn metrics(&self) -> &[Metric] {
        &self.metrics
    }

    /// Topics that were evaluated (had judgments and at least one relevant
    /// document), in ascending order.
    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.per_topic.keys().map(|t| t.as_str())
    }

    pub fn n_topics(&self) -> usize {
        self.per_topic.len()
    }

    pub fn topic_value(&self, topic: &str, metric_label: &str) -> Option<f64> {
        self.per_topic.get(topic).and_then(|m| m.get(metric_label)).copied()
    }

    /// Macro-averaged value for a metric label such as `"ndcg@1000"`.
    pub fn aggregate(&self, metric_label: &str) -> Option<f64> {
        self.aggregate.get(metric_label).copied()
    }

    pub fn aggregates(&self) -> &BTreeMap<String, f64> {
        &self.aggregate
    }

    /// Writes the report as CSV: `run_tag,topic,metric,cutoff,value` rows
    /// for every scored (topic, metric) pair, followed by one `ALL` row per
    /// metric carrying the macro average.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["run_tag", "topic", "metric", "cutoff", "value"])?;
        self.write_csv_rows(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn write_csv_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for (topic, values) in &self.per_topic {
            for metric in &self.metrics {
                if let Some(value) = values.get(&metric.label()) {
                    w.write_record([
                        self.run_tag.as_str(),
                        topic.as_str(),
                        &metric.name(),
                        &metric.cutoff().to_string(),
                        &value.to_string(),
                    ])?;
                }
            }
        }
        for metric in &self.metrics {
            if let Some(value) = self.aggregate.get(&metric.label()) {
                w.write_record([
                    self.run_tag.as_str(),
                    "ALL",
                    &metric.name(),
                    &metric.cutoff().to_string(),
                    &value.to_string(),
                ])?;
            }
        }
        Ok(())
    }
}

/// Writes several reports into one CSV stream with a single header.
pub fn write_reports_csv<W: Write>(reports: &[EvalReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["run_tag", "topic", "metric", "cutoff", "value"])?;
    for report in reports {
        report.write_csv_rows(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

/// Evaluates `run` against `qrels` with the given metric battery.
///
/// Topics the run retrieved but that have no judgments are skipped with a
/// warning; topics whose judgments contain no relevant document are skipped
/// (for every metric) and logged. Metrics may additionally skip a topic they
/// cannot score — bpref needs at least one judged non-relevant document.
pub fn evaluate_run(run: &Run, qrels: &Qrels, metrics: &[Metric]) -> Result<EvalReport> {
    for metric in metrics {
        metric.validate()?;
    }

    let mut per_topic: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();

    for (topic, list) in run.topics() {
        let Some(judgments) = qrels.topic_judgments(topic) else {
            log::warn!(
                "run {}: topic {topic} has no judgments, skipping",
                run.tag()
            );
            continue;
        };
        if n_relevant(judgments) == 0 {
            log::info!(
                "run {}: topic {topic} has no relevant documents, excluded from averages",
                run.tag()
            );
            continue;
        }
        let mut values = BTreeMap::new();
        for metric in metrics {
            if let Some(value) = metric.score(list, judgments) {
                debug_assert!(
                    (-1e-9..=1.0 + 1e-9).contains(&value),
                    "{} out of range: {value}",
                    metric.label()
                );
                values.insert(metric.label(), value);
                let entry = sums.entry(metric.label()).or_insert((0.0, 0));
                entry.0 += value;
                entry.1 += 1;
            }
        }
        per_topic.insert(topic.clone(), values);
    }

    let aggregate = sums
        .into_iter()
        .map(|(label, (sum, n))| (label, sum / n as f64))
        .collect();

    Ok(EvalReport {
        run_tag: run.tag().to_string(),
        metrics: metrics.to_vec(),
        per_topic,
        aggregate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn doc(id: &str) -> DocId {
        DocId::new(id).unwrap()
    }

    fn list(ids: &[&str]) -> RankedList {
        // Scores decrease with position so the given order is canonical.
        RankedList::from_scores(
            ids.iter()
                .enumerate()
                .map(|(i, id)| (doc(id), (ids.len() - i) as f64))
                .collect(),
        )
        .unwrap()
    }

    fn judgments(pairs: &[(&str, u32)]) -> BTreeMap<DocId, u32> {
        pairs.iter().map(|(id, g)| (doc(id), *g)).collect()
    }

    #[test]
    fn recall_counts_relevant_in_cutoff_over_all_relevant() {
        // 3 relevant total, 2 in the top 5.
        let l = list(&["r1", "n1", "r2", "n2", "n3", "r3"]);
        let j = judgments(&[("r1", 1), ("r2", 2), ("r3", 1), ("n1", 0), ("n2", 0)]);
        let got = recall_at(&l, &j, 5).unwrap();
        assert!((got - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn recall_is_none_without_relevant_docs() {
        let l = list(&["a", "b"]);
        let j = judgments(&[("a", 0), ("b", 0)]);
        assert_eq!(recall_at(&l, &j, 10), None);
    }

    #[test]
    fn precision_divides_by_cutoff_not_list_length() {
        // Only 3 documents retrieved, 2 relevant, cutoff 10 → 0.2.
        let l = list(&["r1", "r2", "n1"]);
        let j = judgments(&[("r1", 1), ("r2", 1), ("n1", 0)]);
        assert!((precision_at(&l, &j, 10) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn unjudged_docs_count_as_nonrelevant_for_precision() {
        let l = list(&["r1", "u1", "u2", "u3", "u4", "u5", "u6", "u7", "u8", "u9"]);
        let j = judgments(&[("r1", 2)]);
        assert!((precision_at(&l, &j, 10) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn average_precision_matches_hand_computation() {
        // Ranking [rel, nonrel, rel], R = 2: AP = (1/1 + 2/3) / 2.
        let l = list(&["r1", "n1", "r2"]);
        let j = judgments(&[("r1", 1), ("r2", 1), ("n1", 0)]);
        let got = average_precision(&l, &j, 1000).unwrap();
        assert!((got - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn average_precision_denominator_counts_unretrieved_relevant() {
        // Same ranking but a third relevant document was never retrieved.
        let l = list(&["r1", "n1", "r2"]);
        let j = judgments(&[("r1", 1), ("r2", 1), ("r3", 1), ("n1", 0)]);
        let got = average_precision(&l, &j, 1000).unwrap();
        assert!((got - (1.0 + 2.0 / 3.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ndcg_matches_hand_computation_with_linear_gain() {
        // Grades in ranking order [2, 0, 1]; judged pool {2, 1, 0}.
        // DCG = 2/log2(2) + 0/log2(3) + 1/log2(4) = 2.5
        // IDCG = 2/log2(2) + 1/log2(3) ≈ 2.6309 → nDCG ≈ 0.95023.
        let l = list(&["a", "b", "c"]);
        let j = judgments(&[("a", 2), ("b", 0), ("c", 1)]);
        let got = ndcg(&l, &j, 1000, Gain::Linear).unwrap();
        let expect = 2.5 / (2.0 + 1.0 / 3.0_f64.log2());
        assert!((got - expect).abs() < 1e-12);
        assert!((got - 0.95023).abs() < 1e-4);
    }

    #[test]
    fn ndcg_of_ideal_ranking_is_one() {
        let l = list(&["best", "good", "bad"]);
        let j = judgments(&[("best", 2), ("good", 1), ("bad", 0)]);
        let got = ndcg(&l, &j, 1000, Gain::Linear).unwrap();
        assert!((got - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ndcg_is_none_when_all_grades_are_zero() {
        let l = list(&["a"]);
        let j = judgments(&[("a", 0), ("b", 0)]);
        assert_eq!(ndcg(&l, &j, 10, Gain::Linear), None);
    }

    #[test]
    fn exponential_gain_weights_high_grades_more() {
        // Swapping a grade-2 and grade-1 doc hurts more under exponential
        // gain: the same ranking scores lower relative to linear gain.
        let l = list(&["one", "two"]);
        let j = judgments(&[("one", 1), ("two", 2)]);
        let linear = ndcg(&l, &j, 10, Gain::Linear).unwrap();
        let exponential = ndcg(&l, &j, 10, Gain::Exponential).unwrap();
        assert!(exponential < linear);
    }

    #[test]
    fn bpref_matches_hand_computation() {
        // [rel, nonrel, rel, nonrel], R = N = 2:
        // (1/2) ((1 - 0/2) + (1 - 1/2)) = 0.75.
        let l = list(&["r1", "n1", "r2", "n2"]);
        let j = judgments(&[("r1", 1), ("r2", 1), ("n1", 0), ("n2", 0)]);
        let got = bpref(&l, &j, 1000).unwrap();
        assert!((got - 0.75).abs() < 1e-15);
    }

    #[test]
    fn bpref_ignores_unjudged_documents() {
        // Unjudged docs between the relevant ones change nothing.
        let with_unjudged = list(&["r1", "u1", "u2", "n1", "u3", "r2"]);
        let without = list(&["r1", "n1", "r2"]);
        let j = judgments(&[("r1", 1), ("r2", 1), ("n1", 0), ("n2", 0)]);
        assert_eq!(
            bpref(&with_unjudged, &j, 1000),
            bpref(&without, &j, 1000)
        );
    }

    #[test]
    fn bpref_needs_both_judged_classes() {
        let l = list(&["a", "b"]);
        assert_eq!(bpref(&l, &judgments(&[("a", 1)]), 10), None);
        assert_eq!(bpref(&l, &judgments(&[("a", 0)]), 10), None);
    }

    #[test]
    fn bpref_caps_nonrelevant_counts() {
        // R = 1, N = 3: every nonrel count above min(R, N) = 1 saturates, so
        // the relevant doc at the bottom scores 1 - min(3, 1)/1 = 0.
        let l = list(&["n1", "n2", "n3", "r1"]);
        let j = judgments(&[("r1", 1), ("n1", 0), ("n2", 0), ("n3", 0)]);
        let got = bpref(&l, &j, 1000).unwrap();
        assert_eq!(got, 0.0);
    }

    #[test]
    fn rbp_matches_hand_computation() {
        // Single relevant doc at rank 1, p = 0.8 → (1 - 0.8) * 1 = 0.2.
        let l = list(&["r1", "n1"]);
        let j = judgments(&[("r1", 1), ("n1", 0)]);
        assert!((rbp(&l, &j, 0.8, 1000) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rbp_of_all_relevant_prefix_is_geometric_sum() {
        // d relevant docs at ranks 1..=d: RBP = (1-p) Σ p^(i-1) = 1 - p^d.
        let ids: Vec<String> = (0..10).map(|i| format!("r{i}")).collect();
        let refs: Vec<&str> = ids.iter().map(|s| s.as_str()).collect();
        let l = list(&refs);
        let j: BTreeMap<DocId, u32> = ids.iter().map(|id| (doc(id), 1)).collect();
        let p: f64 = 0.9;
        let got = rbp(&l, &j, p, 10);
        assert!((got - (1.0 - p.powi(10))).abs() < 1e-12);
    }

    #[test]
    fn rbp_of_empty_or_irrelevant_ranking_is_zero() {
        let j = judgments(&[("r1", 1), ("n1", 0)]);
        assert_eq!(rbp(&RankedList::default(), &j, 0.8, 10), 0.0);
        let l = list(&["n1", "x"]);
        assert_eq!(rbp(&l, &j, 0.8, 10), 0.0);
    }

    #[test]
    fn metric_labels_are_self_describing() {
        assert_eq!(Metric::Recall { cutoff: 1000 }.label(), "recall@1000");
        assert_eq!(Metric::Precision { cutoff: 10 }.label(), "p@10");
        assert_eq!(
            Metric::Ndcg {
                cutoff: 1000,
                gain: Gain::Exponential
            }
            .label(),
            "ndcg_exp@1000"
        );
        assert_eq!(
            Metric::Rbp {
                p: 0.8,
                depth: 1000
            }
            .label(),
            "rbp_p=0.8@1000"
        );
    }

    #[test]
    fn metric_validation_rejects_bad_parameters() {
        assert!(Metric::Recall { cutoff: 0 }.validate().is_err());
        assert!(Metric::Rbp { p: 1.0, depth: 10 }.validate().is_err());
        assert!(Metric::Rbp { p: 0.0, depth: 10 }.validate().is_err());
        assert!(Metric::Rbp { p: 0.5, depth: 10 }.validate().is_ok());
    }

    fn run_with(topics: &[(&str, &[&str])]) -> Run {
        let map: BTreeMap<String, RankedList> = topics
            .iter()
            .map(|(t, ids)| ((*t).to_string(), list(ids)))
            .collect();
        Run::new("sys", map)
    }

    fn qrels_with(topics: &[(&str, &[(&str, u32)])]) -> Qrels {
        let map: BTreeMap<String, BTreeMap<DocId, u32>> = topics
            .iter()
            .map(|(t, pairs)| ((*t).to_string(), judgments(pairs)))
            .collect();
        Qrels::from_map(map)
    }

    #[test]
    fn evaluate_run_macro_averages_over_scorable_topics() {
        let run = run_with(&[("1", &["r1", "n1"]), ("2", &["n2", "r2"])]);
        let qrels = qrels_with(&[
            ("1", &[("r1", 1), ("n1", 0)]),
            ("2", &[("r2", 1), ("n2", 0)]),
        ]);
        let report =
            evaluate_run(&run, &qrels, &[Metric::Precision { cutoff: 1 }]).unwrap();
        // Topic 1: P@1 = 1.0, topic 2: P@1 = 0.0 → mean 0.5.
        assert!((report.aggregate("p@1").unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(report.n_topics(), 2);
    }

    #[test]
    fn evaluate_run_excludes_topics_without_relevant_docs() {
        let run = run_with(&[("1", &["r1"]), ("2", &["n2"])]);
        let qrels = qrels_with(&[("1", &[("r1", 1)]), ("2", &[("n2", 0)])]);
        let report =
            evaluate_run(&run, &qrels, &[Metric::Precision { cutoff: 1 }]).unwrap();
        // Topic 2 has no relevant documents: P@1 averages to 1.0, not 0.5.
        assert!((report.aggregate("p@1").unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(report.n_topics(), 1);
    }

    #[test]
    fn evaluate_run_skips_topics_missing_from_qrels() {
        let run = run_with(&[("1", &["r1"]), ("99", &["x"])]);
        let qrels = qrels_with(&[("1", &[("r1", 1)])]);
        let report =
            evaluate_run(&run, &qrels, &[Metric::Recall { cutoff: 10 }]).unwrap();
        assert_eq!(report.n_topics(), 1);
        assert_eq!(report.topic_value("99", "recall@10"), None);
    }

    #[test]
    fn evaluating_an_ideal_run_yields_ndcg_one() {
        // Build the run directly from the qrels, best grades first.
        let qrels = qrels_with(&[
            ("1", &[("a", 2), ("b", 1), ("c", 0)]),
            ("2", &[("d", 1), ("e", 0)]),
        ]);
        let run = run_with(&[("1", &["a", "b", "c"]), ("2", &["d", "e"])]);
        let report = evaluate_run(
            &run,
            &qrels,
            &[Metric::Ndcg {
                cutoff: 1000,
                gain: Gain::Linear,
            }],
        )
        .unwrap();
        assert!((report.aggregate("ndcg@1000").unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn csv_report_has_per_topic_rows_and_all_rows() {
        let run = run_with(&[("1", &["r1", "n1"])]);
        let qrels = qrels_with(&[("1", &[("r1", 1), ("n1", 0)])]);
        let battery = [
            Metric::Recall { cutoff: 10 },
            Metric::Precision { cutoff: 10 },
        ];
        let report = evaluate_run(&run, &qrels, &battery).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "run_tag,topic,metric,cutoff,value");
        assert!(lines.contains(&"sys,1,recall,10,1"));
        assert!(lines.contains(&"sys,1,p,10,0.1"));
        assert!(lines.contains(&"sys,ALL,recall,10,1"));
        assert!(lines.contains(&"sys,ALL,p,10,0.1"));
    }
}
