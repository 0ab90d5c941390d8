//! Rank and score fusion.
//!
//! All methods consume a [`FusionInput`] (one or more canonical ranked
//! lists, optionally weighted) and produce a single canonical ranked list
//! over the union of the input documents. Four families are implemented:
//!
//! * [`rrf`] — reciprocal rank fusion: `score(d) = Σ 1 / (k + rank_i(d))`
//!   over the lists that rank `d`.
//! * [`borda_fuse`] — Borda counting; a list ranking `L` of `N` union
//!   documents awards `N, N-1, …, N-L+1` points by rank and gives every
//!   document it does not rank the average of the remaining points,
//!   `(N - L + 1) / 2`.
//! * [`bayes_fuse`] — sums per-list log-likelihood ratios of relevance given
//!   the rank bin a document lands in, using a [`BayesModel`] trained on
//!   historic runs and judgments.
//! * [`wmnz`] / [`combmnz`] — weighted sum of (min-max normalized) scores,
//!   multiplied by the total weight of the lists that scored the document
//!   above zero. With unit weights this is exactly CombMNZ.
//!
//! Rank positions are 1-based everywhere.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::trec::{DocId, Qrels, RankedList, Run};

/// The lists to be fused, with optional per-list weights.
#[derive(Debug, Clone)]
pub struct FusionInput {
    lists: Vec<RankedList>,
    weights: Option<Vec<f64>>,
}

impl FusionInput {
    /// Unweighted input; at least one list is required.
    pub fn new(lists: Vec<RankedList>) -> Result<Self> {
        if lists.is_empty() {
            return Err(Error::invalid("fusion input needs at least one list"));
        }
        Ok(FusionInput {
            lists,
            weights: None,
        })
    }

    /// Weighted input; one strictly positive, finite weight per list.
    pub fn with_weights(lists: Vec<RankedList>, weights: Vec<f64>) -> Result<Self> {
        if lists.is_empty() {
            return Err(Error::invalid("fusion input needs at least one list"));
        }
        if weights.len() != lists.len() {
            return Err(Error::invalid(format!(
                "{} weights for {} lists",
                weights.len(),
                lists.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w <= 0.0) {
            return Err(Error::invalid(format!(
                "weights must be finite and positive, found {w}"
            )));
        }
        Ok(FusionInput {
            lists,
            weights: Some(weights),
        })
    }

    pub fn lists(&self) -> &[RankedList] {
        &self.lists
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    fn weights_or_unit(&self) -> Vec<f64> {
        self.weights
            .clone()
            .unwrap_or_else(|| vec![1.0; self.lists.len()])
    }

    /// Number of distinct documents across all lists.
    pub fn union_size(&self) -> usize {
        let mut seen: HashMap<&str, ()> = HashMap::new();
        for list in &self.lists {
            for doc in list.docs() {
                seen.insert(doc.as_str(), ());
            }
        }
        seen.len()
    }
}

/// Accumulates per-document score contributions and finishes with the
/// canonical ordering. Contribution order is deterministic (list by list, in
/// rank order), so repeated fusions are bit-identical.
fn accumulate<F>(lists: &[RankedList], mut contribution: F) -> Result<RankedList>
where
    F: FnMut(usize, usize, &DocId, f64) -> f64,
{
    let mut scores: HashMap<DocId, f64> = HashMap::new();
    for (list_idx, list) in lists.iter().enumerate() {
        for (pos, (doc, score)) in list.iter().enumerate() {
            let add = contribution(list_idx, pos + 1, doc, *score);
            *scores.entry(doc.clone()).or_insert(0.0) += add;
        }
    }
    RankedList::from_scores(scores.into_iter().collect())
}

/// Reciprocal rank fusion with constant `k > 0`.
///
/// `score(d) = Σ_i 1 / (k + rank_i(d))` over the lists that rank `d`. A
/// document at rank 1 in two lists with `k = 60` scores `2/61`.
pub fn rrf(input: &FusionInput, k: f64) -> Result<RankedList> {
    if !k.is_finite() || k <= 0.0 {
        return Err(Error::invalid(format!(
            "reciprocal rank constant must be positive and finite, got {k}"
        )));
    }
    accumulate(input.lists(), |_, rank, _, _| 1.0 / (k + rank as f64))
}

/// Default reciprocal rank constant.
pub const DEFAULT_RRF_K: f64 = 60.0;

/// Borda count fusion over the union of the input documents.
///
/// Unranked documents receive the average of the points the list left
/// unawarded, which keeps every list's total point mass equal regardless of
/// its length.
pub fn borda_fuse(input: &FusionInput) -> Result<RankedList> {
    let mut union: Vec<DocId> = Vec::new();
    let mut seen: HashMap<DocId, ()> = HashMap::new();
    for list in input.lists() {
        for doc in list.docs() {
            if seen.insert(doc.clone(), ()).is_none() {
                union.push(doc.clone());
            }
        }
    }
    let n = union.len() as f64;

    let mut scores: HashMap<DocId, f64> = union.iter().map(|d| (d.clone(), 0.0)).collect();
    for list in input.lists() {
        let len = list.len() as f64;
        let unranked_points = (n - len + 1.0) / 2.0;
        let mut ranked: HashMap<&str, ()> = HashMap::with_capacity(list.len());
        for (pos, (doc, _)) in list.iter().enumerate() {
            ranked.insert(doc.as_str(), ());
            *scores.get_mut(doc).expect("union covers every ranked doc") +=
                n - pos as f64;
        }
        for doc in &union {
            if !ranked.contains_key(doc.as_str()) {
                *scores.get_mut(doc).expect("union covers every doc") += unranked_points;
            }
        }
    }
    RankedList::from_scores(scores.into_iter().collect())
}

/// Rank bins for [`BayesModel`]: consecutive inclusive upper bounds starting
/// at rank 1, plus an implicit bin for unranked documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinSpec {
    edges: Vec<usize>,
}

impl BinSpec {
    /// Bins from strictly increasing inclusive upper bounds; bin `i` covers
    /// ranks `edges[i-1]+1 ..= edges[i]` (the first covers `1..=edges[0]`).
    pub fn new(edges: Vec<usize>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::invalid("bin spec needs at least one edge"));
        }
        if edges[0] == 0 {
            return Err(Error::invalid("bin edges must start at 1 or later"));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("bin edges must be strictly increasing"));
        }
        Ok(BinSpec { edges })
    }

    /// The standard layout for a given depth: exact bins for ranks 1..=10,
    /// decade bins to rank 100, century bins beyond. For `depth = 1000` this
    /// yields 28 rank bins.
    pub fn default_for_depth(depth: usize) -> Self {
        let mut edges = Vec::new();
        let push_upto = |start: usize, stop: usize, step: usize, edges: &mut Vec<usize>| {
            let mut e = start;
            while e <= stop && e <= depth {
                edges.push(e);
                e = e.saturating_add(step);
            }
        };
        push_upto(1, 10, 1, &mut edges);
        push_upto(20, 100, 10, &mut edges);
        push_upto(200, usize::MAX - 1, 100, &mut edges);
        if *edges.last().unwrap_or(&0) < depth {
            edges.push(depth);
        }
        BinSpec { edges }
    }

    /// Number of rank bins (excluding the unranked bin).
    pub fn n_bins(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    /// Bin index for a 1-based rank. Ranks beyond the last edge are clamped
    /// into the deepest bin — they were still retrieved.
    pub fn bin_of(&self, rank: usize) -> usize {
        debug_assert!(rank >= 1, "ranks are 1-based");
        self.edges
            .iter()
            .position(|&edge| rank <= edge)
            .unwrap_or(self.edges.len() - 1)
    }
}

/// Per-bin log-likelihood ratios of relevance, learned from historic runs.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesModel {
    bins: BinSpec,
    /// One value per rank bin: `ln P(bin | relevant) / P(bin | non-relevant)`.
    bin_llr: Vec<f64>,
    /// Log-likelihood ratio for documents a list does not rank.
    unranked_llr: f64,
}

impl BayesModel {
    pub fn bins(&self) -> &BinSpec {
        &self.bins
    }

    pub fn bin_llr(&self) -> &[f64] {
        &self.bin_llr
    }

    pub fn unranked_llr(&self) -> f64 {
        self.unranked_llr
    }

    /// Score contribution for a document at `rank` (1-based), or unranked.
    pub fn llr_for_rank(&self, rank: Option<usize>) -> f64 {
        match rank {
            Some(r) => self.bin_llr[self.bins.bin_of(r)],
            None => self.unranked_llr,
        }
    }

    /// Serializes the model as plain text (`key = value` lines with
    /// space-separated numbers). Floats use the shortest representation that
    /// parses back to the identical value.
    pub fn to_text(&self) -> String {
        let edges: Vec<String> = self.bins.edges().iter().map(|e| e.to_string()).collect();
        let llr: Vec<String> = self.bin_llr.iter().map(|v| v.to_string()).collect();
        format!(
            "bin_edges = {}\nbin_llr = {}\nunranked_llr = {}\n",
            edges.join(" "),
            llr.join(" "),
            self.unranked_llr
        )
    }

    /// Parses a model written by [`BayesModel::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut edges: Option<Vec<usize>> = None;
        let mut llr: Option<Vec<f64>> = None;
        let mut unranked: Option<f64> = None;

        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(line_no, format!("expected key = value, found {line:?}"))
            })?;
            let values = value.trim();
            match key.trim() {
                "bin_edges" => {
                    edges = Some(parse_numbers(values, line_no)?);
                }
                "bin_llr" => {
                    llr = Some(parse_numbers(values, line_no)?);
                }
                "unranked_llr" => {
                    unranked = Some(
                        values.parse().map_err(|_| {
                            Error::parse(line_no, format!("invalid number {values:?}"))
                        })?,
                    );
                }
                other => {
                    return Err(Error::parse(line_no, format!("unknown key {other:?}")));
                }
            }
        }

        let edges = edges.ok_or_else(|| Error::invalid("model is missing bin_edges"))?;
        let bin_llr = llr.ok_or_else(|| Error::invalid("model is missing bin_llr"))?;
        let unranked_llr =
            unranked.ok_or_else(|| Error::invalid("model is missing unranked_llr"))?;
        let bins = BinSpec::new(edges)?;
        if bin_llr.len() != bins.n_bins() {
            return Err(Error::invalid(format!(
                "{} llr values for {} bins",
                bin_llr.len(),
                bins.n_bins()
            )));
        }
        Ok(BayesModel {
            bins,
            bin_llr,
            unranked_llr,
        })
    }
}

fn parse_numbers<T: std::str::FromStr>(values: &str, line_no: usize) -> Result<Vec<T>> {
    values
        .split_whitespace()
        .map(|v| {
            v.parse()
                .map_err(|_| Error::parse(line_no, format!("invalid number {v:?}")))
        })
        .collect()
}

/// Accumulates rank-bin statistics from (run, qrels) groups and finishes
/// into a [`BayesModel`].
///
/// Training observations are judged documents: for every training run, every
/// topic shared with the judgments, and every judged document of that topic,
/// the document contributes one count to the bin of its rank in the run (or
/// to the unranked bin if the run did not retrieve it), on the relevant or
/// non-relevant side according to its binarized grade.
///
/// Groups exist so that runs from different collections — whose topic ids
/// may collide — can be combined without merging their judgment sets.
#[derive(Debug, Clone)]
pub struct BayesTrainer {
    bins: BinSpec,
    rel_counts: Vec<u64>,
    nonrel_counts: Vec<u64>,
}

impl BayesTrainer {
    pub fn new(bins: BinSpec) -> Self {
        let n = bins.n_bins() + 1; // rank bins plus the unranked bin
        BayesTrainer {
            bins,
            rel_counts: vec![0; n],
            nonrel_counts: vec![0; n],
        }
    }

    /// Adds observations from `runs` judged by `qrels`.
    pub fn observe(&mut self, runs: &[Run], qrels: &Qrels) {
        let unranked = self.bins.n_bins();
        for run in runs {
            for (topic, list) in run.topics() {
                let Some(judgments) = qrels.topic_judgments(topic) else {
                    continue;
                };
                let ranks: HashMap<&str, usize> = list
                    .iter()
                    .enumerate()
                    .map(|(pos, (doc, _))| (doc.as_str(), pos + 1))
                    .collect();
                for (doc, grade) in judgments {
                    let bin = ranks
                        .get(doc.as_str())
                        .map(|&r| self.bins.bin_of(r))
                        .unwrap_or(unranked);
                    if *grade >= 1 {
                        self.rel_counts[bin] += 1;
                    } else {
                        self.nonrel_counts[bin] += 1;
                    }
                }
            }
        }
    }

    /// Finishes training. Probabilities are smoothed as
    /// `(count + 0.5) / (total + 0.5 * #bins)` with `#bins` counting the
    /// unranked bin, so empty bins stay finite. Requires at least one
    /// relevant and one non-relevant observation.
    pub fn train(self) -> Result<BayesModel> {
        let total_rel: u64 = self.rel_counts.iter().sum();
        let total_nonrel: u64 = self.nonrel_counts.iter().sum();
        if total_rel + total_nonrel == 0 {
            return Err(Error::invalid(
                "training runs contain no judged documents",
            ));
        }
        if total_rel == 0 {
            return Err(Error::invalid(
                "training runs contain no relevant judged documents",
            ));
        }
        if total_nonrel == 0 {
            return Err(Error::invalid(
                "training runs contain no non-relevant judged documents",
            ));
        }

        let n_bins_smoothing = (self.bins.n_bins() + 1) as f64;
        let llr = |rel: u64, nonrel: u64| -> f64 {
            let p_rel = (rel as f64 + 0.5) / (total_rel as f64 + 0.5 * n_bins_smoothing);
            let p_nonrel =
                (nonrel as f64 + 0.5) / (total_nonrel as f64 + 0.5 * n_bins_smoothing);
            (p_rel / p_nonrel).ln()
        };

        let unranked = self.bins.n_bins();
        let bin_llr: Vec<f64> = (0..unranked)
            .map(|b| llr(self.rel_counts[b], self.nonrel_counts[b]))
            .collect();
        let unranked_llr = llr(self.rel_counts[unranked], self.nonrel_counts[unranked]);
        Ok(BayesModel {
            bins: self.bins,
            bin_llr,
            unranked_llr,
        })
    }
}

/// Trains a [`BayesModel`] from one group of runs and their judgments. Use
/// [`BayesTrainer`] directly to pool several collections.
pub fn train_bayes(training_runs: &[Run], training_qrels: &Qrels, bins: BinSpec) -> Result<BayesModel> {
    let mut trainer = BayesTrainer::new(bins);
    trainer.observe(training_runs, training_qrels);
    trainer.train()
}

/// Fuses by summing each document's log-likelihood ratio over all input
/// lists; a list that does not rank the document contributes the model's
/// unranked ratio.
pub fn bayes_fuse(input: &FusionInput, model: &BayesModel) -> Result<RankedList> {
    let mut union: Vec<DocId> = Vec::new();
    let mut seen: HashMap<DocId, ()> = HashMap::new();
    for list in input.lists() {
        for doc in list.docs() {
            if seen.insert(doc.clone(), ()).is_none() {
                union.push(doc.clone());
            }
        }
    }

    let mut scores: HashMap<DocId, f64> = union.iter().map(|d| (d.clone(), 0.0)).collect();
    for list in input.lists() {
        let mut ranked: HashMap<&str, usize> = HashMap::with_capacity(list.len());
        for (pos, (doc, _)) in list.iter().enumerate() {
            ranked.insert(doc.as_str(), pos + 1);
        }
        for doc in &union {
            let rank = ranked.get(doc.as_str()).copied();
            *scores.get_mut(doc).expect("union covers every doc") +=
                model.llr_for_rank(rank);
        }
    }
    RankedList::from_scores(scores.into_iter().collect())
}

/// Rescales scores to `[0, 1]` by `(s - min) / (max - min)`, preserving the
/// ordering. A constant list maps to all ones. Empty lists pass through.
pub fn min_max_normalize(list: &RankedList) -> RankedList {
    if list.is_empty() {
        return list.clone();
    }
    // Canonical order puts the maximum first and the minimum last.
    let max = list.entries()[0].1;
    let min = list.entries()[list.len() - 1].1;
    let entries: Vec<(DocId, f64)> = if max == min {
        list.iter().map(|(doc, _)| (doc.clone(), 1.0)).collect()
    } else {
        list.iter()
            .map(|(doc, score)| (doc.clone(), (score - min) / (max - min)))
            .collect()
    };
    RankedList::from_scores(entries).expect("normalization preserves validity")
}

/// Weighted sum of scores times the total weight of the lists that scored
/// the document above zero:
/// `score(d) = (Σ_i w_i s_i(d)) · (Σ_{i: s_i(d) > 0} w_i)`.
///
/// Expects score-comparable (normalized) inputs; see [`min_max_normalize`].
/// Weights default to 1.0, which makes this exactly CombMNZ.
pub fn wmnz(input: &FusionInput) -> Result<RankedList> {
    wmnz_with_weights(input.lists(), &input.weights_or_unit())
}

/// CombMNZ: the unit-weight reference point for [`wmnz`]. Any weights on the
/// input are deliberately ignored.
pub fn combmnz(input: &FusionInput) -> Result<RankedList> {
    wmnz_with_weights(input.lists(), &vec![1.0; input.lists().len()])
}

fn wmnz_with_weights(lists: &[RankedList], weights: &[f64]) -> Result<RankedList> {
    let mut weighted_sum: HashMap<DocId, f64> = HashMap::new();
    let mut nonzero_weight: HashMap<DocId, f64> = HashMap::new();
    for (list, &w) in lists.iter().zip(weights) {
        for (doc, score) in list.iter() {
            *weighted_sum.entry(doc.clone()).or_insert(0.0) += w * score;
            let entry = nonzero_weight.entry(doc.clone()).or_insert(0.0);
            if *score > 0.0 {
                *entry += w;
            }
        }
    }
    let entries: Vec<(DocId, f64)> = weighted_sum
        .into_iter()
        .map(|(doc, sum)| {
            let nz = nonzero_weight.get(&doc).copied().unwrap_or(0.0);
            (doc, sum * nz)
        })
        .collect();
    RankedList::from_scores(entries)
}

/// A fusion method with its parameters, ready to apply to any input.
#[derive(Debug, Clone)]
pub enum FusionMethod {
    /// Reciprocal rank fusion with constant `k`.
    Rrf { k: f64 },
    /// Borda counting.
    Borda,
    /// Log-likelihood-ratio fusion with a trained model.
    Bayes { model: BayesModel },
    /// Weighted score combination; `normalize` min-max rescales each list
    /// first (recommended — raw scores across systems are not comparable).
    Wmnz { normalize: bool },
    /// Unweighted score combination.
    CombMnz { normalize: bool },
}

impl FusionMethod {
    /// Short lower-case name used in output files.
    pub fn name(&self) -> &'static str {
        match self {
            FusionMethod::Rrf { .. } => "rrf",
            FusionMethod::Borda => "borda",
            FusionMethod::Bayes { .. } => "bayes",
            FusionMethod::Wmnz { .. } => "wmnz",
            FusionMethod::CombMnz { .. } => "combmnz",
        }
    }
}

/// Applies `method` to `input`.
pub fn fuse(method: &FusionMethod, input: &FusionInput) -> Result<RankedList> {
    match method {
        FusionMethod::Rrf { k } => rrf(input, *k),
        FusionMethod::Borda => borda_fuse(input),
        FusionMethod::Bayes { model } => bayes_fuse(input, model),
        FusionMethod::Wmnz { normalize } => {
            let prepared = prepare_scored(input, *normalize)?;
            wmnz(&prepared)
        }
        FusionMethod::CombMnz { normalize } => {
            let prepared = prepare_scored(input, *normalize)?;
            combmnz(&prepared)
        }
    }
}

fn prepare_scored(input: &FusionInput, normalize: bool) -> Result<FusionInput> {
    let lists: Vec<RankedList> = if normalize {
        input.lists().iter().map(min_max_normalize).collect()
    } else {
        input.lists().to_vec()
    };
    match input.weights() {
        Some(w) => FusionInput::with_weights(lists, w.to_vec()),
        None => FusionInput::new(lists),
    }
}
