//! Paired significance testing via Fisher randomization.
//!
//! The test statistic is the mean per-topic score difference between a
//! treatment and a baseline. Under the null hypothesis the sign of each
//! per-topic difference is exchangeable, so the null distribution is
//! obtained by flipping signs: exhaustively for small topic counts, by
//! Monte-Carlo sampling otherwise. The statistic choice is isolated in
//! [`mean_difference`] should a different one ever be needed.
//!
//! All Monte-Carlo paths are deterministic given a seed, and per-system
//! seeds are derived with a stable hash so results do not depend on
//! scheduling or evaluation order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metrics::EvalReport;

/// Per-topic scores of a baseline and a treatment, aligned by topic.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedScores {
    topics: Vec<String>,
    baseline: Vec<f64>,
    treatment: Vec<f64>,
}

impl PairedScores {
    pub fn new(topics: Vec<String>, baseline: Vec<f64>, treatment: Vec<f64>) -> Result<Self> {
        if topics.len() != baseline.len() || topics.len() != treatment.len() {
            return Err(Error::invalid(format!(
                "mismatched lengths: {} topics, {} baseline scores, {} treatment scores",
                topics.len(),
                baseline.len(),
                treatment.len()
            )));
        }
        Ok(PairedScores {
            topics,
            baseline,
            treatment,
        })
    }

    /// Pairs two evaluation reports on one metric, keeping the topics scored
    /// in both (in ascending topic order).
    pub fn from_reports(
        baseline: &EvalReport,
        treatment: &EvalReport,
        metric_label: &str,
    ) -> Result<Self> {
        let mut topics = Vec::new();
        let mut base = Vec::new();
        let mut treat = Vec::new();
        for topic in baseline.topics() {
            let (Some(b), Some(t)) = (
                baseline.topic_value(topic, metric_label),
                treatment.topic_value(topic, metric_label),
            ) else {
                continue;
            };
            topics.push(topic.to_string());
            base.push(b);
            treat.push(t);
        }
        if topics.is_empty() {
            return Err(Error::invalid(format!(
                "no shared topics with {metric_label} values between {} and {}",
                baseline.run_tag(),
                treatment.run_tag()
            )));
        }
        PairedScores::new(topics, base, treat)
    }

    pub fn topics(&self) -> &[String] {
        &self.topics
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    /// Treatment minus baseline, per topic.
    pub fn diffs(&self) -> Vec<f64> {
        self.treatment
            .iter()
            .zip(&self.baseline)
            .map(|(t, b)| t - b)
            .collect()
    }

    /// The observed statistic: mean per-topic difference.
    pub fn mean_delta(&self) -> f64 {
        mean_difference(&self.diffs())
    }
}

/// The test statistic over signed per-topic differences.
fn mean_difference(diffs: &[f64]) -> f64 {
    diffs.iter().sum::<f64>() / diffs.len() as f64
}

/// Topic counts up to this bound use exact enumeration of all sign
/// patterns; beyond it, Monte-Carlo sampling.
pub const EXACT_ENUMERATION_LIMIT: usize = 20;

/// Two-sided Fisher randomization p-value for paired scores.
///
/// With at most [`EXACT_ENUMERATION_LIMIT`] topics all `2^n` sign patterns
/// are enumerated exactly and `iterations` is ignored; otherwise
/// `iterations` Monte-Carlo sign flips are drawn from a ChaCha stream seeded
/// with `seed`. The p-value always lies in `(0, 1]`.
pub fn fisher_randomization(pair: &PairedScores, iterations: usize, seed: u64) -> Result<f64> {
    let diffs = pair.diffs();
    if diffs.len() < 2 {
        return Err(Error::invalid(format!(
            "randomization test needs at least 2 topics, got {}",
            diffs.len()
        )));
    }
    if diffs.len() <= EXACT_ENUMERATION_LIMIT {
        fisher_randomization_exact(&diffs)
    } else {
        Ok(fisher_randomization_mc(&diffs, iterations, seed))
    }
}

/// Monte-Carlo estimate: each iteration flips the sign of every difference
/// independently with probability 1/2 and recomputes the statistic. The
/// add-one–corrected estimate `(hits + 1) / (iterations + 1)` is returned,
/// which can never report an impossible p of zero.
pub fn fisher_randomization_mc(diffs: &[f64], iterations: usize, seed: u64) -> f64 {
    assert!(iterations > 0, "at least one iteration required");
    // Compare sums instead of means: both sides would divide by the same n.
    let observed = diffs.iter().sum::<f64>().abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;

    for _ in 0..iterations {
        let mut sum = 0.0;
        let mut bits = 0u64;
        for (i, d) in diffs.iter().enumerate() {
            // One RNG word serves 64 sign draws.
            let bit_idx = i % 64;
            if bit_idx == 0 {
                bits = rng.next_u64();
            }
            let sign = if bits >> bit_idx & 1 == 1 { 1.0 } else { -1.0 };
            sum += sign * d;
        }
        if sum.abs() >= observed {
            hits += 1;
        }
    }
    (hits + 1) as f64 / (iterations + 1) as f64
}

/// Exact p-value by enumerating all `2^n` sign patterns. Limited to 24
/// topics to keep the enumeration cheap.
pub fn fisher_randomization_exact(diffs: &[f64]) -> Result<f64> {
    let n = diffs.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "randomization test needs at least 2 topics, got {n}"
        )));
    }
    if n > 24 {
        return Err(Error::invalid(format!(
            "exact enumeration limited to 24 topics, got {n}"
        )));
    }
    let observed = diffs.iter().sum::<f64>().abs();
    let patterns = 1u64 << n;
    let mut hits = 0u64;
    for mask in 0..patterns {
        let mut sum = 0.0;
        for (i, d) in diffs.iter().enumerate() {
            let sign = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
            sum += sign * d;
        }
        if sum.abs() >= observed {
            hits += 1;
        }
    }
    Ok(hits as f64 / patterns as f64)
}

/// FNV-1a over the bytes of a string: a small, portable, stable hash used
/// to derive per-system seeds. Not a general-purpose hasher.
pub fn stable_hash(s: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in s.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Seed for one (system, metric) significance test, derived from the
/// experiment seed so results are independent of evaluation order.
pub fn derive_seed(experiment_seed: u64, run_tag: &str, metric_label: &str) -> u64 {
    experiment_seed ^ stable_hash(run_tag) ^ stable_hash(metric_label).rotate_left(17)
}

/// One system's outcome on one metric: aggregate change and p-value.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemOutcome {
    pub tag: String,
    /// Treatment minus baseline, macro-averaged.
    pub delta: f64,
    pub p_value: f64,
}

/// Counts and averages over a set of per-system outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceSummary {
    pub n_systems: usize,
    /// Systems whose aggregate delta is strictly positive.
    pub n_improved: usize,
    /// Systems with `p <= alpha`.
    pub n_significant: usize,
    /// Mean delta over the significant systems (0 when none are).
    pub avg_improvement_significant: f64,
    /// Mean delta over all systems.
    pub overall_change: f64,
}

/// Summarizes per-system outcomes at significance level `alpha`.
pub fn summarize_improvements(outcomes: &[SystemOutcome], alpha: f64) -> SignificanceSummary {
    let n_systems = outcomes.len();
    let n_improved = outcomes.iter().filter(|o| o.delta > 0.0).count();
    let significant: Vec<&SystemOutcome> =
        outcomes.iter().filter(|o| o.p_value <= alpha).collect();
    let n_significant = significant.len();
    let avg_improvement_significant = if significant.is_empty() {
        0.0
    } else {
        significant.iter().map(|o| o.delta).sum::<f64>() / n_significant as f64
    };
    let overall_change = if outcomes.is_empty() {
        0.0
    } else {
        outcomes.iter().map(|o| o.delta).sum::<f64>() / n_systems as f64
    };
    SignificanceSummary {
        n_systems,
        n_improved,
        n_significant,
        avg_improvement_significant,
        overall_change,
    }
}
