//! Shared helpers for the integration and acceptance suites: metric and
//! fusion oracles implemented independently of the library (plain loops
//! over plain types), plus deterministic synthetic collection generators.
#![allow(dead_code)] // each test binary uses its own subset

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bibfuse::trec::{DocId, RankedList};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn doc(id: &str) -> DocId {
    DocId::new(id).expect("valid doc id")
}

pub fn ranked_list(pairs: &[(String, f64)]) -> RankedList {
    RankedList::from_scores(pairs.iter().map(|(d, s)| (doc(d), *s)).collect())
        .expect("valid ranked list")
}

// ===========================================================================
// Independent metric oracles.
//
// These operate on a plain ranking (doc ids in rank order) and a plain
// grade map, and are written as direct transcriptions of the metric
// definitions — no shared code with the library.
// ===========================================================================

pub type Grades = HashMap<String, u32>;

fn rel(grades: &Grades, d: &str) -> bool {
    grades.get(d).copied().unwrap_or(0) >= 1
}

fn total_relevant(grades: &Grades) -> usize {
    grades.values().filter(|g| **g >= 1).count()
}

pub fn o_recall(ranking: &[String], grades: &Grades, k: usize) -> Option<f64> {
    let total = total_relevant(grades);
    if total == 0 {
        return None;
    }
    let mut hits = 0usize;
    for d in ranking.iter().take(k) {
        if rel(grades, d) {
            hits += 1;
        }
    }
    Some(hits as f64 / total as f64)
}

pub fn o_precision(ranking: &[String], grades: &Grades, k: usize) -> f64 {
    let mut hits = 0usize;
    for d in ranking.iter().take(k) {
        if rel(grades, d) {
            hits += 1;
        }
    }
    hits as f64 / k as f64
}

pub fn o_average_precision(ranking: &[String], grades: &Grades, k: usize) -> Option<f64> {
    let total = total_relevant(grades);
    if total == 0 {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, d) in ranking.iter().take(k).enumerate() {
        if rel(grades, d) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / total as f64)
}

pub fn o_ndcg(
    ranking: &[String],
    grades: &Grades,
    k: usize,
    gain: impl Fn(u32) -> f64,
) -> Option<f64> {
    let mut dcg = 0.0;
    for (i, d) in ranking.iter().take(k).enumerate() {
        let g = grades.get(d).copied().unwrap_or(0);
        dcg += gain(g) / ((i + 2) as f64).log2();
    }
    let mut all: Vec<u32> = grades.values().copied().collect();
    all.sort_unstable_by(|a, b| b.cmp(a));
    let mut idcg = 0.0;
    for (i, g) in all.iter().take(k).enumerate() {
        idcg += gain(*g) / ((i + 2) as f64).log2();
    }
    if idcg == 0.0 {
        None
    } else {
        Some(dcg / idcg)
    }
}

pub fn o_bpref(ranking: &[String], grades: &Grades, k: usize) -> Option<f64> {
    let r = total_relevant(grades);
    let n = grades.values().filter(|g| **g == 0).count();
    if r == 0 || n == 0 {
        return None;
    }
    let cap = r.min(n);
    let mut nonrel_above = 0usize;
    let mut sum = 0.0;
    for d in ranking.iter().take(k) {
        match grades.get(d.as_str()) {
            Some(0) => nonrel_above += 1,
            Some(_) => sum += 1.0 - nonrel_above.min(cap) as f64 / cap as f64,
            None => {} // unjudged documents are invisible to bpref
        }
    }
    Some(sum / r as f64)
}

pub fn o_rbp(ranking: &[String], grades: &Grades, p: f64, depth: usize) -> f64 {
    let mut sum = 0.0;
    for (i, d) in ranking.iter().take(depth).enumerate() {
        if rel(grades, d) {
            sum += p.powi(i as i32);
        }
    }
    (1.0 - p) * sum
}

// ===========================================================================
// Brute-force fusion oracles.
//
// Inputs are rankings as (doc, score) pairs in rank order. Ranks are found
// by linear search; output order is descending score with ascending doc id
// for ties — the same contract the library promises, derived independently.
// ===========================================================================

pub type PlainList = Vec<(String, f64)>;

fn union_docs(lists: &[PlainList]) -> Vec<String> {
    let mut seen: Vec<String> = Vec::new();
    for list in lists {
        for (d, _) in list {
            if !seen.contains(d) {
                seen.push(d.clone());
            }
        }
    }
    seen
}

fn rank_in(list: &PlainList, d: &str) -> Option<usize> {
    list.iter().position(|(x, _)| x == d).map(|p| p + 1)
}

pub fn sort_plain(mut scored: Vec<(String, f64)>) -> Vec<(String, f64)> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
}

pub fn o_rrf(lists: &[PlainList], k: f64) -> Vec<(String, f64)> {
    let mut scored = Vec::new();
    for d in union_docs(lists) {
        let mut s = 0.0;
        for list in lists {
            if let Some(r) = rank_in(list, &d) {
                s += 1.0 / (k + r as f64);
            }
        }
        scored.push((d, s));
    }
    sort_plain(scored)
}

pub fn o_borda(lists: &[PlainList]) -> Vec<(String, f64)> {
    let union = union_docs(lists);
    let n = union.len() as f64;
    let mut scored = Vec::new();
    for d in &union {
        let mut s = 0.0;
        for list in lists {
            match rank_in(list, d) {
                // rank r earns n - r + 1 points (top rank earns n)
                Some(r) => s += n - r as f64 + 1.0,
                // unranked docs share the unawarded points evenly
                None => s += (n - list.len() as f64 + 1.0) / 2.0,
            }
        }
        scored.push((d.clone(), s));
    }
    sort_plain(scored)
}

fn minmax(list: &PlainList) -> PlainList {
    if list.is_empty() {
        return Vec::new();
    }
    let max = list[0].1;
    let min = list[list.len() - 1].1;
    list.iter()
        .map(|(d, s)| {
            let norm = if max == min { 1.0 } else { (s - min) / (max - min) };
            (d.clone(), norm)
        })
        .collect()
}

pub fn o_wmnz(lists: &[PlainList], weights: &[f64], normalize: bool) -> Vec<(String, f64)> {
    let prepared: Vec<PlainList> = if normalize {
        lists.iter().map(minmax).collect()
    } else {
        lists.to_vec()
    };
    let mut scored = Vec::new();
    for d in union_docs(&prepared) {
        let mut weighted_sum = 0.0;
        let mut nonzero_weight = 0.0;
        for (list, w) in prepared.iter().zip(weights) {
            if let Some((_, s)) = list.iter().find(|(x, _)| *x == d) {
                weighted_sum += w * s;
                if *s > 0.0 {
                    nonzero_weight += w;
                }
            }
        }
        scored.push((d, weighted_sum * nonzero_weight));
    }
    sort_plain(scored)
}

/// Log-likelihood fusion against an explicit bin table.
pub fn o_bayes(
    lists: &[PlainList],
    edges: &[usize],
    bin_llr: &[f64],
    unranked_llr: f64,
) -> Vec<(String, f64)> {
    let llr_of = |rank: Option<usize>| -> f64 {
        match rank {
            None => unranked_llr,
            Some(r) => {
                for (i, e) in edges.iter().enumerate() {
                    if r <= *e {
                        return bin_llr[i];
                    }
                }
                bin_llr[bin_llr.len() - 1]
            }
        }
    };
    let mut scored = Vec::new();
    for d in union_docs(lists) {
        let s: f64 = lists.iter().map(|l| llr_of(rank_in(l, &d))).sum();
        scored.push((d, s));
    }
    sort_plain(scored)
}

// ===========================================================================
// Random instances for oracle comparisons.
// ===========================================================================

/// A random topic: a ranking over a fresh universe plus judged grades.
/// Some universe documents stay unjudged and some judged ones unranked, so
/// every metric edge case shows up over enough draws.
pub fn random_topic(rng: &mut ChaCha8Rng, max_docs: usize) -> (Vec<(String, f64)>, Grades) {
    let n_universe = rng.gen_range(2..=max_docs);
    let universe: Vec<String> = (0..n_universe).map(|i| format!("d{i:03}")).collect();

    let n_ranked = rng.gen_range(1..=n_universe);
    let mut shuffled = universe.clone();
    shuffled.shuffle(rng);
    let mut ranking: Vec<(String, f64)> = Vec::new();
    let mut score = 100.0;
    for d in shuffled.into_iter().take(n_ranked) {
        // occasional exact score ties exercise the tie rule
        if !ranking.is_empty() && rng.gen_bool(0.25) {
            score = ranking[ranking.len() - 1].1;
        } else {
            score -= rng.gen_range(0.01..1.5);
        }
        ranking.push((d, score));
    }
    // canonical order: ties broken by ascending doc id
    ranking = sort_plain(ranking);

    let mut grades: Grades = HashMap::new();
    for d in &universe {
        if rng.gen_bool(0.8) {
            let g = if rng.gen_bool(0.35) {
                rng.gen_range(1..=2)
            } else {
                0
            };
            grades.insert(d.clone(), g);
        }
    }
    (ranking, grades)
}

/// A random fusion instance: several rankings over one shared universe.
pub fn random_fusion_instance(rng: &mut ChaCha8Rng, max_lists: usize) -> Vec<PlainList> {
    let n_universe = rng.gen_range(3..=30);
    let universe: Vec<String> = (0..n_universe).map(|i| format!("d{i:03}")).collect();
    let n_lists = rng.gen_range(1..=max_lists);
    (0..n_lists)
        .map(|_| {
            let n_ranked = rng.gen_range(1..=n_universe);
            let mut shuffled = universe.clone();
            shuffled.shuffle(rng);
            let mut list: Vec<(String, f64)> = Vec::new();
            let mut score = 50.0;
            for d in shuffled.into_iter().take(n_ranked) {
                if !list.is_empty() && rng.gen_bool(0.2) {
                    score = list[list.len() - 1].1;
                } else {
                    score -= rng.gen_range(0.05..2.0);
                }
                list.push((d, score));
            }
            sort_plain(list)
        })
        .collect()
}

// ===========================================================================
// Synthetic collections on disk.
//
// The world is built so that bibliometric signals genuinely predict
// relevance (strongly for citations, weakly for altmetric and impact
// factor) while the baseline systems have sharp early precision and noisy
// deep ordering — the regime the fusion study targets.
// ===========================================================================

pub struct WorldSpec {
    pub n_topics: usize,
    pub docs_per_topic: usize,
    /// Relevant documents per topic.
    pub n_relevant: usize,
    pub n_runs: usize,
    pub seed: u64,
}

impl Default for WorldSpec {
    fn default() -> Self {
        WorldSpec {
            n_topics: 30,
            docs_per_topic: 600,
            n_relevant: 45,
            n_runs: 50,
            seed: 0xB1B_F05E,
        }
    }
}

fn lognormal(rng: &mut ChaCha8Rng, mu: f64, sigma: f64) -> f64 {
    let normal = rand_distr_normal(rng, mu, sigma);
    normal.exp()
}

/// Box-Muller normal draw; avoids depending on rand_distr just for this.
fn rand_distr_normal(rng: &mut ChaCha8Rng, mu: f64, sigma: f64) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
    mu + sigma * z
}

pub fn write_world(dir: &Path, spec: &WorldSpec) {
    let mut rng = rng(spec.seed);
    let mut qrels = String::new();
    let mut biblio =
        String::from("pmid,citations,altmetric,pub_year,research_level,impact_factor\n");

    // relevant[t] = doc indices of topic t's relevant documents
    let mut relevant: Vec<Vec<usize>> = Vec::new();
    for t in 0..spec.n_topics {
        let mut indices: Vec<usize> = (0..spec.docs_per_topic).collect();
        indices.shuffle(&mut rng);
        let rel: Vec<usize> = indices[..spec.n_relevant].to_vec();
        for i in 0..spec.docs_per_topic {
            let d = doc_name(t, i);
            let is_rel = rel.contains(&i);
            let grade = if is_rel {
                if rng.gen_bool(0.3) {
                    2
                } else {
                    1
                }
            } else {
                0
            };
            qrels.push_str(&format!("{} 0 {d} {grade}\n", topic_name(t)));

            // Citations: relevant documents are systematically better
            // cited, but 2% of the non-relevant are heavily cited
            // ("famous reviews") and pollute the top of the citation
            // ranking; 15% of documents have no citation record at all.
            let citations = if rng.gen_bool(0.15) {
                String::new()
            } else if is_rel {
                format!("{}", lognormal(&mut rng, 3.2, 0.9).round().max(0.0))
            } else if rng.gen_bool(0.02) {
                format!("{}", lognormal(&mut rng, 4.8, 0.4).round().max(0.0))
            } else {
                format!("{}", lognormal(&mut rng, 1.3, 1.0).round().max(0.0))
            };
            // Altmetric and impact factor correlate weakly with relevance;
            // publication year and research level are uninformative.
            let altmetric = if rng.gen_bool(0.25) {
                String::new()
            } else {
                let mu = if is_rel { 1.6 } else { 1.0 };
                format!("{:.2}", lognormal(&mut rng, mu, 0.8))
            };
            let pub_year = if rng.gen_bool(0.05) {
                String::new()
            } else {
                format!("{}", 2010 + rng.gen_range(0..10))
            };
            let level = if rng.gen_bool(0.1) {
                String::new()
            } else {
                format!("{}", rng.gen_range(1..=4))
            };
            let impact = if rng.gen_bool(0.2) {
                String::new()
            } else {
                let mu = if is_rel { 1.5 } else { 1.1 };
                format!("{:.3}", lognormal(&mut rng, mu, 0.6))
            };
            // documents with no values at all are absent from the table,
            // not present as an all-empty row
            let cells = [&citations, &altmetric, &pub_year, &level, &impact];
            if cells.iter().any(|c| !c.is_empty()) {
                biblio.push_str(&format!(
                    "{d},{citations},{altmetric},{pub_year},{level},{impact}\n"
                ));
            }
        }
        relevant.push(rel);
    }
    fs::write(dir.join("qrels.txt"), qrels).expect("write qrels");
    fs::write(dir.join("biblio.csv"), biblio).expect("write biblio");

    let runs_dir = dir.join("runs");
    fs::create_dir_all(&runs_dir).expect("create runs dir");
    for r in 0..spec.n_runs {
        let tag = format!("sys{r:03}");
        let mut text = String::new();
        for t in 0..spec.n_topics {
            let ranking = baseline_ranking(&mut rng, spec, &relevant[t]);
            for (rank, i) in ranking.iter().enumerate().take(1000) {
                let _ = writeln!(
                    text,
                    "{} Q0 {} {} {} {tag}",
                    topic_name(t),
                    doc_name(t, *i),
                    rank + 1,
                    spec.docs_per_topic as f64 - rank as f64,
                );
            }
        }
        fs::write(runs_dir.join(format!("{tag}.txt")), text).expect("write run");
    }
}

/// Sharp early precision, noisy deep ordering: most of the top 10 is
/// relevant, while the remaining relevant documents are scattered uniformly
/// through the tail.
fn baseline_ranking(rng: &mut ChaCha8Rng, spec: &WorldSpec, relevant: &[usize]) -> Vec<usize> {
    let mut rel = relevant.to_vec();
    rel.shuffle(rng);
    let k_top = rng.gen_range(7..=9).min(rel.len());
    let top_rel: Vec<usize> = rel[..k_top].to_vec();

    let mut rest: Vec<usize> = (0..spec.docs_per_topic)
        .filter(|i| !top_rel.contains(i))
        .collect();
    rest.shuffle(rng);

    // a couple of non-relevant distractors inside the top block
    let mut top: Vec<usize> = top_rel;
    let n_distract = 10 - top.len();
    let mut tail: Vec<usize> = Vec::with_capacity(rest.len() - n_distract);
    let mut distractors = Vec::new();
    for i in rest {
        if distractors.len() < n_distract && !relevant.contains(&i) {
            distractors.push(i);
        } else {
            tail.push(i);
        }
    }
    top.extend(distractors);
    top.shuffle(rng);
    top.extend(tail);
    top
}

pub fn topic_name(t: usize) -> String {
    format!("{}", 100 + t)
}

pub fn doc_name(t: usize, i: usize) -> String {
    format!("t{t:02}d{i:04}")
}
