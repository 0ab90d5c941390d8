//! End-to-end experiment pipelines.
//!
//! Each `run_*` function is one command of the `bibfuse` binary: it loads
//! its inputs according to [`Settings`], computes, writes CSV artifacts into
//! the output directory, and returns the computed values for callers that
//! want them in memory (tests, notebooks, other pipelines).
//!
//! All outputs are deterministic for fixed inputs and settings: files are
//! discovered in sorted order, parallel work is joined back in sorted order,
//! and every random draw flows from the experiment seed.

pub mod config;

pub use config::{parse_config, MethodKind, Overlay, Settings};

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::biblio::{
    load_biblio_table, signal_coverage, signal_ranking, BiblioTable, PoolPolicy, Signal,
    SignalCoverage, SignalSet,
};
use crate::error::{Error, Result};
use crate::fusion::{fuse, BayesModel, BinSpec, FusionInput, FusionMethod};
use crate::metrics::{evaluate_run, write_reports_csv, EvalReport, Gain, Metric};
use crate::stats::{
    derive_seed, fisher_randomization, summarize_improvements, PairedScores, SignificanceSummary,
    SystemOutcome,
};
use crate::trec::{parse_qrels_with_max_grade, parse_run, write_run, DocId, Qrels, RankedList, Run};

/// The metric battery for standalone signal evaluation, in report order.
pub fn signal_battery(depth: usize, gain: Gain) -> Vec<Metric> {
    vec![
        Metric::Recall { cutoff: depth },
        Metric::Ndcg { cutoff: depth, gain },
        Metric::AveragePrecision { cutoff: depth },
        Metric::Precision { cutoff: 10 },
        Metric::Bpref { cutoff: depth },
    ]
}

/// The battery for fusion experiments: the signal battery plus early-rank
/// nDCG, so top-of-list and full-depth effects are both visible.
pub fn fusion_battery(depth: usize, gain: Gain) -> Vec<Metric> {
    let mut metrics = signal_battery(depth, gain);
    if depth != 10 {
        metrics.push(Metric::Ndcg { cutoff: 10, gain });
    }
    metrics
}

// ---------------------------------------------------------------------------
// Input loading
// ---------------------------------------------------------------------------

fn require_path<'a>(field: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    field
        .as_deref()
        .ok_or_else(|| Error::config(format!("no {flag} configured (use --{flag})")))
}

fn open_reader(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))
}

fn with_path<T>(result: Result<T>, path: &Path) -> Result<T> {
    result.map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

/// Loads the judgments file named by the settings.
pub fn load_qrels(settings: &Settings) -> Result<Qrels> {
    let path = require_path(&settings.qrels, "qrels")?;
    load_qrels_file(path, settings.max_grade)
}

fn load_qrels_file(path: &Path, max_grade: u32) -> Result<Qrels> {
    let reader = open_reader(path)?;
    with_path(parse_qrels_with_max_grade(reader, max_grade), path)
}

/// Loads the per-document signal table named by the settings.
pub fn load_table(settings: &Settings) -> Result<BiblioTable> {
    let path = require_path(&settings.biblio, "biblio")?;
    let file =
        File::open(path).map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
    with_path(
        load_biblio_table(file, &settings.columns, settings.delimiter),
        path,
    )
}

/// Loads one run file, truncating each topic to `depth`.
pub fn load_run_file(path: &Path, depth: usize) -> Result<Run> {
    let reader = open_reader(path)?;
    with_path(parse_run(reader, depth), path)
}

/// Loads every run file in `dir`, sorted by run tag.
///
/// Files that fail to parse are skipped with a logged warning; zero usable
/// runs is an error. A `manifest.txt` in the directory (one expected run tag
/// per line, `#` comments allowed) turns missing tags into a hard error, so
/// a partially copied collection cannot silently shrink an experiment.
pub fn load_runs_dir(dir: &Path, depth: usize) -> Result<Vec<Run>> {
    let entries =
        fs::read_dir(dir).map_err(|e| Error::invalid(format!("cannot read {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::invalid(format!("reading {}: {e}", dir.display())))?;
        let path = entry.path();
        if path.is_file() && path.file_name().map(|n| n != "manifest.txt").unwrap_or(false) {
            paths.push(path);
        }
    }
    paths.sort();

    let mut runs: Vec<Run> = Vec::new();
    for path in &paths {
        match load_run_file(path, depth) {
            Ok(run) => runs.push(run),
            Err(e) => log::warn!("skipping unparseable run file: {e}"),
        }
    }
    if runs.is_empty() {
        return Err(Error::invalid(format!(
            "no usable run files in {}",
            dir.display()
        )));
    }
    runs.sort_by(|a, b| a.tag().cmp(b.tag()));
    for pair in runs.windows(2) {
        if pair[0].tag() == pair[1].tag() {
            log::warn!("duplicate run tag {:?} in {}", pair[0].tag(), dir.display());
        }
    }

    let manifest = dir.join("manifest.txt");
    if manifest.is_file() {
        let text = fs::read_to_string(&manifest)
            .map_err(|e| Error::invalid(format!("cannot read {}: {e}", manifest.display())))?;
        let present: BTreeSet<&str> = runs.iter().map(|r| r.tag()).collect();
        let missing: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter(|tag| !present.contains(tag))
            .collect();
        if !missing.is_empty() {
            return Err(Error::invalid(format!(
                "runs listed in {} but not loaded: {}",
                manifest.display(),
                missing.join(", ")
            )));
        }
    }
    Ok(runs)
}

// ---------------------------------------------------------------------------
// Candidate pools and signal runs
// ---------------------------------------------------------------------------

/// One candidate pool per judged topic: the judged documents themselves.
pub fn judged_pools(qrels: &Qrels) -> BTreeMap<String, BTreeSet<DocId>> {
    qrels
        .iter()
        .map(|(topic, docs)| (topic.to_string(), docs.keys().cloned().collect()))
        .collect()
}

/// One candidate pool per topic: the union of documents any run retrieved.
pub fn union_pools(runs: &[Run]) -> BTreeMap<String, BTreeSet<DocId>> {
    let mut pools: BTreeMap<String, BTreeSet<DocId>> = BTreeMap::new();
    for run in runs {
        for (topic, list) in run.topics() {
            pools
                .entry(topic.clone())
                .or_default()
                .extend(list.docs().cloned());
        }
    }
    pools
}

/// Pools for standalone signal evaluation: judged documents by default, or
/// the union of retrieved documents from the runs directory under the run
/// pool policy. Either way only judged topics are kept, since unjudged
/// topics cannot be scored.
fn standalone_pools(
    settings: &Settings,
    qrels: &Qrels,
) -> Result<BTreeMap<String, BTreeSet<DocId>>> {
    let policy = settings.pool.unwrap_or(PoolPolicy::Judged);
    let pools = match policy {
        PoolPolicy::Judged => judged_pools(qrels),
        PoolPolicy::Run => {
            let dir = require_path(&settings.runs_dir, "runs-dir")?;
            let runs = load_runs_dir(dir, settings.depth)?;
            let mut pools = union_pools(&runs);
            pools.retain(|topic, _| qrels.topic_judgments(topic).is_some());
            pools
        }
    };
    if pools.is_empty() {
        return Err(Error::invalid("no topics with candidate pools"));
    }
    Ok(pools)
}

/// Builds one run per signal by ranking each topic's candidate pool on that
/// signal alone. The run tag is the signal letter.
fn signal_run(
    signal: Signal,
    pools: &BTreeMap<String, BTreeSet<DocId>>,
    table: &BiblioTable,
) -> Result<Run> {
    let mut topics = BTreeMap::new();
    for (topic, pool) in pools {
        let list = signal_ranking(signal, pool, table)?;
        topics.insert(topic.clone(), list);
    }
    Ok(Run::new(signal.letter().to_string(), topics))
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

fn out_path(settings: &Settings, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&settings.out).map_err(|e| {
        Error::invalid(format!("cannot create {}: {e}", settings.out.display()))
    })?;
    Ok(settings.out.join(name))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_path(path)?)
}

fn finish_file(writer: &mut csv::Writer<File>, path: &Path) -> Result<()> {
    writer.flush()?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn float(v: f64) -> String {
    format!("{v}")
}

// ---------------------------------------------------------------------------
// coverage
// ---------------------------------------------------------------------------

/// Counts judged documents holding each signal and writes `coverage.csv`
/// (`year,signal,count,fraction`).
pub fn run_coverage(settings: &Settings) -> Result<Vec<SignalCoverage>> {
    let qrels = load_qrels(settings)?;
    let table = load_table(settings)?;
    let rows = signal_coverage(&qrels, &table);

    let path = out_path(settings, "coverage.csv")?;
    let mut w = csv_writer(&path)?;
    w.write_record(["year", "signal", "count", "fraction"])?;
    for row in &rows {
        w.write_record([
            settings.year.as_str(),
            &row.signal.letter().to_string(),
            &row.count.to_string(),
            &float(row.fraction),
        ])?;
    }
    finish_file(&mut w, &path)?;
    Ok(rows)
}

// ---------------------------------------------------------------------------
// signal-eval
// ---------------------------------------------------------------------------

/// Evaluates each configured signal as a standalone ranker over the topic
/// candidate pools. Writes `signal_eval.csv` (aggregates) and
/// `signal_eval_topics.csv` (per-topic values).
pub fn run_signal_eval(settings: &Settings) -> Result<Vec<(Signal, EvalReport)>> {
    let qrels = load_qrels(settings)?;
    let table = load_table(settings)?;
    let pools = standalone_pools(settings, &qrels)?;
    let battery = signal_battery(settings.depth, settings.ndcg_gain);

    let mut results = Vec::new();
    for &signal in settings.signals.members() {
        let run = signal_run(signal, &pools, &table)?;
        let report = evaluate_run(&run, &qrels, &battery)?;
        results.push((signal, report));
    }

    let path = out_path(settings, "signal_eval.csv")?;
    let mut w = csv_writer(&path)?;
    w.write_record(["year", "signal", "metric", "cutoff", "value"])?;
    for (signal, report) in &results {
        for metric in &battery {
            if let Some(value) = report.aggregate(&metric.label()) {
                w.write_record([
                    settings.year.as_str(),
                    &signal.letter().to_string(),
                    &metric.name(),
                    &metric.cutoff().to_string(),
                    &float(value),
                ])?;
            }
        }
    }
    finish_file(&mut w, &path)?;

    let topics_path = out_path(settings, "signal_eval_topics.csv")?;
    let file = File::create(&topics_path)?;
    let reports: Vec<EvalReport> = results.iter().map(|(_, r)| r.clone()).collect();
    write_reports_csv(&reports, file)?;
    log::info!("wrote {}", topics_path.display());

    Ok(results)
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

/// Fuses every non-empty subset of the configured signals with reciprocal
/// rank fusion over the topic candidate pools and evaluates each fused
/// ranking. Writes `sweep.csv` (`subset,metric,value`).
pub fn run_sweep(settings: &Settings) -> Result<Vec<(SignalSet, EvalReport)>> {
    if settings.signals.is_empty() {
        return Err(Error::config("sweep needs at least one signal"));
    }
    let qrels = load_qrels(settings)?;
    let table = load_table(settings)?;
    let pools = standalone_pools(settings, &qrels)?;
    let battery = signal_battery(settings.depth, settings.ndcg_gain);
    let method = FusionMethod::Rrf { k: settings.rrf_k };

    // One ranking per (topic, signal), shared by all subsets containing it.
    let mut rankings: BTreeMap<(String, Signal), RankedList> = BTreeMap::new();
    for (topic, pool) in &pools {
        for &signal in settings.signals.members() {
            let list = signal_ranking(signal, pool, &table)?;
            rankings.insert((topic.clone(), signal), list);
        }
    }

    let subsets = settings.signals.subsets();
    let mut results: Vec<(usize, (SignalSet, EvalReport))> = subsets
        .par_iter()
        .enumerate()
        .map(|(idx, subset)| -> Result<_> {
            let mut topics = BTreeMap::new();
            for topic in pools.keys() {
                let lists: Vec<RankedList> = subset
                    .members()
                    .iter()
                    .map(|&s| rankings[&(topic.clone(), s)].clone())
                    .collect();
                let input = FusionInput::new(lists)?;
                let fused = fuse(&method, &input)?.truncated(settings.depth);
                topics.insert(topic.clone(), fused);
            }
            let run = Run::new(subset.to_string(), topics);
            let report = evaluate_run(&run, &qrels, &battery)?;
            Ok((idx, (subset.clone(), report)))
        })
        .collect::<Result<Vec<_>>>()?;
    results.sort_by_key(|(idx, _)| *idx);
    let results: Vec<(SignalSet, EvalReport)> = results.into_iter().map(|(_, r)| r).collect();

    let path = out_path(settings, "sweep.csv")?;
    let mut w = csv_writer(&path)?;
    w.write_record(["subset", "metric", "value"])?;
    for (subset, report) in &results {
        for metric in &battery {
            if let Some(value) = report.aggregate(&metric.label()) {
                w.write_record([&subset.to_string(), &metric.label(), &float(value)])?;
            }
        }
    }
    finish_file(&mut w, &path)?;

    Ok(results)
}

// ---------------------------------------------------------------------------
// Fusion of system runs (shared by fuse-year and rbp-sweep)
// ---------------------------------------------------------------------------

/// A baseline run together with its signal-fused counterpart.
#[derive(Debug, Clone)]
pub struct FusedSystem {
    pub baseline: Run,
    pub fused: Run,
}

/// Text artifacts from training a log-likelihood model, written alongside
/// the fusion outputs so a study records what the model was fit on.
#[derive(Debug, Clone)]
pub struct BayesArtifacts {
    pub model_text: String,
    pub training_log: Vec<String>,
}

/// Builds the configured fusion method. Log-likelihood fusion trains its
/// model from the configured training collections and reports what it used.
pub fn resolve_method(settings: &Settings) -> Result<(FusionMethod, Option<BayesArtifacts>)> {
    match settings.method {
        MethodKind::Rrf => Ok((FusionMethod::Rrf { k: settings.rrf_k }, None)),
        MethodKind::Borda => Ok((FusionMethod::Borda, None)),
        MethodKind::Wmnz => Ok((
            FusionMethod::Wmnz {
                normalize: settings.normalize,
            },
            None,
        )),
        MethodKind::CombMnz => Ok((
            FusionMethod::CombMnz {
                normalize: settings.normalize,
            },
            None,
        )),
        MethodKind::Bayes => {
            let (model, training_log) = train_bayes_model(settings)?;
            let artifacts = BayesArtifacts {
                model_text: model.to_text(),
                training_log,
            };
            Ok((FusionMethod::Bayes { model }, Some(artifacts)))
        }
    }
}

/// Trains the rank-bin log-likelihood model on sampled runs from the
/// configured training collections (held-out years in the intended setup).
fn train_bayes_model(settings: &Settings) -> Result<(BayesModel, Vec<String>)> {
    if settings.train_runs_dirs.is_empty() {
        return Err(Error::config(
            "log-likelihood fusion needs training data: set train_runs_dir and train_qrels",
        ));
    }
    let bins = BinSpec::default_for_depth(settings.depth);
    let mut trainer = crate::fusion::BayesTrainer::new(bins);
    let mut training_log = Vec::new();

    for (dir, qrels_path) in settings.train_runs_dirs.iter().zip(&settings.train_qrels) {
        let qrels = load_qrels_file(qrels_path, settings.max_grade)?;
        let runs = load_runs_dir(dir, settings.depth)?;
        let amount = settings.train_sample.min(runs.len());
        let seed = derive_seed(settings.seed, &dir.to_string_lossy(), "training-sample");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, runs.len(), amount).into_vec();
        picked.sort_unstable();
        let chosen: Vec<Run> = {
            let picked: BTreeSet<usize> = picked.into_iter().collect();
            runs.into_iter()
                .enumerate()
                .filter(|(i, _)| picked.contains(i))
                .map(|(_, r)| r)
                .collect()
        };
        let tags: Vec<&str> = chosen.iter().map(|r| r.tag()).collect();
        log::info!(
            "training on {} runs from {}: {}",
            chosen.len(),
            dir.display(),
            tags.join(" ")
        );
        training_log.push(format!("{} -> {}", dir.display(), tags.join(" ")));
        trainer.observe(&chosen, &qrels);
    }
    let model = trainer.train()?;
    Ok((model, training_log))
}

/// Fuses each baseline run with the configured signal rankings.
///
/// Candidate pools follow the pool policy; the default for re-ranking is the
/// run pool (the documents the baseline itself retrieved), which keeps
/// fusion a pure re-ranking and never introduces unretrieved documents.
/// Fusion inputs are ordered baseline first, then signals in canonical
/// order; configured weights follow the same order. An empty signal set
/// degrades to the identity: the fused run is the baseline, re-tagged.
pub fn fuse_systems(
    settings: &Settings,
    qrels: &Qrels,
    table: &BiblioTable,
    runs: Vec<Run>,
    method: &FusionMethod,
) -> Result<Vec<FusedSystem>> {
    if let Some(weights) = &settings.weights {
        let expected = 1 + settings.signals.len();
        if weights.len() != expected {
            return Err(Error::config(format!(
                "{} weights configured but fusion takes {expected} lists \
                 (the baseline, then signals {})",
                weights.len(),
                settings.signals
            )));
        }
    }
    let policy = settings.pool.unwrap_or(PoolPolicy::Run);

    // Judged pools do not depend on the baseline, so the per-topic signal
    // rankings can be shared across systems.
    let judged_cache: Option<BTreeMap<String, Vec<RankedList>>> = match policy {
        PoolPolicy::Judged => {
            let pools = judged_pools(qrels);
            let mut cache = BTreeMap::new();
            for (topic, pool) in &pools {
                let lists: Vec<RankedList> = settings
                    .signals
                    .members()
                    .iter()
                    .map(|&s| signal_ranking(s, pool, table))
                    .collect::<Result<_>>()?;
                cache.insert(topic.clone(), lists);
            }
            Some(cache)
        }
        PoolPolicy::Run => None,
    };

    runs.into_par_iter()
        .map(|baseline| -> Result<FusedSystem> {
            let fused = fuse_one(settings, table, method, judged_cache.as_ref(), &baseline)?;
            Ok(FusedSystem { baseline, fused })
        })
        .collect()
}

fn fuse_one(
    settings: &Settings,
    table: &BiblioTable,
    method: &FusionMethod,
    judged_cache: Option<&BTreeMap<String, Vec<RankedList>>>,
    baseline: &Run,
) -> Result<Run> {
    let fused_tag = format!("{}-fused", baseline.tag());
    let mut fused_topics = BTreeMap::new();
    for (topic, base_list) in baseline.topics() {
        if settings.signals.is_empty() {
            fused_topics.insert(topic.clone(), base_list.clone());
            continue;
        }
        let signal_lists: Vec<RankedList> = match judged_cache {
            Some(cache) => match cache.get(topic) {
                Some(lists) => lists.clone(),
                None => {
                    // Unjudged topic under the judged-pool policy: nothing to
                    // fuse against, keep the baseline ordering.
                    log::debug!("topic {topic} has no judgments; keeping baseline order");
                    fused_topics.insert(topic.clone(), base_list.clone());
                    continue;
                }
            },
            None => {
                let pool: BTreeSet<DocId> = base_list.docs().cloned().collect();
                settings
                    .signals
                    .members()
                    .iter()
                    .map(|&s| signal_ranking(s, &pool, table))
                    .collect::<Result<_>>()?
            }
        };
        let mut lists = Vec::with_capacity(1 + signal_lists.len());
        lists.push(base_list.clone());
        lists.extend(signal_lists);
        let input = match &settings.weights {
            Some(w) => FusionInput::with_weights(lists, w.clone())?,
            None => FusionInput::new(lists)?,
        };
        let fused = fuse(method, &input)?.truncated(settings.depth);
        fused_topics.insert(topic.clone(), fused);
    }
    Ok(Run::new(fused_tag, fused_topics))
}

// ---------------------------------------------------------------------------
// fuse-year
// ---------------------------------------------------------------------------

/// One paired randomization test on one metric.
#[derive(Debug, Clone)]
pub struct MetricTest {
    /// Metric label, e.g. `ndcg@1000`.
    pub metric: String,
    /// Mean over the paired topics.
    pub baseline_mean: f64,
    pub treatment_mean: f64,
    pub delta: f64,
    pub p_value: f64,
}

/// One system's evaluation before and after fusion.
#[derive(Debug, Clone)]
pub struct SystemEval {
    pub tag: String,
    pub baseline: EvalReport,
    pub fused: EvalReport,
    pub tests: Vec<MetricTest>,
}

/// Everything `fuse-year` computes.
#[derive(Debug, Clone)]
pub struct FuseYearOutcome {
    pub systems: Vec<SystemEval>,
    /// Per-metric summaries over all systems, in battery order.
    pub summaries: Vec<(String, SignificanceSummary)>,
}

/// Re-ranks every run in the runs directory with signal fusion, evaluates
/// baseline and fused runs, and tests each per-system change with paired
/// Fisher randomization.
///
/// Writes `fuse_deltas.csv` (`run_tag,metric,baseline,fused,delta`),
/// `fuse_pvalues.csv`, `fuse_per_topic.csv`, and `significance.csv`
/// (`year,method,metric,n_systems,n_improved,n_significant,avg_improvement,
/// overall_change`); optionally the fused runs themselves, and for
/// log-likelihood fusion the trained model and its training log.
pub fn run_fuse_year(settings: &Settings) -> Result<FuseYearOutcome> {
    let qrels = load_qrels(settings)?;
    let table = load_table(settings)?;
    let dir = require_path(&settings.runs_dir, "runs-dir")?;
    let runs = load_runs_dir(dir, settings.depth)?;
    let (method, artifacts) = resolve_method(settings)?;
    let battery = fusion_battery(settings.depth, settings.ndcg_gain);

    let systems = fuse_systems(settings, &qrels, &table, runs, &method)?;
    let evaluated: Vec<SystemEval> = systems
        .par_iter()
        .map(|fs| evaluate_system(settings, &qrels, &battery, fs))
        .collect::<Result<Vec<Option<SystemEval>>>>()?
        .into_iter()
        .flatten()
        .collect();
    if evaluated.is_empty() {
        return Err(Error::invalid(
            "no system shares any judged topic with the qrels",
        ));
    }

    let mut summaries = Vec::new();
    for metric in &battery {
        let label = metric.label();
        let outcomes: Vec<SystemOutcome> = evaluated
            .iter()
            .filter_map(|sys| {
                sys.tests.iter().find(|t| t.metric == label).map(|t| SystemOutcome {
                    tag: sys.tag.clone(),
                    delta: t.delta,
                    p_value: t.p_value,
                })
            })
            .collect();
        summaries.push((label, summarize_improvements(&outcomes, settings.alpha)));
    }

    write_fuse_outputs(settings, &method, &battery, &evaluated, &summaries)?;
    if let Some(artifacts) = &artifacts {
        let model_path = out_path(settings, "bayes_model.txt")?;
        fs::write(&model_path, &artifacts.model_text)?;
        log::info!("wrote {}", model_path.display());
        let log_path = out_path(settings, "bayes_training.txt")?;
        fs::write(&log_path, artifacts.training_log.join("\n") + "\n")?;
        log::info!("wrote {}", log_path.display());
    }
    if settings.write_fused {
        let fused_dir = settings.out.join("fused");
        fs::create_dir_all(&fused_dir)
            .map_err(|e| Error::invalid(format!("cannot create {}: {e}", fused_dir.display())))?;
        for fs_pair in &systems {
            let name = format!("{}.txt", sanitize_tag(fs_pair.fused.tag()));
            let path = fused_dir.join(name);
            let file = File::create(&path)?;
            write_run(&fs_pair.fused, file)?;
        }
        log::info!("wrote {} fused runs to {}", systems.len(), fused_dir.display());
    }

    Ok(FuseYearOutcome {
        systems: evaluated,
        summaries,
    })
}

/// Evaluates one fused system and runs the per-metric paired tests. Returns
/// `None` (with a warning) when the run shares no judged topic with the
/// qrels, so one stray file cannot abort a whole collection.
fn evaluate_system(
    settings: &Settings,
    qrels: &Qrels,
    battery: &[Metric],
    fs: &FusedSystem,
) -> Result<Option<SystemEval>> {
    let tag = fs.baseline.tag().to_string();
    let baseline = evaluate_run(&fs.baseline, qrels, battery)?;
    let fused = evaluate_run(&fs.fused, qrels, battery)?;
    if baseline.n_topics() == 0 {
        log::warn!("run {tag} has no evaluable topics; excluded from the study");
        return Ok(None);
    }
    let mut tests = Vec::new();
    for metric in battery {
        let label = metric.label();
        match PairedScores::from_reports(&baseline, &fused, &label) {
            Ok(pair) => {
                let seed = derive_seed(settings.seed, &tag, &label);
                let p_value = fisher_randomization(&pair, settings.iterations, seed)?;
                let delta = pair.mean_delta();
                let base_mean = pair_mean(&baseline, &pair, &label);
                tests.push(MetricTest {
                    metric: label,
                    baseline_mean: base_mean,
                    treatment_mean: base_mean + delta,
                    delta,
                    p_value,
                });
            }
            Err(e) => {
                log::warn!("run {tag}: no paired {label} values ({e}); test skipped");
            }
        }
    }
    Ok(Some(SystemEval {
        tag,
        baseline,
        fused,
        tests,
    }))
}

fn pair_mean(report: &EvalReport, pair: &PairedScores, label: &str) -> f64 {
    let sum: f64 = pair
        .topics()
        .iter()
        .filter_map(|t| report.topic_value(t, label))
        .sum();
    sum / pair.len() as f64
}

fn sanitize_tag(tag: &str) -> String {
    let cleaned: String = tag
        .chars()
        .map(|c| if c == '/' || c == '\\' { '_' } else { c })
        .collect();
    if cleaned.starts_with('.') {
        format!("_{}", &cleaned[1..])
    } else {
        cleaned
    }
}

fn write_fuse_outputs(
    settings: &Settings,
    method: &FusionMethod,
    battery: &[Metric],
    systems: &[SystemEval],
    summaries: &[(String, SignificanceSummary)],
) -> Result<()> {
    let deltas_path = out_path(settings, "fuse_deltas.csv")?;
    let mut w = csv_writer(&deltas_path)?;
    w.write_record(["run_tag", "metric", "baseline", "fused", "delta"])?;
    for sys in systems {
        for metric in battery {
            let label = metric.label();
            let (Some(base), Some(fused)) = (
                sys.baseline.aggregate(&label),
                sys.fused.aggregate(&label),
            ) else {
                continue;
            };
            w.write_record([
                sys.tag.as_str(),
                &label,
                &float(base),
                &float(fused),
                &float(fused - base),
            ])?;
        }
    }
    finish_file(&mut w, &deltas_path)?;

    let pvalues_path = out_path(settings, "fuse_pvalues.csv")?;
    let mut w = csv_writer(&pvalues_path)?;
    w.write_record(["run_tag", "metric", "delta", "p_value"])?;
    for sys in systems {
        for test in &sys.tests {
            w.write_record([
                sys.tag.as_str(),
                &test.metric,
                &float(test.delta),
                &float(test.p_value),
            ])?;
        }
    }
    finish_file(&mut w, &pvalues_path)?;

    let per_topic_path = out_path(settings, "fuse_per_topic.csv")?;
    let mut w = csv_writer(&per_topic_path)?;
    w.write_record(["run_tag", "phase", "topic", "metric", "cutoff", "value"])?;
    for sys in systems {
        for (phase, report) in [("baseline", &sys.baseline), ("fused", &sys.fused)] {
            for topic in report.topics() {
                for metric in battery {
                    let label = metric.label();
                    if let Some(value) = report.topic_value(topic, &label) {
                        w.write_record([
                            sys.tag.as_str(),
                            phase,
                            topic,
                            &metric.name(),
                            &metric.cutoff().to_string(),
                            &float(value),
                        ])?;
                    }
                }
            }
        }
    }
    finish_file(&mut w, &per_topic_path)?;

    let sig_path = out_path(settings, "significance.csv")?;
    let mut w = csv_writer(&sig_path)?;
    w.write_record([
        "year",
        "method",
        "metric",
        "n_systems",
        "n_improved",
        "n_significant",
        "avg_improvement",
        "overall_change",
    ])?;
    for (label, summary) in summaries {
        w.write_record([
            settings.year.as_str(),
            method.name(),
            label,
            &summary.n_systems.to_string(),
            &summary.n_improved.to_string(),
            &summary.n_significant.to_string(),
            &float(summary.avg_improvement_significant),
            &float(summary.overall_change),
        ])?;
    }
    finish_file(&mut w, &sig_path)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

/// Evaluates one run file against the configured qrels and writes
/// `eval.csv` in the standard report schema.
pub fn run_evaluate(settings: &Settings, run_path: &Path) -> Result<EvalReport> {
    let qrels = load_qrels(settings)?;
    let run = load_run_file(run_path, settings.depth)?;
    let battery = fusion_battery(settings.depth, settings.ndcg_gain);
    let report = evaluate_run(&run, &qrels, &battery)?;

    let path = out_path(settings, "eval.csv")?;
    let file = File::create(&path)?;
    report.write_csv(file)?;
    log::info!("wrote {}", path.display());
    Ok(report)
}

// ---------------------------------------------------------------------------
// sigtest
// ---------------------------------------------------------------------------

/// Paired Fisher randomization between two run files on the full battery.
/// Writes `sigtest.csv`
/// (`metric,baseline_mean,treatment_mean,delta,p_value`).
pub fn run_sigtest(
    settings: &Settings,
    baseline_path: &Path,
    treatment_path: &Path,
) -> Result<Vec<MetricTest>> {
    let qrels = load_qrels(settings)?;
    let baseline_run = load_run_file(baseline_path, settings.depth)?;
    let treatment_run = load_run_file(treatment_path, settings.depth)?;
    let battery = fusion_battery(settings.depth, settings.ndcg_gain);
    let baseline = evaluate_run(&baseline_run, &qrels, &battery)?;
    let treatment = evaluate_run(&treatment_run, &qrels, &battery)?;

    let pair_tag = format!("{}|{}", baseline.run_tag(), treatment.run_tag());
    let mut tests = Vec::new();
    for metric in &battery {
        let label = metric.label();
        let pair = PairedScores::from_reports(&baseline, &treatment, &label)?;
        let seed = derive_seed(settings.seed, &pair_tag, &label);
        let p_value = fisher_randomization(&pair, settings.iterations, seed)?;
        let base_mean = pair_mean(&baseline, &pair, &label);
        let delta = pair.mean_delta();
        tests.push(MetricTest {
            metric: label,
            baseline_mean: base_mean,
            treatment_mean: base_mean + delta,
            delta,
            p_value,
        });
    }

    let path = out_path(settings, "sigtest.csv")?;
    let mut w = csv_writer(&path)?;
    w.write_record(["metric", "baseline_mean", "treatment_mean", "delta", "p_value"])?;
    for test in &tests {
        w.write_record([
            test.metric.as_str(),
            &float(test.baseline_mean),
            &float(test.treatment_mean),
            &float(test.delta),
            &float(test.p_value),
        ])?;
    }
    finish_file(&mut w, &path)?;
    Ok(tests)
}

// ---------------------------------------------------------------------------
// ndcg-curves
// ---------------------------------------------------------------------------

/// How many systems clear a score threshold, before or after fusion.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub measure: String,
    /// `"before"` (baseline) or `"after"` (fused).
    pub phase: &'static str,
    pub threshold: f64,
    pub count: usize,
}

/// Reads a `fuse_deltas.csv` and counts, for early-rank and full-depth
/// nDCG, how many systems score at or above each threshold before and after
/// fusion — the score-distribution view of a fusion study. Writes
/// `ndcg_curves.csv` (`measure,phase,threshold,count`).
pub fn run_ndcg_curves(settings: &Settings, deltas_path: &Path) -> Result<Vec<CurvePoint>> {
    let gain = settings.ndcg_gain;
    let mut measures = vec![Metric::Ndcg { cutoff: 10, gain }.label()];
    let deep = Metric::Ndcg { cutoff: settings.depth, gain }.label();
    if !measures.contains(&deep) {
        measures.push(deep);
    }

    let mut reader = csv::Reader::from_path(deltas_path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", deltas_path.display())))?;
    let headers = reader.headers()?.clone();
    let field = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::invalid(format!(
                "{} has no {name:?} column (found: {})",
                deltas_path.display(),
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })
    };
    let tag_col = field("run_tag")?;
    let metric_col = field("metric")?;
    let baseline_col = field("baseline")?;
    let fused_col = field("fused")?;

    let mut by_system: BTreeMap<String, BTreeMap<String, (f64, f64)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let parse_cell = |col: usize, what: &str| -> Result<f64> {
            record
                .get(col)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| {
                    Error::invalid(format!(
                        "bad {what} value in {}: {:?}",
                        deltas_path.display(),
                        record.get(col).unwrap_or("")
                    ))
                })
        };
        let metric = record.get(metric_col).unwrap_or("").to_string();
        if !measures.contains(&metric) {
            continue;
        }
        let tag = record.get(tag_col).unwrap_or("").to_string();
        let baseline = parse_cell(baseline_col, "baseline")?;
        let fused = parse_cell(fused_col, "fused")?;
        by_system.entry(tag).or_default().insert(metric, (baseline, fused));
    }
    if by_system.is_empty() {
        return Err(Error::invalid(format!(
            "{} has no rows for {}",
            deltas_path.display(),
            measures.join(" or ")
        )));
    }
    for (tag, metrics) in &by_system {
        for measure in &measures {
            if !metrics.contains_key(measure) {
                return Err(Error::invalid(format!(
                    "system {tag} has no {measure} row in {}",
                    deltas_path.display()
                )));
            }
        }
    }

    let mut thresholds = settings.thresholds.clone();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let mut points = Vec::new();
    for measure in &measures {
        for (phase, pick) in [
            ("before", 0usize),
            ("after", 1usize),
        ] {
            for &threshold in &thresholds {
                let count = by_system
                    .values()
                    .filter(|metrics| {
                        let (baseline, fused) = metrics[measure];
                        let value = if pick == 0 { baseline } else { fused };
                        value >= threshold
                    })
                    .count();
                points.push(CurvePoint {
                    measure: measure.clone(),
                    phase,
                    threshold,
                    count,
                });
            }
        }
    }

    let path = out_path(settings, "ndcg_curves.csv")?;
    let mut w = csv_writer(&path)?;
    w.write_record(["measure", "phase", "threshold", "count"])?;
    for point in &points {
        w.write_record([
            point.measure.as_str(),
            point.phase,
            &float(point.threshold),
            &point.count.to_string(),
        ])?;
    }
    finish_file(&mut w, &path)?;
    Ok(points)
}

// ---------------------------------------------------------------------------
// rbp-sweep
// ---------------------------------------------------------------------------

/// How many systems improved under rank-biased precision at one patience.
#[derive(Debug, Clone, PartialEq)]
pub struct RbpRow {
    pub p: f64,
    pub n_improved: usize,
    pub n_total: usize,
}

/// Re-runs the fusion pipeline and, for each patience value in the grid,
/// counts how many systems improve their mean rank-biased precision. Writes
/// `rbp_sweep.csv` (`year,p,n_improved,n_total`).
pub fn run_rbp_sweep(settings: &Settings) -> Result<Vec<RbpRow>> {
    let qrels = load_qrels(settings)?;
    let table = load_table(settings)?;
    let dir = require_path(&settings.runs_dir, "runs-dir")?;
    let runs = load_runs_dir(dir, settings.depth)?;
    let (method, _) = resolve_method(settings)?;
    let systems = fuse_systems(settings, &qrels, &table, runs, &method)?;

    let battery: Vec<Metric> = settings
        .p_grid
        .iter()
        .map(|&p| Metric::Rbp { p, depth: settings.depth })
        .collect();
    let evaluated: Vec<(EvalReport, EvalReport)> = systems
        .par_iter()
        .map(|fs| -> Result<_> {
            let b = evaluate_run(&fs.baseline, &qrels, &battery)?;
            let f = evaluate_run(&fs.fused, &qrels, &battery)?;
            Ok((b, f))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (metric, &p) in battery.iter().zip(&settings.p_grid) {
        let label = metric.label();
        let mut n_improved = 0;
        let mut n_total = 0;
        for (baseline, fused) in &evaluated {
            let (Some(b), Some(f)) = (baseline.aggregate(&label), fused.aggregate(&label)) else {
                continue;
            };
            n_total += 1;
            if f > b {
                n_improved += 1;
            }
        }
        rows.push(RbpRow { p, n_improved, n_total });
    }

    let path = out_path(settings, "rbp_sweep.csv")?;
    let mut w = csv_writer(&path)?;
    w.write_record(["year", "p", "n_improved", "n_total"])?;
    for row in &rows {
        w.write_record([
            settings.year.as_str(),
            &float(row.p),
            &row.n_improved.to_string(),
            &row.n_total.to_string(),
        ])?;
    }
    finish_file(&mut w, &path)?;
    Ok(rows)
}
