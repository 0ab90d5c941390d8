//! End-to-end tests of the experiment layer against collections on disk:
//! settings resolution through real files, cross-checks between commands,
//! artifact round-trips, and the pipeline-level error paths.

mod support;

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use bibfuse::biblio::SignalSet;
use bibfuse::experiment::{
    parse_config, run_fuse_year, run_ndcg_curves, run_signal_eval, run_sweep, MethodKind,
    Overlay, Settings,
};
use bibfuse::fusion::BayesModel;
use bibfuse::trec::parse_run;
use support::WorldSpec;

struct SharedWorld {
    _tmp: tempfile::TempDir,
    dir: PathBuf,
}

fn world() -> &'static Path {
    static WORLD: OnceLock<SharedWorld> = OnceLock::new();
    &WORLD
        .get_or_init(|| {
            let tmp = tempfile::tempdir().expect("create temp dir");
            let dir = tmp.path().to_path_buf();
            support::write_world(
                &dir,
                &WorldSpec {
                    n_topics: 8,
                    docs_per_topic: 100,
                    n_relevant: 15,
                    n_runs: 4,
                    seed: 0x9192_0001,
                },
            );
            SharedWorld { _tmp: tmp, dir }
        })
        .dir
}

fn settings_for(out: &Path) -> Settings {
    Settings {
        year: "testworld".to_string(),
        qrels: Some(world().join("qrels.txt")),
        runs_dir: Some(world().join("runs")),
        biblio: Some(world().join("biblio.csv")),
        out: out.to_path_buf(),
        iterations: 200,
        ..Settings::default()
    }
}

/// A subset of size one fused with reciprocal ranks is the signal ranking
/// itself, so the sweep's singleton rows must equal the standalone signal
/// evaluation on every aggregate.
#[test]
fn sweep_singletons_match_signal_eval() {
    let out_a = tempfile::tempdir().expect("out dir");
    let out_b = tempfile::tempdir().expect("out dir");
    let signal_reports = run_signal_eval(&settings_for(out_a.path())).expect("signal eval");
    let sweep_reports = run_sweep(&settings_for(out_b.path())).expect("sweep");

    let mut compared = 0usize;
    for (signal, report) in &signal_reports {
        let singleton = SignalSet::new([*signal]).to_string();
        let (_, sweep_report) = sweep_reports
            .iter()
            .find(|(s, _)| s.to_string() == singleton)
            .unwrap_or_else(|| panic!("sweep has no subset {singleton}"));
        for (label, value) in report.aggregates() {
            let sweep_value = sweep_report
                .aggregate(label)
                .unwrap_or_else(|| panic!("sweep subset {singleton} lacks {label}"));
            assert!(
                (value - sweep_value).abs() < 1e-12,
                "{singleton}/{label}: signal-eval {value} vs sweep {sweep_value}"
            );
            compared += 1;
        }
    }
    assert_eq!(compared, 5 * 5, "five signals by five measures");
}

/// Fusing with an empty signal subset re-ranks with the baseline alone, so
/// every metric delta is zero and no change is ever significant.
#[test]
fn empty_signal_subset_is_the_identity_pipeline() {
    let out = tempfile::tempdir().expect("out dir");
    let mut settings = settings_for(out.path());
    settings.signals = SignalSet::empty();

    let outcome = run_fuse_year(&settings).expect("identity fusion");
    assert_eq!(outcome.systems.len(), 4);
    for system in &outcome.systems {
        for test in &system.tests {
            assert!(
                test.delta.abs() < 1e-12,
                "{}/{}: identity fusion moved the aggregate by {}",
                system.tag,
                test.metric,
                test.delta
            );
            assert!(
                (test.p_value - 1.0).abs() < 1e-12,
                "{}/{}: p = {} for a zero difference",
                system.tag,
                test.metric,
                test.p_value
            );
        }
    }
}

/// Config-file values reach the pipeline, and command-line values override
/// them: the file pins the subset, the command line narrows the depth.
#[test]
fn config_file_flows_through_with_cli_override() {
    let file = parse_config(
        "# experiment configuration\n\
         signals = CA\n\
         depth = 300\n\
         iterations = 150\n",
    )
    .expect("parse config");
    let mut cli = Overlay::default();
    cli.qrels = Some(world().join("qrels.txt"));
    cli.biblio = Some(world().join("biblio.csv"));
    cli.runs_dir = Some(world().join("runs"));
    let out = tempfile::tempdir().expect("out dir");
    cli.out = Some(out.path().to_path_buf());
    cli.depth = Some(150);

    let settings = Settings::resolve(Some(&file), &cli).expect("resolve");
    assert_eq!(settings.signals.to_string(), "CA");
    assert_eq!(settings.depth, 150, "command line beats the file");
    assert_eq!(settings.iterations, 150, "file beats the default");

    let results = run_sweep(&settings).expect("sweep");
    let subsets: Vec<String> = results.iter().map(|(s, _)| s.to_string()).collect();
    assert_eq!(subsets, ["C", "A", "CA"]);
    for (_, report) in &results {
        assert!(
            report.aggregate("recall@150").is_some(),
            "evaluation depth should follow the overridden setting"
        );
    }
}

/// The trained-model path end to end: training runs are sampled from a
/// directory, the model and its training log land on disk, and the model
/// file parses back into a usable model.
#[test]
fn bayes_training_writes_usable_artifacts() {
    let out = tempfile::tempdir().expect("out dir");
    let mut settings = settings_for(out.path());
    settings.method = MethodKind::Bayes;
    settings.train_runs_dirs = vec![world().join("runs")];
    settings.train_qrels = vec![world().join("qrels.txt")];

    let outcome = run_fuse_year(&settings).expect("bayes fusion");
    assert_eq!(outcome.systems.len(), 4);

    let model_text =
        std::fs::read_to_string(out.path().join("bayes_model.txt")).expect("model file");
    let model = BayesModel::from_text(&model_text).expect("model parses back");
    assert!(model.bins().n_bins() > 0);

    let log = std::fs::read_to_string(out.path().join("bayes_training.txt")).expect("log file");
    for tag in ["sys000", "sys001", "sys002", "sys003"] {
        assert!(
            log.contains(tag),
            "training log should list the sampled run {tag}"
        );
    }
}

/// Fused runs written to disk are valid run files: they parse back, carry
/// the derived tag, and respect the depth limit.
#[test]
fn written_fused_runs_parse_back() {
    let out = tempfile::tempdir().expect("out dir");
    let mut settings = settings_for(out.path());
    settings.write_fused = true;
    settings.depth = 40;

    run_fuse_year(&settings).expect("fusion");
    let fused_dir = out.path().join("fused");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&fused_dir)
        .expect("fused dir")
        .map(|e| e.expect("entry").path())
        .collect();
    files.sort();
    assert_eq!(files.len(), 4);

    for file in files {
        let text = std::fs::read(&file).expect("read fused run");
        let run = parse_run(&text[..], 1000).expect("fused run parses");
        assert!(
            run.tag().ends_with("-fused"),
            "fused tag should mark the transformation, got {}",
            run.tag()
        );
        assert_eq!(run.n_topics(), 8);
        for (topic, list) in run.topics() {
            assert!(
                list.len() <= 40,
                "topic {topic} has {} entries beyond depth 40",
                list.len()
            );
        }
    }
}

/// The score-distribution curves need both the early-rank and full-depth
/// measures for every system; a deltas file missing one is refused rather
/// than silently producing half a curve.
#[test]
fn curves_refuse_a_system_missing_a_measure() {
    let out = tempfile::tempdir().expect("out dir");
    let deltas = out.path().join("fuse_deltas.csv");
    std::fs::write(
        &deltas,
        "run_tag,metric,baseline,fused,delta\n\
         sysA,ndcg@1000,0.50,0.60,0.10\n\
         sysA,ndcg@10,0.40,0.45,0.05\n\
         sysB,ndcg@1000,0.30,0.35,0.05\n",
    )
    .expect("write deltas");

    let settings = settings_for(out.path());
    let err = run_ndcg_curves(&settings, &deltas).expect_err("sysB lacks ndcg@10");
    let message = err.to_string();
    assert!(
        message.contains("sysB") && message.contains("ndcg@10"),
        "error should name the system and the missing measure, got: {message}"
    );
}

/// Explicit fusion weights must cover the baseline plus every signal; a
/// mismatched count is a configuration error naming the expectation.
#[test]
fn weight_count_mismatch_is_a_config_error() {
    let out = tempfile::tempdir().expect("out dir");
    let mut settings = settings_for(out.path());
    settings.method = MethodKind::Wmnz;
    settings.signals = "CAP".parse().expect("subset");
    settings.weights = Some(vec![1.0, 2.0]); // needs 1 + 3

    let err = run_fuse_year(&settings).expect_err("two weights for four lists");
    let message = err.to_string();
    assert!(
        message.contains('4') && message.contains('2'),
        "error should contrast expected and given counts, got: {message}"
    );
}

/// Topics in the runs but absent from the judgments are skipped with a
/// warning rather than scored; topics judged but not retrieved still count
/// against the averages.
#[test]
fn unjudged_topics_are_excluded_from_evaluation() {
    let tmp = tempfile::tempdir().expect("world dir");
    support::write_world(
        tmp.path(),
        &WorldSpec {
            n_topics: 4,
            docs_per_topic: 60,
            n_relevant: 10,
            n_runs: 2,
            seed: 0x9192_0002,
        },
    );
    // drop one topic's judgments entirely
    let qrels_path = tmp.path().join("qrels.txt");
    let kept: String = std::fs::read_to_string(&qrels_path)
        .expect("read qrels")
        .lines()
        .filter(|l| !l.starts_with("103 "))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(&qrels_path, kept).expect("write qrels");

    let out = tempfile::tempdir().expect("out dir");
    let settings = Settings {
        year: "holdout".to_string(),
        qrels: Some(qrels_path),
        runs_dir: Some(tmp.path().join("runs")),
        biblio: Some(tmp.path().join("biblio.csv")),
        out: out.path().to_path_buf(),
        iterations: 100,
        ..Settings::default()
    };
    let outcome = run_fuse_year(&settings).expect("fusion");
    for system in &outcome.systems {
        let topics: Vec<&str> = system.baseline.topics().collect();
        assert_eq!(
            topics,
            ["100", "101", "102"],
            "unjudged topic 103 must not be scored"
        );
    }
}
