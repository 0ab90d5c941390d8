//! Command-line front end: flag parsing and result printing only.
//! All computation lives in the library (`bibfuse::experiment`).

use std::fs;
use std::path::PathBuf;
use std::process;

use clap::{Parser, Subcommand};

use bibfuse::experiment::config::{parse_delimiter, parse_number_list};
use bibfuse::experiment::{self, parse_config, Overlay, Settings};
use bibfuse::Result;

#[derive(Parser)]
#[command(
    name = "bibfuse",
    version,
    about = "Rank fusion and retrieval evaluation with bibliometric signals",
    after_help = "Settings resolve in three layers: built-in defaults, then the \
                  --config file, then command-line flags."
)]
struct Cli {
    /// Plain-text `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Collection label written into output files (e.g. 2017).
    #[arg(long, global = true)]
    year: Option<String>,

    /// Relevance judgments file (topic 0 doc grade).
    #[arg(long, global = true)]
    qrels: Option<PathBuf>,

    /// Directory of run files; an optional manifest.txt lists expected tags.
    #[arg(long, global = true)]
    runs_dir: Option<PathBuf>,

    /// Per-document signal table (delimited text with a header row).
    #[arg(long, global = true)]
    biblio: Option<PathBuf>,

    /// Column name for the document id in the signal table.
    #[arg(long, global = true)]
    col_doc: Option<String>,
    /// Column name for citation counts.
    #[arg(long, global = true)]
    col_citations: Option<String>,
    /// Column name for the altmetric score.
    #[arg(long, global = true)]
    col_altmetric: Option<String>,
    /// Column name for the publication year.
    #[arg(long, global = true)]
    col_pub_year: Option<String>,
    /// Column name for the research level (1-4).
    #[arg(long, global = true)]
    col_research_level: Option<String>,
    /// Column name for the journal impact factor.
    #[arg(long, global = true)]
    col_impact_factor: Option<String>,

    /// Field delimiter of the signal table (`,`, `;`, `tab`, ...).
    #[arg(long, global = true)]
    delimiter: Option<String>,

    /// Candidate pool policy: `judged` or `run`. Defaults to judged pools
    /// for signal-eval/sweep and run pools for fuse-year/rbp-sweep.
    #[arg(long, global = true)]
    pool: Option<String>,

    /// Fusion method: rrf, borda, bayes, wmnz, or combmnz.
    #[arg(long, global = true)]
    method: Option<String>,

    /// Rank constant for reciprocal rank fusion.
    #[arg(long, global = true)]
    rrf_k: Option<f64>,

    /// Signal subset as letters (C=citations, A=altmetric, P=publication
    /// year, R=research level, I=impact factor), e.g. `CAP`.
    #[arg(long, global = true)]
    signals: Option<String>,

    /// Ranking depth: lists are truncated here on parse and after fusion.
    #[arg(long, global = true)]
    depth: Option<usize>,

    /// Experiment seed; every random draw derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte-Carlo iterations for randomization tests (small topic counts
    /// switch to exact enumeration automatically).
    #[arg(long, global = true)]
    iterations: Option<usize>,

    /// Significance level for the improvement summaries.
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Output directory for CSV artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Gain for nDCG: `linear` or `exponential`.
    #[arg(long, global = true)]
    ndcg_gain: Option<String>,

    /// Largest valid relevance grade in the qrels.
    #[arg(long, global = true)]
    max_grade: Option<u32>,

    /// Training runs directory for log-likelihood fusion (repeatable,
    /// paired with --train-qrels by position).
    #[arg(long, global = true)]
    train_runs_dir: Vec<PathBuf>,

    /// Training qrels for log-likelihood fusion (repeatable).
    #[arg(long, global = true)]
    train_qrels: Vec<PathBuf>,

    /// Runs sampled per training directory.
    #[arg(long, global = true)]
    train_sample: Option<usize>,

    /// Also write the fused runs under <out>/fused/.
    #[arg(long, global = true)]
    write_fused: bool,

    /// Feed raw scores to wmnz/combmnz instead of min-max normalizing.
    #[arg(long, global = true)]
    no_normalize: bool,

    /// Comma-separated patience grid for rbp-sweep.
    #[arg(long, global = true)]
    p_grid: Option<String>,

    /// Comma-separated score thresholds for ndcg-curves.
    #[arg(long, global = true)]
    thresholds: Option<String>,

    /// Comma-separated fusion weights: baseline first, then signals.
    #[arg(long, global = true)]
    weights: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count judged documents holding each bibliometric signal.
    Coverage,
    /// Evaluate each signal as a standalone ranker.
    SignalEval,
    /// Fuse and evaluate every non-empty subset of the signals.
    Sweep,
    /// Re-rank every run in --runs-dir with signal fusion and test the
    /// change per system.
    FuseYear,
    /// Evaluate one run file against the judgments.
    Evaluate {
        /// The run file to score.
        #[arg(long)]
        run: PathBuf,
    },
    /// Paired randomization test between two run files.
    Sigtest {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        treatment: PathBuf,
    },
    /// Count systems clearing score thresholds before and after fusion.
    NdcgCurves {
        /// Deltas file from fuse-year (default: <out>/fuse_deltas.csv).
        #[arg(long)]
        deltas: Option<PathBuf>,
    },
    /// Count improved systems across rank-biased precision patience values.
    RbpSweep,
}

impl Cli {
    fn overlay(&self) -> Result<Overlay> {
        let mut o = Overlay::default();
        o.year = self.year.clone();
        o.qrels = self.qrels.clone();
        o.runs_dir = self.runs_dir.clone();
        o.biblio = self.biblio.clone();
        o.columns.doc_id = self.col_doc.clone();
        o.columns.citations = self.col_citations.clone();
        o.columns.altmetric = self.col_altmetric.clone();
        o.columns.pub_year = self.col_pub_year.clone();
        o.columns.research_level = self.col_research_level.clone();
        o.columns.impact_factor = self.col_impact_factor.clone();
        if let Some(s) = &self.delimiter {
            o.delimiter = Some(parse_delimiter(s)?);
        }
        if let Some(s) = &self.pool {
            o.pool = Some(s.parse()?);
        }
        if let Some(s) = &self.method {
            o.method = Some(s.parse()?);
        }
        o.rrf_k = self.rrf_k;
        if let Some(s) = &self.signals {
            o.signals = Some(s.parse()?);
        }
        o.depth = self.depth;
        o.seed = self.seed;
        o.iterations = self.iterations;
        o.alpha = self.alpha;
        o.out = self.out.clone();
        if let Some(s) = &self.ndcg_gain {
            o.ndcg_gain = Some(s.parse()?);
        }
        o.max_grade = self.max_grade;
        if !self.train_runs_dir.is_empty() {
            o.train_runs_dirs = Some(self.train_runs_dir.clone());
        }
        if !self.train_qrels.is_empty() {
            o.train_qrels = Some(self.train_qrels.clone());
        }
        o.train_sample = self.train_sample;
        if self.write_fused {
            o.write_fused = Some(true);
        }
        if self.no_normalize {
            o.normalize = Some(false);
        }
        if let Some(s) = &self.p_grid {
            o.p_grid = Some(parse_number_list(s, "p-grid")?);
        }
        if let Some(s) = &self.thresholds {
            o.thresholds = Some(parse_number_list(s, "thresholds")?);
        }
        if let Some(s) = &self.weights {
            o.weights = Some(parse_number_list(s, "weights")?);
        }
        Ok(o)
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let file_overlay = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                bibfuse::Error::config(format!("cannot read {}: {e}", path.display()))
            })?;
            Some(parse_config(&text)?)
        }
        None => None,
    };
    let cli_overlay = cli.overlay()?;
    let settings = Settings::resolve(file_overlay.as_ref(), &cli_overlay)?;

    match &cli.command {
        Command::Coverage => {
            let rows = experiment::run_coverage(&settings)?;
            for row in rows {
                println!("{} {:>8} {:.4}", row.signal.letter(), row.count, row.fraction);
            }
        }
        Command::SignalEval => {
            let results = experiment::run_signal_eval(&settings)?;
            for (signal, report) in results {
                let summary: Vec<String> = report
                    .aggregates()
                    .iter()
                    .map(|(label, value)| format!("{label}={value:.4}"))
                    .collect();
                println!("{} {}", signal.letter(), summary.join(" "));
            }
        }
        Command::Sweep => {
            let results = experiment::run_sweep(&settings)?;
            for (subset, report) in results {
                let summary: Vec<String> = report
                    .aggregates()
                    .iter()
                    .map(|(label, value)| format!("{label}={value:.4}"))
                    .collect();
                println!("{subset} {}", summary.join(" "));
            }
        }
        Command::FuseYear => {
            let outcome = experiment::run_fuse_year(&settings)?;
            println!("{} systems", outcome.systems.len());
            for (label, s) in &outcome.summaries {
                println!(
                    "{label}: {}/{} improved, {} significant, avg significant improvement {:+.4}, overall {:+.4}",
                    s.n_improved,
                    s.n_systems,
                    s.n_significant,
                    s.avg_improvement_significant,
                    s.overall_change
                );
            }
        }
        Command::Evaluate { run } => {
            let report = experiment::run_evaluate(&settings, run)?;
            println!("{} ({} topics)", report.run_tag(), report.n_topics());
            for (label, value) in report.aggregates() {
                println!("{label} {value:.4}");
            }
        }
        Command::Sigtest {
            baseline,
            treatment,
        } => {
            let tests = experiment::run_sigtest(&settings, baseline, treatment)?;
            for t in tests {
                println!(
                    "{} baseline={:.4} treatment={:.4} delta={:+.4} p={:.4}",
                    t.metric, t.baseline_mean, t.treatment_mean, t.delta, t.p_value
                );
            }
        }
        Command::NdcgCurves { deltas } => {
            let deltas_path = deltas
                .clone()
                .unwrap_or_else(|| settings.out.join("fuse_deltas.csv"));
            let points = experiment::run_ndcg_curves(&settings, &deltas_path)?;
            println!("{} curve points", points.len());
        }
        Command::RbpSweep => {
            let rows = experiment::run_rbp_sweep(&settings)?;
            for row in rows {
                println!("p={} {}/{} improved", row.p, row.n_improved, row.n_total);
            }
        }
    }
    Ok(())
}
