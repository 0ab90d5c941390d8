//! Experiment configuration: defaults, a plain-text `key = value` file
//! format, and command-line overrides.
//!
//! Settings are resolved in three layers — built-in defaults, then the
//! optional configuration file, then command-line flags — so a study can be
//! pinned in a file and varied from the shell. Unknown keys are rejected;
//! a typo should fail loudly, not silently fall back to a default.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::biblio::{ColumnMap, PoolPolicy, SignalSet};
use crate::error::{Error, Result};
use crate::metrics::Gain;

/// Which fusion method to apply; parameters are resolved by the pipeline
/// (the log-likelihood model is trained from the configured training runs).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Rrf,
    Borda,
    Bayes,
    Wmnz,
    CombMnz,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Rrf => "rrf",
            MethodKind::Borda => "borda",
            MethodKind::Bayes => "bayes",
            MethodKind::Wmnz => "wmnz",
            MethodKind::CombMnz => "combmnz",
        }
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rrf" => Ok(MethodKind::Rrf),
            "borda" => Ok(MethodKind::Borda),
            "bayes" => Ok(MethodKind::Bayes),
            "wmnz" => Ok(MethodKind::Wmnz),
            "combmnz" => Ok(MethodKind::CombMnz),
            other => Err(Error::config(format!(
                "unknown fusion method {other:?} (expected rrf, borda, bayes, wmnz, or combmnz)"
            ))),
        }
    }
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone)]
pub struct Settings {
    /// Collection label written into year columns of output files.
    pub year: String,
    pub qrels: Option<PathBuf>,
    pub runs_dir: Option<PathBuf>,
    pub biblio: Option<PathBuf>,
    pub columns: ColumnMap,
    pub delimiter: u8,
    /// Candidate pool policy. `None` keeps each command's natural default:
    /// judged pools for standalone signal evaluation and sweeps, run pools
    /// for re-ranking a system run.
    pub pool: Option<PoolPolicy>,
    pub method: MethodKind,
    pub rrf_k: f64,
    pub signals: SignalSet,
    pub depth: usize,
    pub seed: u64,
    pub iterations: usize,
    pub alpha: f64,
    pub out: PathBuf,
    pub ndcg_gain: Gain,
    pub max_grade: u32,
    /// Training run directories for the log-likelihood model, paired with
    /// `train_qrels` by position. Kept separate per collection because topic
    /// ids may collide across collections.
    pub train_runs_dirs: Vec<PathBuf>,
    pub train_qrels: Vec<PathBuf>,
    /// Runs sampled per training directory.
    pub train_sample: usize,
    pub write_fused: bool,
    /// Patience grid for the RBP sweep.
    pub p_grid: Vec<f64>,
    /// Score thresholds for the distribution curves.
    pub thresholds: Vec<f64>,
    /// Weights for weighted score fusion: first the baseline, then the
    /// signals in canonical subset order. `None` means unit weights.
    pub weights: Option<Vec<f64>>,
    /// Min-max rescale inputs for score-based fusion.
    pub normalize: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            year: String::new(),
            qrels: None,
            runs_dir: None,
            biblio: None,
            columns: ColumnMap::default(),
            delimiter: b',',
            pool: None,
            method: MethodKind::Rrf,
            rrf_k: crate::fusion::DEFAULT_RRF_K,
            signals: SignalSet::full(),
            depth: crate::trec::DEFAULT_DEPTH,
            seed: 42,
            iterations: 10_000,
            alpha: 0.05,
            out: PathBuf::from("out"),
            ndcg_gain: Gain::Linear,
            max_grade: crate::trec::DEFAULT_MAX_GRADE,
            train_runs_dirs: Vec::new(),
            train_qrels: Vec::new(),
            train_sample: 5,
            write_fused: false,
            p_grid: vec![0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.925, 0.95, 0.975, 0.99, 0.995],
            thresholds: (0..=40).map(|i| f64::from(i) * 0.025).collect(),
            weights: None,
            normalize: true,
        }
    }
}

impl Settings {
    /// Applies defaults, then the configuration file (if any), then the
    /// command-line overlay, and validates the result.
    pub fn resolve(file: Option<&Overlay>, cli: &Overlay) -> Result<Settings> {
        let mut settings = Settings::default();
        if let Some(overlay) = file {
            settings.apply(overlay);
        }
        settings.apply(cli);
        settings.validate()?;
        Ok(settings)
    }

    fn apply(&mut self, overlay: &Overlay) {
        macro_rules! take {
            ($field:ident) => {
                if let Some(value) = &overlay.$field {
                    self.$field = value.clone();
                }
            };
        }
        take!(year);
        take!(delimiter);
        take!(method);
        take!(rrf_k);
        take!(signals);
        take!(depth);
        take!(seed);
        take!(iterations);
        take!(alpha);
        take!(out);
        take!(ndcg_gain);
        take!(max_grade);
        take!(train_sample);
        take!(write_fused);
        take!(p_grid);
        take!(thresholds);
        take!(normalize);
        if let Some(v) = &overlay.qrels {
            self.qrels = Some(v.clone());
        }
        if let Some(v) = &overlay.runs_dir {
            self.runs_dir = Some(v.clone());
        }
        if let Some(v) = &overlay.biblio {
            self.biblio = Some(v.clone());
        }
        if let Some(v) = &overlay.pool {
            self.pool = Some(*v);
        }
        if let Some(v) = &overlay.weights {
            self.weights = Some(v.clone());
        }
        if let Some(v) = &overlay.train_runs_dirs {
            self.train_runs_dirs = v.clone();
        }
        if let Some(v) = &overlay.train_qrels {
            self.train_qrels = v.clone();
        }
        let map = &overlay.columns;
        for (field, value) in [
            (&mut self.columns.doc_id, &map.doc_id),
            (&mut self.columns.citations, &map.citations),
            (&mut self.columns.altmetric, &map.altmetric),
            (&mut self.columns.pub_year, &map.pub_year),
            (&mut self.columns.research_level, &map.research_level),
            (&mut self.columns.impact_factor, &map.impact_factor),
        ] {
            if let Some(name) = value {
                *field = name.clone();
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::config("depth must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(Error::config("iterations must be at least 1"));
        }
        if !self.rrf_k.is_finite() || self.rrf_k <= 0.0 {
            return Err(Error::config(format!(
                "rrf_k must be positive and finite, got {}",
                self.rrf_k
            )));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 || self.alpha >= 1.0 {
            return Err(Error::config(format!(
                "alpha must lie strictly between 0 and 1, got {}",
                self.alpha
            )));
        }
        if self.max_grade == 0 {
            return Err(Error::config("max_grade must be at least 1"));
        }
        if self.train_sample == 0 {
            return Err(Error::config("train_sample must be at least 1"));
        }
        if self.train_runs_dirs.len() != self.train_qrels.len() {
            return Err(Error::config(format!(
                "{} training run directories but {} training qrels files; \
                 they are paired by position",
                self.train_runs_dirs.len(),
                self.train_qrels.len()
            )));
        }
        for p in &self.p_grid {
            if !p.is_finite() || *p <= 0.0 || *p >= 1.0 {
                return Err(Error::config(format!(
                    "patience values must lie strictly between 0 and 1, got {p}"
                )));
            }
        }
        if self.p_grid.is_empty() {
            return Err(Error::config("p_grid must contain at least one value"));
        }
        if self.thresholds.is_empty() {
            return Err(Error::config("thresholds must contain at least one value"));
        }
        if self.thresholds.iter().any(|t| !t.is_finite()) {
            return Err(Error::config("thresholds must be finite"));
        }
        if let Some(weights) = &self.weights {
            if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
                return Err(Error::config("weights must be finite and positive"));
            }
        }
        Ok(())
    }
}

/// Column-name overrides, all optional.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColumnOverlay {
    pub doc_id: Option<String>,
    pub citations: Option<String>,
    pub altmetric: Option<String>,
    pub pub_year: Option<String>,
    pub research_level: Option<String>,
    pub impact_factor: Option<String>,
}

/// A partial settings layer: `None` fields leave the lower layer untouched.
#[derive(Debug, Clone, Default)]
pub struct Overlay {
    pub year: Option<String>,
    pub qrels: Option<PathBuf>,
    pub runs_dir: Option<PathBuf>,
    pub biblio: Option<PathBuf>,
    pub columns: ColumnOverlay,
    pub delimiter: Option<u8>,
    pub pool: Option<PoolPolicy>,
    pub method: Option<MethodKind>,
    pub rrf_k: Option<f64>,
    pub signals: Option<SignalSet>,
    pub depth: Option<usize>,
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub alpha: Option<f64>,
    pub out: Option<PathBuf>,
    pub ndcg_gain: Option<Gain>,
    pub max_grade: Option<u32>,
    pub train_runs_dirs: Option<Vec<PathBuf>>,
    pub train_qrels: Option<Vec<PathBuf>>,
    pub train_sample: Option<usize>,
    pub write_fused: Option<bool>,
    pub p_grid: Option<Vec<f64>>,
    pub thresholds: Option<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
    pub normalize: Option<bool>,
}

/// Parses a configuration file: one `key = value` per line, `#` comments and
/// blank lines ignored. List values are comma-separated. Unknown keys are
/// errors.
pub fn parse_config(text: &str) -> Result<Overlay> {
    let mut overlay = Overlay::default();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::parse(line_no, format!("expected key = value, found {line:?}"))
        })?;
        let key = key.trim();
        let value = value.trim();
        if let Some(prev) = seen.insert(key.to_string(), line_no) {
            return Err(Error::parse(
                line_no,
                format!("key {key:?} already set on line {prev}"),
            ));
        }
        apply_key(&mut overlay, key, value)
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
    }
    Ok(overlay)
}

fn apply_key(overlay: &mut Overlay, key: &str, value: &str) -> Result<()> {
    match key {
        "year" => overlay.year = Some(value.to_string()),
        "qrels" => overlay.qrels = Some(PathBuf::from(value)),
        "runs_dir" => overlay.runs_dir = Some(PathBuf::from(value)),
        "biblio" => overlay.biblio = Some(PathBuf::from(value)),
        "col_doc" => overlay.columns.doc_id = Some(value.to_string()),
        "col_citations" => overlay.columns.citations = Some(value.to_string()),
        "col_altmetric" => overlay.columns.altmetric = Some(value.to_string()),
        "col_pub_year" => overlay.columns.pub_year = Some(value.to_string()),
        "col_research_level" => overlay.columns.research_level = Some(value.to_string()),
        "col_impact_factor" => overlay.columns.impact_factor = Some(value.to_string()),
        "delimiter" => overlay.delimiter = Some(parse_delimiter(value)?),
        "pool" => overlay.pool = Some(value.parse()?),
        "method" => overlay.method = Some(value.parse()?),
        "rrf_k" => overlay.rrf_k = Some(parse_number(value, "rrf_k")?),
        "signals" => overlay.signals = Some(value.parse()?),
        "depth" => overlay.depth = Some(parse_number(value, "depth")?),
        "seed" => overlay.seed = Some(parse_number(value, "seed")?),
        "iterations" => overlay.iterations = Some(parse_number(value, "iterations")?),
        "alpha" => overlay.alpha = Some(parse_number(value, "alpha")?),
        "out" => overlay.out = Some(PathBuf::from(value)),
        "ndcg_gain" => overlay.ndcg_gain = Some(value.parse()?),
        "max_grade" => overlay.max_grade = Some(parse_number(value, "max_grade")?),
        "train_runs_dir" => {
            overlay.train_runs_dirs = Some(parse_paths(value));
        }
        "train_qrels" => {
            overlay.train_qrels = Some(parse_paths(value));
        }
        "train_sample" => overlay.train_sample = Some(parse_number(value, "train_sample")?),
        "write_fused" => overlay.write_fused = Some(parse_bool(value)?),
        "p_grid" => overlay.p_grid = Some(parse_number_list(value, "p_grid")?),
        "thresholds" => overlay.thresholds = Some(parse_number_list(value, "thresholds")?),
        "weights" => overlay.weights = Some(parse_number_list(value, "weights")?),
        "normalize" => overlay.normalize = Some(parse_bool(value)?),
        other => {
            return Err(Error::config(format!("unknown configuration key {other:?}")));
        }
    }
    Ok(())
}

/// Parses a one-character field delimiter; `tab` and `\t` mean a tab.
pub fn parse_delimiter(value: &str) -> Result<u8> {
    let unescaped = match value {
        "\\t" | "tab" => "\t",
        other => other,
    };
    let bytes = unescaped.as_bytes();
    if bytes.len() != 1 {
        return Err(Error::config(format!(
            "delimiter must be a single character, got {value:?}"
        )));
    }
    Ok(bytes[0])
}

fn parse_number<T: FromStr>(value: &str, key: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("invalid value {value:?} for {key}")))
}

/// Parses a comma-separated list of numbers, e.g. `0.8, 0.9, 0.99`.
pub fn parse_number_list(value: &str, key: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse()
                .map_err(|_| Error::config(format!("invalid value {v:?} in {key}")))
        })
        .collect()
}

fn parse_paths(value: &str) -> Vec<PathBuf> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .collect()
}

fn parse_bool(value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::config(format!("invalid boolean {other:?}"))),
    }
}
