//! File-based pipeline: each stage reads the artifacts of the previous ones
//! from an output directory and writes its own, so stages can be rerun
//! individually or chained with [`Stage::All`].
//!
//! Tables are UTF-8 TSV/CSV whose first line is `# influtopic-schema: <n>`
//! followed by a header row; JSON artifacts carry a `schema_version` field.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{
    default_place_names, default_stop_words, ingest, load_replacements, load_word_list, preprocess, DefaultTokenizer,
    InputFormat, Post, PreprocessOptions, TokenizedPost, Vocabulary,
};
use crate::error::{Error, Result};
use crate::graph::{build_graph, compute_salience, CooccurrenceGraph, GraphOptions, SalienceMode, SalienceVector};
use crate::influence::{compute_weights, InfluenceParams, InfluenceWeight};
use crate::metrics::{evaluate, sweep_k, MetricOptions, ReferenceMode, SharpnessSource, DEFAULT_TD_FLOOR};
use crate::mining::{mine, KeywordFilters, MiningOptions};
use crate::solver::{fit, FactorModel, FitTrace, SolverConfig};

pub const SCHEMA_VERSION: u32 = 1;

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const WEIGHTS_FILE: &str = "weights.tsv";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const EDGES_FILE: &str = "edges.tsv";
pub const GRAPH_FILE: &str = "graph.json";
pub const MODEL_FILE: &str = "model.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_SIDECAR: &str = "sweep.json";
pub const TOPICS_FILE: &str = "topics.tsv";
pub const EVENTS_FILE: &str = "events.tsv";
pub const ASSIGNMENTS_FILE: &str = "assignments.tsv";
pub const METRICS_FILE: &str = "metrics.json";

fn schema_line() -> String {
    format!("# influtopic-schema: {SCHEMA_VERSION}\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Weights,
    Graph,
    Fit,
    Sweep,
    Report,
    All,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Weights => "weights",
            Stage::Graph => "graph",
            Stage::Fit => "fit",
            Stage::Sweep => "sweep",
            Stage::Report => "report",
            Stage::All => "all",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ingest" => Stage::Ingest,
            "weights" => Stage::Weights,
            "graph" => Stage::Graph,
            "fit" => Stage::Fit,
            "sweep" => Stage::Sweep,
            "report" => Stage::Report,
            "all" => Stage::All,
            _ => return Err(Error::Config(format!("unknown stage `{s}`"))),
        })
    }
}

/// Named ablation settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    #[default]
    Full,
    /// `H` frozen at its initial value.
    NoH,
    /// No decorrelation (`gamma = 0`).
    NoGamma,
    /// Every post weight set to 1.
    NoWeights,
    /// Unit salience and unit post weights.
    PlainGraph,
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "full" => Preset::Full,
            "no-h" => Preset::NoH,
            "no-gamma" => Preset::NoGamma,
            "no-weights" => Preset::NoWeights,
            "plain-graph" => Preset::PlainGraph,
            _ => {
                return Err(Error::Config(format!(
                    "unknown preset `{s}` (expected full, no-h, no-gamma, no-weights or plain-graph)"
                )))
            }
        })
    }
}

impl Preset {
    fn apply(self, cfg: &mut PipelineConfig) {
        cfg.preset = self;
        match self {
            Preset::Full => {}
            Preset::NoH => cfg.solver.freeze_h = true,
            Preset::NoGamma => cfg.solver.gamma = 0.0,
            Preset::NoWeights => cfg.no_weights = true,
            Preset::PlainGraph => cfg.plain_graph = true,
        }
    }
}

/// Every setting of every stage. Serialized into each run record and model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub format: Option<InputFormat>,
    pub out_dir: PathBuf,
    pub stop_words: Option<PathBuf>,
    pub replacements: Option<PathBuf>,
    pub protected_terms: Option<PathBuf>,
    pub place_names: Option<PathBuf>,
    pub influence: InfluenceParams,
    pub salience: SalienceMode,
    pub salience_cap: f64,
    /// `word<TAB>factor` file multiplying the salience of listed words.
    pub boost: Option<PathBuf>,
    pub uniform_fallback: bool,
    pub no_weights: bool,
    pub plain_graph: bool,
    pub solver: SolverConfig,
    /// When nonempty, `all` sweeps these K instead of fitting `solver.k`.
    pub k_list: Vec<usize>,
    pub td_floor: f64,
    pub metrics: MetricOptions,
    pub mining: MiningOptions,
    pub preset: Preset,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            format: None,
            out_dir: PathBuf::from("out"),
            stop_words: None,
            replacements: None,
            protected_terms: None,
            place_names: None,
            influence: InfluenceParams::default(),
            salience: SalienceMode::CappedIdf,
            salience_cap: crate::graph::DEFAULT_SALIENCE_CAP,
            boost: None,
            uniform_fallback: true,
            no_weights: false,
            plain_graph: false,
            solver: SolverConfig::default(),
            k_list: Vec::new(),
            td_floor: DEFAULT_TD_FLOOR,
            metrics: MetricOptions::default(),
            mining: MiningOptions::default(),
            preset: Preset::Full,
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got `{v}`"))),
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: invalid value `{v}`")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<usize>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_num(key, s.trim())).collect()
}

/// Canonical key spelling: lowercase, `-` separated.
pub fn normalize_key(key: &str) -> String {
    key.trim().trim_start_matches("--").to_ascii_lowercase().replace('_', "-")
}

/// Reads `key = value` lines; blank lines and lines starting with `#` are skipped.
pub fn parse_config_text(text: &str, origin: &Path) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("{}:{}: expected `key = value`", origin.display(), n + 1)))?;
        pairs.push((normalize_key(k), v.trim().to_owned()));
    }
    Ok(pairs)
}

pub fn load_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_text(&text, path)
}

impl PipelineConfig {
    /// Applies `key = value` settings in order (later ones win). A `preset`
    /// is applied first so that explicit settings can refine it.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        let preset = pairs.iter().rev().find(|(k, _)| normalize_key(k) == "preset");
        if let Some((_, v)) = preset {
            v.parse::<Preset>()?.apply(&mut cfg);
        }
        for (k, v) in pairs {
            if normalize_key(k) != "preset" {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = normalize_key(key);
        let k = key.as_str();
        let v = value.trim();
        let path = || Some(PathBuf::from(v));
        match k {
            "input" => self.input = path(),
            "format" => self.format = Some(v.parse()?),
            "out-dir" => self.out_dir = PathBuf::from(v),
            "stop-words" => self.stop_words = path(),
            "replacements" => self.replacements = path(),
            "protected-terms" => self.protected_terms = path(),
            "place-names" => self.place_names = path(),
            "tau0" => self.influence.tau0 = parse_num(k, v)?,
            "eps-f" => self.influence.eps_f = parse_num(k, v)?,
            "decay-g" => self.influence.decay_g = parse_num(k, v)?,
            "hn-shift" => self.influence.hn_shift = parse_num(k, v)?,
            "salience" => self.salience = v.parse()?,
            "salience-cap" => self.salience_cap = parse_num(k, v)?,
            "boost" => self.boost = path(),
            "uniform-fallback" => self.uniform_fallback = parse_bool(k, v)?,
            "no-weights" => self.no_weights = parse_bool(k, v)?,
            "plain-graph" => self.plain_graph = parse_bool(k, v)?,
            "k" => self.solver.k = parse_num(k, v)?,
            "lambda-h" => self.solver.lambda_h = Some(parse_num(k, v)?),
            "gamma" => self.solver.gamma = parse_num(k, v)?,
            "rho" => self.solver.rho = parse_num(k, v)?,
            "eps" => self.solver.eps = parse_num(k, v)?,
            "tol" => self.solver.tol = parse_num(k, v)?,
            "max-outer" => self.solver.max_outer = parse_num(k, v)?,
            "max-admm" => self.solver.max_admm = parse_num(k, v)?,
            "admm-tol" => self.solver.admm_tol = parse_num(k, v)?,
            "decorrelation-step" => self.solver.decorrelation_step = parse_num(k, v)?,
            "seed" => self.solver.seed = parse_num(k, v)?,
            "restarts" => self.solver.restarts = parse_num(k, v)?,
            "no-h" => self.solver.freeze_h = parse_bool(k, v)?,
            "no-gamma" => {
                if parse_bool(k, v)? {
                    self.solver.gamma = 0.0;
                }
            }
            "cold-admm" => self.solver.cold_admm = parse_bool(k, v)?,
            "k-list" => self.k_list = parse_list(k, v)?,
            "td-floor" => self.td_floor = parse_num(k, v)?,
            "m" => {
                let m = parse_num(k, v)?;
                self.metrics.m = m;
                self.mining.m = m;
            }
            "reference" => self.metrics.reference = v.parse::<ReferenceMode>()?,
            "cv-window" => self.metrics.cv_window = parse_num(k, v)?,
            "m-list" => self.metrics.m_list = parse_list(k, v)?,
            "sharpness-on" => self.metrics.sharpness_on = v.parse::<SharpnessSource>()?,
            "n-top-posts" => self.mining.n_top_posts = parse_num(k, v)?,
            "n-keywords" => self.mining.n_keywords = parse_num(k, v)?,
            "weighted-activity" => self.mining.weighted_activity = parse_bool(k, v)?,
            "preset" => v.parse::<Preset>()?.apply(self),
            _ => return Err(Error::Config(format!("unknown setting `{k}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.influence.validate()?;
        self.solver.validate()?;
        if !(self.salience_cap > 0.0) {
            return Err(Error::Config(format!("salience-cap must be positive, got {}", self.salience_cap)));
        }
        if self.metrics.m < 2 {
            return Err(Error::Config(format!("m must be at least 2, got {}", self.metrics.m)));
        }
        if self.metrics.cv_window < 2 {
            return Err(Error::Config(format!("cv-window must be at least 2, got {}", self.metrics.cv_window)));
        }
        if !(0.0..=1.0).contains(&self.td_floor) {
            return Err(Error::Config(format!("td-floor must lie in [0, 1], got {}", self.td_floor)));
        }
        if self.k_list.contains(&0) {
            return Err(Error::Config("k-list entries must be at least 1".into()));
        }
        if self.mining.n_top_posts == 0 || self.mining.n_keywords == 0 {
            return Err(Error::Config("n-top-posts and n-keywords must be at least 1".into()));
        }
        Ok(())
    }

    fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Path of an upstream artifact, or the error naming the stage that produces it.
    fn require(&self, name: &str, stage: Stage) -> Result<PathBuf> {
        let p = self.artifact(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact {
                path: p,
                stage: stage.name(),
            })
        }
    }

    fn preprocess_options(&self) -> Result<PreprocessOptions> {
        let mut opts = PreprocessOptions::with_defaults();
        if let Some(p) = &self.stop_words {
            opts.stop_words = load_word_list(p)?.into_iter().collect();
        }
        if let Some(p) = &self.replacements {
            opts.replacements = load_replacements(p)?;
        }
        if let Some(p) = &self.protected_terms {
            opts.protected_terms = load_word_list(p)?.into_iter().collect::<BTreeSet<_>>();
        }
        Ok(opts)
    }

    fn keyword_filters(&self) -> Result<KeywordFilters> {
        Ok(KeywordFilters {
            stop_words: match &self.stop_words {
                Some(p) => load_word_list(p)?.into_iter().collect(),
                None => default_stop_words(),
            },
            place_names: match &self.place_names {
                Some(p) => load_word_list(p)?.into_iter().map(|w| w.to_lowercase()).collect(),
                None => default_place_names(),
            },
        })
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

fn parse_err(path: &Path, line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        field: field.into(),
        message: message.into(),
    }
}

/// Checks and strips the schema line of a table artifact.
fn table_body<'a>(path: &Path, text: &'a str) -> Result<&'a str> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let version = first
        .strip_prefix("# influtopic-schema: ")
        .ok_or_else(|| parse_err(path, 1, "schema", "missing schema header"))?;
    if version.trim() != SCHEMA_VERSION.to_string() {
        return Err(parse_err(path, 1, "schema", format!("unsupported schema version {version}")));
    }
    Ok(rest)
}

fn check_json_schema(path: &Path, value: &serde_json::Value) -> Result<()> {
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => Ok(()),
        Some(v) => Err(parse_err(path, 1, "schema_version", format!("unsupported schema version {v}"))),
        None => Err(parse_err(path, 1, "schema_version", "missing")),
    }
}

fn tsv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().delimiter(b'\t').from_writer(Vec::new())
}

fn finish_table(w: csv::Writer<Vec<u8>>) -> String {
    let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 table");
    schema_line() + &body
}

fn tsv_rows(path: &Path, body: &str) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::ReaderBuilder::new().delimiter(b'\t').has_headers(true).from_reader(body.as_bytes());
    r.records()
        .enumerate()
        .map(|(n, rec)| rec.map_err(|e| parse_err(path, n + 3, "<row>", e.to_string())))
        .collect()
}

/// One line of `corpus.jsonl`: the ingested post plus its cleaned tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    #[serde(flatten)]
    pub post: Post,
    pub clean_tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CorpusHeader {
    schema_version: u32,
    posts: usize,
    vocabulary: usize,
}

pub fn load_corpus(dir: &Path) -> Result<(Vec<Post>, Vec<TokenizedPost>)> {
    let path = dir.join(CORPUS_FILE);
    let text = read(&path)?;
    let mut lines = text.lines();
    let header: serde_json::Value = serde_json::from_str(lines.next().unwrap_or(""))
        .map_err(|e| parse_err(&path, 1, "<header>", e.to_string()))?;
    check_json_schema(&path, &header)?;
    let mut posts = Vec::new();
    let mut tokenized = Vec::new();
    for (n, line) in lines.enumerate() {
        let rec: CorpusRecord =
            serde_json::from_str(line).map_err(|e| parse_err(&path, n + 2, "<record>", e.to_string()))?;
        tokenized.push(TokenizedPost::new(rec.post.post_id.clone(), rec.clean_tokens));
        posts.push(rec.post);
    }
    Ok((posts, tokenized))
}

pub fn load_weights(dir: &Path) -> Result<Vec<InfluenceWeight>> {
    let path = dir.join(WEIGHTS_FILE);
    let text = read(&path)?;
    let body = table_body(&path, &text)?;
    tsv_rows(&path, body)?
        .iter()
        .enumerate()
        .map(|(n, r)| {
            let line = n + 3;
            let num = |i: usize, field: &str| -> Result<f64> {
                r.get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| parse_err(&path, line, field, "expected a number"))
            };
            Ok(InfluenceWeight {
                post_id: r.get(0).unwrap_or_default().to_owned(),
                itf: num(1, "itf")?,
                iidf: num(2, "iidf")?,
                attention: num(3, "Y")?,
                mean_gap_hours: num(4, "mean_gap_hours")?,
                adjusted: num(5, "adjusted")?,
                weight: num(6, "w")?,
                pacing_imputed: r.get(7) == Some("true"),
            })
        })
        .collect()
}

pub fn load_graph(dir: &Path) -> Result<CooccurrenceGraph> {
    let vpath = dir.join(VOCAB_FILE);
    let vtext = read(&vpath)?;
    let words = table_body(&vpath, &vtext)?.lines();
    let vocab = Vocabulary::from_words(words);
    let epath = dir.join(EDGES_FILE);
    let etext = read(&epath)?;
    let rows = tsv_rows(&epath, table_body(&epath, &etext)?)?;
    let mut edges = Vec::with_capacity(rows.len());
    for (n, r) in rows.iter().enumerate() {
        let bad = |f: &str| parse_err(&epath, n + 3, f, "expected a number");
        let i = r.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("i"))?;
        let j = r.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("j"))?;
        let w = r.get(2).and_then(|s| s.parse().ok()).ok_or_else(|| bad("weight"))?;
        edges.push((i, j, w));
    }
    CooccurrenceGraph::from_edges(vocab, edges)
}

/// On-disk model: `U` and `H` are stored row-major (`V` rows of `K` values).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    #[serde(rename = "V")]
    pub v: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub words: Vec<String>,
    #[serde(rename = "U")]
    pub u: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "H")]
    pub h: Vec<Vec<f64>>,
    pub h_zero: bool,
    pub final_objective: f64,
    pub converged: bool,
    pub lambda_h: f64,
    pub config: SolverConfig,
}

impl ModelFile {
    pub fn new(model: &FactorModel, trace: &FitTrace, vocab: &Vocabulary, config: &SolverConfig) -> Self {
        let rows = |m: &Array2<f64>| m.rows().into_iter().map(|r| r.to_vec()).collect();
        ModelFile {
            schema_version: SCHEMA_VERSION,
            v: model.num_words(),
            k: model.k(),
            words: vocab.words().to_vec(),
            u: rows(&model.u),
            a: model.a.to_vec(),
            h: rows(&model.h),
            h_zero: model.h_zero,
            final_objective: trace.final_objective(),
            converged: trace.converged,
            lambda_h: trace.lambda_h,
            config: config.clone(),
        }
    }

    pub fn to_model(&self, path: &Path) -> Result<FactorModel> {
        let bad = |m: String| parse_err(path, 1, "model", m);
        let mat = |rows: &[Vec<f64>], name: &str| -> Result<Array2<f64>> {
            if rows.len() != self.v || rows.iter().any(|r| r.len() != self.k) {
                return Err(bad(format!("{name} is not {} x {}", self.v, self.k)));
            }
            Ok(Array2::from_shape_fn((self.v, self.k), |(i, c)| rows[i][c]))
        };
        if self.a.len() != self.k {
            return Err(bad(format!("A has {} entries, expected {}", self.a.len(), self.k)));
        }
        let mut model = FactorModel::new(mat(&self.u, "U")?, Array1::from(self.a.clone()), mat(&self.h, "H")?);
        model.h_zero = self.h_zero;
        Ok(model)
    }
}

pub fn load_model(dir: &Path) -> Result<(FactorModel, ModelFile)> {
    let path = dir.join(MODEL_FILE);
    let text = read(&path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse_err(&path, 1, "<json>", e.to_string()))?;
    check_json_schema(&path, &value)?;
    let file: ModelFile = serde_json::from_value(value).map_err(|e| parse_err(&path, 1, "<json>", e.to_string()))?;
    Ok((file.to_model(&path)?, file))
}

fn write_run_record(cfg: &PipelineConfig, stage: Stage) -> Result<()> {
    let record = json!({
        "schema_version": SCHEMA_VERSION,
        "stage": stage.name(),
        "config": cfg,
        "meta": { "created_at": chrono::Utc::now().to_rfc3339() },
    });
    write(&cfg.artifact(&format!("run_{stage}.json")), to_json(&record))
}

fn ensure_out_dir(cfg: &PipelineConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))
}

/// Runs one stage (or the whole chain) and writes its artifacts under `cfg.out_dir`.
pub fn run(stage: Stage, cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    match stage {
        Stage::Ingest => stage_ingest(cfg)?,
        Stage::Weights => stage_weights(cfg)?,
        Stage::Graph => stage_graph(cfg)?,
        Stage::Fit => stage_fit(cfg)?,
        Stage::Sweep => stage_sweep(cfg)?,
        Stage::Report => stage_report(cfg)?,
        Stage::All => {
            stage_ingest(cfg)?;
            stage_weights(cfg)?;
            stage_graph(cfg)?;
            if cfg.k_list.is_empty() {
                stage_fit(cfg)?;
            } else {
                stage_sweep(cfg)?;
            }
            stage_report(cfg)?;
        }
    }
    write_run_record(cfg, stage)
}

fn stage_ingest(cfg: &PipelineConfig) -> Result<()> {
    let input = cfg
        .input
        .as_deref()
        .ok_or_else(|| Error::Config("ingest needs an input file (--input)".into()))?;
    let format = match cfg.format {
        Some(f) => f,
        None => InputFormat::from_path(input)?,
    };
    let opts = cfg.preprocess_options()?;
    ensure_out_dir(cfg)?;
    let posts = ingest(input, format)?;
    let (tokenized, vocab) = preprocess(&posts, &opts, &DefaultTokenizer)?;
    info!("ingested {} posts, vocabulary of {} words", posts.len(), vocab.len());
    let header = CorpusHeader {
        schema_version: SCHEMA_VERSION,
        posts: posts.len(),
        vocabulary: vocab.len(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes") + "\n";
    for (post, tp) in posts.into_iter().zip(tokenized) {
        let rec = CorpusRecord {
            post,
            clean_tokens: tp.tokens,
        };
        out += &serde_json::to_string(&rec).expect("record serializes");
        out.push('\n');
    }
    write(&cfg.artifact(CORPUS_FILE), out)
}

fn stage_weights(cfg: &PipelineConfig) -> Result<()> {
    cfg.require(CORPUS_FILE, Stage::Ingest)?;
    let (posts, _) = load_corpus(&cfg.out_dir)?;
    let weights = compute_weights(&posts, &cfg.influence)?;
    let mut w = tsv_writer();
    let io = |e: csv::Error| Error::Data(e.to_string());
    w.write_record(["post_id", "itf", "iidf", "Y", "mean_gap_hours", "adjusted", "w", "pacing_imputed"])
        .map_err(io)?;
    for x in &weights {
        w.write_record([
            x.post_id.clone(),
            x.itf.to_string(),
            x.iidf.to_string(),
            x.attention.to_string(),
            x.mean_gap_hours.to_string(),
            x.adjusted.to_string(),
            x.weight.to_string(),
            x.pacing_imputed.to_string(),
        ])
        .map_err(io)?;
    }
    info!("computed {} influence weights", weights.len());
    write(&cfg.artifact(WEIGHTS_FILE), finish_table(w))
}

fn load_boost(path: &Path) -> Result<HashMap<String, f64>> {
    let mut out = HashMap::new();
    for (n, line) in read(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = line
            .split_once('\t')
            .and_then(|(w, f)| f.trim().parse::<f64>().ok().map(|f| (w.trim().to_lowercase(), f)));
        let (w, f) = parsed.ok_or_else(|| parse_err(path, n + 1, "boost", "expected `word<TAB>factor`"))?;
        out.insert(w, f);
    }
    Ok(out)
}

fn stage_graph(cfg: &PipelineConfig) -> Result<()> {
    cfg.require(CORPUS_FILE, Stage::Ingest)?;
    cfg.require(WEIGHTS_FILE, Stage::Weights)?;
    let boost = match &cfg.boost {
        Some(p) => load_boost(p)?,
        None => HashMap::new(),
    };
    let (_, posts) = load_corpus(&cfg.out_dir)?;
    let mut weights = load_weights(&cfg.out_dir)?;
    let vocab = Vocabulary::from_posts(&posts);
    if cfg.no_weights || cfg.plain_graph {
        weights.iter_mut().for_each(|w| w.weight = 1.0);
    }
    let salience = if cfg.plain_graph {
        SalienceVector::unit(vocab.len())
    } else {
        compute_salience(&posts, &vocab, cfg.salience, cfg.salience_cap, &boost)?
    };
    let options = GraphOptions {
        fallback_uniform_weights: cfg.uniform_fallback,
    };
    let graph = build_graph(&posts, &vocab, &weights, &salience, options)?;
    info!("graph: {} words, {} edges, total weight {}", graph.num_words(), graph.nnz(), graph.total_weight());

    let mut vocab_txt = schema_line();
    for w in vocab.words() {
        vocab_txt += w;
        vocab_txt.push('\n');
    }
    write(&cfg.artifact(VOCAB_FILE), vocab_txt)?;

    let mut w = tsv_writer();
    let io = |e: csv::Error| Error::Data(e.to_string());
    w.write_record(["i", "j", "weight"]).map_err(io)?;
    for e in graph.edges() {
        w.write_record([e.i.to_string(), e.j.to_string(), e.weight.to_string()]).map_err(io)?;
    }
    write(&cfg.artifact(EDGES_FILE), finish_table(w))?;

    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "V": graph.num_words(),
        "nnz": graph.nnz(),
        "total_weight": graph.total_weight(),
        "salience": if cfg.plain_graph { SalienceMode::Unit } else { cfg.salience },
        "uniform_post_weights": cfg.no_weights || cfg.plain_graph,
    });
    write(&cfg.artifact(GRAPH_FILE), to_json(&summary))
}

fn require_graph(cfg: &PipelineConfig) -> Result<CooccurrenceGraph> {
    cfg.require(VOCAB_FILE, Stage::Graph)?;
    cfg.require(EDGES_FILE, Stage::Graph)?;
    load_graph(&cfg.out_dir)
}

fn save_model(cfg: &PipelineConfig, graph: &CooccurrenceGraph, model: &FactorModel, trace: &FitTrace, solver: &SolverConfig) -> Result<()> {
    let file = ModelFile::new(model, trace, graph.vocab(), solver);
    write(&cfg.artifact(MODEL_FILE), to_json(&file))?;
    write(&cfg.artifact(TRACE_FILE), schema_line() + &trace.to_csv())
}

fn stage_fit(cfg: &PipelineConfig) -> Result<()> {
    let graph = require_graph(cfg)?;
    let (model, trace) = fit(&graph, &cfg.solver)?;
    info!(
        "fit K = {}: objective {} after {} iterations (converged: {})",
        model.k(),
        trace.final_objective(),
        trace.records.len() - 1,
        trace.converged
    );
    save_model(cfg, &graph, &model, &trace, &cfg.solver)
}

fn stage_sweep(cfg: &PipelineConfig) -> Result<()> {
    let graph = require_graph(cfg)?;
    cfg.require(CORPUS_FILE, Stage::Ingest)?;
    if cfg.k_list.is_empty() {
        return Err(Error::Config("sweep needs a k-list".into()));
    }
    let (_, posts) = load_corpus(&cfg.out_dir)?;
    let result = sweep_k(&graph, &posts, &cfg.k_list, &cfg.solver, &cfg.metrics, cfg.td_floor)?;
    info!("sweep selected K = {}", result.selected_k);
    write(&cfg.artifact(SWEEP_FILE), schema_line() + &result.to_csv())?;
    let sidecar = json!({
        "schema_version": SCHEMA_VERSION,
        "k_list": result.rows.iter().map(|r| r.k).collect::<Vec<_>>(),
        "selected_k": result.selected_k,
        "td_floor": cfg.td_floor,
        "floor_relaxed": result.floor_relaxed,
        "rows": result.rows,
    });
    write(&cfg.artifact(SWEEP_SIDECAR), to_json(&sidecar))?;
    let (model, trace, _) = result.selected();
    let solver = SolverConfig {
        k: result.selected_k,
        ..cfg.solver.clone()
    };
    save_model(cfg, &graph, model, trace, &solver)
}

fn stage_report(cfg: &PipelineConfig) -> Result<()> {
    let graph = require_graph(cfg)?;
    cfg.require(CORPUS_FILE, Stage::Ingest)?;
    cfg.require(MODEL_FILE, Stage::Fit)?;
    let filters = cfg.keyword_filters()?;
    let (_, posts) = load_corpus(&cfg.out_dir)?;
    let (model, file) = load_model(&cfg.out_dir)?;
    if file.words != graph.vocab().words() {
        return Err(Error::Data(format!(
            "{} does not match the vocabulary in {}; rerun `fit`",
            MODEL_FILE, VOCAB_FILE
        )));
    }
    let metrics = evaluate(&graph, &posts, &model, &cfg.metrics)?;
    let mined = mine(&model, graph.vocab(), &posts, &cfg.mining, &filters)?;
    let io = |e: csv::Error| Error::Data(e.to_string());

    let mut w = tsv_writer();
    w.write_record(["rank", "topic_id", "a_k", "top_words", "n_posts"]).map_err(io)?;
    for t in &mined.topics {
        w.write_record([
            t.rank.to_string(),
            t.topic_id.to_string(),
            t.importance.to_string(),
            t.top_words.join(" "),
            t.n_assigned_posts.to_string(),
        ])
        .map_err(io)?;
    }
    write(&cfg.artifact(TOPICS_FILE), finish_table(w))?;

    let mut w = tsv_writer();
    w.write_record(["topic_id", "keyword", "count"]).map_err(io)?;
    for t in &mined.topics {
        for (kw, c) in &t.event_keywords {
            w.write_record([t.topic_id.to_string(), kw.clone(), c.to_string()]).map_err(io)?;
        }
    }
    write(&cfg.artifact(EVENTS_FILE), finish_table(w))?;

    let mut w = tsv_writer();
    w.write_record(["post_id", "k_star", "max_activity"]).map_err(io)?;
    for p in &mined.assignments.posts {
        let k = p.dominant.map_or(String::new(), |k| k.to_string());
        w.write_record([p.post_id.clone(), k, p.max_activity().to_string()]).map_err(io)?;
    }
    write(&cfg.artifact(ASSIGNMENTS_FILE), finish_table(w))?;

    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "K": model.k(),
        "metrics": metrics,
        "excluded_posts": mined.assignments.excluded,
    });
    info!("report: NPMI {:.4}, Cv {:.4}, TD {:.4}", metrics.npmi, metrics.cv, metrics.td);
    write(&cfg.artifact(METRICS_FILE), to_json(&report))
}
