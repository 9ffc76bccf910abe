//! Topic quality scores (NPMI, Cv, topic diversity, sharpness) and the
//! coherence-driven sweep over the number of topics.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use log::warn;
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::corpus::{TokenizedPost, Vocabulary};
use crate::error::{Error, Result};
use crate::graph::CooccurrenceGraph;
use crate::solver::{fit, FactorModel, FitTrace, SolverConfig};

/// Additive smoothing on joint probabilities, and the floor for absent words.
pub const NPMI_EPS: f64 = 1e-12;
pub const DEFAULT_CV_WINDOW: usize = 110;
pub const DEFAULT_TOP_M: usize = 10;
pub const DEFAULT_TD_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicWordSet {
    pub topic_id: usize,
    pub top_words: Vec<String>,
}

impl TopicWordSet {
    pub fn new(topic_id: usize, top_words: Vec<String>) -> Result<Self> {
        if top_words.len() < 2 {
            return Err(Error::Config(format!("topic {topic_id}: need at least 2 top words")));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = top_words.iter().find(|w| !seen.insert(w.as_str())) {
            return Err(Error::Data(format!("topic {topic_id}: duplicate top word `{dup}`")));
        }
        Ok(TopicWordSet { topic_id, top_words })
    }

    pub fn m(&self) -> usize {
        self.top_words.len()
    }
}

/// Top-`m` words of every column of `U`.
pub fn topic_word_sets(model: &FactorModel, vocab: &Vocabulary, m: usize) -> Result<Vec<TopicWordSet>> {
    (0..model.k())
        .map(|k| {
            let words = model.top_words(k, m).into_iter().map(|i| vocab.word(i).to_owned()).collect();
            TopicWordSet::new(k, words)
        })
        .collect()
}

/// Marginal and joint occurrence probabilities for NPMI.
pub trait CooccurrenceReference {
    /// `None` when the word never occurs.
    fn prob(&self, word: &str) -> Option<f64>;
    fn joint_prob(&self, a: &str, b: &str) -> f64;
}

/// Boolean occurrence of words in counting units (whole posts or sliding windows).
#[derive(Debug, Clone, Default)]
pub struct DocumentReference {
    units: usize,
    postings: HashMap<String, Vec<usize>>,
}

impl DocumentReference {
    fn push_unit<'a>(&mut self, words: impl Iterator<Item = &'a String>) {
        let unit = self.units;
        for w in words {
            let list = self.postings.entry(w.clone()).or_default();
            if list.last() != Some(&unit) {
                list.push(unit);
            }
        }
        self.units += 1;
    }

    /// One unit per post.
    pub fn from_posts(posts: &[TokenizedPost]) -> Self {
        let mut r = DocumentReference::default();
        for p in posts {
            r.push_unit(p.tokens.iter());
        }
        r
    }

    /// Boolean sliding windows of `window` tokens; a post shorter than the
    /// window counts as a single window, an empty post as one empty window.
    pub fn sliding_windows(posts: &[TokenizedPost], window: usize) -> Self {
        let window = window.max(1);
        let mut r = DocumentReference::default();
        for p in posts {
            if p.tokens.len() <= window {
                r.push_unit(p.tokens.iter());
            } else {
                for start in 0..=p.tokens.len() - window {
                    r.push_unit(p.tokens[start..start + window].iter());
                }
            }
        }
        r
    }

    pub fn num_units(&self) -> usize {
        self.units
    }

    pub fn count(&self, word: &str) -> usize {
        self.postings.get(word).map_or(0, Vec::len)
    }

    pub fn joint_count(&self, a: &str, b: &str) -> usize {
        let (Some(x), Some(y)) = (self.postings.get(a), self.postings.get(b)) else {
            return 0;
        };
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < x.len() && j < y.len() {
            match x[i].cmp(&y[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

impl CooccurrenceReference for DocumentReference {
    fn prob(&self, word: &str) -> Option<f64> {
        let c = self.count(word);
        (c > 0).then(|| c as f64 / self.units as f64)
    }

    fn joint_prob(&self, a: &str, b: &str) -> f64 {
        if self.units == 0 {
            return 0.0;
        }
        self.joint_count(a, b) as f64 / self.units as f64
    }
}

/// Probabilities read off the weighted graph, treating each unit of edge
/// weight as a counting unit: `p(i, j) = W_ij / sum W` and `p(i) = s_i / sum W`
/// with `s` the weighted degree (the share of edge mass touching `i`).
pub struct GraphReference<'a> {
    graph: &'a CooccurrenceGraph,
    strengths: Vec<f64>,
    total: f64,
}

impl<'a> GraphReference<'a> {
    pub fn new(graph: &'a CooccurrenceGraph) -> Self {
        GraphReference {
            graph,
            strengths: graph.strengths(),
            total: graph.total_weight(),
        }
    }
}

impl CooccurrenceReference for GraphReference<'_> {
    fn prob(&self, word: &str) -> Option<f64> {
        let i = self.graph.vocab().get(word)?;
        let s = self.strengths[i];
        (s > 0.0 && self.total > 0.0).then(|| s / self.total)
    }

    fn joint_prob(&self, a: &str, b: &str) -> f64 {
        let vocab = self.graph.vocab();
        match (vocab.get(a), vocab.get(b)) {
            (Some(i), Some(j)) if i == j => self.prob(a).unwrap_or(0.0),
            (Some(i), Some(j)) if self.total > 0.0 => self.graph.weight(i, j) / self.total,
            _ => 0.0,
        }
    }
}

/// `ln((p_ab + eps) / (p_a p_b)) / -ln(p_ab + eps)`.
///
/// A pair present in every unit (`p_ab = 1`) is perfectly associated and
/// scores 1; the smoothed formula would otherwise divide by `-ln(1 + eps) < 0`.
pub fn npmi_value(p_ab: f64, p_a: f64, p_b: f64) -> f64 {
    if p_ab >= 1.0 {
        return 1.0;
    }
    let joint = p_ab + NPMI_EPS;
    (joint / (p_a * p_b)).ln() / -joint.ln()
}

fn pair_npmi(reference: &dyn CooccurrenceReference, a: &str, b: &str, missing: &mut Vec<String>) -> f64 {
    let mut marginal = |w: &str| {
        reference.prob(w).unwrap_or_else(|| {
            if !missing.iter().any(|m| m == w) {
                missing.push(w.to_owned());
            }
            NPMI_EPS
        })
    };
    let (pa, pb) = (marginal(a), marginal(b));
    npmi_value(reference.joint_prob(a, b), pa, pb)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpmiScore {
    pub value: f64,
    pub per_topic: Vec<f64>,
    /// Top words that never occur in the reference (scored with `p = NPMI_EPS`).
    pub missing_words: Vec<String>,
}

/// Mean over topics of the mean NPMI over unordered top-word pairs.
pub fn npmi(topics: &[TopicWordSet], reference: &dyn CooccurrenceReference) -> NpmiScore {
    let mut missing = Vec::new();
    let per_topic: Vec<f64> = topics
        .iter()
        .map(|t| {
            let w = &t.top_words;
            let mut sum = 0.0;
            let mut n = 0usize;
            for i in 0..w.len() {
                for j in i + 1..w.len() {
                    sum += pair_npmi(reference, &w[i], &w[j], &mut missing);
                    n += 1;
                }
            }
            if n == 0 {
                0.0
            } else {
                sum / n as f64
            }
        })
        .collect();
    missing.sort();
    NpmiScore {
        value: mean(&per_topic),
        per_topic,
        missing_words: missing,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub value: f64,
    pub per_topic: Vec<f64>,
    /// Window actually used after degrading to the longest post.
    pub window: usize,
    pub segmentation: String,
}

/// Cv coherence with one-set segmentation: every top word's NPMI context
/// vector (against the topic's own top words, counted in boolean sliding
/// windows) is compared by cosine with the sum of all those vectors.
///
/// Context-vector entries that involve a word absent from every window are
/// zero, so a topic made only of unseen words scores 0.
pub fn cv(topics: &[TopicWordSet], posts: &[TokenizedPost], window: usize) -> Result<CvScore> {
    if window < 2 {
        return Err(Error::Config(format!("Cv window must be at least 2, got {window}")));
    }
    let longest = posts.iter().map(TokenizedPost::len).max().unwrap_or(0);
    let used = if longest < window {
        let degraded = longest.max(1);
        warn!("Cv window {window} exceeds the longest post ({longest} tokens); using {degraded}");
        degraded
    } else {
        window
    };
    let reference = DocumentReference::sliding_windows(posts, used);
    let per_topic: Vec<f64> = topics.iter().map(|t| cv_topic(&t.top_words, &reference)).collect();
    Ok(CvScore {
        value: mean(&per_topic),
        per_topic,
        window: used,
        segmentation: "one-set".into(),
    })
}

fn cv_topic(words: &[String], reference: &DocumentReference) -> f64 {
    let m = words.len();
    let probs: Vec<Option<f64>> = words.iter().map(|w| reference.prob(w)).collect();
    let mut ctx = Array2::<f64>::zeros((m, m));
    for i in 0..m {
        for j in i..m {
            let (Some(pi), Some(pj)) = (probs[i], probs[j]) else { continue };
            let v = npmi_value(reference.joint_prob(&words[i], &words[j]), pi, pj);
            ctx[[i, j]] = v;
            ctx[[j, i]] = v;
        }
    }
    let total = ctx.sum_axis(Axis(0));
    let total_norm = total.dot(&total).sqrt();
    let sims: Vec<f64> = ctx
        .rows()
        .into_iter()
        .map(|row| {
            let n = row.dot(&row).sqrt() * total_norm;
            if n > 0.0 {
                row.dot(&total) / n
            } else {
                0.0
            }
        })
        .collect();
    mean(&sims)
}

/// Share of distinct words among all listed top words (`|unique| / (K m)`).
pub fn topic_diversity(topics: &[TopicWordSet]) -> f64 {
    let listed: usize = topics.iter().map(TopicWordSet::m).sum();
    if listed == 0 {
        return 0.0;
    }
    let unique: HashSet<&str> = topics.iter().flat_map(|t| t.top_words.iter().map(String::as_str)).collect();
    unique.len() as f64 / listed as f64
}

/// Which factor's columns are read as topic distributions for sharpness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SharpnessSource {
    #[default]
    Topics,
    Residual,
}

impl FromStr for SharpnessSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "topics" | "u" => Ok(SharpnessSource::Topics),
            "residual" | "h" => Ok(SharpnessSource::Residual),
            _ => Err(Error::Config(format!("unknown sharpness source `{s}` (expected topics or residual)"))),
        }
    }
}

impl fmt::Display for SharpnessSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SharpnessSource::Topics => "topics",
            SharpnessSource::Residual => "residual",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sharpness {
    /// Shannon entropy in nats, one per topic with a nonzero column.
    pub per_topic_entropy: Vec<f64>,
    pub mean_entropy: f64,
    /// `m -> mean cumulative mass of the m largest entries`.
    pub topk_mass: BTreeMap<usize, f64>,
}

/// Entropy and top-`m` mass of every column, each normalized to sum to one.
/// All-zero columns (possible for the residual) are skipped.
pub fn sharpness(model: &FactorModel, m_list: &[usize], source: SharpnessSource) -> Sharpness {
    let mat = match source {
        SharpnessSource::Topics => &model.u,
        SharpnessSource::Residual => &model.h,
    };
    let mut entropies = Vec::new();
    let mut masses: BTreeMap<usize, Vec<f64>> = m_list.iter().map(|&m| (m, Vec::new())).collect();
    for col in mat.axis_iter(Axis(1)) {
        let s: f64 = col.iter().map(|x| x.max(0.0)).sum();
        if s <= 0.0 {
            continue;
        }
        let p: Vec<f64> = col.iter().map(|x| x.max(0.0) / s).collect();
        entropies.push(-p.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>());
        let mut sorted = p.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        for (&m, acc) in masses.iter_mut() {
            acc.push(sorted.iter().take(m).sum::<f64>().min(1.0));
        }
    }
    Sharpness {
        mean_entropy: mean(&entropies),
        per_topic_entropy: entropies,
        topk_mass: masses.into_iter().map(|(m, v)| (m, mean(&v))).collect(),
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Co-occurrence source for NPMI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceMode {
    /// Boolean co-occurrence within whole posts.
    #[default]
    Posts,
    /// The weighted co-occurrence graph itself.
    Graph,
}

impl FromStr for ReferenceMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "posts" => Ok(ReferenceMode::Posts),
            "graph" => Ok(ReferenceMode::Graph),
            _ => Err(Error::Config(format!("unknown NPMI reference `{s}` (expected posts or graph)"))),
        }
    }
}

impl fmt::Display for ReferenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReferenceMode::Posts => "posts",
            ReferenceMode::Graph => "graph",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricOptions {
    pub m: usize,
    pub reference: ReferenceMode,
    pub cv_window: usize,
    pub m_list: Vec<usize>,
    pub sharpness_on: SharpnessSource,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            m: DEFAULT_TOP_M,
            reference: ReferenceMode::Posts,
            cv_window: DEFAULT_CV_WINDOW,
            m_list: vec![10, 25],
            sharpness_on: SharpnessSource::Topics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub npmi: f64,
    pub cv: f64,
    pub td: f64,
    pub per_topic_npmi: Vec<f64>,
    pub per_topic_cv: Vec<f64>,
    pub per_topic_entropy: Vec<f64>,
    pub mean_entropy: f64,
    pub topk_mass: BTreeMap<usize, f64>,
    pub m: usize,
    pub npmi_reference: ReferenceMode,
    pub missing_words: Vec<String>,
    pub cv_window: usize,
    pub cv_segmentation: String,
    pub sharpness_on: SharpnessSource,
}

/// Scores a fitted model; `graph` supplies the vocabulary and, in graph mode, the NPMI reference.
pub fn evaluate(
    graph: &CooccurrenceGraph,
    posts: &[TokenizedPost],
    model: &FactorModel,
    opts: &MetricOptions,
) -> Result<MetricReport> {
    if opts.m < 2 {
        return Err(Error::Config(format!("m must be at least 2, got {}", opts.m)));
    }
    let topics = topic_word_sets(model, graph.vocab(), opts.m)?;
    let np = match opts.reference {
        ReferenceMode::Posts => npmi(&topics, &DocumentReference::from_posts(posts)),
        ReferenceMode::Graph => npmi(&topics, &GraphReference::new(graph)),
    };
    if !np.missing_words.is_empty() {
        warn!("{} top words absent from the NPMI reference", np.missing_words.len());
    }
    let c = cv(&topics, posts, opts.cv_window)?;
    let sh = sharpness(model, &opts.m_list, opts.sharpness_on);
    Ok(MetricReport {
        npmi: np.value,
        cv: c.value,
        td: topic_diversity(&topics),
        per_topic_npmi: np.per_topic,
        per_topic_cv: c.per_topic,
        per_topic_entropy: sh.per_topic_entropy,
        mean_entropy: sh.mean_entropy,
        topk_mass: sh.topk_mass,
        m: topics.first().map_or(opts.m, TopicWordSet::m),
        npmi_reference: opts.reference,
        missing_words: np.missing_words,
        cv_window: c.window,
        cv_segmentation: c.segmentation,
        sharpness_on: opts.sharpness_on,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub npmi: f64,
    pub cv: f64,
    pub td: f64,
    pub final_objective: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// One row per K, ascending.
    pub rows: Vec<SweepRow>,
    pub selected_k: usize,
    /// True when no K reached the TD floor and the pick ignored it.
    pub floor_relaxed: bool,
    pub fits: Vec<(FactorModel, FitTrace)>,
    pub reports: Vec<MetricReport>,
}

impl SweepResult {
    /// `K,NPMI,Cv,TD` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("K,NPMI,Cv,TD\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:.6},{:.6},{:.6}\n", r.k, r.npmi, r.cv, r.td));
        }
        out
    }

    pub fn selected(&self) -> (&FactorModel, &FitTrace, &MetricReport) {
        let i = self.rows.iter().position(|r| r.k == self.selected_k).expect("selected K is a row");
        (&self.fits[i].0, &self.fits[i].1, &self.reports[i])
    }
}

/// `argmax NPMI` among rows with `TD >= td_floor`, ties to the smaller K.
/// Falls back to all rows when none reaches the floor; the flag reports that.
pub fn select_k(rows: &[SweepRow], td_floor: f64) -> Option<(usize, bool)> {
    let best = |eligible: &dyn Fn(&SweepRow) -> bool| {
        let mut sorted: Vec<&SweepRow> = rows.iter().filter(|r| eligible(r)).collect();
        sorted.sort_by_key(|r| r.k);
        sorted.into_iter().fold(None::<&SweepRow>, |acc, r| match acc {
            Some(b) if b.npmi >= r.npmi => Some(b),
            _ => Some(r),
        })
    };
    if let Some(r) = best(&|r| r.td >= td_floor) {
        return Some((r.k, false));
    }
    best(&|_| true).map(|r| (r.k, true))
}

/// Fits one model per K (same solver seed policy for all) and scores each.
pub fn sweep_k(
    graph: &CooccurrenceGraph,
    posts: &[TokenizedPost],
    k_values: &[usize],
    solver: &SolverConfig,
    metrics: &MetricOptions,
    td_floor: f64,
) -> Result<SweepResult> {
    let mut ks = k_values.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(Error::Config("k-list is empty".into()));
    }
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut reports = Vec::new();
    for &k in &ks {
        let cfg = SolverConfig { k, ..solver.clone() };
        let (model, trace) = fit(graph, &cfg).map_err(|e| e.context(format!("K = {k}")))?;
        let report = evaluate(graph, posts, &model, metrics).map_err(|e| e.context(format!("K = {k}")))?;
        rows.push(SweepRow {
            k,
            npmi: report.npmi,
            cv: report.cv,
            td: report.td,
            final_objective: trace.final_objective(),
        });
        fits.push((model, trace));
        reports.push(report);
    }
    let (selected_k, floor_relaxed) = select_k(&rows, td_floor).expect("rows is nonempty");
    if floor_relaxed {
        warn!("no K reached TD >= {td_floor}; selected K = {selected_k} by NPMI alone");
    }
    Ok(SweepResult {
        rows,
        selected_k,
        floor_relaxed,
        fits,
        reports,
    })
}
