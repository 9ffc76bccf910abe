//! Influence-weighted keyword co-occurrence graph.
//!
//! Each post contributes the *set* of its unordered adjacent bigrams, so a pair
//! repeated inside one post counts once. Edge weights are
//! `s_i * s_j * sum_p w_p * [pair in post p]`, stored upper-triangular.

use std::collections::{BTreeMap, HashMap, HashSet};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::{TokenizedPost, Vocabulary};
use crate::error::{Error, Result};
use crate::influence::InfluenceWeight;

/// Default cap for capped-IDF salience.
pub const DEFAULT_SALIENCE_CAP: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SalienceMode {
    /// `s_i = 1` for every word.
    Unit,
    /// `s_i = min(cap, ln(N / df_i))`.
    CappedIdf,
}

impl std::str::FromStr for SalienceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(SalienceMode::Unit),
            "capped-idf" | "capped_idf" => Ok(SalienceMode::CappedIdf),
            other => Err(Error::Config(format!("unknown salience mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SalienceVector(pub Vec<f64>);

impl SalienceVector {
    pub fn unit(v: usize) -> Self {
        SalienceVector(vec![1.0; v])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Word salience; `boost` multiplies the salience of listed words.
pub fn compute_salience(
    posts: &[TokenizedPost],
    vocab: &Vocabulary,
    mode: SalienceMode,
    cap: f64,
    boost: &HashMap<String, f64>,
) -> Result<SalienceVector> {
    if !(cap > 0.0) {
        return Err(Error::Config(format!("salience cap must be positive, got {cap}")));
    }
    let mut s = match mode {
        SalienceMode::Unit => vec![1.0; vocab.len()],
        SalienceMode::CappedIdf => {
            let mut df = vec![0usize; vocab.len()];
            for post in posts {
                let seen: HashSet<usize> = post.tokens.iter().filter_map(|t| vocab.get(t)).collect();
                for i in seen {
                    df[i] += 1;
                }
            }
            let n = posts.len() as f64;
            df.iter()
                .map(|&d| if d == 0 { cap } else { (n / d as f64).ln().min(cap) })
                .collect()
        }
    };
    for (word, factor) in boost {
        if *factor < 0.0 {
            return Err(Error::Config(format!("negative boost for `{word}`")));
        }
        if let Some(i) = vocab.get(word) {
            s[i] *= factor;
        }
    }
    Ok(SalienceVector(s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Sparse symmetric hollow matrix `W`, stored as `i < j` edges in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceGraph {
    vocab: Vocabulary,
    edges: Vec<Edge>,
}

impl CooccurrenceGraph {
    /// Builds from explicit weights. Entries with `i == j` or nonpositive weight
    /// are rejected; `(j, i)` is folded onto `(i, j)` and duplicates add up.
    pub fn from_edges(vocab: Vocabulary, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let v = vocab.len();
        let mut map = BTreeMap::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::Data(format!("self-loop on word {a}")));
            }
            if a >= v || b >= v {
                return Err(Error::Data(format!("edge ({a}, {b}) outside vocabulary of size {v}")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Data(format!("edge ({a}, {b}) has invalid weight {w}")));
            }
            *map.entry((a.min(b), a.max(b))).or_insert(0.0) += w;
        }
        Ok(Self::from_map(vocab, map))
    }

    /// Graph over a synthetic vocabulary `w0, w1, ...`.
    pub fn from_dense_upper(v: usize, mut weight: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let vocab = Vocabulary::from_words((0..v).map(|i| format!("w{i}")));
        let mut edges = Vec::new();
        for i in 0..v {
            for j in i + 1..v {
                let w = weight(i, j);
                if w != 0.0 {
                    edges.push((i, j, w));
                }
            }
        }
        Self::from_edges(vocab, edges)
    }

    fn from_map(vocab: Vocabulary, map: BTreeMap<(usize, usize), f64>) -> Self {
        let edges = map
            .into_iter()
            .filter(|&(_, w)| w > 0.0)
            .map(|((i, j), weight)| Edge { i, j, weight })
            .collect();
        CooccurrenceGraph { vocab, edges }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn num_words(&self) -> usize {
        self.vocab.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn nnz(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// `W_ij`; zero on the diagonal and for absent pairs.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let key = (i.min(j), i.max(j));
        self.edges
            .binary_search_by(|e| (e.i, e.j).cmp(&key))
            .map_or(0.0, |idx| self.edges[idx].weight)
    }

    /// Weighted degree of every word.
    pub fn strengths(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.num_words()];
        for e in &self.edges {
            s[e.i] += e.weight;
            s[e.j] += e.weight;
        }
        s
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let v = self.num_words();
        let mut m = vec![vec![0.0; v]; v];
        for e in &self.edges {
            m[e.i][e.j] = e.weight;
            m[e.j][e.i] = e.weight;
        }
        m
    }

    /// Same vocabulary and edge pattern, weights multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        CooccurrenceGraph {
            vocab: self.vocab.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    weight: e.weight * factor,
                    ..*e
                })
                .collect(),
        }
    }
}

/// The set of unordered adjacent bigrams of one post, as `(min, max)` indices.
pub fn post_bigrams(post: &TokenizedPost, vocab: &Vocabulary) -> Vec<(usize, usize)> {
    let ids: Vec<Option<usize>> = post.tokens.iter().map(|t| vocab.get(t)).collect();
    let mut pairs: Vec<(usize, usize)> = ids
        .windows(2)
        .filter_map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) if a != b => Some((a.min(b), a.max(b))),
            _ => None,
        })
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphOptions {
    /// Replace an all-zero weight vector by all ones (with a warning).
    pub fallback_uniform_weights: bool,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            fallback_uniform_weights: true,
        }
    }
}

/// Accumulates the weighted keyword graph. `weights[p]` must belong to `posts[p]`.
pub fn build_graph(
    posts: &[TokenizedPost],
    vocab: &Vocabulary,
    weights: &[InfluenceWeight],
    salience: &SalienceVector,
    options: GraphOptions,
) -> Result<CooccurrenceGraph> {
    if posts.len() != weights.len() {
        return Err(Error::Data(format!(
            "{} posts but {} weights",
            posts.len(),
            weights.len()
        )));
    }
    if let Some((p, w)) = posts.iter().zip(weights).find(|(p, w)| p.post_id != w.post_id) {
        return Err(Error::Data(format!(
            "post_id mismatch between posts ({}) and weights ({})",
            p.post_id, w.post_id
        )));
    }
    if salience.len() != vocab.len() {
        return Err(Error::Data(format!(
            "salience has length {} but vocabulary has {} words",
            salience.len(),
            vocab.len()
        )));
    }

    let mut w: Vec<f64> = weights.iter().map(|w| w.weight).collect();
    if w.iter().all(|&x| x == 0.0) && options.fallback_uniform_weights {
        warn!("all post weights are zero; falling back to uniform weights");
        w.iter_mut().for_each(|x| *x = 1.0);
    }

    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (post, &wp) in posts.iter().zip(&w) {
        if wp == 0.0 {
            continue;
        }
        for pair in post_bigrams(post, vocab) {
            *acc.entry(pair).or_insert(0.0) += wp;
        }
    }
    let s = &salience.0;
    for ((i, j), weight) in acc.iter_mut() {
        *weight *= s[*i] * s[*j];
    }
    Ok(CooccurrenceGraph::from_map(vocab.clone(), acc))
}
