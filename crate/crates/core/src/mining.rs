//! Post-to-topic assignment, event keyword extraction and topic ranking.

use std::collections::{HashMap, HashSet};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::{default_place_names, default_stop_words, TokenizedPost, Vocabulary};
use crate::error::{Error, Result};
use crate::solver::FactorModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostTopicActivity {
    pub post_id: String,
    /// `x_p[k] = sum over in-vocabulary tokens of u_{token,k}` (times `a_k` when weighted).
    pub activity: Vec<f64>,
    /// `None` when no token is in the vocabulary or every activity is zero.
    pub dominant: Option<usize>,
}

impl PostTopicActivity {
    pub fn max_activity(&self) -> f64 {
        self.dominant.map_or(0.0, |k| self.activity[k])
    }
}

/// First index of the maximum, or `None` if every entry is zero.
fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, &v) in values.iter().enumerate() {
        if v > best.map_or(0.0, |b| values[b]) {
            best = Some(k);
        }
    }
    best
}

pub fn activity(post: &TokenizedPost, vocab: &Vocabulary, model: &FactorModel, weighted: bool) -> PostTopicActivity {
    let mut x = vec![0.0; model.k()];
    let mut in_vocab = false;
    for t in &post.tokens {
        let Some(i) = vocab.get(t) else { continue };
        in_vocab = true;
        for (k, xk) in x.iter_mut().enumerate() {
            *xk += model.u[[i, k]];
        }
    }
    if weighted {
        for (k, xk) in x.iter_mut().enumerate() {
            *xk *= model.a[k];
        }
    }
    PostTopicActivity {
        post_id: post.post_id.clone(),
        dominant: if in_vocab { argmax(&x) } else { None },
        activity: x,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignments {
    /// One entry per input post, in input order.
    pub posts: Vec<PostTopicActivity>,
    /// Posts left without a dominant topic.
    pub excluded: usize,
}

impl Assignments {
    /// Number of posts whose dominant topic is `k`, for every `k`.
    pub fn sizes(&self, k: usize) -> Vec<usize> {
        let mut s = vec![0; k];
        for p in &self.posts {
            if let Some(d) = p.dominant {
                s[d] += 1;
            }
        }
        s
    }
}

pub fn assign_all(posts: &[TokenizedPost], vocab: &Vocabulary, model: &FactorModel, weighted: bool) -> Assignments {
    let posts: Vec<_> = posts.iter().map(|p| activity(p, vocab, model, weighted)).collect();
    let excluded = posts.iter().filter(|p| p.dominant.is_none()).count();
    Assignments { posts, excluded }
}

/// Words dropped before counting event keywords.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeywordFilters {
    pub stop_words: HashSet<String>,
    pub place_names: HashSet<String>,
}

impl KeywordFilters {
    pub fn with_defaults() -> Self {
        KeywordFilters {
            stop_words: default_stop_words(),
            place_names: default_place_names(),
        }
    }

    pub fn keeps(&self, word: &str) -> bool {
        word.chars().any(char::is_alphanumeric) && !self.stop_words.contains(word) && !self.place_names.contains(word)
    }
}

/// Most frequent filtered words among the `n_top_posts` posts most
/// activated by `topic` (restricted to posts whose dominant topic it is).
/// `assignments` must be aligned with `posts`. Ties rank alphabetically.
pub fn event_keywords(
    assignments: &[PostTopicActivity],
    posts: &[TokenizedPost],
    topic: usize,
    n_top_posts: usize,
    n_keywords: usize,
    filters: &KeywordFilters,
) -> Result<Vec<(String, usize)>> {
    if assignments.len() != posts.len() {
        return Err(Error::Data(format!(
            "{} assignments for {} posts",
            assignments.len(),
            posts.len()
        )));
    }
    let mut members: Vec<(usize, f64)> = Vec::new();
    for (idx, (a, p)) in assignments.iter().zip(posts).enumerate() {
        if a.post_id != p.post_id {
            return Err(Error::Data(format!("assignment `{}` does not match post `{}`", a.post_id, p.post_id)));
        }
        if a.dominant == Some(topic) {
            members.push((idx, a.activity[topic]));
        }
    }
    if members.is_empty() {
        warn!("topic {topic} has no assigned posts; no event keywords");
        return Ok(Vec::new());
    }
    members.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for &(idx, _) in members.iter().take(n_top_posts) {
        for t in &posts[idx].tokens {
            if filters.keeps(t) {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().map(|(w, c)| (w.to_owned(), c)).collect();
    ranked.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    ranked.truncate(n_keywords);
    Ok(ranked)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicReport {
    pub rank: usize,
    pub topic_id: usize,
    pub importance: f64,
    pub top_words: Vec<String>,
    pub event_keywords: Vec<(String, usize)>,
    pub n_assigned_posts: usize,
}

/// Topics by descending `a_k`, ties kept in topic order, each with its top-`m` words.
pub fn rank_topics(model: &FactorModel, vocab: &Vocabulary, m: usize) -> Vec<TopicReport> {
    let mut order: Vec<usize> = (0..model.k()).collect();
    order.sort_by(|&x, &y| model.a[y].total_cmp(&model.a[x]));
    order
        .into_iter()
        .enumerate()
        .map(|(rank, k)| TopicReport {
            rank: rank + 1,
            topic_id: k,
            importance: model.a[k],
            top_words: model.top_words(k, m).into_iter().map(|i| vocab.word(i).to_owned()).collect(),
            event_keywords: Vec::new(),
            n_assigned_posts: 0,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningOptions {
    pub m: usize,
    pub n_top_posts: usize,
    pub n_keywords: usize,
    pub weighted_activity: bool,
}

impl Default for MiningOptions {
    fn default() -> Self {
        MiningOptions {
            m: 10,
            n_top_posts: 20,
            n_keywords: 10,
            weighted_activity: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningReport {
    pub topics: Vec<TopicReport>,
    pub assignments: Assignments,
}

/// Ranking, assignment and event keywords in one pass.
pub fn mine(
    model: &FactorModel,
    vocab: &Vocabulary,
    posts: &[TokenizedPost],
    opts: &MiningOptions,
    filters: &KeywordFilters,
) -> Result<MiningReport> {
    let assignments = assign_all(posts, vocab, model, opts.weighted_activity);
    let sizes = assignments.sizes(model.k());
    let mut topics = rank_topics(model, vocab, opts.m);
    for t in &mut topics {
        t.n_assigned_posts = sizes[t.topic_id];
        t.event_keywords = event_keywords(&assignments.posts, posts, t.topic_id, opts.n_top_posts, opts.n_keywords, filters)?;
    }
    if assignments.excluded > 0 {
        warn!("{} posts have zero topic activity and were not assigned", assignments.excluded);
    }
    Ok(MiningReport { topics, assignments })
}
