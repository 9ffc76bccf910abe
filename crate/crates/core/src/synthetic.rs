//! Planted fixtures with known ground truth, for tests, examples and benchmarks.

use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Post;
use crate::error::{Error, Result};
use crate::graph::CooccurrenceGraph;

/// Disjoint word blocks of `block_size` words; `W_ij = a_k` when `i` and `j`
/// both lie in block `k`, zero otherwise. Also returns the 0/1 block indicator.
pub fn planted_blocks(a: &[f64], block_size: usize) -> Result<(CooccurrenceGraph, Array2<f64>)> {
    let v = a.len() * block_size;
    let graph = CooccurrenceGraph::from_dense_upper(v, |i, j| {
        if i / block_size == j / block_size {
            a[i / block_size]
        } else {
            0.0
        }
    })?;
    let indicator = Array2::from_shape_fn((v, a.len()), |(i, k)| if i / block_size == k { 1.0 } else { 0.0 });
    Ok((graph, indicator))
}

/// Corpus mixing a few high-influence posts on distinct themes with many
/// low-influence "chatter" posts drawn from a shared filler vocabulary.
#[derive(Debug, Clone)]
pub struct InfluenceCorpusSpec {
    pub posts: usize,
    /// Theme names; theme `t` owns the words `t0 .. t{theme_vocab-1}`.
    pub themes: Vec<String>,
    pub theme_vocab: usize,
    pub theme_words_per_post: usize,
    pub chatter_vocab: usize,
    pub chatter_words_per_post: usize,
    /// Every `coherent_every`-th post is a themed, high-engagement post.
    pub coherent_every: usize,
    pub seed: u64,
}

impl Default for InfluenceCorpusSpec {
    fn default() -> Self {
        InfluenceCorpusSpec {
            posts: 500,
            themes: vec!["metro".into(), "bus".into(), "fare".into()],
            theme_vocab: 10,
            theme_words_per_post: 6,
            chatter_vocab: 20,
            chatter_words_per_post: 7,
            coherent_every: 5,
            seed: 42,
        }
    }
}

impl InfluenceCorpusSpec {
    pub fn theme_words(&self, theme: usize) -> Vec<String> {
        (0..self.theme_vocab).map(|i| format!("{}{i}", self.themes[theme])).collect()
    }

    /// Themed posts get heavy engagement from small audiences and fast
    /// comment bursts; chatter posts get almost none from large audiences
    /// and slow, spread-out comments.
    pub fn generate(&self) -> Vec<Post> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let themes: Vec<Vec<String>> = (0..self.themes.len()).map(|t| self.theme_words(t)).collect();
        let chatter: Vec<String> = (0..self.chatter_vocab).map(|i| format!("chatter{i}")).collect();
        let start: DateTime<Utc> = DateTime::parse_from_rfc3339("2024-03-01T08:00:00Z")
            .expect("valid timestamp")
            .with_timezone(&Utc);
        (0..self.posts)
            .map(|p| {
                let coherent = p % self.coherent_every == 0;
                let (words, likes, comments, followers, gap_minutes) = if coherent {
                    let theme = &themes[(p / self.coherent_every) % themes.len()];
                    let w: Vec<String> = theme.choose_multiple(&mut rng, self.theme_words_per_post).cloned().collect();
                    (w, rng.gen_range(150..300), 6, rng.gen_range(50..150), 6)
                } else {
                    let w: Vec<String> = chatter.choose_multiple(&mut rng, self.chatter_words_per_post).cloned().collect();
                    (w, rng.gen_range(0..3), 3, rng.gen_range(3000..8000), 1200)
                };
                let times = (0..comments).map(|c| start + Duration::minutes(c * gap_minutes)).collect();
                let mut post = Post::new(format!("s{p:03}"), words.join(" "))
                    .with_engagement(likes, comments as u64, 0, followers)
                    .with_comment_times(times);
                post.timestamp = start;
                post.platform = "synthetic".into();
                post
            })
            .collect()
    }
}

/// Writes posts in the JSONL input format.
pub fn write_jsonl(posts: &[Post], path: &Path) -> Result<()> {
    let mut out = String::new();
    for p in posts {
        out += &serde_json::to_string(p).map_err(|e| Error::Data(e.to_string()))?;
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_blocks_shape() {
        let (g, ind) = planted_blocks(&[3.0, 2.0, 1.0], 5).unwrap();
        assert_eq!(g.num_words(), 15);
        assert_eq!(g.nnz(), 3 * 10);
        assert_eq!(g.weight(5, 9), 2.0);
        assert_eq!(g.weight(4, 5), 0.0);
        assert_eq!(ind.column(2).sum(), 5.0);
    }

    #[test]
    fn corpus_is_reproducible() {
        let spec = InfluenceCorpusSpec {
            posts: 20,
            ..Default::default()
        };
        let a = spec.generate();
        assert_eq!(a, spec.generate());
        assert_eq!(a.len(), 20);
        assert!(a[0].text.starts_with("metro"));
        assert!(a[1].text.starts_with("chatter"));
    }
}
