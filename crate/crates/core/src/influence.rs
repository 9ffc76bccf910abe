//! Static per-post influence weights.
//!
//! A post's attention score multiplies engagement per unit of reach (iTF) by
//! a comment arrival-rate term (iIDF), is damped by the mean inter-comment gap
//! with a Hacker-News style divisor, and is finally max-normalized over the
//! corpus into `[0, 1]`. All logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::corpus::Post;
use crate::error::{Error, Result};

/// Lower bound on the summed (or maximal) gap, as a fraction of `tau0`,
/// used when every comment carries the same timestamp.
pub const GAP_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfluenceParams {
    /// Added to the follower count before dividing.
    pub eps_f: f64,
    /// Time unit in hours.
    pub tau0: f64,
    /// Decay exponent of the gap divisor.
    pub decay_g: f64,
    /// Constant shift inside the gap divisor.
    pub hn_shift: f64,
}

impl Default for InfluenceParams {
    fn default() -> Self {
        InfluenceParams {
            eps_f: 1.0,
            tau0: 1.0,
            decay_g: 1.5,
            hn_shift: 2.0,
        }
    }
}

impl InfluenceParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps-f", self.eps_f),
            ("tau0", self.tau0),
            ("decay-g", self.decay_g),
            ("hn-shift", self.hn_shift),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a positive finite number, got {v}")));
            }
        }
        Ok(())
    }
}

/// Per-post weight together with its intermediate terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceWeight {
    pub post_id: String,
    pub itf: f64,
    pub iidf: f64,
    /// Attention `itf * iidf`.
    pub attention: f64,
    pub mean_gap_hours: f64,
    /// Gap-damped attention before corpus normalization.
    pub adjusted: f64,
    pub weight: f64,
    /// Gaps were imputed as `tau0` because only a comment count was available.
    pub pacing_imputed: bool,
}

/// Comment count and the inter-comment gaps (hours) used by iIDF.
#[derive(Debug, Clone, PartialEq)]
pub struct CommentGaps {
    pub count: usize,
    pub gaps: Vec<f64>,
    pub imputed: bool,
}

pub fn compute_itf(post: &Post, params: &InfluenceParams) -> f64 {
    let engagement = (post.comments + post.likes + post.reposts) as f64;
    engagement / (post.followers as f64 + params.eps_f)
}

/// Derives `T_p` and the gap list. The list is never empty: with fewer than
/// two comments it is `[tau0]`; with a bare count `c >= 2` it is `c - 1`
/// copies of `tau0`.
pub fn compute_gaps(post: &Post, params: &InfluenceParams) -> Result<CommentGaps> {
    match &post.comment_times {
        Some(times) => {
            if times.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::Data(format!(
                    "post {}: comment timestamps decrease",
                    post.post_id
                )));
            }
            let count = times.len();
            let gaps = if count < 2 {
                vec![params.tau0]
            } else {
                times
                    .windows(2)
                    .map(|w| (w[1] - w[0]).num_milliseconds() as f64 / 3_600_000.0)
                    .collect()
            };
            Ok(CommentGaps {
                count,
                gaps,
                imputed: false,
            })
        }
        None => {
            let count = post.comments as usize;
            if count < 2 {
                Ok(CommentGaps {
                    count,
                    gaps: vec![params.tau0],
                    imputed: false,
                })
            } else {
                Ok(CommentGaps {
                    count,
                    gaps: vec![params.tau0; count - 1],
                    imputed: true,
                })
            }
        }
    }
}

pub fn compute_iidf(count: usize, gaps: &[f64], params: &InfluenceParams) -> f64 {
    debug_assert!(!gaps.is_empty());
    let span = if count >= 3 {
        gaps.iter().sum::<f64>()
    } else {
        gaps.iter().copied().fold(0.0, f64::max)
    };
    let denom = (span / params.tau0).max(GAP_FLOOR);
    (1.0 + count as f64 / denom).ln()
}

/// Mean over the `max(1, T - 1)` gaps.
pub fn mean_gap(count: usize, gaps: &[f64]) -> f64 {
    let n = count.saturating_sub(1).max(1).min(gaps.len());
    gaps[..n].iter().sum::<f64>() / n as f64
}

pub fn adjusted_weight(attention: f64, mean_gap_hours: f64, params: &InfluenceParams) -> f64 {
    attention / (mean_gap_hours / params.tau0 + params.hn_shift).powf(params.decay_g)
}

/// Divides by the maximum; all zeros when the maximum is zero.
pub fn max_normalize(adjusted: &[f64]) -> Vec<f64> {
    let max = adjusted.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        adjusted.iter().map(|w| w / max).collect()
    } else {
        vec![0.0; adjusted.len()]
    }
}

pub fn compute_weights(posts: &[Post], params: &InfluenceParams) -> Result<Vec<InfluenceWeight>> {
    if posts.is_empty() {
        return Err(Error::Data("cannot weight an empty post list".into()));
    }
    params.validate()?;
    let mut out = Vec::with_capacity(posts.len());
    for post in posts {
        let itf = compute_itf(post, params);
        let gaps = compute_gaps(post, params)?;
        let iidf = compute_iidf(gaps.count, &gaps.gaps, params);
        let attention = itf * iidf;
        let mean_gap_hours = mean_gap(gaps.count, &gaps.gaps);
        out.push(InfluenceWeight {
            post_id: post.post_id.clone(),
            itf,
            iidf,
            attention,
            mean_gap_hours,
            adjusted: adjusted_weight(attention, mean_gap_hours, params),
            weight: 0.0,
            pacing_imputed: gaps.imputed,
        });
    }
    let adjusted: Vec<f64> = out.iter().map(|w| w.adjusted).collect();
    for (w, norm) in out.iter_mut().zip(max_normalize(&adjusted)) {
        w.weight = norm;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn at(h: u32, m: u32) -> chrono::DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 1, 1, h, m, 0).unwrap()
    }

    #[test]
    fn itf_examples() {
        let p = InfluenceParams::default();
        let one = Post::new("a", "").with_engagement(0, 1, 0, 0);
        assert_eq!(compute_itf(&one, &p), 1.0);
        let zero = Post::new("a", "").with_engagement(0, 0, 0, 12345);
        assert_eq!(compute_itf(&zero, &p), 0.0);
        let mixed = Post::new("a", "").with_engagement(5, 3, 2, 99);
        assert!((compute_itf(&mixed, &p) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn gaps_from_times() {
        let p = InfluenceParams::default();
        let post = Post::new("a", "").with_comment_times(vec![at(10, 0), at(10, 30), at(11, 30)]);
        let g = compute_gaps(&post, &p).unwrap();
        assert_eq!(g.count, 3);
        assert_eq!(g.gaps, vec![0.5, 1.0]);
    }

    #[test]
    fn gaps_fallbacks() {
        let p = InfluenceParams::default();
        let g = compute_gaps(&Post::new("a", ""), &p).unwrap();
        assert_eq!((g.count, g.gaps.clone(), g.imputed), (0, vec![1.0], false));

        let g = compute_gaps(&Post::new("a", "").with_engagement(0, 5, 0, 0), &p).unwrap();
        assert_eq!(g.count, 5);
        assert_eq!(g.gaps, vec![1.0; 4]);
        assert!(g.imputed);
        let iidf = compute_iidf(g.count, &g.gaps, &p);
        assert!((iidf - (1.0f64 + 5.0 / 4.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn decreasing_times_rejected() {
        let post = Post::new("a", "").with_comment_times(vec![at(11, 0), at(10, 0)]);
        assert!(compute_gaps(&post, &InfluenceParams::default()).is_err());
    }

    #[test]
    fn iidf_branches() {
        let p = InfluenceParams::default();
        assert_eq!(compute_iidf(0, &[1.0], &p), 0.0);
        assert!((compute_iidf(2, &[1.0], &p) - 3f64.ln()).abs() < 1e-15);
        assert!((compute_iidf(4, &[0.5, 0.5, 1.0], &p) - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn simultaneous_comments_use_floor() {
        let p = InfluenceParams::default();
        let v = compute_iidf(3, &[0.0, 0.0], &p);
        assert!((v - (1.0 + 3.0 / GAP_FLOOR).ln()).abs() < 1e-12);
        assert!(v.is_finite());
    }

    #[test]
    fn normalization_cases() {
        assert_eq!(max_normalize(&[2.0, 4.0]), vec![0.5, 1.0]);
        assert_eq!(max_normalize(&[0.0, 0.0]), vec![0.0, 0.0]);
        let p = InfluenceParams::default();
        let w = adjusted_weight(3.0, 0.0, &p);
        assert!((w - 3.0 / 2f64.powf(1.5)).abs() < 1e-15);
        assert_eq!(max_normalize(&[w]), vec![1.0]);
    }

    #[test]
    fn zero_engagement_corpus() {
        let posts = vec![Post::new("a", ""), Post::new("b", "")];
        let w = compute_weights(&posts, &InfluenceParams::default()).unwrap();
        assert!(w.iter().all(|w| w.weight == 0.0));
    }

    #[test]
    fn empty_list_is_error() {
        assert!(compute_weights(&[], &InfluenceParams::default()).is_err());
    }

    #[test]
    fn bad_params_rejected() {
        let p = InfluenceParams {
            tau0: 0.0,
            ..Default::default()
        };
        assert_eq!(compute_weights(&[Post::new("a", "")], &p).unwrap_err().exit_code(), 2);
    }
}
