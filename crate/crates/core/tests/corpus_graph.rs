use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use influtopic::corpus::{dedup, ingest, preprocess, DefaultTokenizer, InputFormat, Post, PreprocessOptions, TokenizedPost, Vocabulary};
use influtopic::graph::{build_graph, compute_salience, GraphOptions, SalienceMode, SalienceVector};
use influtopic::influence::{compute_weights, InfluenceParams, InfluenceWeight};
use proptest::prelude::*;

fn mini() -> Vec<Post> {
    ingest(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/mini_corpus.jsonl"), InputFormat::Jsonl).unwrap()
}

fn unit_weights(posts: &[TokenizedPost], w: &[f64]) -> Vec<InfluenceWeight> {
    posts
        .iter()
        .zip(w)
        .map(|(p, &w)| InfluenceWeight {
            post_id: p.post_id.clone(),
            itf: 0.0,
            iidf: 0.0,
            attention: 0.0,
            mean_gap_hours: 0.0,
            adjusted: w,
            weight: w,
            pacing_imputed: false,
        })
        .collect()
}

#[test]
fn mini_corpus_fields() {
    let posts = mini();
    assert_eq!(posts.len(), 12);
    let u01 = &posts[0];
    assert_eq!((u01.likes, u01.comments, u01.reposts, u01.followers), (12, 3, 1, 150));
    assert_eq!(u01.comment_times.as_ref().unwrap().len(), 3);
    assert_eq!(u01.platform, "weibo");
    let u02 = &posts[1];
    assert_eq!(u02.reposts, 0, "missing reposts default to zero");
    assert!(u02.comment_times.is_none());
    assert_eq!(posts[11].post_id, "u12");
    assert_eq!(dedup(posts.clone()).len(), 12);
}

#[test]
fn csv_duplicates_collapse() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("posts.csv");
    std::fs::write(
        &path,
        "post_id,timestamp,text,likes,comments,followers\n\
         a,2024-01-01T00:00:00Z,bus late,1,0,5\n\
         a,2024-01-01T00:00:00Z,bus late,1,0,5\n\
         b,2024-01-01T01:00:00Z,metro fine,2,1,9\n",
    )
    .unwrap();
    assert_eq!(dedup(ingest(&path, InputFormat::Csv).unwrap()).len(), 2);
}

#[test]
fn mini_corpus_vocabulary() {
    let (tokens, vocab) = preprocess(&mini(), &PreprocessOptions::with_defaults(), &DefaultTokenizer).unwrap();
    let expected = [
        "bus", "8", "delayed", "terminal", "service", "delay", "waiting", "forever", "driver", "skipped", "stop",
        "metro", "card", "payment", "failed", "gate", "qr", "open", "night", "route", "crowded", "tonight", "rude",
        "shouted", "elderly", "passenger", "works", "fine", "thanks", "rain", "please", "add", "buses", "praised",
        "kind", "helped", "lol", "code", "staff",
    ];
    assert_eq!(vocab.words(), expected.map(String::from).as_slice());
    // "subway" and "thx" go through the bundled replacement table
    assert_eq!(tokens[6].tokens, ["metro", "gate", "payment", "works", "fine", "thanks"]);
    assert!(tokens[10].no_bigram());
    for p in &tokens {
        assert!(p.tokens.iter().all(|t| vocab.get(t).is_some()));
    }
}

#[test]
fn cleaning_example_post() {
    let post = Post::new("x", "Check https://t.co/x @bob #service_delay!!");
    let mut opts = PreprocessOptions::with_defaults();
    opts.stop_words.insert("check".into());
    let (tokens, _) = preprocess(&[post], &opts, &DefaultTokenizer).unwrap();
    assert_eq!(tokens[0].tokens, ["service", "delay"]);
}

#[test]
fn preprocess_is_idempotent() {
    let mut opts = PreprocessOptions::with_defaults();
    opts.protected_terms = BTreeSet::from(["service delay".to_string()]);
    let (once, _) = preprocess(&mini(), &opts, &DefaultTokenizer).unwrap();
    let rendered: Vec<Post> = once.iter().map(|t| Post::new(t.post_id.clone(), t.tokens.join(" "))).collect();
    let (twice, _) = preprocess(&rendered, &opts, &DefaultTokenizer).unwrap();
    assert_eq!(once, twice);
    assert_eq!(once[0].tokens.last().unwrap(), "service delay");
}

// straight from the formulas, natural log, defaults eps_f=1, tau0=1, g=1.5, shift=2
fn oracle_adjusted(p: &Post) -> f64 {
    let itf = (p.likes + p.comments + p.reposts) as f64 / (p.followers as f64 + 1.0);
    let (t, gaps): (usize, Vec<f64>) = match &p.comment_times {
        Some(ts) if ts.len() >= 2 => {
            (ts.len(), ts.windows(2).map(|w| (w[1] - w[0]).num_seconds() as f64 / 3600.0).collect())
        }
        Some(ts) => (ts.len(), vec![1.0]),
        None if p.comments >= 2 => (p.comments as usize, vec![1.0; p.comments as usize - 1]),
        None => (p.comments as usize, vec![1.0]),
    };
    let span = if t >= 3 { gaps.iter().sum::<f64>() } else { gaps.iter().cloned().fold(0.0, f64::max) };
    let iidf = (1.0 + t as f64 / span).ln();
    let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    itf * iidf / (mean_gap + 2.0).powf(1.5)
}

#[test]
fn mini_corpus_weights_match_formula() {
    let posts = mini();
    let w = compute_weights(&posts, &InfluenceParams::default()).unwrap();
    let adjusted: Vec<f64> = posts.iter().map(oracle_adjusted).collect();
    let max = adjusted.iter().cloned().fold(0.0, f64::max);
    for ((got, want), p) in w.iter().zip(&adjusted).zip(&posts) {
        assert!((got.adjusted - want).abs() < 1e-12, "{}", p.post_id);
        assert!((got.weight - want / max).abs() < 1e-12, "{}", p.post_id);
        assert_eq!(got.attention, got.itf * got.iidf);
    }
    // u01: gaps 0.5 h and 1 h, three comments
    assert!((w[0].itf - 16.0 / 151.0).abs() < 1e-15);
    assert!((w[0].iidf - 3f64.ln()).abs() < 1e-12);
    assert!((w[0].mean_gap_hours - 0.75).abs() < 1e-12);
    // u02: two comments, no times -> one imputed 1 h gap
    assert!(w[1].pacing_imputed);
    assert!((w[1].iidf - 3f64.ln()).abs() < 1e-12);
    // u04: gaps of 2, 12 and 30 minutes; largest adjusted weight in the corpus
    assert!((w[3].iidf - (1.0_f64 + 4.0 / (44.0 / 60.0)).ln()).abs() < 1e-12);
    assert_eq!(w[3].weight, 1.0);
    assert_eq!(w[4].weight, 0.0);
}

#[test]
fn salience_cap_applies() {
    let posts: Vec<TokenizedPost> = (0..8)
        .map(|i| TokenizedPost::new(i.to_string(), if i == 0 { vec!["rare".into(), "x".into()] } else { vec!["x".into()] }))
        .collect();
    let vocab = Vocabulary::from_posts(&posts);
    let s = compute_salience(&posts, &vocab, SalienceMode::CappedIdf, 1.5, &HashMap::new()).unwrap();
    assert_eq!(s.0[vocab.get("rare").unwrap()], 1.5);
    assert_eq!(s.0[vocab.get("x").unwrap()], 0.0);
    let boosted = compute_salience(&posts, &vocab, SalienceMode::CappedIdf, 1.5, &HashMap::from([("rare".to_string(), 2.0)])).unwrap();
    assert_eq!(boosted.0[vocab.get("rare").unwrap()], 3.0);
    assert!(compute_salience(&posts, &vocab, SalienceMode::CappedIdf, 0.0, &HashMap::new()).is_err());
}

#[test]
fn mini_corpus_graph_is_hollow_and_symmetric() {
    let posts = mini();
    let (tokens, vocab) = preprocess(&posts, &PreprocessOptions::with_defaults(), &DefaultTokenizer).unwrap();
    let weights = compute_weights(&posts, &InfluenceParams::default()).unwrap();
    let s = compute_salience(&tokens, &vocab, SalienceMode::CappedIdf, 3.0, &HashMap::new()).unwrap();
    let g = build_graph(&tokens, &vocab, &weights, &s, GraphOptions::default()).unwrap();
    let dense = g.to_dense();
    for i in 0..vocab.len() {
        assert_eq!(dense[i][i], 0.0);
        for j in 0..vocab.len() {
            assert_eq!(dense[i][j], dense[j][i]);
        }
    }
    assert!(g.edges().iter().all(|e| e.i < e.j && e.weight > 0.0));
    let v = vocab.len();
    assert!(g.nnz() <= v * (v - 1) / 2);
    // u05 has zero weight, so "night"-"bus" only comes from u09
    let (night, bus) = (vocab.get("night").unwrap(), vocab.get("bus").unwrap());
    let expected = s.0[night] * s.0[bus] * weights[8].weight;
    assert!((g.weight(night, bus) - expected).abs() < 1e-12);
}

fn corpus() -> impl Strategy<Value = Vec<Vec<u8>>> {
    prop::collection::vec(prop::collection::vec(0u8..8, 0..7), 1..20)
}

proptest! {
    #[test]
    fn unit_graph_counts_posts_containing_each_pair(docs in corpus()) {
        let posts: Vec<TokenizedPost> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| TokenizedPost::new(i.to_string(), d.iter().map(|w| format!("w{w}")).collect()))
            .collect();
        let vocab = Vocabulary::from_posts(&posts);
        prop_assume!(!vocab.is_empty());
        let g = build_graph(&posts, &vocab, &unit_weights(&posts, &vec![1.0; posts.len()]), &SalienceVector::unit(vocab.len()), GraphOptions::default()).unwrap();
        let mut counts: HashMap<(usize, usize), f64> = HashMap::new();
        for p in &posts {
            let mut seen = HashSet::new();
            for w in p.tokens.windows(2) {
                let (a, b) = (vocab.get(&w[0]).unwrap(), vocab.get(&w[1]).unwrap());
                if a != b {
                    seen.insert((a.min(b), a.max(b)));
                }
            }
            for key in seen {
                *counts.entry(key).or_default() += 1.0;
            }
        }
        prop_assert_eq!(g.nnz(), counts.len());
        for (&(i, j), &c) in &counts {
            prop_assert_eq!(g.weight(i, j), c);
            prop_assert_eq!(g.weight(j, i), c);
        }
    }

    #[test]
    fn doubling_post_weights_doubles_edges(docs in corpus(), seed in 0u32..1000) {
        let posts: Vec<TokenizedPost> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| TokenizedPost::new(i.to_string(), d.iter().map(|w| format!("w{w}")).collect()))
            .collect();
        let vocab = Vocabulary::from_posts(&posts);
        prop_assume!(!vocab.is_empty());
        let w: Vec<f64> = (0..posts.len()).map(|i| ((i as u32 * 7 + seed) % 10) as f64 / 10.0 + 0.05).collect();
        let w2: Vec<f64> = w.iter().map(|x| 2.0 * x).collect();
        let s = SalienceVector((0..vocab.len()).map(|i| 0.5 + i as f64 / 10.0).collect());
        let g1 = build_graph(&posts, &vocab, &unit_weights(&posts, &w), &s, GraphOptions::default()).unwrap();
        let g2 = build_graph(&posts, &vocab, &unit_weights(&posts, &w2), &s, GraphOptions::default()).unwrap();
        prop_assert_eq!(g1.nnz(), g2.nnz());
        for e in g1.edges() {
            prop_assert!((g2.weight(e.i, e.j) - 2.0 * e.weight).abs() <= 1e-12 * e.weight);
        }
    }

    #[test]
    fn weights_are_scale_free_and_bounded(likes in prop::collection::vec(0u64..500, 1..10), followers in 0u64..1000) {
        let posts: Vec<Post> = likes.iter().enumerate().map(|(i, &l)| Post::new(i.to_string(), "x y").with_engagement(l, 1, 0, followers)).collect();
        let w = compute_weights(&posts, &InfluenceParams::default()).unwrap();
        prop_assert!(w.iter().all(|x| (0.0..=1.0).contains(&x.weight)));
        if likes.iter().any(|&l| l > 0) {
            prop_assert!(w.iter().any(|x| x.weight == 1.0));
        }
        // more likes never lowers the unnormalized weight
        for (a, b) in w.iter().zip(&likes).flat_map(|x| w.iter().zip(&likes).map(move |y| (x, y))) {
            if a.1 <= b.1 {
                prop_assert!(a.0.adjusted <= b.0.adjusted);
            }
        }
    }
}
