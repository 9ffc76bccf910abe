//! Fit several K on a planted corpus and pick one by NPMI under a diversity floor.

use influtopic::corpus::{preprocess, DefaultTokenizer, PreprocessOptions};
use influtopic::graph::{build_graph, compute_salience, GraphOptions, SalienceMode, DEFAULT_SALIENCE_CAP};
use influtopic::influence::{compute_weights, InfluenceParams};
use influtopic::metrics::{sweep_k, MetricOptions, DEFAULT_TD_FLOOR};
use influtopic::solver::SolverConfig;
use influtopic::synthetic::InfluenceCorpusSpec;

fn main() -> influtopic::error::Result<()> {
    // 60 posts, each holding all five words of one of three themes
    let spec = InfluenceCorpusSpec {
        posts: 60,
        theme_vocab: 5,
        theme_words_per_post: 5,
        coherent_every: 1,
        ..Default::default()
    };
    let posts = spec.generate();
    let (tokenized, vocab) = preprocess(&posts, &PreprocessOptions::default(), &DefaultTokenizer)?;
    let weights = compute_weights(&posts, &InfluenceParams::default())?;
    let salience = compute_salience(&tokenized, &vocab, SalienceMode::CappedIdf, DEFAULT_SALIENCE_CAP, &Default::default())?;
    let graph = build_graph(&tokenized, &vocab, &weights, &salience, GraphOptions::default())?;

    let opts = MetricOptions { m: 5, ..Default::default() };
    let sweep = sweep_k(&graph, &tokenized, &[2, 3, 4], &SolverConfig::default(), &opts, DEFAULT_TD_FLOOR)?;
    print!("{}", sweep.to_csv());
    println!("selected K = {}{}", sweep.selected_k, if sweep.floor_relaxed { " (TD floor relaxed)" } else { "" });
    Ok(())
}
