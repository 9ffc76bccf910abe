//! Rank topics by importance, assign posts to topics and pull event keywords
//! from each topic's most active posts.

use influtopic::corpus::{preprocess, DefaultTokenizer, PreprocessOptions};
use influtopic::graph::{build_graph, compute_salience, GraphOptions, SalienceMode, DEFAULT_SALIENCE_CAP};
use influtopic::influence::{compute_weights, InfluenceParams};
use influtopic::mining::{mine, KeywordFilters, MiningOptions};
use influtopic::solver::{fit, SolverConfig};
use influtopic::synthetic::InfluenceCorpusSpec;

fn main() -> influtopic::error::Result<()> {
    let posts = InfluenceCorpusSpec { posts: 200, ..Default::default() }.generate();
    let (tokenized, vocab) = preprocess(&posts, &PreprocessOptions::default(), &DefaultTokenizer)?;
    let weights = compute_weights(&posts, &InfluenceParams::default())?;
    let salience = compute_salience(&tokenized, &vocab, SalienceMode::CappedIdf, DEFAULT_SALIENCE_CAP, &Default::default())?;
    let graph = build_graph(&tokenized, &vocab, &weights, &salience, GraphOptions::default())?;
    let (model, _) = fit(&graph, &SolverConfig { restarts: 3, ..SolverConfig::with_k(3) })?;

    let opts = MiningOptions { m: 6, n_top_posts: 10, n_keywords: 5, ..Default::default() };
    let report = mine(&model, &vocab, &tokenized, &opts, &KeywordFilters::with_defaults())?;
    for t in &report.topics {
        println!("#{} topic {} (a = {:.3}, {} posts)", t.rank, t.topic_id, t.importance, t.n_assigned_posts);
        println!("    words:  {}", t.top_words.join(" "));
        let kw: Vec<String> = t.event_keywords.iter().map(|(w, c)| format!("{w}:{c}")).collect();
        println!("    events: {}", kw.join(" "));
    }
    println!("{} posts left unassigned", report.assignments.excluded);
    Ok(())
}
