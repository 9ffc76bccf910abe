//! Build the influence-weighted keyword graph and list its heaviest edges.

use std::collections::HashMap;
use std::path::Path;

use influtopic::corpus::{ingest, preprocess, DefaultTokenizer, InputFormat, PreprocessOptions};
use influtopic::graph::{build_graph, compute_salience, GraphOptions, SalienceMode, DEFAULT_SALIENCE_CAP};
use influtopic::influence::{compute_weights, InfluenceParams};

fn main() -> influtopic::error::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/mini_corpus.jsonl");
    let posts = ingest(&path, InputFormat::Jsonl)?;
    let (tokenized, vocab) = preprocess(&posts, &PreprocessOptions::with_defaults(), &DefaultTokenizer)?;
    let weights = compute_weights(&posts, &InfluenceParams::default())?;

    // make "delay" count double wherever it appears
    let boost = HashMap::from([("delay".to_string(), 2.0)]);
    let salience = compute_salience(&tokenized, &vocab, SalienceMode::CappedIdf, DEFAULT_SALIENCE_CAP, &boost)?;
    let graph = build_graph(&tokenized, &vocab, &weights, &salience, GraphOptions::default())?;

    println!("V = {}, {} edges, total weight {:.4}", graph.num_words(), graph.nnz(), graph.total_weight());
    let mut edges: Vec<_> = graph.edges().to_vec();
    edges.sort_by(|x, y| y.weight.total_cmp(&x.weight));
    for e in edges.iter().take(12) {
        println!("{:>14} -- {:<14} {:.4}", vocab.word(e.i), vocab.word(e.j), e.weight);
    }
    Ok(())
}
