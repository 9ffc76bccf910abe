//! Parse the bundled mini corpus, clean it and print the tokens per post.
//!
//!     cargo run --example ingest_preprocess [path.jsonl|path.csv]

use std::path::PathBuf;

use influtopic::corpus::{dedup, ingest, preprocess, DefaultTokenizer, InputFormat, PreprocessOptions};

fn main() -> influtopic::error::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/mini_corpus.jsonl"));
    let posts = dedup(ingest(&path, InputFormat::from_path(&path)?)?);

    let mut opts = PreprocessOptions::with_defaults();
    opts.protected_terms.insert("service delay".into());
    let (tokenized, vocab) = preprocess(&posts, &opts, &DefaultTokenizer)?;

    for (raw, clean) in posts.iter().zip(&tokenized) {
        println!("{:>4}  {:<60}  -> {}", raw.post_id, raw.text.chars().take(60).collect::<String>(), clean.tokens.join(" | "));
    }
    let short = tokenized.iter().filter(|t| t.no_bigram()).count();
    println!("\n{} posts, vocabulary of {} words, {short} posts too short for a bigram", posts.len(), vocab.len());
    Ok(())
}
