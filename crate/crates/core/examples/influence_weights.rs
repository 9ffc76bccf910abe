//! Per-post influence weights: attention (iTF x iIDF), comment pacing and
//! the max-normalized weight used on graph edges.

use std::path::Path;

use influtopic::corpus::{ingest, InputFormat};
use influtopic::influence::{compute_weights, InfluenceParams};

fn main() -> influtopic::error::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/mini_corpus.jsonl");
    let posts = ingest(&path, InputFormat::Jsonl)?;

    for params in [InfluenceParams::default(), InfluenceParams { decay_g: 0.5, ..Default::default() }] {
        println!("decay_g = {}", params.decay_g);
        println!("{:>4} {:>8} {:>8} {:>10} {:>10} {:>6}", "post", "itf", "iidf", "gap (h)", "adjusted", "w");
        for w in compute_weights(&posts, &params)? {
            println!(
                "{:>4} {:>8.4} {:>8.4} {:>10.3} {:>10.4} {:>6.3}{}",
                w.post_id,
                w.itf,
                w.iidf,
                w.mean_gap_hours,
                w.adjusted,
                w.weight,
                if w.pacing_imputed { "  (pacing imputed)" } else { "" }
            );
        }
        println!();
    }
    Ok(())
}
