//! Factorize a planted 3-block graph and check that the blocks come back.

use influtopic::solver::{fit, SolverConfig};
use influtopic::synthetic::planted_blocks;

fn cosine(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let n = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    dot / (n(x) * n(y))
}

fn main() -> influtopic::error::Result<()> {
    let (graph, planted) = planted_blocks(&[3.0, 2.0, 1.0], 5)?;
    let cfg = SolverConfig { seed: 7, ..SolverConfig::with_k(3) };
    let (model, trace) = fit(&graph, &cfg)?;

    println!(
        "{} iterations, objective {:.6} -> {:.6}, converged: {}",
        trace.records.len() - 1,
        trace.records[0].objective,
        trace.final_objective(),
        trace.converged
    );
    println!("a = {:.3}", model.a);
    for k in 0..3 {
        let fitted = model.u.column(k).to_vec();
        let (best, sim) = (0..3)
            .map(|b| (b, cosine(&fitted, &planted.column(b).to_vec())))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        println!("topic {k}: top words {:?}, best planted block {best} (cosine {sim:.4})", model.top_words(k, 5));
    }
    Ok(())
}
