//! Run the full pipeline under each ablation preset on a synthetic corpus
//! where a minority of high-influence posts carries the real themes.
//!
//!     cargo run --release --example ablation_presets [seed]

use influtopic::pipeline::{run, PipelineConfig, Stage};
use influtopic::synthetic::{write_jsonl, InfluenceCorpusSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).unwrap_or_else(|| "0".into());
    let dir = tempfile::tempdir()?;
    let input = dir.path().join("synthetic.jsonl");
    write_jsonl(&InfluenceCorpusSpec::default().generate(), &input)?;

    println!("{:<12} {:>8} {:>8} {:>6}", "preset", "NPMI", "Cv", "TD");
    for preset in ["full", "no-weights", "plain-graph", "no-gamma", "no-h"] {
        let out = dir.path().join(preset);
        let pairs: Vec<(String, String)> = [
            ("input", input.display().to_string()),
            ("out-dir", out.display().to_string()),
            ("k", "3".into()),
            ("restarts", "5".into()),
            ("seed", seed.clone()),
            ("preset", preset.into()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        run(Stage::All, &PipelineConfig::from_pairs(&pairs)?)?;
        let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json"))?)?;
        let m = &m["metrics"];
        println!(
            "{:<12} {:>8.4} {:>8.4} {:>6.3}",
            preset,
            m["npmi"].as_f64().unwrap_or(f64::NAN),
            m["cv"].as_f64().unwrap_or(f64::NAN),
            m["td"].as_f64().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
