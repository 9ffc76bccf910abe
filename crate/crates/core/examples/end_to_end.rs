//! Every pipeline stage in order from a config file, then a look at the
//! artifacts that landed in the output directory.
//!
//!     cargo run --example end_to_end [out_dir]

use std::path::{Path, PathBuf};

use influtopic::pipeline::{load_config_file, run, PipelineConfig, Stage};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("influtopic-demo"));
    std::fs::create_dir_all(&out)?;
    let input = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/mini_corpus.jsonl");

    // #service_delay unwraps to "service delay"; keep it as one token
    let protected = out.join("protected.txt");
    std::fs::write(&protected, "service delay\n")?;
    let config = out.join("run.conf");
    std::fs::write(
        &config,
        format!(
            "input = {}\nout-dir = {}\nprotected-terms = {}\nk = 3\nm = 5\nrestarts = 3\n",
            input.display(),
            out.display(),
            protected.display()
        ),
    )?;
    let cfg = PipelineConfig::from_pairs(&load_config_file(&config)?)?;

    for stage in [Stage::Ingest, Stage::Weights, Stage::Graph, Stage::Fit, Stage::Report] {
        run(stage, &cfg)?;
        println!("{stage:<8} done");
    }
    println!();
    print!("{}", std::fs::read_to_string(out.join("topics.tsv"))?);
    let mut files: Vec<String> = std::fs::read_dir(&out)?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect();
    files.sort();
    println!("\nartifacts in {}: {}", out.display(), files.join(", "));
    Ok(())
}
