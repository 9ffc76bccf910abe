use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use influtopic::pipeline::{load_config_file, run, PipelineConfig, Stage};

#[derive(Parser)]
#[command(name = "influtopic", version, about = "Influence-weighted topic mining for short posts")]
struct Cli {
    #[command(subcommand)]
    stage: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, clean and tokenize the input posts
    Ingest(Flags),
    /// Per-post influence weights
    Weights(Flags),
    /// Keyword co-occurrence graph
    Graph(Flags),
    /// Factorize the graph at a fixed K
    Fit(Flags),
    /// Fit and score a list of K values
    Sweep(Flags),
    /// Topic ranking, event keywords, assignments and metrics
    Report(Flags),
    /// ingest -> weights -> graph -> fit or sweep -> report
    All(Flags),
}

/// Any setting may also come from `--config` (`key = value` lines); flags win.
#[derive(Args, Default)]
struct Flags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    #[arg(long)]
    stop_words: Option<String>,
    #[arg(long)]
    replacements: Option<String>,
    #[arg(long)]
    protected_terms: Option<String>,
    #[arg(long)]
    place_names: Option<String>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    tau0: Option<String>,
    #[arg(long)]
    eps_f: Option<String>,
    #[arg(long)]
    decay_g: Option<String>,
    #[arg(long)]
    hn_shift: Option<String>,
    #[arg(long)]
    salience: Option<String>,
    #[arg(long)]
    salience_cap: Option<String>,
    #[arg(long)]
    boost: Option<String>,
    #[arg(long)]
    no_weights: bool,
    #[arg(long)]
    plain_graph: bool,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    lambda_h: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_outer: Option<String>,
    #[arg(long)]
    max_admm: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    restarts: Option<String>,
    #[arg(long)]
    no_h: bool,
    #[arg(long)]
    no_gamma: bool,
    #[arg(long)]
    cold_admm: bool,
    #[arg(long)]
    k_list: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    reference: Option<String>,
    #[arg(long)]
    td_floor: Option<String>,
    #[arg(long)]
    cv_window: Option<String>,
    #[arg(long)]
    sharpness_on: Option<String>,
    #[arg(long)]
    n_top_posts: Option<String>,
    #[arg(long)]
    n_keywords: Option<String>,
    #[arg(long)]
    weighted_activity: bool,
}

impl Flags {
    fn pairs(&self) -> Vec<(String, String)> {
        let valued = [
            ("input", &self.input),
            ("format", &self.format),
            ("out-dir", &self.out_dir),
            ("stop-words", &self.stop_words),
            ("replacements", &self.replacements),
            ("protected-terms", &self.protected_terms),
            ("place-names", &self.place_names),
            ("preset", &self.preset),
            ("tau0", &self.tau0),
            ("eps-f", &self.eps_f),
            ("decay-g", &self.decay_g),
            ("hn-shift", &self.hn_shift),
            ("salience", &self.salience),
            ("salience-cap", &self.salience_cap),
            ("boost", &self.boost),
            ("k", &self.k),
            ("lambda-h", &self.lambda_h),
            ("gamma", &self.gamma),
            ("rho", &self.rho),
            ("tol", &self.tol),
            ("max-outer", &self.max_outer),
            ("max-admm", &self.max_admm),
            ("seed", &self.seed),
            ("restarts", &self.restarts),
            ("k-list", &self.k_list),
            ("m", &self.m),
            ("reference", &self.reference),
            ("td-floor", &self.td_floor),
            ("cv-window", &self.cv_window),
            ("sharpness-on", &self.sharpness_on),
            ("n-top-posts", &self.n_top_posts),
            ("n-keywords", &self.n_keywords),
        ];
        let switches = [
            ("no-weights", self.no_weights),
            ("plain-graph", self.plain_graph),
            ("no-h", self.no_h),
            ("no-gamma", self.no_gamma),
            ("cold-admm", self.cold_admm),
            ("weighted-activity", self.weighted_activity),
        ];
        let mut out: Vec<(String, String)> = valued
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        out.extend(switches.into_iter().filter(|(_, on)| *on).map(|(k, _)| (k.to_string(), "true".to_string())));
        out
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (stage, flags) = match cli.stage {
        Command::Ingest(f) => (Stage::Ingest, f),
        Command::Weights(f) => (Stage::Weights, f),
        Command::Graph(f) => (Stage::Graph, f),
        Command::Fit(f) => (Stage::Fit, f),
        Command::Sweep(f) => (Stage::Sweep, f),
        Command::Report(f) => (Stage::Report, f),
        Command::All(f) => (Stage::All, f),
    };
    let result = (|| {
        let mut pairs = match &flags.config {
            Some(path) => load_config_file(path)?,
            None => Vec::new(),
        };
        pairs.extend(flags.pairs());
        let cfg = PipelineConfig::from_pairs(&pairs)?;
        run(stage, &cfg)
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
