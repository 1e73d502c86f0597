//! `sybilgraph` command-line entry point.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sybilgraph::eval::render_table;
use sybilgraph::ingest::{LabelSource, RecordFormat};
use sybilgraph::pipeline::{self, PipelineConfig, PipelineError};
use sybilgraph::synth::{self, DatasetFiles, SynthError};

#[derive(Parser, Debug)]
#[command(name = "sybilgraph", version, about = "Subgraph-feature sybil address detection")]
struct Cli {
    /// Pipeline config (JSON); flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Top-level seed for the split, training and synthetic data.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Fail on the first malformed row, duplicate or unanswered label lookup.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labeled synthetic dataset and a matching pipeline config.
    Synth {
        /// Generator spec (JSON); the built-in benchmark when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Parse records, look up labels and apply the candidate rules.
    Ingest(InputArgs),
    /// Ingest, then write one 75-feature row per candidate.
    Extract {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        extract: ExtractArgs,
    },
    /// Train the boosted model and the tree baseline on a stratified split.
    Train(TrainArgs),
    /// Score a feature file with a trained model.
    Score {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Compare a score file with ground truth.
    Eval {
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Feature importance and the held-out metrics table.
    Report {
        #[command(flatten)]
        model: ModelArg,
        /// Number of features to list (at most 75).
        #[arg(long)]
        top_k: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct InputArgs {
    #[arg(long)]
    records: Option<PathBuf>,
    /// Record format: csv or jsonl.
    #[arg(long)]
    format: Option<RecordFormat>,
    /// Label file (`address,category,source`).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Label service base URL, queried as `<url>/labels?address=...`.
    #[arg(long)]
    label_url: Option<String>,
    /// Label service timeout in seconds.
    #[arg(long, requires = "label_url")]
    label_timeout: Option<u64>,
    /// Label service retries per address.
    #[arg(long, requires = "label_url")]
    label_retries: Option<u32>,
    /// Ignore records after this Unix time when measuring lifecycles.
    #[arg(long)]
    now: Option<i64>,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// Ground-truth labels to attach as the `label` column.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// File of activity contract addresses, one per line.
    #[arg(long)]
    activity: Option<PathBuf>,
    #[arg(long)]
    hub_cap: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    n_trees: Option<usize>,
    /// Skip the single-tree baseline.
    #[arg(long)]
    no_baseline: bool,
}

#[derive(Args, Debug)]
struct ModelArg {
    /// Model file; `<out>/model.json` when omitted.
    #[arg(long)]
    model: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(m) => Failure::Usage(format!("invalid config: {m}")),
            other => Failure::Data(other.to_string()),
        }
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        Failure::Data(e.to_string())
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.paths.out_dir = out.clone();
    }
    if cli.strict {
        cfg.strict = true;
    }
    Ok(cfg)
}

fn apply_input(cfg: &mut PipelineConfig, a: &InputArgs) {
    if let Some(p) = &a.records {
        cfg.paths.records = Some(p.clone());
    }
    if let Some(f) = a.format {
        cfg.record_format = f;
    }
    if let Some(p) = &a.labels {
        cfg.paths.labels = Some(p.clone());
        cfg.label_source = None;
    }
    if let Some(url) = &a.label_url {
        let (old_timeout, old_retries) = match &cfg.label_source {
            Some(LabelSource::Http {
                timeout_secs,
                retries,
                ..
            }) => (*timeout_secs, *retries),
            _ => (10, 2),
        };
        cfg.label_source = Some(LabelSource::Http {
            base_url: url.clone(),
            timeout_secs: a.label_timeout.unwrap_or(old_timeout),
            retries: a.label_retries.unwrap_or(old_retries),
        });
    }
    if a.now.is_some() {
        cfg.now = a.now;
    }
}

fn model_path(cfg: &PipelineConfig, m: &ModelArg) -> PathBuf {
    m.model.clone().unwrap_or_else(|| cfg.model_path())
}

fn cmd_synth(cli: &Cli, spec_path: Option<&Path>) -> Result<(), Failure> {
    let mut spec = match spec_path {
        Some(p) => {
            let f = std::fs::File::open(p)
                .map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?;
            synth::load_spec(std::io::BufReader::new(f)).map_err(|e| match e {
                SynthError::SpecInvalid(m) => {
                    Failure::Data(format!("invalid synth spec {}: {m}", p.display()))
                }
                other => other.into(),
            })?
        }
        None => synth::default_benchmark_spec(),
    };
    if let Some(seed) = cli.seed {
        spec.rng_seed = seed;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let data = synth::generate(&spec)?;
    let files = synth::write_dataset(&out, &data, &spec)?;
    let cfg = dataset_config(cli, &out, &files)?;
    cfg.save(&out.join("pipeline.json"))?;
    println!(
        "wrote {} records, {} labeled addresses ({} sybil) to {}",
        data.records.len(),
        data.labels.len(),
        data.sybil_count(),
        out.display()
    );
    Ok(())
}

/// A pipeline config that points at a freshly written synthetic dataset.
fn dataset_config(cli: &Cli, out: &Path, files: &DatasetFiles) -> Result<PipelineConfig, Failure> {
    let mut cfg = load_config(cli)?;
    cfg.paths.records = Some(files.transactions.clone());
    cfg.paths.labels = Some(files.entity_labels.clone());
    cfg.paths.truth = Some(files.truth.clone());
    cfg.paths.activity = Some(files.activity.clone());
    cfg.paths.out_dir = out.to_path_buf();
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = load_config(&cli)?;
    match &cli.command {
        Command::Synth { spec } => return cmd_synth(&cli, spec.as_deref()),
        Command::Ingest(input) => {
            apply_input(&mut cfg, input);
            cfg.validate()?;
            let out = pipeline::run_ingest(&cfg)?;
            let r = &out.cleaned.report;
            println!(
                "{} addresses: {} label-excluded, {} over the lifecycle cap, {} candidates; {} transactions kept, {} duplicates dropped, {} rows skipped",
                r.total_addresses,
                r.excluded_institutional,
                r.excluded_lifecycle,
                r.retained_candidates,
                r.retained_transactions,
                r.dropped_duplicates,
                out.skipped.len()
            );
        }
        Command::Extract { input, extract } => {
            apply_input(&mut cfg, input);
            if let Some(p) = &extract.truth {
                cfg.paths.truth = Some(p.clone());
            }
            if let Some(p) = &extract.activity {
                cfg.paths.activity = Some(p.clone());
            }
            if let Some(h) = extract.hub_cap {
                cfg.hub_cap = h;
            }
            if let Some(w) = extract.workers {
                cfg.workers = w;
            }
            cfg.validate()?;
            let rows = pipeline::run_extract(&cfg)?;
            println!("wrote {} feature rows to {}", rows.len(), cfg.out("features.csv").display());
        }
        Command::Train(t) => {
            if let Some(p) = &t.features {
                cfg.paths.features = Some(p.clone());
            }
            if let Some(f) = t.test_fraction {
                cfg.test_fraction = f;
            }
            if let Some(th) = t.threshold {
                cfg.threshold = th;
            }
            if let Some(n) = t.n_trees {
                cfg.train.n_trees = n;
            }
            if t.no_baseline {
                cfg.baseline = false;
            }
            cfg.validate()?;
            let outcome = pipeline::run_train(&cfg)?;
            let rows: Vec<_> = outcome
                .metrics
                .methods
                .iter()
                .map(|m| (m.method.clone(), m.metrics.clone()))
                .collect();
            print!("{}", render_table(&rows));
        }
        Command::Score { model, features } => {
            if let Some(p) = features {
                cfg.paths.features = Some(p.clone());
            }
            cfg.validate()?;
            let scores = pipeline::run_score(&cfg, &model_path(&cfg, model))?;
            println!("scored {} addresses", scores.len());
        }
        Command::Eval {
            scores,
            truth,
            threshold,
        } => {
            if let Some(p) = scores {
                cfg.paths.scores = Some(p.clone());
            }
            if let Some(p) = truth {
                cfg.paths.truth = Some(p.clone());
            }
            if let Some(t) = threshold {
                cfg.threshold = *t;
            }
            cfg.validate()?;
            let s = pipeline::run_eval(&cfg)?;
            print!(
                "{}",
                render_table(&[
                    (format!("threshold {}", s.at_threshold.threshold), s.at_threshold.clone()),
                    (format!("best-F1 {:.6}", s.best_f1.threshold), s.best_f1.clone()),
                ])
            );
        }
        Command::Report { model, top_k } => {
            if let Some(k) = top_k {
                cfg.top_k = *k;
            }
            cfg.validate()?;
            let r = pipeline::run_report(&cfg, &model_path(&cfg, model))?;
            print!("{}", r.text);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Usage(m))) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Ok(Err(Failure::Data(m))) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(3)
        }
    }
}
