//! File-level stages: ingest, extract, train, score, eval and report.
//!
//! Each stage reads its inputs from the paths in [`PipelineConfig`] (or the
//! previous stage's output in `out_dir`) and writes its results to `out_dir`:
//!
//! | stage   | writes                                                        |
//! |---------|---------------------------------------------------------------|
//! | ingest  | `candidates.txt`, `cleaning_report.json`                      |
//! | extract | `features.csv`, `feature_manifest.json`                       |
//! | train   | `model.json`, `baseline_model.json`, `metrics.json`, `training_log.json` |
//! | score   | `scores.csv`                                                  |
//! | eval    | `eval.json`                                                   |
//! | report  | `report.txt`                                                  |

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::eval::{
    best_f1_threshold, evaluate, render_table, stratified_split, EvalError, MetricsReport,
    ScoredDataset, ScoredRow, Split, DEFAULT_THRESHOLD,
};
use crate::features::{
    default_native_coins, extract_all, feature_manifest, read_feature_csv, write_feature_csv,
    ExtractConfig, FeatureError, FeatureMatrix, FeatureRow, FEATURE_COUNT,
};
use crate::graph::{TransactionGraph, DEFAULT_HUB_CAP};
use crate::ingest::{
    clean, load_labels, parse_transactions, CleanConfig, CleanOutput, FileLabelProvider,
    IngestError, LabelProvider, LabelSource, MalformedRow, RecordFormat, Strictness,
    TransactionRecord, ONE_YEAR_SECS,
};
use crate::model::{
    feature_importance, load_model, save_model, train_decision_tree, train_gbdt, GbdtModel,
    ModelError, TrainConfig, TrainingLog,
};
use crate::seed::derive_seed;
use crate::synth::{read_truth_csv, SynthError};

pub const MAX_TOP_K: usize = FEATURE_COUNT;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Table(#[from] crate::features::TableError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
}

fn open(path: &Path) -> Result<BufReader<fs::File>, PipelineError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|source| PipelineError::File {
            path: path.to_path_buf(),
            source,
        })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, PipelineError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| PipelineError::File {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|source| PipelineError::File {
            path: path.to_path_buf(),
            source,
        })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| PipelineError::Data(e.to_string()))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|source| PipelineError::File {
            path: path.to_path_buf(),
            source,
        })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelinePaths {
    pub records: Option<PathBuf>,
    /// Category labels (`address,category,source`); shorthand for a file label source.
    pub labels: Option<PathBuf>,
    /// Ground truth (`address,label,...`) used for training and evaluation.
    pub truth: Option<PathBuf>,
    /// Newline-separated activity contract addresses.
    pub activity: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub paths: PipelinePaths,
    pub record_format: RecordFormat,
    /// Overrides `paths.labels` when set, e.g. to query a label service.
    pub label_source: Option<LabelSource>,
    pub activity_addresses: Vec<String>,
    pub hub_cap: usize,
    pub native_coins: BTreeMap<String, String>,
    pub train: TrainConfig,
    pub test_fraction: f64,
    /// Top-level seed; the split and training draw from labeled substreams of it.
    pub seed: u64,
    pub threshold: f64,
    pub max_lifecycle: i64,
    /// Records after this Unix time are ignored for lifecycle lengths.
    pub now: Option<i64>,
    pub workers: usize,
    pub strict: bool,
    pub baseline: bool,
    pub top_k: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            paths: PipelinePaths {
                out_dir: PathBuf::from("out"),
                ..PipelinePaths::default()
            },
            record_format: RecordFormat::Csv,
            label_source: None,
            activity_addresses: Vec::new(),
            hub_cap: DEFAULT_HUB_CAP,
            native_coins: default_native_coins(),
            train: TrainConfig::default(),
            test_fraction: 0.2,
            seed: 42,
            threshold: DEFAULT_THRESHOLD,
            max_lifecycle: ONE_YEAR_SECS,
            now: None,
            workers: 1,
            strict: false,
            baseline: true,
            top_k: 10,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let cfg: PipelineConfig = serde_json::from_reader(open(path)?)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        write_json(path, self)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.hub_cap == 0 {
            return bad("hub_cap must be positive");
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad("test_fraction must be in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad("threshold must be in [0, 1]");
        }
        if self.max_lifecycle <= 0 {
            return bad("max_lifecycle must be positive");
        }
        if self.top_k == 0 {
            return bad("top_k must be positive");
        }
        self.train.validate()?;
        Ok(())
    }

    pub fn strictness(&self) -> Strictness {
        if self.strict {
            Strictness::Strict
        } else {
            Strictness::Lenient
        }
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.paths.out_dir.join(name)
    }

    fn features_path(&self) -> PathBuf {
        self.paths
            .features
            .clone()
            .unwrap_or_else(|| self.out("features.csv"))
    }

    fn scores_path(&self) -> PathBuf {
        self.paths
            .scores
            .clone()
            .unwrap_or_else(|| self.out("scores.csv"))
    }

    pub fn model_path(&self) -> PathBuf {
        self.out("model.json")
    }

    pub fn clean_config(&self) -> CleanConfig {
        CleanConfig {
            now: self.now.unwrap_or(i64::MAX),
            max_lifecycle: self.max_lifecycle,
            strictness: self.strictness(),
        }
    }

    pub fn extract_config(&self) -> Result<ExtractConfig, PipelineError> {
        let mut activity: BTreeSet<String> = self.activity_addresses.iter().cloned().collect();
        if let Some(path) = &self.paths.activity {
            let text = fs::read_to_string(path).map_err(|source| PipelineError::File {
                path: path.clone(),
                source,
            })?;
            activity.extend(
                text.lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(str::to_string),
            );
        }
        Ok(ExtractConfig {
            hub_cap: self.hub_cap,
            native_coins: self.native_coins.clone(),
            activity_addresses: activity,
        })
    }

    /// The training config with its RNG seed drawn from the top-level seed.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            rng_seed: derive_seed(self.seed, "train"),
            ..self.train.clone()
        }
    }

    fn label_provider(&self) -> Result<Box<dyn LabelProvider>, PipelineError> {
        match (&self.label_source, &self.paths.labels) {
            (Some(src), _) => Ok(src.provider()?),
            (None, Some(path)) => Ok(Box::new(FileLabelProvider::open(path)?)),
            (None, None) => Ok(Box::new(FileLabelProvider::from_labels([]))),
        }
    }
}

fn require<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, PipelineError> {
    path.as_deref()
        .ok_or_else(|| PipelineError::Config(format!("no {what} path configured")))
}

#[derive(Debug, Clone)]
pub struct IngestOutput {
    pub cleaned: CleanOutput,
    pub skipped: Vec<MalformedRow>,
}

/// Labels every address in `records` through `provider` and applies the candidate rules.
pub fn ingest_records(
    records: Vec<TransactionRecord>,
    provider: &dyn LabelProvider,
    config: &CleanConfig,
) -> Result<CleanOutput, PipelineError> {
    let addresses: BTreeSet<String> = records
        .iter()
        .flat_map(|r| [r.input_address.clone(), r.output_address.clone()])
        .collect();
    let labels = load_labels(provider, &addresses, config.strictness)?;
    Ok(clean(&records, &labels, config)?)
}

pub fn run_ingest(cfg: &PipelineConfig) -> Result<IngestOutput, PipelineError> {
    let records_path = require(&cfg.paths.records, "records")?;
    let parsed = parse_transactions(open(records_path)?, cfg.record_format, cfg.strictness())?;
    let provider = cfg.label_provider()?;
    let cleaned = ingest_records(parsed.records, provider.as_ref(), &cfg.clean_config())?;

    let mut w = create(&cfg.out("candidates.txt"))?;
    let io = |source| PipelineError::File {
        path: cfg.out("candidates.txt"),
        source,
    };
    for c in &cleaned.candidates {
        writeln!(w, "{c}").map_err(io)?;
    }
    w.flush().map_err(io)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        report: &'a crate::ingest::CleaningReport,
        skipped_rows: &'a [MalformedRow],
    }
    write_json(
        &cfg.out("cleaning_report.json"),
        &Summary {
            report: &cleaned.report,
            skipped_rows: &parsed.skipped,
        },
    )?;
    Ok(IngestOutput {
        cleaned,
        skipped: parsed.skipped,
    })
}

/// Feature rows for every candidate in address order, labeled from `truth`
/// when given. Every candidate must then have a ground-truth label.
pub fn extract_rows(
    records: &[TransactionRecord],
    candidates: &BTreeSet<String>,
    config: &ExtractConfig,
    truth: Option<&BTreeMap<String, u8>>,
    workers: usize,
) -> Result<Vec<FeatureRow>, PipelineError> {
    let graph = TransactionGraph::build(records);
    let vectors = extract_all(&graph, candidates, config, workers)?;
    let mut rows = Vec::with_capacity(vectors.len());
    let mut unlabeled = Vec::new();
    for (address, features) in vectors {
        let label = match truth {
            Some(t) => match t.get(&address) {
                Some(&l) => Some(l),
                None => {
                    unlabeled.push(address.clone());
                    None
                }
            },
            None => None,
        };
        rows.push(FeatureRow {
            address,
            features,
            label,
        });
    }
    if let Some(first) = unlabeled.first() {
        return Err(PipelineError::Data(format!(
            "{} candidates have no ground-truth label (first: {first})",
            unlabeled.len()
        )));
    }
    Ok(rows)
}

pub fn load_truth(cfg: &PipelineConfig) -> Result<Option<BTreeMap<String, u8>>, PipelineError> {
    cfg.paths
        .truth
        .as_deref()
        .map(|p| Ok(read_truth_csv(open(p)?)?))
        .transpose()
}

pub fn run_extract(cfg: &PipelineConfig) -> Result<Vec<FeatureRow>, PipelineError> {
    let ingested = run_ingest(cfg)?;
    let truth = load_truth(cfg)?;
    let rows = extract_rows(
        &ingested.cleaned.records,
        &ingested.cleaned.candidates,
        &cfg.extract_config()?,
        truth.as_ref(),
        cfg.workers,
    )?;
    let path = cfg.features_path();
    let mut w = create(&path)?;
    write_feature_csv(&mut w, &rows, truth.is_some())
        .map_err(crate::features::TableError::from)?;
    w.flush()
        .map_err(|source| PipelineError::File { path, source })?;
    write_json(&cfg.out("feature_manifest.json"), &feature_manifest())?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub method: String,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub test_fraction: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub threshold: f64,
    /// Held-out metrics at `threshold`, one entry per method.
    pub methods: Vec<MethodMetrics>,
    /// Held-out metrics of the boosted model at its F1-maximising threshold.
    pub best_f1: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: GbdtModel,
    pub baseline: Option<GbdtModel>,
    pub log: TrainingLog,
    pub split: Split,
    pub metrics: MetricsSummary,
}

pub const GBDT_METHOD: &str = "GBDT";
pub const BASELINE_METHOD: &str = "Decision Tree";

fn held_out(
    model: &GbdtModel,
    matrix: &FeatureMatrix,
    labels: &[u8],
    rows: &[usize],
) -> Result<ScoredDataset, PipelineError> {
    let scored = rows
        .iter()
        .map(|&i| {
            Ok(ScoredRow {
                address: matrix.addresses[i].clone(),
                score: model.predict(&matrix.rows[i])?,
                label: labels[i],
            })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    Ok(ScoredDataset::new(scored)?)
}

/// Stratified split, boosted model plus optional CART baseline on the train
/// side, metrics on the test side.
pub fn train_and_evaluate(
    matrix: &FeatureMatrix,
    cfg: &PipelineConfig,
) -> Result<TrainOutcome, PipelineError> {
    let labels = matrix
        .labels
        .as_deref()
        .ok_or_else(|| PipelineError::Data("feature matrix has no label column".into()))?;
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(ModelError::SingleClassInput.into());
    }
    let split = stratified_split(labels, cfg.test_fraction, cfg.seed)?;
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<u8>) {
        (
            idx.iter().map(|&i| matrix.rows[i].clone()).collect(),
            idx.iter().map(|&i| labels[i]).collect(),
        )
    };
    let (x, y) = pick(&split.train);
    let train_cfg = cfg.train_config();
    let trained = train_gbdt(&x, &y, &train_cfg)?;
    let baseline = if cfg.baseline {
        Some(train_decision_tree(&x, &y, &train_cfg)?)
    } else {
        None
    };

    let test = held_out(&trained.model, matrix, labels, &split.test)?;
    let mut methods = vec![MethodMetrics {
        method: GBDT_METHOD.into(),
        metrics: evaluate(&test, cfg.threshold)?,
    }];
    if let Some(b) = &baseline {
        let test_b = held_out(b, matrix, labels, &split.test)?;
        methods.push(MethodMetrics {
            method: BASELINE_METHOD.into(),
            metrics: evaluate(&test_b, cfg.threshold)?,
        });
    }
    let metrics = MetricsSummary {
        test_fraction: cfg.test_fraction,
        n_train: split.train.len(),
        n_test: split.test.len(),
        threshold: cfg.threshold,
        methods,
        best_f1: best_f1_threshold(&test)?,
    };
    Ok(TrainOutcome {
        model: trained.model,
        baseline,
        log: trained.log,
        split,
        metrics,
    })
}

fn save_model_file(model: &GbdtModel, path: &Path) -> Result<(), PipelineError> {
    let mut w = create(path)?;
    save_model(model, &mut w)?;
    Ok(())
}

pub fn load_model_file(path: &Path) -> Result<GbdtModel, PipelineError> {
    Ok(load_model(open(path)?)?)
}

pub fn read_features(cfg: &PipelineConfig) -> Result<FeatureMatrix, PipelineError> {
    Ok(read_feature_csv(open(&cfg.features_path())?)?)
}

pub fn run_train(cfg: &PipelineConfig) -> Result<TrainOutcome, PipelineError> {
    let matrix = read_features(cfg)?;
    let outcome = train_and_evaluate(&matrix, cfg)?;
    save_model_file(&outcome.model, &cfg.model_path())?;
    if let Some(b) = &outcome.baseline {
        save_model_file(b, &cfg.out("baseline_model.json"))?;
    }
    write_json(&cfg.out("metrics.json"), &outcome.metrics)?;
    write_json(&cfg.out("training_log.json"), &outcome.log)?;
    Ok(outcome)
}

/// Scores every row of the feature file; returns `(address, score)` pairs.
pub fn run_score(
    cfg: &PipelineConfig,
    model_path: &Path,
) -> Result<Vec<(String, f64)>, PipelineError> {
    let model = load_model_file(model_path)?;
    let matrix = read_features(cfg)?;
    let scores = model.predict_batch(&matrix.rows)?;
    let out: Vec<(String, f64)> = matrix.addresses.into_iter().zip(scores).collect();
    let path = cfg.scores_path();
    let mut w = csv::Writer::from_writer(create(&path)?);
    let csv_err = |e: csv::Error| PipelineError::Data(format!("{}: {e}", path.display()));
    w.write_record(["address", "score"]).map_err(csv_err)?;
    for (a, s) in &out {
        w.write_record([a.as_str(), &s.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(|source| PipelineError::File {
        path: path.clone(),
        source,
    })?;
    Ok(out)
}

pub fn read_scores(path: &Path) -> Result<Vec<(String, f64)>, PipelineError> {
    let mut r = csv::Reader::from_reader(open(path)?);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))?;
        let score: f64 = rec.get(1).unwrap_or_default().parse().map_err(|_| {
            PipelineError::Data(format!("{}: bad score in {:?}", path.display(), rec))
        })?;
        out.push((rec.get(0).unwrap_or_default().to_string(), score));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub at_threshold: MetricsReport,
    pub best_f1: MetricsReport,
}

/// Metrics for the score file against the ground truth.
pub fn run_eval(cfg: &PipelineConfig) -> Result<EvalSummary, PipelineError> {
    let truth = load_truth(cfg)?
        .ok_or_else(|| PipelineError::Config("eval needs a truth path".into()))?;
    let rows = read_scores(&cfg.scores_path())?
        .into_iter()
        .map(|(address, score)| {
            let label = *truth.get(&address).ok_or_else(|| {
                PipelineError::Data(format!("no ground-truth label for {address}"))
            })?;
            Ok(ScoredRow {
                address,
                score,
                label,
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let data = ScoredDataset::new(rows)?;
    let summary = EvalSummary {
        at_threshold: evaluate(&data, cfg.threshold)?,
        best_f1: best_f1_threshold(&data)?,
    };
    write_json(&cfg.out("eval.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub importance: Vec<(String, f64)>,
    pub metrics: Option<MetricsSummary>,
    pub text: String,
}

/// The `k` features with the largest total gain, `k` clipped to the feature count.
pub fn top_features(model: &GbdtModel, k: usize) -> Vec<(String, f64)> {
    let mut imp = feature_importance(model);
    imp.truncate(k.min(MAX_TOP_K));
    imp
}

pub fn render_report(importance: &[(String, f64)], metrics: Option<&MetricsSummary>) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(s, "Top {} features by total gain", importance.len());
    let width = importance.iter().map(|(n, _)| n.len()).max().unwrap_or(4).max(7);
    let _ = writeln!(s, "{:>4}  {:<width$}  {:>14}", "rank", "feature", "gain");
    for (i, (name, gain)) in importance.iter().enumerate() {
        let _ = writeln!(s, "{:>4}  {:<width$}  {:>14.4}", i + 1, name, gain);
    }
    if let Some(m) = metrics {
        let _ = writeln!(
            s,
            "\nHeld-out metrics ({} test rows, threshold {})",
            m.n_test, m.threshold
        );
        let rows: Vec<(String, MetricsReport)> = m
            .methods
            .iter()
            .map(|mm| (mm.method.clone(), mm.metrics.clone()))
            .collect();
        s.push_str(&render_table(&rows));
        let _ = writeln!(
            s,
            "\nBest-F1 threshold for {}: {:.6} (F1 {:.4})",
            GBDT_METHOD, m.best_f1.threshold, m.best_f1.f1
        );
    }
    s
}

pub fn run_report(cfg: &PipelineConfig, model_path: &Path) -> Result<Report, PipelineError> {
    let model = load_model_file(model_path)?;
    let importance = top_features(&model, cfg.top_k);
    let metrics_path = cfg.out("metrics.json");
    let metrics: Option<MetricsSummary> = if metrics_path.exists() {
        Some(
            serde_json::from_reader(open(&metrics_path)?)
                .map_err(|e| PipelineError::Data(format!("{}: {e}", metrics_path.display())))?,
        )
    } else {
        None
    };
    let text = render_report(&importance, metrics.as_ref());
    let path = cfg.out("report.txt");
    fs::write(&path, &text).map_err(|source| PipelineError::File { path, source })?;
    Ok(Report {
        importance,
        metrics,
        text,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelKind, TreeNode};

    #[test]
    fn config_round_trips() {
        let mut cfg = PipelineConfig::default();
        cfg.paths.records = Some("r.csv".into());
        cfg.activity_addresses = vec!["0xact".into()];
        cfg.label_source = Some(LabelSource::Http {
            base_url: "http://localhost:1".into(),
            timeout_secs: 3,
            retries: 1,
        });
        let text = serde_json::to_string(&cfg).unwrap();
        let back: PipelineConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let partial: PipelineConfig = serde_json::from_str(r#"{"hub_cap": 5}"#).unwrap();
        assert_eq!(partial.hub_cap, 5);
        assert_eq!(partial.test_fraction, 0.2);
    }

    #[test]
    fn config_validation() {
        let cfg = PipelineConfig {
            test_fraction: 1.0,
            ..PipelineConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
    }

    #[test]
    fn top_k_is_clipped() {
        let names = crate::features::feature_names().to_vec();
        let trees = (0..FEATURE_COUNT)
            .map(|f| TreeNode::Split {
                feature: f,
                threshold: 0.0,
                missing_goes_left: true,
                gain: 1.0 + f as f64,
                left: Box::new(TreeNode::leaf(0.0)),
                right: Box::new(TreeNode::leaf(0.0)),
            })
            .collect();
        let m = GbdtModel {
            kind: ModelKind::Gbdt,
            config: TrainConfig::default(),
            base_score: 0.0,
            learning_rate: 0.1,
            bin_edges: vec![vec![]; FEATURE_COUNT],
            feature_names: names,
            trees,
        };
        assert_eq!(top_features(&m, 10).len(), 10);
        assert_eq!(top_features(&m, 500).len(), FEATURE_COUNT);
        assert_eq!(top_features(&m, 1)[0].0, "network_count");
        let text = render_report(&top_features(&m, 10), None);
        assert_eq!(text.lines().count(), 12);
    }
}
