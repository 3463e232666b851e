//! End-to-end orchestration. Every stage reads and writes files in the
//! canonical formats and leaves a manifest, so running the stages one by one
//! produces exactly what [`run_pipeline`] produces.

use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classifier::{self, Hyperparams};
use crate::corpus::{self, ingest_csv, FixtureSpec, Review, ReviewSet};
use crate::error::{Error, Result};
use crate::evalplan::{balance_train, make_folds, FoldPlan, DEFAULT_K};
use crate::extproto::{merge_hyperparams, Adapter, AdapterHandle, IdPrediction};
use crate::labeling::{binarize, propagate_labels, BinaryLabel, ConflictPolicy, DistributionStats};
use crate::langid::{self, LangIdModel, LangIdParams, DEFAULT_THRESHOLD};
use crate::manifest::{read_json, write_bytes, write_json, Manifest};
use crate::stats::{
    compare_models, comparison_table, confusion, macro_f1, micro_f1, results_table, Comparison,
    ConfusionMatrix, CorrectionScope, EvalReport,
};

/// How English reviews are selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum LangIdMode {
    /// Keep every review.
    Skip,
    /// Trust existing `lang`/`lang_confidence` annotations.
    Annotations,
    /// Train on the bundled corpus with the run seed.
    #[default]
    Bundled,
    /// Use a saved model file.
    Model { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    /// Built-in classifier; `hyperparams` overrides defaults field by field.
    Native {
        name: String,
        #[serde(default)]
        hyperparams: Value,
    },
    /// External adapter process speaking the stdio protocol.
    Adapter {
        name: String,
        command: Vec<String>,
        #[serde(default)]
        params: Value,
    },
}

impl ModelSpec {
    pub fn name(&self) -> &str {
        match self {
            ModelSpec::Native { name, .. } | ModelSpec::Adapter { name, .. } => name,
        }
    }
}

fn default_true() -> bool {
    true
}
fn default_k() -> usize {
    DEFAULT_K
}
fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_alpha() -> f64 {
    0.05
}
fn default_models() -> Vec<ModelSpec> {
    vec![ModelSpec::Native {
        name: "native".into(),
        hyperparams: Value::Null,
    }]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// CSV/JSONL review files. Ignored when `synth` is set.
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
    #[serde(default)]
    pub synth: Option<FixtureSpec>,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub langid: LangIdMode,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_true")]
    pub augment: bool,
    #[serde(default)]
    pub conflict_policy: ConflictPolicy,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Mandatory; there is no time-based default.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_true")]
    pub stratified: bool,
    #[serde(default = "default_true")]
    pub balance: bool,
    #[serde(default = "default_models")]
    pub models: Vec<ModelSpec>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub correction: CorrectionScope,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn from_json(json: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    /// Loads a config file; relative paths inside it are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: Self = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.inputs.iter_mut().for_each(resolve);
        if let LangIdMode::Model { path } = &mut cfg.langid {
            resolve(path);
        }
        if let Some(out) = &mut cfg.output_dir {
            resolve(out);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(u64, PathBuf)> {
        let seed = self
            .seed
            .ok_or_else(|| Error::Config("`seed` is required".into()))?;
        let out = self
            .output_dir
            .clone()
            .ok_or_else(|| Error::Config("`output_dir` is required".into()))?;
        if self.k < 2 {
            return Err(Error::Config(format!("k must be at least 2 (got {})", self.k)));
        }
        if self.synth.is_none() && self.inputs.is_empty() {
            return Err(Error::Config("either `inputs` or `synth` must be given".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if self.models.is_empty() {
            return Err(Error::Config("at least one model is required".into()));
        }
        let mut names: Vec<&str> = self.models.iter().map(ModelSpec::name).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("model names must be unique".into()));
        }
        Ok((seed, out))
    }
}

fn read_set(path: &Path) -> Result<ReviewSet> {
    Ok(ingest_csv(path, true)?)
}

fn write_set(set: &ReviewSet, path: &Path) -> Result<()> {
    write_bytes(path, &corpus::csv_bytes(set))
}

// ---- individual stages ----------------------------------------------------

pub fn stage_ingest(inputs: &[PathBuf], strict: bool, out: &Path) -> Result<ReviewSet> {
    let set = corpus::ingest_paths(inputs, strict)?;
    for w in &set.provenance.warnings {
        log::warn!("{w}");
    }
    write_set(&set, out)?;
    let mut m = Manifest::new(
        "ingest",
        None,
        json!({"strict": strict, "skipped": set.provenance.skipped, "duplicates": set.provenance.duplicates}),
    );
    for p in inputs {
        m = m.input(p)?;
    }
    m.output(out)?.write_for(out)?;
    info!("ingested {} reviews into {}", set.len(), out.display());
    Ok(set)
}

pub fn stage_extract_html(snapshot_dir: &Path, config: &Path, out: &Path) -> Result<ReviewSet> {
    let cfg = corpus::ExtractorConfig::load(config)?;
    let set = corpus::extract_from_html(snapshot_dir, &cfg)?;
    write_set(&set, out)?;
    let mut m = Manifest::new(
        "extract-html",
        None,
        json!({"snapshot_dir": snapshot_dir, "skipped": set.provenance.skipped}),
    )
    .input(config)?;
    for src in &set.provenance.sources {
        m = m.input(Path::new(src))?;
    }
    m.output(out)?.write_for(out)?;
    Ok(set)
}

pub fn stage_synth(spec: &FixtureSpec, out: &Path) -> Result<ReviewSet> {
    let set = corpus::generate_fixture(spec)?;
    write_set(&set, out)?;
    Manifest::new("synth", Some(spec.seed), serde_json::to_value(spec).unwrap())
        .output(out)?
        .write_for(out)?;
    info!("generated {} synthetic reviews into {}", set.len(), out.display());
    Ok(set)
}

pub fn stage_langid_train(corpus_file: Option<&Path>, params: &LangIdParams, out: &Path) -> Result<LangIdModel> {
    let corpus = match corpus_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            text.lines()
                .filter_map(|l| l.split_once('\t'))
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect()
        }
        None => langid::bundled_corpus(),
    };
    let model = langid::train_langid(&corpus, params)?;
    write_bytes(out, &model.to_bytes())?;
    let mut m = Manifest::new("langid-train", Some(params.seed), serde_json::to_value(params).unwrap());
    if let Some(p) = corpus_file {
        m = m.input(p)?;
    }
    m.output(out)?.write_for(out)?;
    Ok(model)
}

/// Language filtering. `Bundled` is not accepted here: train first with
/// [`stage_langid_train`] and pass the model file.
pub fn stage_langid_filter(input: &Path, mode: &LangIdMode, threshold: f64, out: &Path) -> Result<ReviewSet> {
    let set = read_set(input)?;
    let mut m = Manifest::new(
        "langid-filter",
        None,
        json!({"mode": mode, "threshold": threshold}),
    )
    .input(input)?;
    let filtered = match mode {
        LangIdMode::Skip => set.clone(),
        LangIdMode::Annotations => langid::filter_by_annotation(&set, threshold)?,
        LangIdMode::Model { path } => {
            m = m.input(path)?;
            let model = LangIdModel::load(path)?;
            langid::filter_english(&set, &model, threshold)?
        }
        LangIdMode::Bundled => {
            return Err(Error::Config(
                "langid-filter needs a model file; run langid-train first".into(),
            ))
        }
    };
    write_set(&filtered, out)?;
    m.params["retained"] = json!(filtered.len());
    m.params["dropped"] = json!(set.len() - filtered.len());
    m.output(out)?.write_for(out)?;
    info!("kept {} of {} reviews as English", filtered.len(), set.len());
    Ok(filtered)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentStats {
    pub labeled_before: usize,
    pub labeled_after: usize,
    pub n_augmented: usize,
}

/// Sidecar path for stage statistics: `x.csv` -> `x.stats.json`.
pub fn stats_path(artifact: &Path, ext: &str) -> PathBuf {
    artifact.with_extension(format!("stats.{ext}"))
}

pub fn stage_augment(input: &Path, policy: Option<ConflictPolicy>, out: &Path) -> Result<AugmentStats> {
    let set = read_set(input)?;
    let labeled_before = set.labeled_count();
    let (augmented, n_augmented) = match policy {
        Some(p) => propagate_labels(&set, p),
        None => (set.clone(), 0),
    };
    let stats = AugmentStats {
        labeled_before,
        labeled_after: augmented.labeled_count(),
        n_augmented,
    };
    write_set(&augmented, out)?;
    let stats_file = stats_path(out, "json");
    write_json(&stats_file, &stats)?;
    Manifest::new("augment", None, json!({"policy": policy}))
        .input(input)?
        .output(out)?
        .output(&stats_file)?
        .write_for(out)?;
    info!("augmented {n_augmented} reviews");
    Ok(stats)
}

pub fn stage_binarize(input: &Path, augment_stats: Option<&Path>, out: &Path) -> Result<DistributionStats> {
    let set = read_set(input)?;
    let (rows, mut stats) = binarize(&set);
    let mut m = Manifest::new("binarize", None, Value::Null).input(input)?;
    if let Some(p) = augment_stats {
        let a: AugmentStats = read_json(p)?;
        stats.n_augmented = a.n_augmented;
        m = m.input(p)?;
    }
    let labeled = ReviewSet::from_records(rows.into_iter().map(|(r, _)| r).collect());
    write_set(&labeled, out)?;
    let json_file = stats_path(out, "json");
    let txt_file = stats_path(out, "txt");
    write_json(&json_file, &stats)?;
    write_bytes(&txt_file, stats.to_table().as_bytes())?;
    m.output(out)?
        .output(&json_file)?
        .output(&txt_file)?
        .write_for(out)?;
    info!(
        "{} labeled reviews: {:.2}% work, {:.2}% leisure",
        stats.n_total, stats.pct_work, stats.pct_leisure
    );
    Ok(stats)
}

fn binary_rows(path: &Path) -> Result<Vec<(Review, BinaryLabel)>> {
    let set = read_set(path)?;
    let (rows, stats) = binarize(&set);
    if stats.n_unlabeled_dropped > 0 {
        return Err(Error::Config(format!(
            "{} contains {} unlabeled reviews; run binarize first",
            path.display(),
            stats.n_unlabeled_dropped
        )));
    }
    Ok(rows)
}

pub fn stage_split(input: &Path, k: usize, seed: u64, stratified: bool, out: &Path) -> Result<FoldPlan> {
    let rows = binary_rows(input)?;
    let labels: Vec<BinaryLabel> = rows.iter().map(|(_, l)| *l).collect();
    let plan = make_folds(&labels, k, seed, stratified)?;
    let mut text = plan.to_json();
    text.push('\n');
    write_bytes(out, text.as_bytes())?;
    Manifest::new("split", Some(seed), json!({"k": k, "stratified": stratified}))
        .input(input)?
        .output(out)?
        .write_for(out)?;
    Ok(plan)
}

/// Trains the built-in classifier on every labeled record of `input`.
pub fn stage_train(input: &Path, hyperparams: &Hyperparams, out: &Path) -> Result<classifier::ClassifierModel> {
    let examples: Vec<(String, BinaryLabel)> = binary_rows(input)?
        .into_iter()
        .map(|(r, l)| (r.text, l))
        .collect();
    let model = classifier::train(&examples, hyperparams)?;
    write_bytes(out, &model.to_bytes())?;
    Manifest::new("train", Some(hyperparams.seed), serde_json::to_value(hyperparams).unwrap())
        .input(input)?
        .output(out)?
        .write_for(out)?;
    Ok(model)
}

/// Predicts every record of `input` and writes one JSON object per line.
pub fn stage_predict(model_file: &Path, input: &Path, out: &Path) -> Result<Vec<IdPrediction>> {
    let model = classifier::ClassifierModel::load(model_file)?;
    let set = ingest_csv(input, true)?;
    let predictions: Vec<IdPrediction> = set
        .iter()
        .map(|r| {
            let p = model.predict(&r.text);
            IdPrediction { id: r.id.clone(), label: p.label, score: p.score }
        })
        .collect();
    write_bytes(out, &predictions_jsonl(&predictions))?;
    Manifest::new("predict", None, Value::Null)
        .input(model_file)?
        .input(input)?
        .output(out)?
        .write_for(out)?;
    Ok(predictions)
}

// ---- cross-validation -----------------------------------------------------

/// Training and test records of one fold.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub train: ReviewSet,
    pub test: ReviewSet,
}

/// Materializes the folds of `plan` over `rows` (which must be id-sorted, as
/// produced by [`binarize`]). With `balance`, each training set is
/// undersampled to equal class counts using the fold-derived seed.
pub fn build_folds(rows: &[(Review, BinaryLabel)], plan: &FoldPlan, balance: bool, seed: u64) -> Result<Vec<FoldData>> {
    plan.validate(rows.len())?;
    let pick = |idx: &[usize]| ReviewSet::from_records(idx.iter().map(|&i| rows[i].0.clone()).collect());
    (0..plan.k)
        .map(|f| {
            let mut train_idx = plan.train_indices(f);
            if balance {
                let labeled: Vec<(usize, BinaryLabel)> = train_idx.iter().map(|&i| (i, rows[i].1)).collect();
                train_idx = balance_train(&labeled, seed, f)?.indices();
            }
            Ok(FoldData {
                train: pick(&train_idx),
                test: pick(plan.test_indices(f)),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: ConfusionMatrix,
    pub macro_f1: f64,
    pub micro_f1: f64,
    #[serde(skip)]
    pub predictions: Vec<IdPrediction>,
}

fn golds(set: &ReviewSet) -> Vec<BinaryLabel> {
    set.iter()
        .map(|r| BinaryLabel::from(r.label.expect("binarized records are labeled")))
        .collect()
}

fn score_fold(fold: usize, data: &FoldData, predictions: Vec<IdPrediction>) -> Result<FoldOutcome> {
    let preds: Vec<BinaryLabel> = predictions.iter().map(|p| p.label).collect();
    let cm = confusion(&golds(&data.test), &preds)?;
    Ok(FoldOutcome {
        fold,
        n_train: data.train.len(),
        n_test: data.test.len(),
        confusion: cm,
        macro_f1: macro_f1(&cm),
        micro_f1: micro_f1(&cm),
        predictions,
    })
}

fn report_from(name: &str, plan: &FoldPlan, outcomes: &[FoldOutcome]) -> Result<EvalReport> {
    Ok(EvalReport::new(
        name,
        plan.fingerprint(),
        outcomes.iter().map(|o| o.macro_f1).collect(),
        outcomes.iter().map(|o| o.micro_f1).collect(),
    )?)
}

/// Trains and scores the built-in classifier on every fold, folds in parallel.
pub fn evaluate_native(
    name: &str,
    hyperparams: &Hyperparams,
    plan: &FoldPlan,
    folds: &[FoldData],
) -> Result<(EvalReport, Vec<FoldOutcome>)> {
    let outcomes: Vec<FoldOutcome> = folds
        .par_iter()
        .enumerate()
        .map(|(f, data)| {
            let examples: Vec<(String, BinaryLabel)> = data
                .train
                .iter()
                .map(|r| (r.text.clone(), BinaryLabel::from(r.label.expect("labeled"))))
                .collect();
            let model = classifier::train(&examples, hyperparams)?;
            let predictions = data
                .test
                .iter()
                .map(|r| {
                    let p = model.predict(&r.text);
                    IdPrediction { id: r.id.clone(), label: p.label, score: p.score }
                })
                .collect();
            score_fold(f, data, predictions)
        })
        .collect::<Result<_>>()?;
    Ok((report_from(name, plan, &outcomes)?, outcomes))
}

/// Paths of the materialized train/test files of fold `f` under `out_dir`.
pub fn fold_files(out_dir: &Path, f: usize) -> (PathBuf, PathBuf) {
    let dir = out_dir.join("folds").join(format!("fold{f}"));
    (dir.join("train.csv"), dir.join("test.csv"))
}

pub fn write_fold_files(out_dir: &Path, folds: &[FoldData]) -> Result<Vec<(PathBuf, PathBuf)>> {
    folds
        .iter()
        .enumerate()
        .map(|(f, data)| {
            let (train, test) = fold_files(out_dir, f);
            write_set(&data.train, &train)?;
            write_set(&data.test, &test)?;
            Ok((train, test))
        })
        .collect()
}

/// Runs any [`Adapter`] over fold files written by [`write_fold_files`].
pub fn evaluate_adapter(
    adapter: &mut dyn Adapter,
    name: &str,
    params: &Value,
    plan: &FoldPlan,
    folds: &[FoldData],
    files: &[(PathBuf, PathBuf)],
    model_root: &Path,
) -> Result<(EvalReport, Vec<FoldOutcome>)> {
    let mut outcomes = Vec::with_capacity(folds.len());
    for (f, (data, (train, test))) in folds.iter().zip(files).enumerate() {
        let model_dir = model_root.join(format!("fold{f}"));
        std::fs::create_dir_all(&model_dir).map_err(|e| Error::Io {
            path: model_dir.display().to_string(),
            source: e,
        })?;
        info!("{name}: training fold {f}");
        adapter.train(train, &model_dir, params)?;
        let predictions = adapter.predict(test)?;
        outcomes.push(score_fold(f, data, predictions)?);
    }
    Ok((report_from(name, plan, &outcomes)?, outcomes))
}

fn predictions_jsonl(predictions: &[IdPrediction]) -> Vec<u8> {
    let mut out = Vec::new();
    for p in predictions {
        serde_json::to_writer(&mut out, p).expect("prediction serializes");
        out.push(b'\n');
    }
    out
}

/// Path of the report written by [`stage_evaluate`] for `model`.
pub fn report_path(out_dir: &Path, model: &str) -> PathBuf {
    out_dir.join("models").join(model).join("report.json")
}

pub fn stage_evaluate(
    input: &Path,
    folds_file: &Path,
    model: &ModelSpec,
    balance: bool,
    seed: u64,
    out_dir: &Path,
) -> Result<EvalReport> {
    let rows = binary_rows(input)?;
    let plan: FoldPlan = read_json(folds_file)?;
    let folds = build_folds(&rows, &plan, balance, seed)?;
    let files = write_fold_files(out_dir, &folds)?;
    let model_root = out_dir.join("models").join(model.name());
    let (report, outcomes) = match model {
        ModelSpec::Native { name, hyperparams } => {
            let hp = merge_hyperparams(&Hyperparams::with_seed(seed), hyperparams)?;
            evaluate_native(name, &hp, &plan, &folds)?
        }
        ModelSpec::Adapter { name, command, params } => {
            let mut handle = AdapterHandle::start(command)?;
            info!("adapter `{name}` reports itself as `{}`", handle.name());
            let result = evaluate_adapter(&mut handle, name, params, &plan, &folds, &files, &model_root)?;
            handle.shutdown()?;
            result
        }
    };
    let report_file = report_path(out_dir, model.name());
    let details_file = model_root.join("folds.json");
    write_json(&report_file, &report)?;
    write_json(&details_file, &outcomes)?;
    let mut m = Manifest::new(
        "evaluate",
        Some(seed),
        json!({"model": model, "balance": balance}),
    )
    .input(input)?
    .input(folds_file)?;
    for (o, (train, test)) in outcomes.iter().zip(&files) {
        let pred_file = model_root.join(format!("fold{}.predictions.jsonl", o.fold));
        write_bytes(&pred_file, &predictions_jsonl(&o.predictions))?;
        m = m.output(train)?.output(test)?.output(&pred_file)?;
    }
    m.output(&report_file)?
        .output(&details_file)?
        .write_for(&report_file)?;
    info!(
        "{}: Macro-F1 {:.4} (+/- {:.4}), Micro-F1 {:.4} (+/- {:.4})",
        report.model,
        report.macro_f1.mean,
        report.macro_f1.ci_half_width,
        report.micro_f1.mean,
        report.micro_f1.ci_half_width
    );
    Ok(report)
}

pub fn stage_compare(reports: &[PathBuf], alpha: f64, scope: CorrectionScope, out_dir: &Path) -> Result<Comparison> {
    let loaded: Vec<EvalReport> = reports.iter().map(|p| read_json(p)).collect::<Result<_>>()?;
    let cmp = compare_models(&loaded, alpha, scope)?;
    let json_file = out_dir.join("comparison.json");
    let txt_file = out_dir.join("results.txt");
    write_json(&json_file, &cmp)?;
    let text = format!("{}\n{}", results_table(&loaded), comparison_table(&cmp));
    write_bytes(&txt_file, text.as_bytes())?;
    let mut m = Manifest::new("compare", None, json!({"alpha": alpha, "correction": scope}));
    for p in reports {
        m = m.input(p)?;
    }
    m.output(&json_file)?.output(&txt_file)?.write_for(&json_file)?;
    Ok(cmp)
}

// ---- full run -------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub output_dir: PathBuf,
    pub distribution: DistributionStats,
    pub plan: FoldPlan,
    pub reports: Vec<EvalReport>,
    pub comparison: Comparison,
}

/// File names used by [`run_pipeline`] inside the output directory.
pub mod artifacts {
    pub const REVIEWS: &str = "reviews.csv";
    pub const LANGID_MODEL: &str = "langid.lid";
    pub const ENGLISH: &str = "english.csv";
    pub const AUGMENTED: &str = "augmented.csv";
    pub const BINARIZED: &str = "binarized.csv";
    pub const FOLDS: &str = "folds.json";
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    use artifacts::*;
    let (seed, out) = cfg.validate()?;
    std::fs::create_dir_all(&out).map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    let reviews = out.join(REVIEWS);
    match &cfg.synth {
        Some(spec) => stage_synth(spec, &reviews)?,
        None => stage_ingest(&cfg.inputs, cfg.strict, &reviews)?,
    };

    let mode = match &cfg.langid {
        LangIdMode::Bundled => {
            let model_file = out.join(LANGID_MODEL);
            stage_langid_train(None, &LangIdParams::new(seed), &model_file)?;
            LangIdMode::Model { path: model_file }
        }
        other => other.clone(),
    };
    let english = out.join(ENGLISH);
    stage_langid_filter(&reviews, &mode, cfg.threshold, &english)?;

    let augmented = out.join(AUGMENTED);
    stage_augment(&english, cfg.augment.then_some(cfg.conflict_policy), &augmented)?;

    let binarized = out.join(BINARIZED);
    let distribution = stage_binarize(&augmented, Some(&stats_path(&augmented, "json")), &binarized)?;

    let folds = out.join(FOLDS);
    let plan = stage_split(&binarized, cfg.k, seed, cfg.stratified, &folds)?;

    let mut reports = Vec::with_capacity(cfg.models.len());
    let mut report_files = Vec::with_capacity(cfg.models.len());
    for model in &cfg.models {
        reports.push(stage_evaluate(&binarized, &folds, model, cfg.balance, seed, &out)?);
        report_files.push(report_path(&out, model.name()));
    }
    let comparison = stage_compare(&report_files, cfg.alpha, cfg.correction, &out)?;
    Ok(PipelineOutcome {
        output_dir: out,
        distribution,
        plan,
        reports,
        comparison,
    })
}
