use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use tripclass::classifier::Hyperparams;
use tripclass::corpus::FixtureSpec;
use tripclass::extproto::merge_hyperparams;
use tripclass::labeling::ConflictPolicy;
use tripclass::langid::{LangIdParams, DEFAULT_THRESHOLD};
use tripclass::pipeline::{self, LangIdMode, ModelSpec, PipelineConfig};
use tripclass::stats::CorrectionScope;
use tripclass::{Error, Result};

#[derive(Parser)]
#[command(name = "tripclass", version, about = "Work/leisure classification of travel reviews")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read CSV/JSONL review files into one canonical CSV.
    Ingest {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Fail on the first malformed row or duplicate id.
        #[arg(long)]
        strict: bool,
    },
    /// Extract reviews from saved HTML pages.
    ExtractHtml {
        #[arg(long)]
        snapshot_dir: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic labeled corpus.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.1233)]
        work_fraction: f64,
        #[arg(long, default_value_t = 0.9)]
        vocab_signal: f64,
        #[arg(long, default_value_t = 0.0)]
        unlabeled_fraction: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the language identifier (bundled corpus unless --corpus is given).
    LangidTrain {
        /// `lang<TAB>text` lines.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Keep English reviews.
    LangidFilter {
        #[arg(long)]
        input: PathBuf,
        /// Language model file; without it, existing annotations are used.
        #[arg(long, conflicts_with = "skip")]
        model: Option<PathBuf>,
        /// Keep every review.
        #[arg(long)]
        skip: bool,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Propagate labels within visit groups.
    Augment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Copy the input unchanged.
        #[arg(long)]
        no_propagate: bool,
    },
    /// Keep labeled reviews and report the work/leisure distribution.
    Binarize {
        #[arg(long)]
        input: PathBuf,
        /// Statistics file written by `augment`.
        #[arg(long)]
        augment_stats: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assign binarized reviews to cross-validation folds.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        no_stratify: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the built-in classifier on all labeled reviews of a file.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        hyper: HyperArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict every review of a file with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate one model over a fold plan.
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        folds: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "native")]
        name: String,
        #[command(flatten)]
        hyper: HyperArgs,
        /// External adapter command; everything after `--adapter` is passed through.
        #[arg(long, num_args = 1.., allow_hyphen_values = true)]
        adapter: Option<Vec<String>>,
        /// JSON object forwarded to the adapter's train request.
        #[arg(long)]
        adapter_params: Option<String>,
        #[arg(long)]
        no_balance: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Compare evaluation reports with paired t-tests.
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = Correction::PerMetric)]
        correction: Correction,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run every stage from a JSON config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
    },
}

#[derive(Args)]
struct HyperArgs {
    /// JSON file overriding classifier hyperparameters.
    #[arg(long)]
    hyperparams: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    ngram: Option<usize>,
    #[arg(long)]
    hash_dim: Option<usize>,
}

impl HyperArgs {
    fn overrides(&self) -> Result<Value> {
        let mut v = match &self.hyperparams {
            Some(path) => read_json_file(path)?,
            None => Value::Object(Default::default()),
        };
        let obj = v
            .as_object_mut()
            .ok_or_else(|| Error::Config("hyperparameter file must hold a JSON object".into()))?;
        if let Some(x) = self.epochs {
            obj.insert("epochs".into(), x.into());
        }
        if let Some(x) = self.learning_rate {
            obj.insert("learning_rate".into(), x.into());
        }
        if let Some(x) = self.ngram {
            obj.insert("ngram".into(), x.into());
        }
        if let Some(x) = self.hash_dim {
            obj.insert("hash_dim".into(), x.into());
        }
        Ok(v)
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Correction {
    PerMetric,
    AcrossMetrics,
}

impl From<Correction> for CorrectionScope {
    fn from(c: Correction) -> Self {
        match c {
            Correction::PerMetric => CorrectionScope::PerMetric,
            Correction::AcrossMetrics => CorrectionScope::AcrossMetrics,
        }
    }
}

fn read_json_file(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.display().to_string(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { inputs, out, strict } => {
            pipeline::stage_ingest(&inputs, strict, &out)?;
        }
        Command::ExtractHtml { snapshot_dir, config, out } => {
            pipeline::stage_extract_html(&snapshot_dir, &config, &out)?;
        }
        Command::Synth {
            n,
            work_fraction,
            vocab_signal,
            unlabeled_fraction,
            seed,
            out,
        } => {
            let mut spec = FixtureSpec::new(n, work_fraction, vocab_signal, seed);
            spec.unlabeled_fraction = unlabeled_fraction;
            pipeline::stage_synth(&spec, &out)?;
        }
        Command::LangidTrain {
            corpus,
            seed,
            epochs,
            learning_rate,
            out,
        } => {
            let mut params = LangIdParams::new(seed);
            if let Some(e) = epochs {
                params.epochs = e;
            }
            if let Some(lr) = learning_rate {
                params.learning_rate = lr;
            }
            pipeline::stage_langid_train(corpus.as_deref(), &params, &out)?;
        }
        Command::LangidFilter {
            input,
            model,
            skip,
            threshold,
            out,
        } => {
            let mode = match (model, skip) {
                (_, true) => LangIdMode::Skip,
                (Some(path), false) => LangIdMode::Model { path },
                (None, false) => LangIdMode::Annotations,
            };
            pipeline::stage_langid_filter(&input, &mode, threshold, &out)?;
        }
        Command::Augment { input, out, no_propagate } => {
            let policy = (!no_propagate).then_some(ConflictPolicy::default());
            pipeline::stage_augment(&input, policy, &out)?;
        }
        Command::Binarize { input, augment_stats, out } => {
            let stats = pipeline::stage_binarize(&input, augment_stats.as_deref(), &out)?;
            print!("{}", stats.to_table());
        }
        Command::Split {
            input,
            k,
            seed,
            no_stratify,
            out,
        } => {
            pipeline::stage_split(&input, k, seed, !no_stratify, &out)?;
        }
        Command::Train { input, seed, hyper, out } => {
            let hp = merge_hyperparams(&Hyperparams::with_seed(seed), &hyper.overrides()?)?;
            pipeline::stage_train(&input, &hp, &out)?;
        }
        Command::Predict { model, input, out } => {
            pipeline::stage_predict(&model, &input, &out)?;
        }
        Command::Evaluate {
            input,
            folds,
            seed,
            name,
            hyper,
            adapter,
            adapter_params,
            no_balance,
            out_dir,
        } => {
            let spec = match adapter {
                Some(command) => ModelSpec::Adapter {
                    name,
                    command,
                    params: match adapter_params {
                        Some(s) => serde_json::from_str(&s)
                            .map_err(|e| Error::Config(format!("--adapter-params: {e}")))?,
                        None => Value::Null,
                    },
                },
                None => ModelSpec::Native {
                    name,
                    hyperparams: hyper.overrides()?,
                },
            };
            let report = pipeline::stage_evaluate(&input, &folds, &spec, !no_balance, seed, &out_dir)?;
            print!("{}", tripclass::stats::results_table(std::slice::from_ref(&report)));
        }
        Command::Compare {
            reports,
            alpha,
            correction,
            out_dir,
        } => {
            pipeline::stage_compare(&reports, alpha, correction.into(), &out_dir)?;
            let text = std::fs::read_to_string(out_dir.join("results.txt")).map_err(|e| Error::Io {
                path: out_dir.display().to_string(),
                source: e,
            })?;
            print!("{text}");
        }
        Command::Pipeline {
            config,
            seed,
            output_dir,
            k,
            threshold,
        } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if seed.is_some() {
                cfg.seed = seed;
            }
            if output_dir.is_some() {
                cfg.output_dir = output_dir;
            }
            if let Some(k) = k {
                cfg.k = k;
            }
            if let Some(t) = threshold {
                cfg.threshold = t;
            }
            let outcome = pipeline::run_pipeline(&cfg)?;
            let text = std::fs::read_to_string(outcome.output_dir.join("results.txt")).map_err(|e| Error::Io {
                path: outcome.output_dir.display().to_string(),
                source: e,
            })?;
            print!("{}{text}", outcome.distribution.to_table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
