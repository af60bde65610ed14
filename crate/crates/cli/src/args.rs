use std::path::{Path, PathBuf};

use bncc::chain::{EnsembleConfig, Method, MethodConfig};
use bncc::dataset::{load_arff, load_csv, LabelSpec, MultiLabelDataset};
use bncc::learner::{LearnerConfig, LearnerKind};
use bncc::structure::SearchConfig;
use bncc::{Error, Execution, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "bncc", version, about = "Bayesian-network classifier chains for multi-label data")]
pub struct Cli {
    /// Worker threads for parallel sections; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Run every stage on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Command {
    /// Pairwise dependence matrix (CSV) and the fully connected label graph (DOT).
    Depmat {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out_dot: Option<PathBuf>,
    },
    /// Learn the label network and chain order.
    Order {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Directory receiving order.json, dag.dot and scores.json.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train a model and write it as JSON.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict label sets for every instance of a dataset.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score predictions against the labels of a dataset.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        /// Trained model to apply to the dataset.
        #[arg(long, conflicts_with = "predictions", required_unless_present = "predictions")]
        model: Option<PathBuf>,
        /// Prediction CSV as written by `predict`.
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeated k-fold cross-validation of one method.
    Xval {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        cv: CvArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Cross-validate several methods on shared folds and seeds.
    Compare {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_values_t = Method::ALL)]
        methods: Vec<Method>,
        #[command(flatten)]
        learner: LearnerArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[command(flatten)]
        cv: CvArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Sample a synthetic dataset from a label network.
    Synth {
        #[arg(long)]
        labels: usize,
        #[arg(long)]
        instances: usize,
        /// Defaults to the number of labels.
        #[arg(long)]
        features: Option<usize>,
        /// Edges as `parent>child`, comma separated, 0-based.
        #[arg(long, value_delimiter = ',')]
        edges: Vec<String>,
        /// Flip probability of every edge.
        #[arg(long, default_value_t = 0.1)]
        flip: f64,
        #[arg(long, default_value_t = 0.5)]
        base: f64,
        #[arg(long, default_value_t = 0.5)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out_dot: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct DataArgs {
    /// ARFF or CSV file.
    #[arg(long)]
    pub data: PathBuf,
    /// Mulan label XML for ARFF input.
    #[arg(long)]
    pub xml: Option<PathBuf>,
    /// Number of trailing label attributes or columns.
    #[arg(long)]
    pub label_count: Option<usize>,
    /// Label attribute names for ARFF input.
    #[arg(long, value_delimiter = ',')]
    pub label_names: Vec<String>,
}

fn is_arff(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("arff"))
}

impl DataArgs {
    pub fn load(&self) -> Result<MultiLabelDataset> {
        if is_arff(&self.data) {
            let spec = if let Some(xml) = &self.xml {
                LabelSpec::Xml(xml.clone())
            } else if !self.label_names.is_empty() {
                LabelSpec::Names(self.label_names.clone())
            } else if let Some(n) = self.label_count {
                LabelSpec::Trailing(n)
            } else {
                return Err(Error::Config(
                    "ARFF input needs --xml, --label-names or --label-count".into(),
                ));
            };
            load_arff(&self.data, &spec)
        } else {
            let n = self
                .label_count
                .ok_or_else(|| Error::Config("CSV input needs --label-count".into()))?;
            load_csv(&self.data, n)
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct LearnerArgs {
    #[arg(long, default_value = "logistic")]
    pub learner: LearnerKind,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub l2: f64,
    #[arg(long)]
    pub no_standardize: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 3)]
    pub child_threshold: usize,
    /// Overrides the default cap of floor(log2 N) parents.
    #[arg(long)]
    pub parent_cap: Option<usize>,
    #[arg(long)]
    pub baseline_empty_set: bool,
}

impl SearchArgs {
    pub fn config(&self, execution: Execution) -> SearchConfig {
        SearchConfig {
            child_threshold: self.child_threshold,
            parent_cap: self.parent_cap,
            baseline_empty_set: self.baseline_empty_set,
            execution,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EnsembleArgs {
    /// Chains in the ensemble; 10 up to 5000 instances, else 5.
    #[arg(long)]
    pub ensemble_size: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub vote_threshold: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, default_value = "bncc")]
    pub method: Method,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Seeds learners, random orders and ensembles.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct CvArgs {
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Seeds the fold plans; `compare` also seeds its models with it.
    #[arg(long, default_value_t = 0)]
    pub cv_seed: u64,
}

pub fn method_config(
    learner: &LearnerArgs,
    search: &SearchArgs,
    ensemble: &EnsembleArgs,
    seed: u64,
    execution: Execution,
) -> Result<MethodConfig> {
    let cfg = MethodConfig {
        learner: LearnerConfig {
            kind: learner.learner,
            learning_rate: learner.lr,
            epochs: learner.epochs,
            l2: learner.l2,
            standardize: !learner.no_standardize,
            seed,
        },
        search: search.config(execution),
        ensemble: EnsembleConfig {
            size: ensemble.ensemble_size,
            seed,
            vote_threshold: ensemble.vote_threshold,
            execution,
        },
        order_seed: seed,
    };
    cfg.learner.validate()?;
    cfg.search.validate()?;
    if !(0.0..=1.0).contains(&cfg.ensemble.vote_threshold) {
        return Err(Error::Config("vote threshold must lie in [0, 1]".into()));
    }
    if cfg.ensemble.size == Some(0) {
        return Err(Error::Config("ensemble size must be at least 1".into()));
    }
    Ok(cfg)
}
