//! Experiment protocol: per-replicate evaluation of the three weighting
//! methods at a matched evaluation budget, test-set fronts and
//! hypervolumes, result directories, comparison and plot data.

mod output;
mod plots;

use std::path::PathBuf;
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{
    build_group_index, load_csv, train_test_split, undersample, Dataset, DatasetError,
    DatasetSchema, GroupIndex,
};
use crate::ga::{run_ga, ArchiveEntry, CvFitness, GaConfig, GaError};
use crate::metrics::{score_pair, EvaluatedPoint, MetricPair};
use crate::model::{fit, ModelError, ModelSpec};
use crate::pareto::{hypervolume_2d, pareto_front, MinPoint, ParetoError, ParetoFront};
use crate::reweight::{deterministic_weights, equal_weights, expand_slots, ReweightError};
use crate::seed;
use crate::stats::{Method, StatsError};

pub use output::{
    collect_tree, compare, compare_tree, load_run, read_hypervolume_csv, run_dir, write_run,
    HypervolumeRow, Manifest, ManifestReplicate, RunSummary,
};
pub use plots::{emit_plots, strip_plot_svg, PlotRow};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(#[from] DatasetError),
    #[error("methods ran with different replicate seeds: {0}")]
    SeedMismatch(String),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
    #[error("weights error: {0}")]
    Weights(#[from] ReweightError),
    #[error("search error: {0}")]
    Search(#[from] GaError),
    #[error("front error: {0}")]
    Front(#[from] ParetoError),
    #[error("statistics error: {0}")]
    Stats(#[from] StatsError),
    #[error("metric error: {0}")]
    Metric(#[from] crate::metrics::MetricError),
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed result file {path}: {message}")]
    ResultFile { path: PathBuf, message: String },
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    /// Process exit code: 2 for configuration, 3 for data, 4 for anything
    /// that failed while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Data(_) | Self::SeedMismatch(_) | Self::ResultFile { .. } => 3,
            _ => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// One method on one dataset under one metric pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Label used in result paths and reports.
    pub dataset_name: String,
    pub data: PathBuf,
    pub schema: DatasetSchema,
    pub method: Method,
    pub metric_pair: MetricPair,
    pub replicates: usize,
    pub evaluation_budget: usize,
    pub model: ModelSpec,
    /// Search settings for the evolved method. Genome length and seed are
    /// filled in per replicate.
    pub ga: GaConfig,
    pub test_fraction: f64,
    pub undersample_train: bool,
    pub master_seed: u64,
}

impl ExperimentConfig {
    /// Defaults: 20 replicates, budget 1000 (20 x 50 for the search),
    /// logistic model, a quarter of the rows held out for testing.
    pub fn new(
        dataset_name: impl Into<String>,
        data: impl Into<PathBuf>,
        schema: DatasetSchema,
        method: Method,
        metric_pair: MetricPair,
    ) -> Self {
        Self {
            dataset_name: dataset_name.into(),
            data: data.into(),
            schema,
            method,
            metric_pair,
            replicates: 20,
            evaluation_budget: 1000,
            model: ModelSpec::logistic(),
            ga: GaConfig::default(),
            test_fraction: 0.25,
            undersample_train: false,
            master_seed: 0,
        }
    }

    /// Sets the budget and keeps the search consistent with it.
    pub fn with_budget(mut self, budget: usize) -> Self {
        self.evaluation_budget = budget;
        self.ga = GaConfig::with_budget(self.ga.pop_size, budget, self.ga.ind_size, self.ga.seed);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.replicates == 0 {
            return bad("replicates must be positive".into());
        }
        if self.evaluation_budget == 0 {
            return bad("evaluation_budget must be positive".into());
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!(
                "test_fraction {} outside (0, 1)",
                self.test_fraction
            ));
        }
        if self.dataset_name.is_empty() || self.dataset_name.contains(['/', '\\']) {
            return bad(format!(
                "dataset name `{}` is not a plain label",
                self.dataset_name
            ));
        }
        self.schema
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.model
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.method == Method::Evolved {
            if self.ga.evaluation_budget != self.evaluation_budget {
                return bad(format!(
                    "search budget {} differs from evaluation_budget {}",
                    self.ga.evaluation_budget, self.evaluation_budget
                ));
            }
            let mut probe = self.ga.clone();
            probe.ind_size = probe.ind_size.max(1);
            probe
                .validate()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        Ok(load_csv(&self.data, &self.schema)?)
    }
}

/// Seeds of one replicate. The split seed depends only on the master seed
/// and replicate index, so every method sees the same split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicateSeeds {
    pub replicate: u64,
    pub split: u64,
    pub undersample: u64,
    pub models: u64,
    pub folds: u64,
    pub search: u64,
}

impl ReplicateSeeds {
    pub fn new(master_seed: u64, index: usize) -> Self {
        let replicate = seed::derive(master_seed, index as u64);
        Self {
            replicate,
            split: seed::derive_label(replicate, "split"),
            undersample: seed::derive_label(replicate, "undersample"),
            models: seed::derive_label(replicate, "models"),
            folds: seed::derive_label(replicate, "folds"),
            search: seed::derive_label(replicate, "search"),
        }
    }

    /// Model seed of the `i`-th fixed-weight evaluation.
    pub fn model_seed(&self, i: usize) -> u64 {
        seed::derive(self.models, i as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub index: usize,
    pub seeds: ReplicateSeeds,
    /// Weight-vector evaluations; equals the configured budget.
    pub evaluations: usize,
    /// Raw model fits, including cross-validation folds and retrains.
    pub model_fits: usize,
    /// Test-set score of every evaluation, in evaluation order.
    pub points: Vec<EvaluatedPoint>,
    pub front: ParetoFront,
    pub hypervolume: f64,
    /// Search archive, evolved method only.
    pub archive: Option<Vec<ArchiveEntry>>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub replicates: Vec<ReplicateResult>,
}

impl RunResult {
    pub fn hypervolumes(&self) -> Vec<f64> {
        self.replicates.iter().map(|r| r.hypervolume).collect()
    }
}

struct TestSet {
    data: Dataset,
    groups: Vec<usize>,
    n_groups: usize,
}

impl TestSet {
    fn new(data: Dataset) -> Self {
        let gi = build_group_index(&data);
        Self {
            groups: gi.group_of_row().to_vec(),
            n_groups: gi.n_groups(),
            data,
        }
    }
}

fn fit_and_score(
    spec: &ModelSpec,
    pair: MetricPair,
    train: &Dataset,
    row_weights: &[f64],
    test: &TestSet,
) -> Result<EvaluatedPoint> {
    let model = fit(spec, train.features(), train.target(), row_weights)?;
    let scores = model.predict_scores(test.data.features())?;
    Ok(score_pair(
        pair,
        test.data.target(),
        &scores,
        &test.groups,
        test.n_groups,
    )?)
}

/// `budget` fits with fixed slot weights, each with its own model seed.
fn fixed_weight_points(
    cfg: &ExperimentConfig,
    seeds: &ReplicateSeeds,
    train: &Dataset,
    slots: &[f64],
    gi: &GroupIndex,
    test: &TestSet,
) -> Result<Vec<EvaluatedPoint>> {
    let w = expand_slots(slots, train.target(), gi)?;
    (0..cfg.evaluation_budget)
        .into_par_iter()
        .map(|i| {
            fit_and_score(
                &cfg.model.with_seed(seeds.model_seed(i)),
                cfg.metric_pair,
                train,
                &w,
                test,
            )
        })
        .collect()
}

/// Runs replicate `index` of `cfg` on `ds`.
pub fn run_replicate(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    index: usize,
) -> Result<ReplicateResult> {
    let start = Instant::now();
    let seeds = ReplicateSeeds::new(cfg.master_seed, index);
    let (mut train, test) = train_test_split(ds, cfg.test_fraction, seeds.split)?;
    if cfg.undersample_train {
        train = undersample(&train, seeds.undersample)?;
    }
    let gi = build_group_index(&train);
    let test = TestSet::new(test);

    let (points, model_fits, archive) = match cfg.method {
        Method::Equal => {
            let pts =
                fixed_weight_points(cfg, &seeds, &train, equal_weights(&gi).values(), &gi, &test)?;
            (pts, cfg.evaluation_budget, None)
        }
        Method::Deterministic => {
            let dw = deterministic_weights(&train, &gi);
            let pts = fixed_weight_points(cfg, &seeds, &train, dw.values(), &gi, &test)?;
            (pts, cfg.evaluation_budget, None)
        }
        Method::Evolved => {
            let spec = cfg.model.with_seed(seeds.models);
            let fitness = CvFitness::new(
                &train,
                &gi,
                spec.clone(),
                cfg.metric_pair,
                cfg.ga.cv_folds,
                seeds.folds,
            )?;
            let ga = GaConfig {
                ind_size: gi.n_slots(),
                seed: seeds.search,
                ..cfg.ga.clone()
            };
            let archive = run_ga(ga, &fitness)?;
            // A genome whose weights cannot train a model scores worst.
            let pts: Vec<EvaluatedPoint> = archive
                .par_iter()
                .map(|e| {
                    expand_slots(&e.genome, train.target(), &gi)
                        .map_err(HarnessError::from)
                        .and_then(|w| fit_and_score(&spec, cfg.metric_pair, &train, &w, &test))
                        .unwrap_or(EvaluatedPoint::WORST)
                })
                .collect();
            let fits = fitness.fit_count() + archive.len();
            (pts, fits, Some(archive))
        }
    };

    let evaluations = points.len();
    if evaluations != cfg.evaluation_budget {
        return Err(HarnessError::Runtime(format!(
            "replicate {index} made {evaluations} evaluations, budget is {}",
            cfg.evaluation_budget
        )));
    }
    let mins: Vec<MinPoint> = points.iter().copied().map(MinPoint::from).collect();
    let front = pareto_front(&mins)?;
    let hypervolume = hypervolume_2d(&front, MinPoint::REFERENCE);
    info!(
        "{} {} {} replicate {index}: hypervolume {hypervolume:.4}",
        cfg.dataset_name, cfg.metric_pair, cfg.method
    );
    Ok(ReplicateResult {
        index,
        seeds,
        evaluations,
        model_fits,
        points,
        front,
        hypervolume,
        archive,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs every replicate of `cfg` on an already loaded dataset.
pub fn run_experiment_on(cfg: &ExperimentConfig, ds: &Dataset) -> Result<RunResult> {
    cfg.validate()?;
    let replicates = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| run_replicate(cfg, ds, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunResult {
        config: cfg.clone(),
        replicates,
    })
}

/// Loads the configured dataset and runs every replicate.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let ds = cfg.load_dataset()?;
    run_experiment_on(cfg, &ds)
}
