use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use evoweights::dataset::{build_group_index, load_csv, DatasetSchema};
use evoweights::harness::{
    collect_tree, compare, compare_tree, emit_plots, load_run, run_experiment, write_run,
    ExperimentConfig, HarnessError, RunSummary,
};
use evoweights::metrics::{FairnessMetric, MetricPair, PredictiveMetric};
use evoweights::model::ModelSpec;
use evoweights::reweight::{deterministic_weights, equal_weights};
use evoweights::stats::{render_table, Method, TableEntry, DEFAULT_ALPHA};

#[derive(Parser)]
#[command(
    name = "evoweights",
    version,
    about = "Evolved sample weights for fair classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print deterministic or equal slot weights for a dataset as JSON.
    Weights {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "dw")]
        method: Method,
    },
    /// Run one method on one dataset under one metric pair.
    Run(RunArgs),
    /// Test the three methods' hypervolumes against each other.
    Compare(CompareArgs),
    /// Write hypervolume plot data (CSV and SVG).
    Report(CompareArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// JSON schema naming the target, favorable label and sensitive columns.
    #[arg(long)]
    schema: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    method: Method,
    #[arg(long, default_value = "acc")]
    predictive: PredictiveMetric,
    #[arg(long, default_value = "dpd")]
    fairness: FairnessMetric,
    #[arg(long, default_value_t = 20)]
    replicates: usize,
    #[arg(long, default_value_t = 1000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.25)]
    test_fraction: f64,
    /// Undersample the majority class of each training split.
    #[arg(long)]
    undersample: bool,
    #[arg(long, default_value = "logistic")]
    model: ModelSpec,
    /// Dataset label used in result paths; defaults to the data file stem.
    #[arg(long)]
    name: Option<String>,
    /// Results root; the run lands in `<out>/<dataset>/<pair>/<method>`.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Run directories of the methods to compare.
    dirs: Vec<PathBuf>,
    /// Results root: process every dataset and metric pair found under it.
    #[arg(long, conflicts_with = "dirs")]
    root: Option<PathBuf>,
    /// Directory for the written files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
}

fn config_error(e: impl ToString) -> HarnessError {
    HarnessError::Config(e.to_string())
}

fn read_schema(path: &Path) -> Result<DatasetSchema, HarnessError> {
    DatasetSchema::from_json_file(path)
        .map_err(|e| config_error(format!("{}: {e}", path.display())))
}

fn weights(data: &DataArgs, method: Method) -> anyhow::Result<()> {
    let schema = read_schema(&data.schema)?;
    let ds = load_csv(&data.data, &schema).map_err(HarnessError::from)?;
    let gi = build_group_index(&ds);
    let sw = match method {
        Method::Equal => equal_weights(&gi),
        Method::Deterministic => deterministic_weights(&ds, &gi),
        Method::Evolved => {
            return Err(config_error("evolved weights come from `run --method ew`").into())
        }
    };
    println!("{}", sw.to_json(&gi).map_err(HarnessError::from)?);
    Ok(())
}

fn run(args: &RunArgs) -> anyhow::Result<()> {
    let schema = read_schema(&args.data.schema)?;
    let name = match &args.name {
        Some(n) => n.clone(),
        None => args
            .data
            .data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| config_error("cannot derive a dataset name from --data; pass --name"))?,
    };
    let mut cfg = ExperimentConfig::new(
        name,
        &args.data.data,
        schema,
        args.method,
        MetricPair::new(args.predictive, args.fairness),
    )
    .with_budget(args.budget);
    cfg.replicates = args.replicates;
    cfg.master_seed = args.seed;
    cfg.test_fraction = args.test_fraction;
    cfg.undersample_train = args.undersample;
    cfg.model = args.model.clone();
    cfg.validate()?;
    let result = run_experiment(&cfg)?;
    let dir = write_run(&args.out, &result)?;
    println!("{}", dir.display());
    Ok(())
}

fn run_sets(args: &CompareArgs) -> Result<Vec<Vec<RunSummary>>, HarnessError> {
    match &args.root {
        Some(root) => collect_tree(root),
        None if args.dirs.is_empty() => Err(config_error("give run directories or --root")),
        None => Ok(vec![args
            .dirs
            .iter()
            .map(|d| load_run(d))
            .collect::<Result<_, _>>()?]),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    std::fs::write(path, contents).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn compare_cmd(args: &CompareArgs) -> anyhow::Result<()> {
    let entries: Vec<TableEntry> = match &args.root {
        Some(root) => compare_tree(root, args.alpha)?,
        None => {
            let runs = run_sets(args)?.remove(0);
            vec![TableEntry {
                dataset: runs[0].config.dataset_name.clone(),
                pair: runs[0].config.metric_pair,
                report: compare(&runs, args.alpha)?,
            }]
        }
    };
    let table = render_table(&entries);
    print!("{table}");
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out).map_err(|e| HarnessError::Io {
            path: out.clone(),
            source: e,
        })?;
        let json = serde_json::to_string_pretty(&entries).context("serializing the report")?;
        write_file(&out.join("report.json"), &(json + "\n"))?;
        write_file(&out.join("table.txt"), &table)?;
    }
    Ok(())
}

fn report(args: &CompareArgs) -> anyhow::Result<()> {
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("plots"));
    for path in emit_plots(&run_sets(args)?, &out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Weights { data, method } => weights(data, *method),
        Command::Run(args) => run(args),
        Command::Compare(args) => compare_cmd(args),
        Command::Report(args) => report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<HarnessError>()
                .map_or(4, HarnessError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
