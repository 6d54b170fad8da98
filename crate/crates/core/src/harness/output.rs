//! Result directories: writing, reading back, and comparing methods.
//!
//! A run directory holds `config.json`, `manifest.json`,
//! `hypervolume.csv`, `timing.csv`, `fronts/`, `points/` and, for the
//! evolved method, `archive/`. Everything except `timing.csv` is a pure
//! function of the configuration.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, HarnessError, Result, RunResult};
use crate::ga::write_archive_jsonl;
use crate::pareto::{write_front_csv, FrontRow};
use crate::stats::{compare_methods, HypervolumeTable, Method, StatReport, TableEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestReplicate {
    pub index: usize,
    pub replicate_seed: u64,
    pub split_seed: u64,
    pub evaluations: usize,
    pub model_fits: usize,
    pub front_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub package: String,
    pub version: String,
    pub dataset: String,
    pub method: Method,
    pub metric_pair: String,
    pub model: String,
    pub master_seed: u64,
    pub evaluation_budget: usize,
    pub replicates: Vec<ManifestReplicate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypervolumeRow {
    pub replicate: usize,
    pub replicate_seed: u64,
    pub hypervolume: f64,
}

#[derive(Debug, Serialize)]
struct PointRow {
    replicate: usize,
    evaluation: usize,
    predictive: f64,
    fairness: f64,
}

#[derive(Debug, Serialize)]
struct TimingRow {
    replicate: usize,
    seconds: f64,
}

/// What `compare` and `report` need from a run directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub config: ExperimentConfig,
    pub manifest: Manifest,
    pub hypervolumes: Vec<HypervolumeRow>,
}

/// `<root>/<dataset>/<metric pair>/<method>`.
pub fn run_dir(root: &Path, cfg: &ExperimentConfig) -> PathBuf {
    root.join(&cfg.dataset_name)
        .join(cfg.metric_pair.slug())
        .join(cfg.method.slug())
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| HarnessError::io(path, e))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row)
            .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| HarnessError::io(path, e))
}

fn manifest_of(run: &RunResult) -> Manifest {
    let cfg = &run.config;
    Manifest {
        package: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        dataset: cfg.dataset_name.clone(),
        method: cfg.method,
        metric_pair: cfg.metric_pair.to_string(),
        model: cfg.model.name().into(),
        master_seed: cfg.master_seed,
        evaluation_budget: cfg.evaluation_budget,
        replicates: run
            .replicates
            .iter()
            .map(|r| ManifestReplicate {
                index: r.index,
                replicate_seed: r.seeds.replicate,
                split_seed: r.seeds.split,
                evaluations: r.evaluations,
                model_fits: r.model_fits,
                front_size: r.front.len(),
            })
            .collect(),
    }
}

fn write_contents(dir: &Path, run: &RunResult) -> Result<()> {
    let method = run.config.method.to_string();
    write_json(&dir.join("config.json"), &run.config)?;
    write_json(&dir.join("manifest.json"), &manifest_of(run))?;
    let hv: Vec<HypervolumeRow> = run
        .replicates
        .iter()
        .map(|r| HypervolumeRow {
            replicate: r.index,
            replicate_seed: r.seeds.replicate,
            hypervolume: r.hypervolume,
        })
        .collect();
    write_csv(&dir.join("hypervolume.csv"), &hv)?;
    let timing: Vec<TimingRow> = run
        .replicates
        .iter()
        .map(|r| TimingRow {
            replicate: r.index,
            seconds: r.seconds,
        })
        .collect();
    write_csv(&dir.join("timing.csv"), &timing)?;

    for sub in ["fronts", "points"] {
        mkdir(&dir.join(sub))?;
    }
    for r in &run.replicates {
        let name = format!("replicate_{:03}", r.index);
        let front: Vec<FrontRow> = r
            .front
            .points()
            .iter()
            .map(|p| FrontRow {
                replicate: r.index,
                method: method.clone(),
                e: p.e,
                f: p.f,
            })
            .collect();
        let path = dir.join("fronts").join(format!("{name}.csv"));
        write_front_csv(create(&path)?, &front)
            .map_err(|e| HarnessError::Runtime(format!("{}: {e}", path.display())))?;

        let points: Vec<PointRow> = r
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| PointRow {
                replicate: r.index,
                evaluation: i,
                predictive: p.predictive,
                fairness: p.fairness,
            })
            .collect();
        write_csv(&dir.join("points").join(format!("{name}.csv")), &points)?;

        if let Some(archive) = &r.archive {
            mkdir(&dir.join("archive"))?;
            let path = dir.join("archive").join(format!("{name}.jsonl"));
            write_archive_jsonl(create(&path)?, archive)?;
        }
    }
    Ok(())
}

/// Writes `run` under `root` and returns the run directory. Files are first
/// written to a staging directory that replaces any previous result in one
/// rename, so a failure leaves no partial output.
pub fn write_run(root: &Path, run: &RunResult) -> Result<PathBuf> {
    let dir = run_dir(root, &run.config);
    let parent = dir.parent().expect("run dir has a parent");
    mkdir(parent)?;
    let staging = parent.join(format!(
        ".{}.partial-{}",
        run.config.method.slug(),
        std::process::id()
    ));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| HarnessError::io(&staging, e))?;
    }
    mkdir(&staging)?;
    if let Err(e) = write_contents(&staging, run) {
        let _ = fs::remove_dir_all(&staging);
        return Err(e);
    }
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    }
    fs::rename(&staging, &dir).map_err(|e| HarnessError::io(&dir, e))?;
    Ok(dir)
}

fn malformed(path: &Path, message: impl ToString) -> HarnessError {
    HarnessError::ResultFile {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| malformed(path, e))
}

/// Parses a `hypervolume.csv` body.
pub fn read_hypervolume_csv<R: std::io::Read>(
    reader: R,
) -> std::result::Result<Vec<HypervolumeRow>, String> {
    let rows: Vec<HypervolumeRow> = csv::Reader::from_reader(reader)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| e.to_string())?;
    if let Some(r) = rows
        .iter()
        .find(|r| !(r.hypervolume.is_finite() && (0.0..=1.0).contains(&r.hypervolume)))
    {
        return Err(format!("hypervolume {} outside [0, 1]", r.hypervolume));
    }
    Ok(rows)
}

/// Reads the parts of a run directory needed for comparison.
pub fn load_run(dir: &Path) -> Result<RunSummary> {
    let config: ExperimentConfig = read_json(&dir.join("config.json"))?;
    let manifest: Manifest = read_json(&dir.join("manifest.json"))?;
    let hv_path = dir.join("hypervolume.csv");
    let file = fs::File::open(&hv_path).map_err(|e| HarnessError::io(&hv_path, e))?;
    let hypervolumes =
        read_hypervolume_csv(BufReader::new(file)).map_err(|m| malformed(&hv_path, m))?;
    if hypervolumes.len() != config.replicates || manifest.replicates.len() != config.replicates {
        return Err(malformed(
            &hv_path,
            format!(
                "{} rows for {} configured replicates",
                hypervolumes.len(),
                config.replicates
            ),
        ));
    }
    Ok(RunSummary {
        dir: dir.to_path_buf(),
        config,
        manifest,
        hypervolumes,
    })
}

/// Tests the methods of `runs` against each other. All runs must share the
/// dataset, metric pair and replicate seeds.
pub fn compare(runs: &[RunSummary], alpha: f64) -> Result<StatReport> {
    let Some(first) = runs.first() else {
        return Err(HarnessError::Config("nothing to compare".into()));
    };
    for r in runs {
        if r.config.dataset_name != first.config.dataset_name
            || r.config.metric_pair != first.config.metric_pair
        {
            return Err(HarnessError::Config(format!(
                "{} and {} differ in dataset or metric pair",
                first.dir.display(),
                r.dir.display()
            )));
        }
        let seeds = |s: &RunSummary| {
            s.hypervolumes
                .iter()
                .map(|h| (h.replicate, h.replicate_seed))
                .collect::<Vec<_>>()
        };
        if seeds(r) != seeds(first) {
            return Err(HarnessError::SeedMismatch(format!(
                "{} and {}",
                first.dir.display(),
                r.dir.display()
            )));
        }
    }
    let mut ordered: Vec<&RunSummary> = runs.iter().collect();
    ordered.sort_by_key(|r| r.config.method);
    if let Some(w) = ordered
        .windows(2)
        .find(|w| w[0].config.method == w[1].config.method)
    {
        return Err(HarnessError::Config(format!(
            "method {} given twice ({} and {})",
            w[0].config.method,
            w[0].dir.display(),
            w[1].dir.display()
        )));
    }
    let columns = ordered
        .iter()
        .map(|r| {
            (
                r.config.method,
                r.hypervolumes.iter().map(|h| h.hypervolume).collect(),
            )
        })
        .collect();
    Ok(compare_methods(
        &HypervolumeTable::from_columns(columns)?,
        alpha,
    )?)
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))? {
        let path = entry.map_err(|e| HarnessError::io(dir, e))?.path();
        let hidden = path
            .file_name()
            .is_some_and(|n| n.to_string_lossy().starts_with('.'));
        if path.is_dir() && !hidden {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Every complete (dataset, metric pair) set of run directories under a
/// results root, in path order.
pub fn collect_tree(root: &Path) -> Result<Vec<Vec<RunSummary>>> {
    let mut sets = Vec::new();
    for dataset in sorted_subdirs(root)? {
        for pair in sorted_subdirs(&dataset)? {
            let runs = sorted_subdirs(&pair)?
                .into_iter()
                .filter(|d| d.join("config.json").exists())
                .map(|d| load_run(&d))
                .collect::<Result<Vec<_>>>()?;
            if !runs.is_empty() {
                sets.push(runs);
            }
        }
    }
    Ok(sets)
}

/// Compares every (dataset, metric pair) under a results root that has all
/// three methods.
pub fn compare_tree(root: &Path, alpha: f64) -> Result<Vec<TableEntry>> {
    let mut out = Vec::new();
    for runs in collect_tree(root)? {
        if runs.len() != Method::ALL.len() {
            log::warn!(
                "skipping {}: {} of {} methods present",
                runs[0]
                    .dir
                    .parent()
                    .map_or_else(String::new, |p| p.display().to_string()),
                runs.len(),
                Method::ALL.len()
            );
            continue;
        }
        out.push(TableEntry {
            dataset: runs[0].config.dataset_name.clone(),
            pair: runs[0].config.metric_pair,
            report: compare(&runs, alpha)?,
        });
    }
    Ok(out)
}
