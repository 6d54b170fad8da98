//! Two-objective genetic search over slot-weight genomes (NSGA-II style).
//!
//! The loop: initialize and evaluate a population, rank it, then repeatedly
//! breed `pop_size` offspring by binary tournament, uniform crossover and
//! Gaussian mutation, evaluate them, rank parents and offspring together
//! and keep the best `pop_size`. Every evaluated genome goes to the archive.
//! The initial population counts against the evaluation budget.

mod archive;
mod evaluate;
mod operators;
mod sorting;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::EvaluatedPoint;
use crate::seed;

pub use archive::{read_archive_jsonl, write_archive_jsonl, ArchiveEntry};
pub use evaluate::{CvFitness, Fitness};
pub use operators::{crossover, initialize_pop, mutate, survival_selection, tournament_select};
pub use sorting::{crowding_distance, dominates, fast_nondominated_sort, fronts};

#[derive(Debug, Error)]
pub enum GaError {
    #[error("invalid GA configuration: {0}")]
    InvalidConfig(String),
    #[error("genome lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("archive io: {0}")]
    Io(#[from] std::io::Error),
    #[error("archive json at line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid archive record at line {0}: {1}")]
    InvalidRecord(usize, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub pop_size: usize,
    /// Generations including the initial population.
    pub max_gen: usize,
    /// Genome length, two slots per sensitive group.
    pub ind_size: usize,
    pub crossover_prob: f64,
    pub per_gene_mutation_prob: f64,
    pub mutation_sigma: f64,
    pub genome_bounds: (f64, f64),
    pub cv_folds: usize,
    pub seed: u64,
    /// Total genome evaluations; must equal `pop_size * max_gen`.
    pub evaluation_budget: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            pop_size: 20,
            max_gen: 50,
            ind_size: 4,
            crossover_prob: 0.8,
            per_gene_mutation_prob: 0.1,
            mutation_sigma: 1.0,
            genome_bounds: (0.0, 2.0),
            cv_folds: 10,
            seed: 0,
            evaluation_budget: 1000,
        }
    }
}

impl GaConfig {
    /// Default operators with `pop_size` and a total `budget`.
    pub fn with_budget(pop_size: usize, budget: usize, ind_size: usize, seed: u64) -> Self {
        Self {
            pop_size,
            max_gen: budget.checked_div(pop_size).unwrap_or(0),
            ind_size,
            seed,
            evaluation_budget: budget,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GaError> {
        let bad = |m: String| Err(GaError::InvalidConfig(m));
        if self.pop_size == 0 || self.max_gen == 0 || self.ind_size == 0 {
            return bad("pop_size, max_gen and ind_size must be positive".into());
        }
        if self.pop_size * self.max_gen != self.evaluation_budget {
            return bad(format!(
                "evaluation_budget {} != pop_size {} x max_gen {}",
                self.evaluation_budget, self.pop_size, self.max_gen
            ));
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("per_gene_mutation_prob", self.per_gene_mutation_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        if !(self.mutation_sigma >= 0.0 && self.mutation_sigma.is_finite()) {
            return bad(format!("mutation_sigma {} invalid", self.mutation_sigma));
        }
        let (lo, hi) = self.genome_bounds;
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
            return bad(format!("genome bounds ({lo}, {hi}) invalid"));
        }
        if self.cv_folds < 2 {
            return bad("cv_folds must be at least 2".into());
        }
        Ok(())
    }
}

/// An evaluated genome with its standing in the current population.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub id: u64,
    pub generation: u32,
    pub genome: Vec<f64>,
    /// Mean cross-validated scores.
    pub fitness: EvaluatedPoint,
    pub rank: usize,
    pub crowding: f64,
}

/// Assigns Pareto rank and within-front crowding distance to every member.
pub fn nondominated_scores(pop: &mut [Individual]) {
    let points: Vec<EvaluatedPoint> = pop.iter().map(|i| i.fitness).collect();
    let ranks = fast_nondominated_sort(&points);
    for front in fronts(&ranks) {
        let members: Vec<EvaluatedPoint> = front.iter().map(|&i| points[i]).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&members)) {
            pop[i].rank = ranks[i];
            pop[i].crowding = d;
        }
    }
}

/// A running search. Construction evaluates the initial population; each
/// [`GeneticSearch::step`] breeds and evaluates one offspring generation.
pub struct GeneticSearch<'a, F: Fitness + ?Sized> {
    cfg: GaConfig,
    fitness: &'a F,
    population: Vec<Individual>,
    archive: Vec<ArchiveEntry>,
    generation: u32,
    next_id: u64,
}

impl<'a, F: Fitness + ?Sized> GeneticSearch<'a, F> {
    pub fn new(cfg: GaConfig, fitness: &'a F) -> Result<Self, GaError> {
        cfg.validate()?;
        let mut rng = seed::rng(seed::derive_label(cfg.seed, "init"));
        let genomes = initialize_pop(&cfg, &mut rng);
        let mut search = Self {
            cfg,
            fitness,
            population: Vec::new(),
            archive: Vec::new(),
            generation: 0,
            next_id: 0,
        };
        search.population = search.evaluate(genomes);
        nondominated_scores(&mut search.population);
        Ok(search)
    }

    fn evaluate(&mut self, genomes: Vec<Vec<f64>>) -> Vec<Individual> {
        let fitness = self.fitness;
        let scores: Vec<EvaluatedPoint> = genomes.par_iter().map(|g| fitness.evaluate(g)).collect();
        let out: Vec<Individual> = genomes
            .into_iter()
            .zip(scores)
            .map(|(genome, fitness)| {
                let id = self.next_id;
                self.next_id += 1;
                Individual {
                    id,
                    generation: self.generation,
                    genome,
                    fitness,
                    rank: 0,
                    crowding: 0.0,
                }
            })
            .collect();
        self.archive.extend(out.iter().map(ArchiveEntry::from));
        out
    }

    pub fn remaining_budget(&self) -> usize {
        self.cfg.evaluation_budget - self.archive.len()
    }

    /// Runs one generation. Returns false, doing nothing, once the budget is spent.
    pub fn step(&mut self) -> bool {
        let remaining = self.remaining_budget();
        if remaining == 0 {
            return false;
        }
        self.generation += 1;
        let mut rng = seed::rng(seed::derive(
            seed::derive_label(self.cfg.seed, "generation"),
            self.generation as u64,
        ));
        let n_children = self.cfg.pop_size.min(remaining);
        let children: Vec<Vec<f64>> = (0..n_children)
            .map(|_| {
                let a = tournament_select(&self.population, &mut rng);
                let b = tournament_select(&self.population, &mut rng);
                let mut child = crossover(
                    &self.population[a].genome,
                    &self.population[b].genome,
                    &mut rng,
                    self.cfg.crossover_prob,
                )
                .expect("population genomes share one length");
                mutate(
                    &mut child,
                    &mut rng,
                    self.cfg.per_gene_mutation_prob,
                    self.cfg.mutation_sigma,
                    self.cfg.genome_bounds,
                );
                child
            })
            .collect();
        let offspring = self.evaluate(children);

        let mut combined = std::mem::take(&mut self.population);
        combined.extend(offspring);
        nondominated_scores(&mut combined);
        let keep = survival_selection(&combined, self.cfg.pop_size);
        self.population = keep.into_iter().map(|i| combined[i].clone()).collect();
        true
    }

    pub fn population(&self) -> &[Individual] {
        &self.population
    }

    pub fn archive(&self) -> &[ArchiveEntry] {
        &self.archive
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn into_archive(self) -> Vec<ArchiveEntry> {
        self.archive
    }
}

/// Runs the search until the evaluation budget is spent and returns every
/// evaluated genome.
pub fn run_ga<F: Fitness + ?Sized>(
    cfg: GaConfig,
    fitness: &F,
) -> Result<Vec<ArchiveEntry>, GaError> {
    let mut search = GeneticSearch::new(cfg, fitness)?;
    while search.step() {}
    Ok(search.into_archive())
}

/// Writes an archive to `path` as JSON lines.
pub fn save_archive(path: impl AsRef<Path>, archive: &[ArchiveEntry]) -> Result<(), GaError> {
    let file = std::fs::File::create(path)?;
    write_archive_jsonl(std::io::BufWriter::new(file), archive)
}
