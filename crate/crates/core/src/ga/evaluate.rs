//! Cross-validated fitness of slot-weight genomes.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::dataset::{kfold_indices, Dataset, DatasetError, FeatureMatrix, GroupIndex};
use crate::metrics::{score_pair, EvaluatedPoint, MetricPair};
use crate::model::{fit, ModelSpec};
use crate::reweight::expand_slots;

/// Anything that maps a genome to a (predictive, fairness) point.
///
/// Implementations must be pure: the same genome always gives the same point,
/// whatever thread evaluates it.
pub trait Fitness: Sync {
    fn evaluate(&self, genome: &[f64]) -> EvaluatedPoint;
}

impl<F> Fitness for F
where
    F: Fn(&[f64]) -> EvaluatedPoint + Sync,
{
    fn evaluate(&self, genome: &[f64]) -> EvaluatedPoint {
        self(genome)
    }
}

struct PreparedFold {
    train_rows: Vec<usize>,
    x_train: FeatureMatrix,
    y_train: Vec<u8>,
    x_val: FeatureMatrix,
    y_val: Vec<u8>,
    groups_val: Vec<usize>,
}

/// Mean validation score over a fixed k-fold partition of the training data.
///
/// A genome is expanded to row weights, a model is fitted on each fold's
/// training part and scored on its validation part. Folds whose fit or
/// scoring fails are left out of the mean; if every fold fails the genome
/// gets [`EvaluatedPoint::WORST`].
pub struct CvFitness {
    spec: ModelSpec,
    pair: MetricPair,
    target: Vec<u8>,
    gi: GroupIndex,
    folds: Vec<PreparedFold>,
    fits: AtomicUsize,
}

impl CvFitness {
    /// Partitions `train` into `k` stratified folds with `fold_seed`. `gi`
    /// must index the rows of `train`.
    pub fn new(
        train: &Dataset,
        gi: &GroupIndex,
        spec: ModelSpec,
        pair: MetricPair,
        k: usize,
        fold_seed: u64,
    ) -> Result<Self, DatasetError> {
        if gi.group_of_row().len() != train.n_rows() {
            return Err(DatasetError::Shape(format!(
                "group index covers {} rows, dataset has {}",
                gi.group_of_row().len(),
                train.n_rows()
            )));
        }
        let groups = gi.group_of_row();
        let folds = kfold_indices(train, k, fold_seed)?
            .into_iter()
            .map(|f| PreparedFold {
                x_train: train.features().select_rows(&f.train),
                y_train: f.train.iter().map(|&r| train.target()[r]).collect(),
                x_val: train.features().select_rows(&f.validation),
                y_val: f.validation.iter().map(|&r| train.target()[r]).collect(),
                groups_val: f.validation.iter().map(|&r| groups[r]).collect(),
                train_rows: f.train,
            })
            .collect();
        Ok(Self {
            spec,
            pair,
            target: train.target().to_vec(),
            gi: gi.clone(),
            folds,
            fits: AtomicUsize::new(0),
        })
    }

    pub fn n_folds(&self) -> usize {
        self.folds.len()
    }

    /// Model fits performed so far, across all threads.
    pub fn fit_count(&self) -> usize {
        self.fits.load(Ordering::Relaxed)
    }

    /// Per-fold scores of a slot vector; `None` marks a failed fold.
    pub fn fold_scores(&self, slots: &[f64]) -> Vec<Option<EvaluatedPoint>> {
        let Ok(row_weights) = expand_slots(slots, &self.target, &self.gi) else {
            return vec![None; self.folds.len()];
        };
        self.folds
            .iter()
            .map(|fold| {
                let w: Vec<f64> = fold.train_rows.iter().map(|&r| row_weights[r]).collect();
                self.fits.fetch_add(1, Ordering::Relaxed);
                let model = fit(&self.spec, &fold.x_train, &fold.y_train, &w).ok()?;
                let scores = model.predict_scores(&fold.x_val).ok()?;
                score_pair(
                    self.pair,
                    &fold.y_val,
                    &scores,
                    &fold.groups_val,
                    self.gi.n_groups(),
                )
                .ok()
            })
            .collect()
    }

    /// Mean over the folds that succeeded.
    pub fn evaluate_weights(&self, slots: &[f64]) -> EvaluatedPoint {
        let ok: Vec<EvaluatedPoint> = self.fold_scores(slots).into_iter().flatten().collect();
        if ok.is_empty() {
            return EvaluatedPoint::WORST;
        }
        let n = ok.len() as f64;
        EvaluatedPoint {
            predictive: ok.iter().map(|p| p.predictive).sum::<f64>() / n,
            fairness: ok.iter().map(|p| p.fairness).sum::<f64>() / n,
        }
    }
}

impl Fitness for CvFitness {
    fn evaluate(&self, genome: &[f64]) -> EvaluatedPoint {
        self.evaluate_weights(genome)
    }
}
