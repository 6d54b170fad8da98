//! Weighted binary classifiers.
//!
//! Both models honor per-row sample weights and are bit-reproducible given
//! their [`ModelSpec`] and training data.

mod forest;
mod logistic;

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::FeatureMatrix;

pub use forest::{ForestParams, WeightedForest};
pub use logistic::{weighted_log_loss, LogisticParams, WeightedLogistic};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("training labels contain a single class")]
    DegenerateLabels,
    #[error("negative sample weight at row {0}")]
    NegativeWeight(usize),
    #[error("sample weights sum to zero over class {0}")]
    AllZeroWeights(u8),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    WeightedLogistic(LogisticParams),
    WeightedForest(ForestParams),
}

/// Which model to train, with what hyperparameters and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub seed: u64,
}

impl ModelSpec {
    pub fn logistic() -> Self {
        Self {
            kind: ModelKind::WeightedLogistic(LogisticParams::default()),
            seed: 0,
        }
    }

    pub fn forest() -> Self {
        Self {
            kind: ModelKind::WeightedForest(ForestParams::default()),
            seed: 0,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            kind: self.kind.clone(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ModelKind::WeightedLogistic(p) => p.validate(),
            ModelKind::WeightedForest(p) => p.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModelKind::WeightedLogistic(_) => "logistic",
            ModelKind::WeightedForest(_) => "forest",
        }
    }
}

impl FromStr for ModelSpec {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "logistic" | "lr" => Ok(Self::logistic()),
            "forest" | "rf" => Ok(Self::forest()),
            other => Err(format!("unknown model `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Logistic(WeightedLogistic),
    Forest(WeightedForest),
}

impl FittedModel {
    /// Probability-like scores in `[0, 1]`, one per row.
    pub fn predict_scores(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        let expected = match self {
            Self::Logistic(m) => m.n_features(),
            Self::Forest(m) => m.n_features(),
        };
        if x.n_cols() != expected {
            return Err(ModelError::ShapeMismatch(format!(
                "model trained on {expected} columns, got {}",
                x.n_cols()
            )));
        }
        Ok(match self {
            Self::Logistic(m) => x.rows().map(|r| m.score(r)).collect(),
            Self::Forest(m) => x.rows().map(|r| m.score(r)).collect(),
        })
    }

    pub fn predict_labels(&self, x: &FeatureMatrix) -> Result<Vec<u8>> {
        Ok(crate::metrics::threshold(&self.predict_scores(x)?))
    }
}

fn check_inputs(x: &FeatureMatrix, y: &[u8], weights: &[f64]) -> Result<()> {
    if x.n_cols() == 0 {
        return Err(ModelError::ShapeMismatch("no feature columns".into()));
    }
    if x.n_rows() != y.len() {
        return Err(ModelError::ShapeMismatch(format!(
            "{} feature rows for {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    if weights.len() != y.len() {
        return Err(ModelError::ShapeMismatch(format!(
            "{} weights for {} labels",
            weights.len(),
            y.len()
        )));
    }
    if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
        return Err(ModelError::NegativeWeight(i));
    }
    let mut seen = [false; 2];
    let mut mass = [0.0f64; 2];
    for (&t, &w) in y.iter().zip(weights) {
        seen[t as usize] = true;
        mass[t as usize] += w;
    }
    if !(seen[0] && seen[1]) {
        return Err(ModelError::DegenerateLabels);
    }
    for class in 0..2u8 {
        if mass[class as usize] <= 0.0 {
            return Err(ModelError::AllZeroWeights(class));
        }
    }
    Ok(())
}

/// Trains the model described by `spec` on `(x, y)` with per-row `weights`.
pub fn fit(spec: &ModelSpec, x: &FeatureMatrix, y: &[u8], weights: &[f64]) -> Result<FittedModel> {
    spec.validate()?;
    check_inputs(x, y, weights)?;
    Ok(match &spec.kind {
        ModelKind::WeightedLogistic(p) => {
            FittedModel::Logistic(WeightedLogistic::fit(p, x, y, weights))
        }
        ModelKind::WeightedForest(p) => {
            FittedModel::Forest(WeightedForest::fit(p, spec.seed, x, y, weights))
        }
    })
}
