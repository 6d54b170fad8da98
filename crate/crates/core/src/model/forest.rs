use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ModelError, Result};
use crate::dataset::FeatureMatrix;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// A depth of 0 grows single-leaf trees.
    pub max_depth: usize,
    /// Minimum weight per leaf, in units of the mean training-row weight.
    pub min_leaf_weight: f64,
    /// Fraction of columns tried at each split; `None` tries `sqrt(columns)`.
    pub features_per_split_fraction: Option<f64>,
    /// Grow each tree on a uniform bootstrap sample of rows.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 8,
            min_leaf_weight: 1.0,
            features_per_split_fraction: None,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(ModelError::InvalidHyperparameter(
                "n_trees must be positive".into(),
            ));
        }
        if !(self.min_leaf_weight >= 0.0 && self.min_leaf_weight.is_finite()) {
            return Err(ModelError::InvalidHyperparameter(format!(
                "min_leaf_weight {} must be non-negative",
                self.min_leaf_weight
            )));
        }
        if let Some(f) = self.features_per_split_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(ModelError::InvalidHyperparameter(format!(
                    "features_per_split_fraction {f} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }

    fn features_per_split(&self, n_cols: usize) -> usize {
        let m = match self.features_per_split_fraction {
            Some(f) => (f * n_cols as f64).round() as usize,
            None => (n_cols as f64).sqrt() as usize,
        };
        m.clamp(1, n_cols)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn score(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }
}

/// Random forest of CART trees split on weighted Gini impurity. Each leaf
/// stores the weighted fraction of class-1 rows that reach it.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedForest {
    trees: Vec<Tree>,
    n_features: usize,
}

struct Grower<'a, R> {
    x: &'a FeatureMatrix,
    y: &'a [u8],
    params: &'a ForestParams,
    n_try: usize,
    rng: R,
    nodes: Vec<Node>,
}

#[inline]
fn gini_mass(w0: f64, w1: f64) -> f64 {
    // total * gini = total - (w0^2 + w1^2) / total
    let t = w0 + w1;
    if t <= 0.0 {
        0.0
    } else {
        t - (w0 * w0 + w1 * w1) / t
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

impl<R: Rng> Grower<'_, R> {
    /// `rows` pairs row indices with their in-tree weight.
    fn grow(&mut self, rows: &mut [(usize, f64)], depth: usize, inherited: f64) -> usize {
        let (w0, w1) = rows.iter().fold((0.0, 0.0), |(a, b), &(r, w)| {
            if self.y[r] == 1 {
                (a, b + w)
            } else {
                (a + w, b)
            }
        });
        let total = w0 + w1;
        let value = if total > 0.0 { w1 / total } else { inherited };
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(value));

        if depth >= self.params.max_depth || w0 <= 0.0 || w1 <= 0.0 {
            return id;
        }
        let Some(best) = self.best_split(rows, w0, w1) else {
            return id;
        };
        let mid = partition(rows, |&(r, _)| {
            self.x.get(r, best.feature) <= best.threshold
        });
        let (left_rows, right_rows) = rows.split_at_mut(mid);
        let left = self.grow(left_rows, depth + 1, value);
        let right = self.grow(right_rows, depth + 1, value);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, rows: &mut [(usize, f64)], w0: f64, w1: f64) -> Option<Candidate> {
        let parent = gini_mass(w0, w1);
        let min_leaf = self.params.min_leaf_weight;
        let features = index::sample(&mut self.rng, self.x.n_cols(), self.n_try);
        let mut best: Option<Candidate> = None;
        for feature in features.iter() {
            rows.sort_by(|a, b| {
                self.x
                    .get(a.0, feature)
                    .total_cmp(&self.x.get(b.0, feature))
                    .then(a.0.cmp(&b.0))
            });
            let (mut l0, mut l1) = (0.0, 0.0);
            for i in 0..rows.len() - 1 {
                let (r, w) = rows[i];
                if self.y[r] == 1 {
                    l1 += w;
                } else {
                    l0 += w;
                }
                let here = self.x.get(r, feature);
                let next = self.x.get(rows[i + 1].0, feature);
                if here == next {
                    continue;
                }
                let (r0, r1) = (w0 - l0, w1 - l1);
                let (lw, rw) = (l0 + l1, r0 + r1);
                if lw <= 0.0 || rw <= 0.0 || lw < min_leaf || rw < min_leaf {
                    continue;
                }
                let decrease = parent - gini_mass(l0, l1) - gini_mass(r0, r1);
                if decrease > 1e-12 && best.as_ref().is_none_or(|b| decrease > b.decrease) {
                    let mut threshold = here + (next - here) / 2.0;
                    if threshold >= next {
                        threshold = here;
                    }
                    best = Some(Candidate {
                        feature,
                        threshold,
                        decrease,
                    });
                }
            }
        }
        best
    }
}

/// Moves elements satisfying `pred` to the front, returning their count.
fn partition<T>(items: &mut [T], pred: impl Fn(&T) -> bool) -> usize {
    let mut front = 0;
    for i in 0..items.len() {
        if pred(&items[i]) {
            items.swap(front, i);
            front += 1;
        }
    }
    front
}

impl WeightedForest {
    pub(crate) fn fit(
        p: &ForestParams,
        seed: u64,
        x: &FeatureMatrix,
        y: &[u8],
        weights: &[f64],
    ) -> Self {
        let n = y.len();
        // Mean weight 1 makes min_leaf_weight independent of weight scale.
        let total: f64 = weights.iter().sum();
        let unit: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let n_try = p.features_per_split(x.n_cols());

        let trees = (0..p.n_trees)
            .map(|t| {
                let mut rng = seed::rng(seed::derive(seed, t as u64));
                let mut counts = vec![0u32; n];
                if p.bootstrap {
                    for _ in 0..n {
                        counts[rng.random_range(0..n)] += 1;
                    }
                } else {
                    counts.iter_mut().for_each(|c| *c = 1);
                }
                let mut rows: Vec<(usize, f64)> = counts
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(r, &c)| (r, c as f64 * unit[r]))
                    .collect();
                let mut grower = Grower {
                    x,
                    y,
                    params: p,
                    n_try,
                    rng,
                    nodes: Vec::new(),
                };
                grower.grow(&mut rows, 0, 0.5);
                Tree {
                    nodes: grower.nodes,
                }
            })
            .collect();
        Self {
            trees,
            n_features: x.n_cols(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.score(row)).sum::<f64>() / self.trees.len() as f64
    }

    /// Every leaf value across the forest.
    pub fn leaf_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.trees.iter().flat_map(|t| {
            t.nodes.iter().filter_map(|n| match n {
                Node::Leaf(v) => Some(*v),
                Node::Split { .. } => None,
            })
        })
    }
}
