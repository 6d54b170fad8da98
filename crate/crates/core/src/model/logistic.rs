use serde::{Deserialize, Serialize};

use super::{ModelError, Result};
use crate::dataset::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub iterations: usize,
    pub l2_penalty: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            iterations: 500,
            l2_penalty: 1e-4,
        }
    }
}

impl LogisticParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::InvalidHyperparameter(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.iterations == 0 {
            return Err(ModelError::InvalidHyperparameter(
                "iterations must be positive".into(),
            ));
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return Err(ModelError::InvalidHyperparameter(format!(
                "l2_penalty {} must be non-negative",
                self.l2_penalty
            )));
        }
        Ok(())
    }
}

/// Logistic regression trained by full-batch gradient descent on the
/// weighted mean log-loss.
///
/// Features are standardized internally with weighted moments, so
/// duplicating a row and doubling its weight train the same model. The
/// model has no randomness; the seed in [`ModelSpec`] is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedLogistic {
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// `[intercept, standardized coefficients..]`.
    coef: Vec<f64>,
}

/// Branch-free logistic function. `exp` overflowing to infinity for very
/// negative `z` still yields the correct limit 0.
#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `log(1 + exp(z))` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[inline]
fn linear(coef: &[f64], row: &[f64]) -> f64 {
    coef[0] + coef[1..].iter().zip(row).map(|(c, v)| c * v).sum::<f64>()
}

/// Weighted mean log-loss on standardized features `z`, plus `l2 / 2 * ||coef[1..]||^2`. `w` must sum to 1.
pub fn weighted_log_loss(coef: &[f64], z: &FeatureMatrix, y: &[u8], w: &[f64], l2: f64) -> f64 {
    let data: f64 = z
        .rows()
        .zip(y)
        .zip(w)
        .map(|((row, &t), &wi)| {
            let m = linear(coef, row);
            // -log p = softplus(-m), -log(1-p) = softplus(m)
            wi * if t == 1 { softplus(-m) } else { softplus(m) }
        })
        .sum();
    data + 0.5 * l2 * coef[1..].iter().map(|c| c * c).sum::<f64>()
}

/// Gradient of [`weighted_log_loss`] with respect to `coef`, written into `grad`.
pub(crate) fn gradient(
    coef: &[f64],
    z: &FeatureMatrix,
    y: &[u8],
    w: &[f64],
    l2: f64,
    grad: &mut [f64],
) {
    grad.iter_mut().for_each(|g| *g = 0.0);
    for ((row, &t), &wi) in z.rows().zip(y).zip(w) {
        let r = wi * (sigmoid(linear(coef, row)) - t as f64);
        grad[0] += r;
        for (g, v) in grad[1..].iter_mut().zip(row) {
            *g += r * v;
        }
    }
    for (g, c) in grad[1..].iter_mut().zip(&coef[1..]) {
        *g += l2 * c;
    }
}

fn standardize(x: &FeatureMatrix, w: &[f64]) -> (Vec<f64>, Vec<f64>, FeatureMatrix) {
    let d = x.n_cols();
    let mut mean = vec![0.0; d];
    for (row, &wi) in x.rows().zip(w) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += wi * v;
        }
    }
    let mut var = vec![0.0; d];
    for (row, &wi) in x.rows().zip(w) {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += wi * (v - m) * (v - m);
        }
    }
    let scale: Vec<f64> = var
        .into_iter()
        .map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 })
        .collect();
    let mut data = Vec::with_capacity(x.n_rows() * d);
    for row in x.rows() {
        data.extend(
            row.iter()
                .zip(&mean)
                .zip(&scale)
                .map(|((v, m), s)| (v - m) / s),
        );
    }
    let z = FeatureMatrix::new(data, d).expect("same shape as input");
    (mean, scale, z)
}

/// Largest eigenvalue of the weighted second-moment matrix of `[1, z]`,
/// by power iteration, inflated by 10% to cover the estimate falling short.
fn curvature_bound(z: &FeatureMatrix, w: &[f64]) -> f64 {
    let d = z.n_cols() + 1;
    let mut m = vec![0.0; d * d];
    let mut xt = vec![1.0; d];
    for (row, &wi) in z.rows().zip(w) {
        xt[1..].copy_from_slice(row);
        for a in 0..d {
            for b in 0..d {
                m[a * d + b] += wi * xt[a] * xt[b];
            }
        }
    }
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut lambda = 0.0;
    for _ in 0..50 {
        let mv: Vec<f64> = (0..d)
            .map(|a| (0..d).map(|b| m[a * d + b] * v[b]).sum())
            .collect();
        let norm = mv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lambda = norm;
        v = mv.into_iter().map(|x| x / norm).collect();
    }
    1.1 * lambda
}

impl WeightedLogistic {
    pub(crate) fn fit(p: &LogisticParams, x: &FeatureMatrix, y: &[u8], weights: &[f64]) -> Self {
        let total: f64 = weights.iter().sum();
        let w: Vec<f64> = weights.iter().map(|v| v / total).collect();
        let (mean, scale, z) = standardize(x, &w);
        // The loss is (lambda / 4 + l2)-smooth; larger steps can oscillate
        // when many features are correlated.
        let smooth = 0.25 * curvature_bound(&z, &w) + p.l2_penalty;
        let step = if smooth > 0.0 {
            p.learning_rate.min(1.0 / smooth)
        } else {
            p.learning_rate
        };
        let mut coef = vec![0.0; x.n_cols() + 1];
        let mut grad = vec![0.0; coef.len()];
        for _ in 0..p.iterations {
            gradient(&coef, &z, y, &w, p.l2_penalty, &mut grad);
            for (c, g) in coef.iter_mut().zip(&grad) {
                *c -= step * g;
            }
        }
        Self { mean, scale, coef }
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    /// Intercept followed by coefficients on standardized features.
    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        let m = self.coef[0]
            + self.coef[1..]
                .iter()
                .zip(row)
                .zip(self.mean.iter().zip(&self.scale))
                .map(|((c, v), (mu, s))| c * (v - mu) / s)
                .sum::<f64>();
        sigmoid(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::toy::separable;
    use crate::model::{fit, FittedModel, ModelSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fitted(x: &FeatureMatrix, y: &[u8], w: &[f64]) -> WeightedLogistic {
        match fit(&ModelSpec::logistic(), x, y, w).unwrap() {
            FittedModel::Logistic(m) => m,
            _ => unreachable!(),
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = rng.random_range(5..30);
            let d = rng.random_range(1..5);
            let z =
                FeatureMatrix::new((0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect(), d)
                    .unwrap();
            let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
            let total: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let coef: Vec<f64> = (0..=d).map(|_| rng.random_range(-1.5..1.5)).collect();
            let l2 = 0.05;

            let mut grad = vec![0.0; d + 1];
            gradient(&coef, &z, &y, &w, l2, &mut grad);
            for k in 0..=d {
                let h = 1e-5;
                let mut up = coef.clone();
                let mut down = coef.clone();
                up[k] += h;
                down[k] -= h;
                let fd = (weighted_log_loss(&up, &z, &y, &w, l2)
                    - weighted_log_loss(&down, &z, &y, &w, l2))
                    / (2.0 * h);
                let rel = (fd - grad[k]).abs() / grad[k].abs().max(1e-3);
                assert!(rel < 1e-5, "component {k}: fd {fd} vs analytic {}", grad[k]);
            }
        }
    }

    #[test]
    fn separable_set_reaches_full_training_accuracy() {
        let (x, y) = separable();
        let m = fitted(&x, &y, &vec![1.0; y.len()]);
        for (row, &t) in x.rows().zip(&y) {
            assert_eq!(m.score(row) >= 0.5, t == 1);
        }
    }

    #[test]
    fn duplicating_a_row_equals_doubling_its_weight() {
        let (x, y) = separable();
        let n = y.len();
        let mut w = vec![1.0; n];
        w[5] = 2.0;
        let doubled = fitted(&x, &y, &w);

        let mut rows: Vec<usize> = (0..n).collect();
        rows.push(5);
        let xd = x.select_rows(&rows);
        let yd: Vec<u8> = rows.iter().map(|&r| y[r]).collect();
        let duplicated = fitted(&xd, &yd, &vec![1.0; n + 1]);

        for (a, b) in doubled.coefficients().iter().zip(duplicated.coefficients()) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn fit_is_bit_reproducible() {
        let (x, y) = separable();
        let w: Vec<f64> = (0..y.len()).map(|i| 0.1 + (i % 7) as f64 * 0.3).collect();
        assert_eq!(fitted(&x, &y, &w), fitted(&x, &y, &w));
    }

    #[test]
    fn many_correlated_features_still_descend() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (n, d) = (200, 40);
        let mut data = Vec::with_capacity(n * d);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let common: f64 = rng.random_range(-1.0..1.0);
            data.extend((0..d).map(|_| common + 0.05 * rng.random_range(-1.0..1.0)));
            y.push(u8::from(common + 0.3 * rng.random_range(-1.0..1.0) > 0.0));
        }
        let x = FeatureMatrix::new(data, d).unwrap();
        let w = vec![1.0 / n as f64; n];
        let (_, _, z) = standardize(&x, &w);
        let loss_after = |iterations: usize| {
            let p = LogisticParams {
                iterations,
                ..LogisticParams::default()
            };
            let m = fitted_with(&p, &x, &y);
            weighted_log_loss(m.coefficients(), &z, &y, &w, p.l2_penalty)
        };
        let losses: Vec<f64> = [1, 5, 25, 125, 500].into_iter().map(loss_after).collect();
        for pair in losses.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "{losses:?}");
        }
        assert!(losses[4] < 0.5 * std::f64::consts::LN_2, "{losses:?}");
    }

    fn fitted_with(p: &LogisticParams, x: &FeatureMatrix, y: &[u8]) -> WeightedLogistic {
        WeightedLogistic::fit(p, x, y, &vec![1.0; y.len()])
    }

    #[test]
    fn constant_columns_do_not_break_standardization() {
        let x =
            FeatureMatrix::from_rows(&[vec![1.0, 3.0], vec![1.0, 4.0], vec![1.0, 5.0]]).unwrap();
        let m = fitted(&x, &[0, 1, 1], &[1.0; 3]);
        assert!(m.coefficients().iter().all(|c| c.is_finite()));
    }
}
