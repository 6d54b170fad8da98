//! Predictive (accuracy, AUROC) and fairness (DPD, SFN) metrics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Scores at or above this value are predicted favorable.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("input lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("labels contain a single class")]
    SingleClass,
    #[error("labels contain no positives")]
    NoPositives,
    #[error("group id {0} out of range")]
    GroupOutOfRange(usize),
}

pub type Result<T> = std::result::Result<T, MetricError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictiveMetric {
    Acc,
    Roc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FairnessMetric {
    Dpd,
    Sfn,
}

/// The (predictive, fairness) objective pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetricPair {
    pub predictive: PredictiveMetric,
    pub fairness: FairnessMetric,
}

impl MetricPair {
    pub const ALL: [MetricPair; 4] = [
        MetricPair::new(PredictiveMetric::Acc, FairnessMetric::Dpd),
        MetricPair::new(PredictiveMetric::Acc, FairnessMetric::Sfn),
        MetricPair::new(PredictiveMetric::Roc, FairnessMetric::Dpd),
        MetricPair::new(PredictiveMetric::Roc, FairnessMetric::Sfn),
    ];

    pub const fn new(predictive: PredictiveMetric, fairness: FairnessMetric) -> Self {
        Self {
            predictive,
            fairness,
        }
    }

    /// Lower-case tag used in directory names, e.g. `acc_dpd`.
    pub fn slug(&self) -> String {
        format!("{}_{}", self.predictive, self.fairness).to_lowercase()
    }
}

impl fmt::Display for PredictiveMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Acc => "ACC",
            Self::Roc => "ROC",
        })
    }
}

impl fmt::Display for FairnessMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dpd => "DPD",
            Self::Sfn => "SFN",
        })
    }
}

impl fmt::Display for MetricPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.predictive, self.fairness)
    }
}

impl FromStr for PredictiveMetric {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "acc" | "accuracy" => Ok(Self::Acc),
            "roc" | "auroc" | "auc" => Ok(Self::Roc),
            other => Err(format!("unknown predictive metric `{other}`")),
        }
    }
}

impl FromStr for FairnessMetric {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "dpd" => Ok(Self::Dpd),
            "sfn" | "fnsf" => Ok(Self::Sfn),
            other => Err(format!("unknown fairness metric `{other}`")),
        }
    }
}

/// A model's score under a metric pair. Predictive is maximized, fairness
/// minimized; both lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedPoint {
    pub predictive: f64,
    pub fairness: f64,
}

impl EvaluatedPoint {
    /// Worst attainable point, used when a model cannot be scored.
    pub const WORST: EvaluatedPoint = EvaluatedPoint {
        predictive: 0.0,
        fairness: 1.0,
    };
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(MetricError::LengthMismatch(a, b));
    }
    if a == 0 {
        return Err(MetricError::EmptyInput);
    }
    Ok(())
}

pub fn threshold(scores: &[f64]) -> Vec<u8> {
    scores
        .iter()
        .map(|&s| u8::from(s >= DECISION_THRESHOLD))
        .collect()
}

pub fn accuracy(y: &[u8], y_hat: &[u8]) -> Result<f64> {
    check_len(y.len(), y_hat.len())?;
    let hits = y.iter().zip(y_hat).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y.len() as f64)
}

/// Area under the ROC curve as the Mann-Whitney statistic: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
pub fn auroc(y: &[u8], scores: &[f64]) -> Result<f64> {
    check_len(y.len(), scores.len())?;
    let n_pos = y.iter().filter(|&&t| t == 1).count() as u64;
    let n_neg = y.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::SingleClass);
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Walk tie blocks in ascending score order. Within a block, each positive
    // beats every negative seen so far and ties with the block's negatives.
    // Counts are kept doubled so the result is an exact integer ratio.
    let mut twice_u: u64 = 0;
    let mut neg_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos_here, mut neg_here) = (0u64, 0u64);
        let same = |a: f64, b: f64| a == b || a.total_cmp(&b).is_eq();
        while j < order.len() && same(scores[order[j]], scores[order[i]]) {
            if y[order[j]] == 1 {
                pos_here += 1;
            } else {
                neg_here += 1;
            }
            j += 1;
        }
        twice_u += pos_here * (2 * neg_below + neg_here);
        neg_below += neg_here;
        i = j;
    }
    Ok(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

fn check_groups(groups: &[usize], n_groups: usize) -> Result<()> {
    match groups.iter().find(|&&g| g >= n_groups) {
        Some(&g) => Err(MetricError::GroupOutOfRange(g)),
        None => Ok(()),
    }
}

/// Demographic parity difference: spread between the highest and lowest
/// group acceptance rate. Empty groups are ignored.
pub fn dpd(y_hat: &[u8], groups: &[usize], n_groups: usize) -> Result<f64> {
    check_len(y_hat.len(), groups.len())?;
    check_groups(groups, n_groups)?;
    let mut size = vec![0usize; n_groups];
    let mut accepted = vec![0usize; n_groups];
    for (&p, &g) in y_hat.iter().zip(groups) {
        size[g] += 1;
        accepted[g] += p as usize;
    }
    let rates: Vec<f64> = size
        .iter()
        .zip(&accepted)
        .filter(|(&n, _)| n > 0)
        .map(|(&n, &a)| a as f64 / n as f64)
        .collect();
    if rates.len() < 2 {
        return Ok(0.0);
    }
    let max = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

/// How the per-group mass `alpha(G)` in SFN is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfnAlpha {
    /// `Pr(row in G and y = 1)`.
    Joint,
    /// `Pr(y = 1 | row in G)`.
    Conditional,
}

/// The normalization used by [`sfn`].
pub const SFN_ALPHA: SfnAlpha = SfnAlpha::Joint;

/// Subgroup false negative fairness with the crate-wide [`SFN_ALPHA`].
pub fn sfn(y: &[u8], y_hat: &[u8], groups: &[usize], n_groups: usize) -> Result<f64> {
    sfn_with(y, y_hat, groups, n_groups, SFN_ALPHA)
}

/// Subgroup false negative fairness: the largest `alpha(G) * |FNR - FNR_G|`
/// over groups. Groups without positives have no FNR and contribute 0.
pub fn sfn_with(
    y: &[u8],
    y_hat: &[u8],
    groups: &[usize],
    n_groups: usize,
    alpha: SfnAlpha,
) -> Result<f64> {
    check_len(y.len(), y_hat.len())?;
    check_len(y.len(), groups.len())?;
    check_groups(groups, n_groups)?;
    let mut size = vec![0usize; n_groups];
    let mut positives = vec![0usize; n_groups];
    let mut false_neg = vec![0usize; n_groups];
    for ((&t, &p), &g) in y.iter().zip(y_hat).zip(groups) {
        size[g] += 1;
        if t == 1 {
            positives[g] += 1;
            if p == 0 {
                false_neg[g] += 1;
            }
        }
    }
    let total_pos: usize = positives.iter().sum();
    if total_pos == 0 {
        return Err(MetricError::NoPositives);
    }
    let overall_fnr = false_neg.iter().sum::<usize>() as f64 / total_pos as f64;
    let n = y.len() as f64;
    let worst = (0..n_groups)
        .filter(|&g| positives[g] > 0)
        .map(|g| {
            let a = match alpha {
                SfnAlpha::Joint => positives[g] as f64 / n,
                SfnAlpha::Conditional => positives[g] as f64 / size[g] as f64,
            };
            let group_fnr = false_neg[g] as f64 / positives[g] as f64;
            a * (overall_fnr - group_fnr).abs()
        })
        .fold(0.0, f64::max);
    Ok(worst)
}

/// Scores one model's predictions under `pair`. Labels are derived from
/// `scores` with [`DECISION_THRESHOLD`].
pub fn score_pair(
    pair: MetricPair,
    y: &[u8],
    scores: &[f64],
    groups: &[usize],
    n_groups: usize,
) -> Result<EvaluatedPoint> {
    check_len(y.len(), scores.len())?;
    let y_hat = threshold(scores);
    let predictive = match pair.predictive {
        PredictiveMetric::Acc => accuracy(y, &y_hat)?,
        PredictiveMetric::Roc => auroc(y, scores)?,
    };
    let fairness = match pair.fairness {
        FairnessMetric::Dpd => dpd(&y_hat, groups, n_groups)?,
        FairnessMetric::Sfn => sfn(y, &y_hat, groups, n_groups)?,
    };
    Ok(EvaluatedPoint {
        predictive,
        fairness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Six-row toy example: groups A (rows 0-1) and B (rows 2-5).
    const TOY_GROUPS: [usize; 6] = [0, 0, 1, 1, 1, 1];
    const TOY_Y: [u8; 6] = [1, 0, 0, 0, 1, 1];
    const TOY_BEFORE: [u8; 6] = [0, 0, 0, 1, 1, 1];
    const TOY_AFTER: [u8; 6] = [0, 0, 0, 0, 0, 1];

    /// Pairwise definition of AUROC.
    fn auroc_pairs(y: &[u8], s: &[f64]) -> f64 {
        let (mut conc, mut ties, mut pairs) = (0u64, 0u64, 0u64);
        for i in 0..y.len() {
            for j in 0..y.len() {
                if y[i] == 1 && y[j] == 0 {
                    pairs += 1;
                    if s[i] > s[j] {
                        conc += 1;
                    } else if s[i] == s[j] {
                        ties += 1;
                    }
                }
            }
        }
        (conc as f64 + 0.5 * ties as f64) / pairs as f64
    }

    /// DPD as the maximum over ordered pairs of nonempty groups.
    fn dpd_pairs(y_hat: &[u8], groups: &[usize], n_groups: usize) -> f64 {
        let rate = |g: usize| {
            let rows: Vec<u8> = y_hat
                .iter()
                .zip(groups)
                .filter(|(_, &h)| h == g)
                .map(|(&p, _)| p)
                .collect();
            (!rows.is_empty())
                .then(|| rows.iter().map(|&p| p as f64).sum::<f64>() / rows.len() as f64)
        };
        let mut best = 0.0f64;
        for g1 in 0..n_groups {
            for g2 in 0..n_groups {
                if let (Some(a), Some(b)) = (rate(g1), rate(g2)) {
                    best = best.max(a - b);
                }
            }
        }
        best
    }

    #[test]
    fn toy_accuracy_both_columns() {
        assert!((accuracy(&TOY_Y, &TOY_BEFORE).unwrap() - 4.0 / 6.0).abs() < 1e-12);
        assert!((accuracy(&TOY_Y, &TOY_AFTER).unwrap() - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(accuracy(&TOY_Y, &TOY_Y).unwrap(), 1.0);
    }

    #[test]
    fn accuracy_errors() {
        assert_eq!(
            accuracy(&[1], &[1, 0]),
            Err(MetricError::LengthMismatch(1, 2))
        );
        assert_eq!(accuracy(&[], &[]), Err(MetricError::EmptyInput));
    }

    #[test]
    fn toy_dpd_before_and_after() {
        assert!((dpd(&TOY_BEFORE, &TOY_GROUPS, 2).unwrap() - 0.75).abs() < 1e-12);
        assert!((dpd(&TOY_AFTER, &TOY_GROUPS, 2).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(dpd(&TOY_BEFORE, &[0; 6], 1).unwrap(), 0.0);
        // Empty group 2 is ignored.
        assert!((dpd(&TOY_BEFORE, &TOY_GROUPS, 3).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn toy_degeneracy_fairness_improves_while_no_group_gains() {
        // DPD falls although no group's acceptance rate rose and accuracy is flat.
        let before = dpd(&TOY_BEFORE, &TOY_GROUPS, 2).unwrap();
        let after = dpd(&TOY_AFTER, &TOY_GROUPS, 2).unwrap();
        assert!(after < before);
        assert_eq!(
            accuracy(&TOY_Y, &TOY_BEFORE).unwrap(),
            accuracy(&TOY_Y, &TOY_AFTER).unwrap()
        );
        for g in 0..2 {
            let acc = |yh: &[u8]| (0..6).filter(|&r| TOY_GROUPS[r] == g && yh[r] == 1).count();
            assert!(acc(&TOY_AFTER) <= acc(&TOY_BEFORE));
        }
    }

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[1, 1, 0, 0], &[0.9, 0.8, 0.2, 0.1]).unwrap(), 1.0);
        assert_eq!(auroc(&[1, 0, 1, 0], &[0.3; 4]).unwrap(), 0.5);
        let v = auroc(&[1, 0, 1, 0, 0], &[0.9, 0.8, 0.4, 0.3, 0.2]).unwrap();
        assert_eq!(v, auroc_pairs(&[1, 0, 1, 0, 0], &[0.9, 0.8, 0.4, 0.3, 0.2]));
        assert!((v - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(auroc(&[1, 1], &[0.1, 0.2]), Err(MetricError::SingleClass));
        // Signed zeros compare equal and tie.
        assert_eq!(auroc(&[1, 0], &[-0.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn sfn_toy_after_column() {
        let v = sfn(&TOY_Y, &TOY_AFTER, &TOY_GROUPS, 2).unwrap();
        assert!((v - 1.0 / 18.0).abs() < 1e-12, "{v}");
        // Conditional reading: A 1/2 * 1/3, B 2/4 * 1/6.
        let c = sfn_with(&TOY_Y, &TOY_AFTER, &TOY_GROUPS, 2, SfnAlpha::Conditional).unwrap();
        assert!((c - 1.0 / 6.0).abs() < 1e-12, "{c}");
    }

    #[test]
    fn sfn_degenerate_cases() {
        assert_eq!(sfn(&TOY_Y, &TOY_Y, &TOY_GROUPS, 2).unwrap(), 0.0);
        assert_eq!(sfn(&TOY_Y, &TOY_AFTER, &[0; 6], 1).unwrap(), 0.0);
        assert_eq!(
            sfn(&[0, 0], &[0, 1], &[0, 1], 2),
            Err(MetricError::NoPositives)
        );
    }

    #[test]
    fn score_pair_dispatch() {
        let before: Vec<f64> = TOY_BEFORE.iter().map(|&v| v as f64).collect();
        let p = score_pair(MetricPair::ALL[0], &TOY_Y, &before, &TOY_GROUPS, 2).unwrap();
        assert!((p.predictive - 4.0 / 6.0).abs() < 1e-12);
        assert!((p.fairness - 0.75).abs() < 1e-12);

        let perfect = score_pair(
            MetricPair::ALL[0],
            &TOY_Y,
            &[1., 0., 0., 0., 1., 1.],
            &[0; 6],
            1,
        )
        .unwrap();
        assert_eq!((perfect.predictive, perfect.fairness), (1.0, 0.0));

        let after: Vec<f64> = TOY_AFTER.iter().map(|&v| v as f64).collect();
        let p = score_pair(MetricPair::ALL[3], &TOY_Y, &after, &TOY_GROUPS, 2).unwrap();
        assert_eq!(p.predictive, auroc_pairs(&TOY_Y, &after));
        assert!((p.fairness - 1.0 / 18.0).abs() < 1e-12);
    }

    #[test]
    fn metric_pair_parsing() {
        assert_eq!(
            "ACC".parse::<PredictiveMetric>().unwrap(),
            PredictiveMetric::Acc
        );
        assert_eq!(
            "sfn".parse::<FairnessMetric>().unwrap(),
            FairnessMetric::Sfn
        );
        assert!("f1".parse::<PredictiveMetric>().is_err());
        assert_eq!(MetricPair::ALL[2].slug(), "roc_dpd");
        assert_eq!(MetricPair::ALL[2].to_string(), "(ROC, DPD)");
    }

    fn labelled(max: usize) -> impl Strategy<Value = (Vec<u8>, Vec<u8>, Vec<usize>)> {
        (1..max).prop_flat_map(|n| {
            (
                proptest::collection::vec(0u8..2, n),
                proptest::collection::vec(0u8..2, n),
                proptest::collection::vec(0usize..4, n),
            )
        })
    }

    proptest! {
        #[test]
        fn auroc_matches_pairwise_definition(
            data in (2usize..200).prop_flat_map(|n| (
                proptest::collection::vec(0u8..2, n),
                // Coarse scores force plenty of ties.
                proptest::collection::vec(0u8..12, n),
            ))
        ) {
            let (y, s) = data;
            let scores: Vec<f64> = s.iter().map(|&v| v as f64 / 11.0).collect();
            match auroc(&y, &scores) {
                Ok(v) => prop_assert_eq!(v, auroc_pairs(&y, &scores)),
                Err(e) => prop_assert_eq!(e, MetricError::SingleClass),
            }
        }

        #[test]
        fn bounded_metrics((y, y_hat, g) in labelled(120)) {
            let acc = accuracy(&y, &y_hat).unwrap();
            prop_assert!((0.0..=1.0).contains(&acc));
            let d = dpd(&y_hat, &g, 4).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            if let Ok(s) = sfn(&y, &y_hat, &g, 4) {
                prop_assert!((0.0..=1.0).contains(&s));
            }
        }

        #[test]
        fn dpd_max_min_equals_pairwise_max((_, y_hat, g) in labelled(120)) {
            prop_assert_eq!(dpd(&y_hat, &g, 4).unwrap(), dpd_pairs(&y_hat, &g, 4));
        }

        #[test]
        fn dpd_invariant_to_group_relabeling(
            (_, y_hat, g) in labelled(120),
            perm in Just([0usize, 1, 2, 3]).prop_shuffle(),
        ) {
            let relabeled: Vec<usize> = g.iter().map(|&x| perm[x]).collect();
            prop_assert_eq!(dpd(&y_hat, &g, 4).unwrap(), dpd(&y_hat, &relabeled, 4).unwrap());
        }

        #[test]
        fn sfn_zero_for_perfect_predictions((y, _, g) in labelled(120)) {
            if y.contains(&1) {
                prop_assert_eq!(sfn(&y, &y, &g, 4).unwrap(), 0.0);
            }
        }

        #[test]
        fn dpd_ignores_true_labels((y, y_hat, g) in labelled(60)) {
            let flipped: Vec<u8> = y.iter().map(|&t| 1 - t).collect();
            let scores: Vec<f64> = y_hat.iter().map(|&p| p as f64).collect();
            let pair = MetricPair::new(PredictiveMetric::Acc, FairnessMetric::Dpd);
            let a = score_pair(pair, &y, &scores, &g, 4).unwrap();
            let b = score_pair(pair, &flipped, &scores, &g, 4).unwrap();
            prop_assert_eq!(a.fairness, b.fairness);
        }
    }
}
