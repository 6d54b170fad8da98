//! Nonparametric comparison of weighting methods over paired replicates.
//!
//! A Friedman test over the replicate-by-method hypervolume table gates
//! pairwise two-sided Wilcoxon signed-rank tests, whose p-values are
//! Bonferroni-adjusted by the number of pairs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;
use thiserror::Error;

use crate::metrics::MetricPair;

/// Minimum number of paired replicates for any test to run.
pub const MIN_BLOCKS: usize = 5;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {MIN_BLOCKS} replicates, got {0}")]
    TooFewBlocks(usize),
    #[error("need at least 2 methods, got {0}")]
    TooFewMethods(usize),
    #[error("row {row} has {got} values, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("method {0} listed twice")]
    DuplicateMethod(Method),
}

/// Weighting method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "EQ")]
    Equal,
    #[serde(rename = "DW")]
    Deterministic,
    #[serde(rename = "EW")]
    Evolved,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Equal, Method::Deterministic, Method::Evolved];

    /// Short name used in report cells, where deterministic weights are `DT`.
    pub fn report_label(&self) -> &'static str {
        match self {
            Self::Equal => "EQ",
            Self::Deterministic => "DT",
            Self::Evolved => "EW",
        }
    }

    /// Lower-case tag used on the command line and in paths.
    pub fn slug(&self) -> &'static str {
        match self {
            Self::Equal => "eq",
            Self::Deterministic => "dw",
            Self::Evolved => "ew",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Equal => "EQ",
            Self::Deterministic => "DW",
            Self::Evolved => "EW",
        })
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "eq" | "equal" => Ok(Self::Equal),
            "dw" | "dt" | "deterministic" => Ok(Self::Deterministic),
            "ew" | "evolved" => Ok(Self::Evolved),
            other => Err(format!("unknown method `{other}` (expected eq, dw or ew)")),
        }
    }
}

/// Hypervolumes with one row per replicate and one column per method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypervolumeTable {
    methods: Vec<Method>,
    rows: Vec<Vec<f64>>,
}

impl HypervolumeTable {
    pub fn new(methods: Vec<Method>, rows: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        if methods.len() < 2 {
            return Err(StatsError::TooFewMethods(methods.len()));
        }
        for (i, m) in methods.iter().enumerate() {
            if methods[..i].contains(m) {
                return Err(StatsError::DuplicateMethod(*m));
            }
        }
        for (row, values) in rows.iter().enumerate() {
            if values.len() != methods.len() {
                return Err(StatsError::Ragged {
                    row,
                    expected: methods.len(),
                    got: values.len(),
                });
            }
            if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                return Err(StatsError::NonFinite(*v));
            }
        }
        Ok(Self { methods, rows })
    }

    /// Builds a table from per-method columns of equal length.
    pub fn from_columns(columns: Vec<(Method, Vec<f64>)>) -> Result<Self, StatsError> {
        let n = columns.first().map_or(0, |c| c.1.len());
        if let Some(c) = columns.iter().find(|c| c.1.len() != n) {
            return Err(StatsError::LengthMismatch(n, c.1.len()));
        }
        let rows = (0..n)
            .map(|r| columns.iter().map(|c| c.1[r]).collect())
            .collect();
        Self::new(columns.iter().map(|c| c.0).collect(), rows)
    }

    pub fn methods(&self) -> &[Method] {
        &self.methods
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn n_blocks(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn column_of(&self, m: Method) -> Option<Vec<f64>> {
        self.methods
            .iter()
            .position(|&x| x == m)
            .map(|j| self.column(j))
    }
}

/// Ranks starting at 1, ties sharing their mean rank. Also returns
/// `sum(t^3 - t)` over tie groups.
fn mean_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        let t = (end - start) as f64;
        ties += t * t * t - t;
        start = end;
    }
    (ranks, ties)
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(df / 2.0, x / 2.0)
    }
}

/// Two-sided standard normal tail probability `P(|Z| >= |z|)`.
pub fn normal_two_sided(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub statistic: f64,
    pub p: f64,
    pub df: usize,
}

/// Friedman rank test with tie correction. Rows are blocks, columns treatments.
pub fn friedman_test(tbl: &HypervolumeTable) -> Result<FriedmanResult, StatsError> {
    let n = tbl.n_blocks();
    if n < MIN_BLOCKS {
        return Err(StatsError::TooFewBlocks(n));
    }
    let k = tbl.methods.len();
    let mut rank_sums = vec![0.0; k];
    let mut ties = 0.0;
    for row in &tbl.rows {
        let (r, t) = mean_ranks(row);
        for (s, v) in rank_sums.iter_mut().zip(r) {
            *s += v;
        }
        ties += t;
    }
    let (nf, kf) = (n as f64, k as f64);
    let correction = 1.0 - ties / (nf * kf * (kf * kf - 1.0));
    let df = k - 1;
    if correction <= 0.0 {
        // Every row fully tied.
        return Ok(FriedmanResult {
            statistic: 0.0,
            p: 1.0,
            df,
        });
    }
    let ss: f64 = rank_sums.iter().map(|r| r * r).sum();
    let raw = 12.0 / (nf * kf * (kf + 1.0)) * ss - 3.0 * nf * (kf + 1.0);
    let statistic = (raw / correction).max(0.0);
    Ok(FriedmanResult {
        statistic,
        p: chi_square_sf(statistic, df as f64),
        df,
    })
}

/// Which sample tends to be larger, from the sign of the median difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    FirstGreater,
    SecondGreater,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of positive differences.
    pub w_plus: f64,
    /// Sum of ranks of negative differences.
    pub w_minus: f64,
    pub z: f64,
    pub p: f64,
    /// Differences left after dropping zeros.
    pub n_nonzero: usize,
    pub direction: Direction,
    /// Set when every difference is zero.
    pub all_zero: bool,
    /// Set when fewer than [`MIN_BLOCKS`] nonzero differences remain; `p` is then 1.
    pub low_power: bool,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Two-sided paired signed-rank test of `a` against `b`, using the normal
/// approximation with tie-corrected variance and a continuity correction.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < MIN_BLOCKS {
        return Err(StatsError::TooFewBlocks(a.len()));
    }
    if let Some(v) = a.iter().chain(b).find(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(*v));
    }
    let mut diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let med = median(&mut diffs.clone());
    let direction = if med > 0.0 {
        Direction::FirstGreater
    } else if med < 0.0 {
        Direction::SecondGreater
    } else {
        Direction::Neither
    };
    diffs.retain(|d| *d != 0.0);
    let n = diffs.len();
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = mean_ranks(&abs);
    let w_plus: f64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let w_minus: f64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d < 0.0)
        .map(|(r, _)| r)
        .sum();
    let mut out = WilcoxonResult {
        w_plus,
        w_minus,
        z: 0.0,
        p: 1.0,
        n_nonzero: n,
        direction,
        all_zero: n == 0,
        low_power: n < MIN_BLOCKS,
    };
    if out.low_power {
        return Ok(out);
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
    let dev = ((w_plus - mean).abs() - 0.5).max(0.0);
    out.z = (w_plus - mean).signum() * dev / var.sqrt();
    out.p = normal_two_sided(out.z);
    Ok(out)
}

/// Multiplies `p` by the number of comparisons, capped at 1.
pub fn bonferroni(p: f64, comparisons: usize) -> f64 {
    (p * comparisons as f64).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub first: Method,
    pub second: Method,
    pub wilcoxon_p: f64,
    pub adjusted_p: f64,
    pub direction: Direction,
    pub low_power: bool,
}

impl PairwiseResult {
    /// `"EW>DT"`-style conclusion when the adjusted p-value clears `alpha`.
    pub fn conclusion(&self, alpha: f64) -> Option<String> {
        if self.adjusted_p >= alpha {
            return None;
        }
        let (hi, lo) = match self.direction {
            Direction::FirstGreater => (self.first, self.second),
            Direction::SecondGreater => (self.second, self.first),
            Direction::Neither => return None,
        };
        Some(format!("{}>{}", hi.report_label(), lo.report_label()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub n_blocks: usize,
    pub methods: Vec<Method>,
    pub friedman_statistic: f64,
    pub friedman_p: f64,
    pub alpha: f64,
    /// Empty unless the Friedman test rejects at `alpha`.
    pub pairwise: Vec<PairwiseResult>,
}

impl StatReport {
    pub fn significant(&self) -> bool {
        self.friedman_p < self.alpha
    }

    pub fn conclusions(&self) -> Vec<String> {
        self.pairwise
            .iter()
            .filter_map(|p| p.conclusion(self.alpha))
            .collect()
    }

    /// Report cell text, e.g. `"EW>DT, EW>EQ"`; empty when nothing is significant.
    pub fn cell(&self) -> String {
        self.conclusions().join(", ")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }
}

/// Friedman gate followed by Bonferroni-adjusted pairwise tests. Pairs are
/// taken later column first, so with columns `[EQ, DW, EW]` the order is
/// EW-DW, EW-EQ, DW-EQ.
pub fn compare_methods(tbl: &HypervolumeTable, alpha: f64) -> Result<StatReport, StatsError> {
    let fr = friedman_test(tbl)?;
    let mut report = StatReport {
        n_blocks: tbl.n_blocks(),
        methods: tbl.methods.clone(),
        friedman_statistic: fr.statistic,
        friedman_p: fr.p,
        alpha,
        pairwise: Vec::new(),
    };
    if !report.significant() {
        return Ok(report);
    }
    let k = tbl.methods.len();
    let pairs: Vec<(usize, usize)> = (0..k)
        .rev()
        .flat_map(|i| (0..i).rev().map(move |j| (i, j)))
        .collect();
    let comparisons = pairs.len();
    for (i, j) in pairs {
        let w = wilcoxon_signed_rank(&tbl.column(i), &tbl.column(j))?;
        report.pairwise.push(PairwiseResult {
            first: tbl.methods[i],
            second: tbl.methods[j],
            wilcoxon_p: w.p,
            adjusted_p: bonferroni(w.p, comparisons),
            direction: w.direction,
            low_power: w.low_power,
        });
    }
    Ok(report)
}

/// One cell of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub dataset: String,
    pub pair: MetricPair,
    pub report: StatReport,
}

/// Text table with one row per dataset and one column per metric pair.
/// Cells list significant relations; missing or non-significant cells are blank.
pub fn render_table(entries: &[TableEntry]) -> String {
    let mut datasets: Vec<&str> = Vec::new();
    for e in entries {
        if !datasets.contains(&e.dataset.as_str()) {
            datasets.push(&e.dataset);
        }
    }
    let mut grid: Vec<Vec<String>> = vec![std::iter::once("Dataset".to_string())
        .chain(MetricPair::ALL.iter().map(|p| p.to_string()))
        .collect()];
    for d in &datasets {
        let mut row = vec![d.to_string()];
        for pair in MetricPair::ALL {
            let cell = entries
                .iter()
                .rev()
                .find(|e| e.dataset == *d && e.pair == pair)
                .map(|e| e.report.cell())
                .unwrap_or_default();
            row.push(cell);
        }
        grid.push(row);
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in grid.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(v, w)| format!("{v:<w$}"))
            .collect();
        out.push_str(line.join(" | ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            out.push_str(&rule.join("-+-"));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Composite Simpson's rule.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    /// Chi-square upper tail by integrating the density over `[x, x + 200]`.
    fn chi2_tail_by_quadrature(x: f64, k: f64) -> f64 {
        let ln_norm = (k / 2.0) * 2f64.ln() + ln_gamma_half_integer(k / 2.0);
        let pdf = |t: f64| {
            if t <= 0.0 {
                0.0
            } else {
                ((k / 2.0 - 1.0) * t.ln() - t / 2.0 - ln_norm).exp()
            }
        };
        simpson(pdf, x, x + 200.0, 400_000)
    }

    /// ln Γ(a) for positive half-integers by the recurrence.
    fn ln_gamma_half_integer(a: f64) -> f64 {
        let mut v = if a.fract() == 0.0 {
            0.0
        } else {
            std::f64::consts::PI.sqrt().ln()
        };
        let mut x = if a.fract() == 0.0 { 1.0 } else { 0.5 };
        while x < a - 1e-9 {
            v += x.ln();
            x += 1.0;
        }
        v
    }

    fn normal_upper_by_quadrature(z: f64) -> f64 {
        let pdf = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        simpson(pdf, z, z + 40.0, 400_000)
    }

    fn three(rows: Vec<Vec<f64>>) -> HypervolumeTable {
        HypervolumeTable::new(Method::ALL.to_vec(), rows).unwrap()
    }

    #[test]
    fn chi_square_tail_matches_quadrature() {
        for (x, k) in [(0.5, 1.0), (3.0, 2.0), (7.5, 2.0), (12.0, 3.0), (4.2, 5.0)] {
            let q = chi2_tail_by_quadrature(x, k);
            assert!((chi_square_sf(x, k) - q).abs() < 1e-9, "x={x} k={k}");
        }
        // Two degrees of freedom has the closed form exp(-x/2).
        assert!((chi_square_sf(9.0, 2.0) - (-4.5f64).exp()).abs() < 1e-14);
        assert_eq!(chi_square_sf(0.0, 2.0), 1.0);
    }

    #[test]
    fn mean_ranks_with_ties() {
        let (r, t) = mean_ranks(&[3.0, 1.0, 3.0, 2.0]);
        assert_eq!(r, vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(t, 6.0);
    }

    #[test]
    fn friedman_all_ties() {
        let fr = friedman_test(&three(vec![vec![0.5; 3]; 6])).unwrap();
        assert_eq!((fr.statistic, fr.p, fr.df), (0.0, 1.0, 2));
    }

    #[test]
    fn friedman_hand_ranked_table() {
        // Column 3 is largest in every row; columns 1 and 2 tie in rows 0-2
        // and are ordered 1 < 2 in rows 3-5.
        let rows = vec![
            vec![0.2, 0.2, 0.9],
            vec![0.4, 0.4, 0.8],
            vec![0.1, 0.1, 0.7],
            vec![0.3, 0.5, 0.6],
            vec![0.2, 0.3, 0.9],
            vec![0.1, 0.4, 0.5],
        ];
        // Rank sums: 3 * 1.5 + 3 * 1 = 7.5, 3 * 1.5 + 3 * 2 = 10.5, 18.
        // Uncorrected: 12 / (6 * 3 * 4) * (56.25 + 110.25 + 324) - 3 * 6 * 4 = 9.75.
        // Ties: three rows with one pair, sum(t^3 - t) = 18; factor 1 - 18 / 144.
        let expected = 9.75 / (1.0 - 18.0 / 144.0);
        let fr = friedman_test(&three(rows)).unwrap();
        assert!((fr.statistic - expected).abs() < 1e-12);
        assert!((fr.p - (-expected / 2.0).exp()).abs() < 1e-8);
        assert!((fr.p - chi2_tail_by_quadrature(expected, 2.0)).abs() < 1e-8);
    }

    #[test]
    fn friedman_needs_five_blocks() {
        assert_eq!(
            friedman_test(&three(vec![vec![1.0, 2.0, 3.0]; 4])),
            Err(StatsError::TooFewBlocks(4))
        );
    }

    #[test]
    fn twenty_replicates_give_two_degrees_of_freedom() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64, i as f64 + 0.5, (i * 7 % 20) as f64])
            .collect();
        let fr = friedman_test(&three(rows)).unwrap();
        assert_eq!(fr.df, 2);
        assert!((0.0..=1.0).contains(&fr.p));
    }

    #[test]
    fn wilcoxon_all_positive_matches_closed_form() {
        let a: Vec<f64> = (0..20).map(|i| 1.0 + i as f64 * 0.1).collect();
        let b: Vec<f64> = (0..20).map(|i| 0.5 + i as f64 * 0.07).collect();
        let w = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!((w.w_plus, w.w_minus), (210.0, 0.0));
        // n = 20, no ties: mean 105, variance 20 * 21 * 41 / 24.
        let z = (210.0 - 105.0 - 0.5) / (20.0f64 * 21.0 * 41.0 / 24.0).sqrt();
        let oracle = 2.0 * normal_upper_by_quadrature(z);
        assert!((w.p - oracle).abs() < 1e-10, "{} vs {oracle}", w.p);
        assert_eq!(w.direction, Direction::FirstGreater);
    }

    #[test]
    fn wilcoxon_identical_samples() {
        let a = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let w = wilcoxon_signed_rank(&a, &a).unwrap();
        assert!(w.all_zero && w.low_power);
        assert_eq!(w.p, 1.0);
        assert_eq!(w.direction, Direction::Neither);
    }

    #[test]
    fn wilcoxon_few_nonzero_differences_is_low_power() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [1.0, 2.0, 3.0, 3.0, 4.0, 5.0];
        let w = wilcoxon_signed_rank(&a, &b).unwrap();
        assert!(w.low_power && !w.all_zero);
        assert_eq!(w.p, 1.0);
    }

    #[test]
    fn wilcoxon_tie_corrected_variance() {
        // |d| = 1,1,2,2,2,3 with mixed signs.
        let d = [1.0, -1.0, 2.0, 2.0, -2.0, 3.0];
        let zeros = [0.0; 6];
        let w = wilcoxon_signed_rank(&d, &zeros).unwrap();
        // Ranks: 1.5, 1.5, 4, 4, 4, 6. W+ = 1.5 + 4 + 4 + 6 = 15.5.
        assert_eq!(w.w_plus, 15.5);
        let var = 6.0 * 7.0 * 13.0 / 24.0 - (6.0 + 24.0) / 48.0;
        let z = (15.5 - 10.5 - 0.5) / f64::sqrt(var);
        assert!((w.z - z).abs() < 1e-12);
    }

    #[test]
    fn wilcoxon_input_errors() {
        assert_eq!(
            wilcoxon_signed_rank(&[1.0; 5], &[1.0; 6]),
            Err(StatsError::LengthMismatch(5, 6))
        );
        assert_eq!(
            wilcoxon_signed_rank(&[1.0; 4], &[1.0; 4]),
            Err(StatsError::TooFewBlocks(4))
        );
    }

    #[test]
    fn bonferroni_arithmetic() {
        assert_eq!(bonferroni(0.02, 3), 0.06);
        assert_eq!(bonferroni(0.5, 3), 1.0);
        let p = PairwiseResult {
            first: Method::Evolved,
            second: Method::Equal,
            wilcoxon_p: 0.02,
            adjusted_p: bonferroni(0.02, 3),
            direction: Direction::FirstGreater,
            low_power: false,
        };
        assert_eq!(p.conclusion(0.05), None);
        assert_eq!(p.conclusion(0.1).as_deref(), Some("EW>EQ"));
    }

    #[test]
    fn identical_methods_close_the_gate() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 20.0; 3]).collect();
        let report = compare_methods(&three(rows), DEFAULT_ALPHA).unwrap();
        assert!(!report.significant());
        assert!(report.pairwise.is_empty());
        assert_eq!(report.cell(), "");
    }

    #[test]
    fn dominant_evolved_column_reports_both_wins() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let base = 0.3 + (i % 5) as f64 * 0.01;
                vec![
                    base + (i % 3) as f64 * 0.002,
                    base + (i % 4) as f64 * 0.002,
                    base + 0.2 + i as f64 * 0.001,
                ]
            })
            .collect();
        let report = compare_methods(&three(rows), DEFAULT_ALPHA).unwrap();
        assert!(report.significant());
        assert_eq!(report.pairwise.len(), 3);
        assert_eq!(
            (report.pairwise[0].first, report.pairwise[0].second),
            (Method::Evolved, Method::Deterministic)
        );
        let cell = report.cell();
        assert!(cell.starts_with("EW>DT, EW>EQ"), "{cell}");
        for p in &report.pairwise {
            assert!(p.adjusted_p >= p.wilcoxon_p && p.adjusted_p <= 1.0);
        }
        let back: StatReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn table_layout() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![0.1, 0.2, 0.5 + i as f64 * 0.01])
            .collect();
        let report = compare_methods(&three(rows), DEFAULT_ALPHA).unwrap();
        let entries = vec![TableEntry {
            dataset: "synthetic".into(),
            pair: MetricPair::ALL[0],
            report,
        }];
        let text = render_table(&entries);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("Dataset") && lines[0].contains("(ROC, SFN)"));
        assert!(lines[2].starts_with("synthetic") && lines[2].contains("EW>DT, EW>EQ"));
    }

    #[test]
    fn table_rejects_bad_shapes() {
        assert!(matches!(
            HypervolumeTable::new(Method::ALL.to_vec(), vec![vec![1.0, 2.0]]),
            Err(StatsError::Ragged { .. })
        ));
        assert!(HypervolumeTable::new(vec![Method::Equal], vec![]).is_err());
        assert!(HypervolumeTable::new(vec![Method::Equal, Method::Equal], vec![]).is_err());
        assert!(
            HypervolumeTable::new(Method::ALL.to_vec(), vec![vec![1.0, f64::NAN, 2.0]]).is_err()
        );
    }

    fn table_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(proptest::collection::vec(0u32..20, 3), 5..25).prop_map(|rows| {
            rows.into_iter()
                .map(|r| r.into_iter().map(|v| v as f64 / 20.0).collect())
                .collect()
        })
    }

    proptest! {
        #[test]
        fn friedman_is_rank_invariant(rows in table_strategy()) {
            let transformed: Vec<Vec<f64>> =
                rows.iter().map(|r| r.iter().map(|v| (3.0 * v).exp() + 1.0).collect()).collect();
            let a = friedman_test(&three(rows)).unwrap();
            let b = friedman_test(&three(transformed)).unwrap();
            prop_assert!((a.statistic - b.statistic).abs() < 1e-9);
        }

        #[test]
        fn wilcoxon_shift_invariant_and_symmetric(
            pairs in proptest::collection::vec((0u32..50, 0u32..50), 5..30),
            shift in -5i32..5,
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64 / 8.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64 / 8.0).collect();
            let base = wilcoxon_signed_rank(&a, &b).unwrap();
            let s = shift as f64;
            let a2: Vec<f64> = a.iter().map(|v| v + s).collect();
            let b2: Vec<f64> = b.iter().map(|v| v + s).collect();
            prop_assert_eq!(wilcoxon_signed_rank(&a2, &b2).unwrap().p, base.p);
            let flipped = wilcoxon_signed_rank(&b, &a).unwrap();
            prop_assert!((flipped.p - base.p).abs() < 1e-15);
            let expected = match base.direction {
                Direction::FirstGreater => Direction::SecondGreater,
                Direction::SecondGreater => Direction::FirstGreater,
                Direction::Neither => Direction::Neither,
            };
            prop_assert_eq!(flipped.direction, expected);
            prop_assert!((0.0..=1.0).contains(&base.p));
        }

        #[test]
        fn bonferroni_bounds(p in 0.0f64..=1.0, m in 1usize..10) {
            let adj = bonferroni(p, m);
            prop_assert!(adj >= p && adj <= 1.0);
        }
    }
}
