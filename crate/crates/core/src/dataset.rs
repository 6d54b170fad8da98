//! Tabular binary-classification data with declared sensitive attributes.
//!
//! A [`Dataset`] holds a dense feature matrix, a `{0,1}` target (1 is the
//! favorable outcome) and integer-coded sensitive attributes. Splits, folds
//! and undersampling are pure functions of their seed.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("column `{0}` named in schema is missing from the header")]
    MissingColumn(String),
    #[error("target column has more than two distinct values ({0} found)")]
    NonBinaryTarget(usize),
    #[error("favorable label `{0}` does not occur in a two-valued target")]
    FavorableLabelAbsent(String),
    #[error("missing or unparseable value at data row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },
    #[error("split leaves a part without both target classes")]
    DegenerateSplit,
    #[error("too few rows: {0}")]
    TooFewRows(String),
    #[error("inconsistent dataset: {0}")]
    Shape(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("schema json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// Which columns of a CSV play which role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub target_column: String,
    pub favorable_label: String,
    pub sensitive_columns: Vec<String>,
    /// Defaults to every non-target column, in header order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_columns: Option<Vec<String>>,
}

impl DatasetSchema {
    pub fn new(
        target_column: impl Into<String>,
        favorable_label: impl Into<String>,
        sensitive_columns: Vec<String>,
    ) -> Self {
        Self {
            target_column: target_column.into(),
            favorable_label: favorable_label.into(),
            sensitive_columns,
            feature_columns: None,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let schema: Self = serde_json::from_str(s)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sensitive_columns.is_empty() {
            return Err(DatasetError::InvalidSchema(
                "sensitive_columns must not be empty".into(),
            ));
        }
        let mut seen = HashSet::new();
        for c in &self.sensitive_columns {
            if !seen.insert(c) {
                return Err(DatasetError::InvalidSchema(format!(
                    "sensitive column `{c}` listed twice"
                )));
            }
        }
        if self.sensitive_columns.contains(&self.target_column) {
            return Err(DatasetError::InvalidSchema(
                "target column cannot be a sensitive column".into(),
            ));
        }
        if let Some(features) = &self.feature_columns {
            let mut seen = HashSet::new();
            for c in features {
                if c == &self.target_column {
                    return Err(DatasetError::InvalidSchema(
                        "target column cannot be a feature column".into(),
                    ));
                }
                if !seen.insert(c) {
                    return Err(DatasetError::InvalidSchema(format!(
                        "feature column `{c}` listed twice"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Dense row-major matrix of feature values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    n_cols: usize,
}

impl FeatureMatrix {
    pub fn new(data: Vec<f64>, n_cols: usize) -> Result<Self> {
        if n_cols == 0 && !data.is_empty() {
            return Err(DatasetError::Shape(
                "zero columns with non-empty data".into(),
            ));
        }
        if n_cols > 0 && !data.len().is_multiple_of(n_cols) {
            return Err(DatasetError::Shape(format!(
                "{} values do not fill rows of width {n_cols}",
                data.len()
            )));
        }
        Ok(Self { data, n_cols })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(DatasetError::Shape("ragged rows".into()));
        }
        Ok(Self {
            data: rows.concat(),
            n_cols,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.n_cols).unwrap_or(0)
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols.max(1))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Self {
            data,
            n_cols: self.n_cols,
        }
    }
}

/// Raw values of one categorical column; a value's code is its index.
pub type CodeBook = Vec<String>;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    features: FeatureMatrix,
    target: Vec<u8>,
    sensitive_names: Vec<String>,
    /// Row-major, one column per sensitive attribute.
    sensitive: Vec<u32>,
    code_books: Vec<CodeBook>,
}

impl Dataset {
    /// Assembles a dataset from already-coded parts. `sensitive[r]` holds the
    /// codes of row `r`, one per sensitive attribute.
    pub fn from_parts(
        feature_names: Vec<String>,
        features: FeatureMatrix,
        target: Vec<u8>,
        sensitive_names: Vec<String>,
        sensitive: Vec<Vec<u32>>,
        code_books: Vec<CodeBook>,
    ) -> Result<Self> {
        let n = target.len();
        if features.n_rows() != n && !(features.n_cols() == 0 && n > 0) {
            return Err(DatasetError::Shape(format!(
                "{} feature rows for {n} targets",
                features.n_rows()
            )));
        }
        if feature_names.len() != features.n_cols() {
            return Err(DatasetError::Shape("feature name count mismatch".into()));
        }
        if sensitive.len() != n {
            return Err(DatasetError::Shape(format!(
                "{} sensitive rows for {n} targets",
                sensitive.len()
            )));
        }
        if sensitive_names.is_empty() || code_books.len() != sensitive_names.len() {
            return Err(DatasetError::Shape(
                "sensitive column metadata mismatch".into(),
            ));
        }
        if target.iter().any(|&t| t > 1) {
            return Err(DatasetError::Shape("target values must be 0 or 1".into()));
        }
        let width = sensitive_names.len();
        let mut flat = Vec::with_capacity(n * width);
        for row in &sensitive {
            if row.len() != width {
                return Err(DatasetError::Shape("ragged sensitive rows".into()));
            }
            for (j, &code) in row.iter().enumerate() {
                if code as usize >= code_books[j].len() {
                    return Err(DatasetError::Shape(format!(
                        "sensitive code {code} outside code book of `{}`",
                        sensitive_names[j]
                    )));
                }
            }
            flat.extend_from_slice(row);
        }
        Ok(Self {
            feature_names,
            features,
            target,
            sensitive_names,
            sensitive: flat,
            code_books,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target(&self) -> &[u8] {
        &self.target
    }

    pub fn sensitive_names(&self) -> &[String] {
        &self.sensitive_names
    }

    pub fn n_sensitive(&self) -> usize {
        self.sensitive_names.len()
    }

    pub fn sensitive_row(&self, r: usize) -> &[u32] {
        let w = self.n_sensitive();
        &self.sensitive[r * w..(r + 1) * w]
    }

    pub fn code_books(&self) -> &[CodeBook] {
        &self.code_books
    }

    /// Number of rows per class, `[negatives, positives]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.target.iter().filter(|&&t| t == 1).count();
        [self.target.len() - pos, pos]
    }

    /// Row indices per class, in row order.
    pub fn class_rows(&self) -> [Vec<usize>; 2] {
        let mut out = [Vec::new(), Vec::new()];
        for (i, &t) in self.target.iter().enumerate() {
            out[t as usize].push(i);
        }
        out
    }

    /// A new dataset holding `rows` in the given order. Code books are
    /// shared, so group ids stay comparable across subsets.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let w = self.n_sensitive();
        let mut sensitive = Vec::with_capacity(rows.len() * w);
        for &r in rows {
            sensitive.extend_from_slice(self.sensitive_row(r));
        }
        Dataset {
            feature_names: self.feature_names.clone(),
            features: self.features.select_rows(rows),
            target: rows.iter().map(|&r| self.target[r]).collect(),
            sensitive_names: self.sensitive_names.clone(),
            sensitive,
            code_books: self.code_books.clone(),
        }
    }
}

fn labels_match(raw: &str, favorable: &str) -> bool {
    if raw == favorable {
        return true;
    }
    match (raw.parse::<f64>(), favorable.parse::<f64>()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

/// Loads a CSV file with a header row.
pub fn load_csv(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<Dataset> {
    parse_csv(File::open(path)?, schema)
}

/// Parses CSV text (RFC 4180, header row, UTF-8) against `schema`.
pub fn parse_csv<R: Read>(reader: R, schema: &DatasetSchema) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let position: HashMap<&str, usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| (h.as_str(), i))
        .collect();
    if position.len() != header.len() {
        return Err(DatasetError::InvalidSchema(
            "duplicate column names in header".into(),
        ));
    }
    let locate = |name: &str| {
        position
            .get(name)
            .copied()
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };

    let target_idx = locate(&schema.target_column)?;
    let sensitive_idx = schema
        .sensitive_columns
        .iter()
        .map(|c| locate(c))
        .collect::<Result<Vec<_>>>()?;
    let feature_names: Vec<String> = match &schema.feature_columns {
        Some(cols) => cols.clone(),
        None => header
            .iter()
            .filter(|h| **h != schema.target_column)
            .cloned()
            .collect(),
    };
    let feature_idx = feature_names
        .iter()
        .map(|c| locate(c))
        .collect::<Result<Vec<_>>>()?;

    let mut cells: Vec<Vec<String>> = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let values: Vec<String> = record.iter().map(|v| v.trim().to_string()).collect();
        if let Some(col) = values.iter().position(String::is_empty) {
            return Err(DatasetError::MissingValue {
                row: row + 1,
                column: header[col].clone(),
            });
        }
        cells.push(values);
    }
    let n = cells.len();

    // Target: at most two distinct raw values.
    let mut target_values: Vec<&str> = Vec::new();
    for row in &cells {
        let v = row[target_idx].as_str();
        if !target_values.contains(&v) {
            target_values.push(v);
            if target_values.len() > 2 {
                // Keep counting for the error message.
                let distinct: HashSet<&str> =
                    cells.iter().map(|r| r[target_idx].as_str()).collect();
                return Err(DatasetError::NonBinaryTarget(distinct.len()));
            }
        }
    }
    if target_values.len() == 2
        && !target_values
            .iter()
            .any(|v| labels_match(v, &schema.favorable_label))
    {
        return Err(DatasetError::FavorableLabelAbsent(
            schema.favorable_label.clone(),
        ));
    }
    let target: Vec<u8> = cells
        .iter()
        .map(|r| u8::from(labels_match(&r[target_idx], &schema.favorable_label)))
        .collect();

    // Sensitive columns: first-seen coding.
    let mut code_books: Vec<CodeBook> = vec![Vec::new(); sensitive_idx.len()];
    let mut lookups: Vec<HashMap<String, u32>> = vec![HashMap::new(); sensitive_idx.len()];
    let mut sensitive = Vec::with_capacity(n);
    for row in &cells {
        let mut codes = Vec::with_capacity(sensitive_idx.len());
        for (j, &c) in sensitive_idx.iter().enumerate() {
            let raw = &row[c];
            let next = lookups[j].len() as u32;
            let code = *lookups[j].entry(raw.clone()).or_insert_with(|| {
                code_books[j].push(raw.clone());
                next
            });
            codes.push(code);
        }
        sensitive.push(codes);
    }

    // Features: numeric when every cell is a finite number, else first-seen codes.
    let n_features = feature_idx.len();
    let mut data = vec![0.0; n * n_features];
    for (j, &c) in feature_idx.iter().enumerate() {
        let parsed: Option<Vec<f64>> = cells
            .iter()
            .map(|r| r[c].parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        match parsed {
            Some(values) => {
                for (i, v) in values.into_iter().enumerate() {
                    data[i * n_features + j] = v;
                }
            }
            None => {
                let mut codes: HashMap<&str, usize> = HashMap::new();
                for (i, r) in cells.iter().enumerate() {
                    let next = codes.len();
                    let code = *codes.entry(r[c].as_str()).or_insert(next);
                    data[i * n_features + j] = code as f64;
                }
            }
        }
    }

    Dataset::from_parts(
        feature_names,
        FeatureMatrix::new(data, n_features)?,
        target,
        schema.sensitive_columns.clone(),
        sensitive,
        code_books,
    )
}

/// Maps rows to sensitive-value combinations and (combination, class) pairs
/// to weight slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupIndex {
    group_of_row: Vec<usize>,
    radices: Vec<usize>,
    n_groups: usize,
}

impl GroupIndex {
    pub fn group_of_row(&self) -> &[usize] {
        &self.group_of_row
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn n_slots(&self) -> usize {
        2 * self.n_groups
    }

    #[inline]
    pub fn slot_of(&self, group: usize, class: u8) -> usize {
        2 * group + class as usize
    }

    /// Sensitive codes of a group id, first sensitive column most significant.
    pub fn group_codes(&self, group: usize) -> Vec<u32> {
        let mut codes = vec![0u32; self.radices.len()];
        let mut rest = group;
        for (j, &radix) in self.radices.iter().enumerate().rev() {
            codes[j] = (rest % radix) as u32;
            rest /= radix;
        }
        codes
    }

    pub fn group_of_codes(&self, codes: &[u32]) -> usize {
        codes
            .iter()
            .zip(&self.radices)
            .fold(0, |acc, (&c, &radix)| acc * radix + c as usize)
    }

    /// Like [`GroupIndex::group_of_codes`] but `None` for codes outside the index.
    pub fn group_from_codes_checked(&self, codes: &[u32]) -> Option<usize> {
        if codes.len() != self.radices.len()
            || codes
                .iter()
                .zip(&self.radices)
                .any(|(&c, &r)| c as usize >= r)
        {
            return None;
        }
        Some(self.group_of_codes(codes))
    }

    /// Row count per group.
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_groups];
        for &g in &self.group_of_row {
            sizes[g] += 1;
        }
        sizes
    }
}

/// Enumerates the Cartesian product of each sensitive column's code book in
/// lexicographic code order and maps every row of `ds` onto it.
pub fn build_group_index(ds: &Dataset) -> GroupIndex {
    let radices: Vec<usize> = ds.code_books().iter().map(|b| b.len().max(1)).collect();
    let n_groups = radices.iter().product();
    let mut gi = GroupIndex {
        group_of_row: Vec::with_capacity(ds.n_rows()),
        radices,
        n_groups,
    };
    gi.group_of_row = (0..ds.n_rows())
        .map(|r| gi.group_of_codes(ds.sensitive_row(r)))
        .collect();
    gi
}

/// Stratified train/test split. Returns `(train, test)`.
pub fn train_test_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = train_test_indices(ds, test_fraction, seed)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Row indices of a stratified train/test split.
pub fn train_test_indices(
    ds: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::InvalidSchema(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    if ds.n_rows() < 10 {
        return Err(DatasetError::TooFewRows(format!(
            "{} rows, a split needs at least 10",
            ds.n_rows()
        )));
    }
    let mut rng = seed::rng(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut rows in ds.class_rows() {
        rows.shuffle(&mut rng);
        let n_test = (rows.len() as f64 * test_fraction).round() as usize;
        if n_test == 0 || n_test == rows.len() {
            return Err(DatasetError::DegenerateSplit);
        }
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok((train, test))
}

/// One fold of a k-fold partition, as row indices into the source dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Stratified k-fold partition as row indices.
pub fn kfold_indices(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<FoldIndices>> {
    if k < 2 {
        return Err(DatasetError::TooFewRows(format!("k = {k}, need k >= 2")));
    }
    let [neg, pos] = ds.class_counts();
    if neg < k || pos < k {
        return Err(DatasetError::TooFewRows(format!(
            "{k} folds need at least {k} rows per class ({neg} negative, {pos} positive)"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut fold_of = vec![0usize; ds.n_rows()];
    // Dealing both classes round-robin with one running counter keeps fold
    // sizes within one row of each other as well as class-balanced.
    let mut position = 0usize;
    for mut rows in ds.class_rows() {
        rows.shuffle(&mut rng);
        for r in rows {
            fold_of[r] = position % k;
            position += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (validation, train): (Vec<usize>, Vec<usize>) =
                (0..ds.n_rows()).partition(|&r| fold_of[r] == f);
            FoldIndices { train, validation }
        })
        .collect())
}

/// Stratified k-fold partition as `(train part, validation part)` datasets.
pub fn kfold(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<(Dataset, Dataset)>> {
    Ok(kfold_indices(ds, k, seed)?
        .into_iter()
        .map(|f| (ds.subset(&f.train), ds.subset(&f.validation)))
        .collect())
}

/// Randomly drops majority-class rows until both classes have the minority
/// count. Surviving rows keep their original order.
pub fn undersample(ds: &Dataset, seed: u64) -> Result<Dataset> {
    let [neg, pos] = ds.class_rows();
    if neg.is_empty() || pos.is_empty() {
        return Err(DatasetError::DegenerateSplit);
    }
    let (mut majority, minority) = if neg.len() >= pos.len() {
        (neg, pos)
    } else {
        (pos, neg)
    };
    let mut rng = seed::rng(seed);
    majority.shuffle(&mut rng);
    majority.truncate(minority.len());
    let mut keep: Vec<usize> = majority.into_iter().chain(minority).collect();
    keep.sort_unstable();
    Ok(ds.subset(&keep))
}
