//! Two-objective Pareto fronts and their hypervolume.
//!
//! Both coordinates are minimized: `e = 1 - predictive`, `f = fairness`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::EvaluatedPoint;

#[derive(Debug, Error)]
pub enum ParetoError {
    #[error("cannot build a front from no points")]
    EmptyInput,
    #[error("non-finite point ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("front csv: {0}")]
    Csv(#[from] csv::Error),
}

/// A point in minimization space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinPoint {
    pub e: f64,
    pub f: f64,
}

impl MinPoint {
    pub const REFERENCE: MinPoint = MinPoint { e: 1.0, f: 1.0 };

    pub fn new(e: f64, f: f64) -> Self {
        Self { e, f }
    }

    /// True when `self` is no worse in both coordinates and better in one.
    pub fn dominates(&self, other: &MinPoint) -> bool {
        self.e <= other.e && self.f <= other.f && (self.e < other.e || self.f < other.f)
    }
}

impl From<EvaluatedPoint> for MinPoint {
    fn from(p: EvaluatedPoint) -> Self {
        Self {
            e: 1.0 - p.predictive,
            f: p.fairness,
        }
    }
}

/// Mutually nondominated points, sorted by ascending `e` (and therefore
/// strictly descending `f`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParetoFront {
    points: Vec<MinPoint>,
}

impl ParetoFront {
    pub fn points(&self) -> &[MinPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Extracts the nondominated subset of `points`, without duplicates.
pub fn pareto_front(points: &[MinPoint]) -> Result<ParetoFront, ParetoError> {
    if points.is_empty() {
        return Err(ParetoError::EmptyInput);
    }
    if let Some(p) = points.iter().find(|p| !p.e.is_finite() || !p.f.is_finite()) {
        return Err(ParetoError::NonFinite(p.e, p.f));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.e.total_cmp(&b.e).then(a.f.total_cmp(&b.f)));
    let mut front: Vec<MinPoint> = Vec::new();
    for p in sorted {
        // Sorted by e, so p survives only if it improves on the best f so far;
        // this also drops equal-e points with larger f, and duplicates.
        if front.last().is_none_or(|last| p.f < last.f) {
            front.push(p);
        }
    }
    Ok(ParetoFront { points: front })
}

/// Area dominated by `front` and bounded by `reference`. Points that do not
/// strictly dominate the reference in both coordinates contribute nothing.
pub fn hypervolume_2d(front: &ParetoFront, reference: MinPoint) -> f64 {
    let inside: Vec<&MinPoint> = front
        .points
        .iter()
        .filter(|p| p.e < reference.e && p.f < reference.f)
        .collect();
    inside
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let next_e = inside.get(i + 1).map_or(reference.e, |q| q.e);
            (next_e - p.e) * (reference.f - p.f)
        })
        .sum()
}

/// Convenience: front of `points`, then its hypervolume against `(1, 1)`.
pub fn hypervolume_of(points: &[MinPoint]) -> Result<f64, ParetoError> {
    Ok(hypervolume_2d(&pareto_front(points)?, MinPoint::REFERENCE))
}

/// One row of a front file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontRow {
    pub replicate: usize,
    pub method: String,
    pub e: f64,
    pub f: f64,
}

/// Writes front rows as CSV with header `replicate,method,e,f`.
pub fn write_front_csv<W: Write>(writer: W, rows: &[FrontRow]) -> Result<(), ParetoError> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(["replicate", "method", "e", "f"])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_front_csv<R: Read>(reader: R) -> Result<Vec<FrontRow>, ParetoError> {
    let mut r = csv::Reader::from_reader(reader);
    let rows = r.deserialize().collect::<Result<Vec<FrontRow>, _>>()?;
    if let Some(row) = rows.iter().find(|r| !r.e.is_finite() || !r.f.is_finite()) {
        return Err(ParetoError::NonFinite(row.e, row.f));
    }
    Ok(rows)
}
