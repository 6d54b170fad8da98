//! Run archive: every evaluated genome, one JSON object per line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{GaError, Individual};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchiveEntry {
    pub id: u64,
    pub generation: u32,
    pub genome: Vec<f64>,
    pub cv_predictive: f64,
    pub cv_fairness: f64,
}

impl From<&Individual> for ArchiveEntry {
    fn from(ind: &Individual) -> Self {
        Self {
            id: ind.id,
            generation: ind.generation,
            genome: ind.genome.clone(),
            cv_predictive: ind.fitness.predictive,
            cv_fairness: ind.fitness.fairness,
        }
    }
}

pub fn write_archive_jsonl<W: Write>(
    mut writer: W,
    archive: &[ArchiveEntry],
) -> Result<(), GaError> {
    for (i, entry) in archive.iter().enumerate() {
        serde_json::to_writer(&mut writer, entry).map_err(|source| GaError::Json {
            line: i + 1,
            source,
        })?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads an archive back. Blank lines are skipped; every value must be finite.
pub fn read_archive_jsonl<R: BufRead>(reader: R) -> Result<Vec<ArchiveEntry>, GaError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: ArchiveEntry = serde_json::from_str(&line).map_err(|source| GaError::Json {
            line: i + 1,
            source,
        })?;
        let finite = entry.cv_predictive.is_finite()
            && entry.cv_fairness.is_finite()
            && entry.genome.iter().all(|g| g.is_finite());
        if !finite {
            return Err(GaError::InvalidRecord(i + 1, "non-finite value".into()));
        }
        out.push(entry);
    }
    Ok(out)
}
