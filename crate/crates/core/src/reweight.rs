//! Slot-level sample weights and their expansion to per-row weights.
//!
//! A slot is one (sensitive group, class) combination. Every row in a slot
//! shares the slot's weight.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, GroupIndex};

#[derive(Debug, Error)]
pub enum ReweightError {
    #[error("slot weight vector has length {got}, group index defines {expected} slots")]
    SlotMismatch { expected: usize, got: usize },
    #[error("weights json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid weights document: {0}")]
    Invalid(String),
}

/// One weight per (group, class) slot, in [`GroupIndex`] slot order.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotWeights {
    values: Vec<f64>,
}

impl SlotWeights {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, gi: &GroupIndex, group: usize, class: u8) -> f64 {
        self.values[gi.slot_of(group, class)]
    }

    /// Serializes as `{"slots": [{"group": [codes..], "class": c, "weight": w}, ..]}`.
    pub fn to_json(&self, gi: &GroupIndex) -> Result<String, ReweightError> {
        self.check(gi)?;
        let slots = (0..gi.n_groups())
            .flat_map(|g| (0..=1u8).map(move |c| (g, c)))
            .map(|(g, c)| SlotRecord {
                group: gi.group_codes(g),
                class: c,
                weight: self.values[gi.slot_of(g, c)],
            })
            .collect();
        Ok(serde_json::to_string_pretty(&WeightsDocument { slots })?)
    }

    /// Parses the document written by [`SlotWeights::to_json`] against `gi`.
    /// Every slot must appear exactly once.
    pub fn from_json(s: &str, gi: &GroupIndex) -> Result<Self, ReweightError> {
        let doc: WeightsDocument = serde_json::from_str(s)?;
        let mut values = vec![None; gi.n_slots()];
        for rec in doc.slots {
            if rec.class > 1 {
                return Err(ReweightError::Invalid(format!(
                    "class {} is not 0 or 1",
                    rec.class
                )));
            }
            if !rec.weight.is_finite() || rec.weight < 0.0 {
                return Err(ReweightError::Invalid(format!(
                    "weight {} is not usable",
                    rec.weight
                )));
            }
            let g = gi
                .group_from_codes_checked(&rec.group)
                .ok_or_else(|| ReweightError::Invalid(format!("unknown group {:?}", rec.group)))?;
            let slot = &mut values[gi.slot_of(g, rec.class)];
            if slot.replace(rec.weight).is_some() {
                return Err(ReweightError::Invalid(format!(
                    "slot ({:?}, {}) listed twice",
                    rec.group, rec.class
                )));
            }
        }
        let values = values
            .into_iter()
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| ReweightError::Invalid("not every slot is listed".into()))?;
        Ok(Self { values })
    }

    fn check(&self, gi: &GroupIndex) -> Result<(), ReweightError> {
        if self.values.len() != gi.n_slots() {
            return Err(ReweightError::SlotMismatch {
                expected: gi.n_slots(),
                got: self.values.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsDocument {
    slots: Vec<SlotRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SlotRecord {
    group: Vec<u32>,
    class: u8,
    weight: f64,
}

/// Kamiran-Calders reweighing: each slot gets `P(group) * P(class) / P(group, class)`,
/// estimated from `ds`. Slots no row falls into get 1.0.
pub fn deterministic_weights(ds: &Dataset, gi: &GroupIndex) -> SlotWeights {
    let n = ds.n_rows() as f64;
    let mut group_count = vec![0usize; gi.n_groups()];
    let mut class_count = [0usize; 2];
    let mut joint = vec![0usize; gi.n_slots()];
    for (&g, &c) in gi.group_of_row().iter().zip(ds.target()) {
        group_count[g] += 1;
        class_count[c as usize] += 1;
        joint[gi.slot_of(g, c)] += 1;
    }
    let values = (0..gi.n_groups())
        .flat_map(|g| (0..=1u8).map(move |c| (g, c)))
        .map(|(g, c)| {
            let j = joint[gi.slot_of(g, c)];
            if j == 0 {
                1.0
            } else {
                (group_count[g] as f64 / n) * (class_count[c as usize] as f64 / n) / (j as f64 / n)
            }
        })
        .collect();
    SlotWeights { values }
}

pub fn equal_weights(gi: &GroupIndex) -> SlotWeights {
    SlotWeights {
        values: vec![1.0; gi.n_slots()],
    }
}

/// Per-row weights: row `r` receives the weight of its (group, class) slot.
pub fn expand_and_assign(
    sw: &SlotWeights,
    ds: &Dataset,
    gi: &GroupIndex,
) -> Result<Vec<f64>, ReweightError> {
    expand_slots(sw.values(), ds.target(), gi)
}

/// [`expand_and_assign`] over a bare slot vector, as used for genomes.
pub fn expand_slots(
    slots: &[f64],
    target: &[u8],
    gi: &GroupIndex,
) -> Result<Vec<f64>, ReweightError> {
    if slots.len() != gi.n_slots() {
        return Err(ReweightError::SlotMismatch {
            expected: gi.n_slots(),
            got: slots.len(),
        });
    }
    if target.len() != gi.group_of_row().len() {
        return Err(ReweightError::Invalid(format!(
            "group index covers {} rows, dataset has {}",
            gi.group_of_row().len(),
            target.len()
        )));
    }
    Ok(gi
        .group_of_row()
        .iter()
        .zip(target)
        .map(|(&g, &c)| slots[gi.slot_of(g, c)])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::fixtures::promotion;
    use crate::dataset::{build_group_index, FeatureMatrix};
    use proptest::prelude::*;

    #[test]
    fn promotion_slot_weights() {
        let ds = promotion();
        let gi = build_group_index(&ds);
        let sw = deterministic_weights(&ds, &gi);
        // Groups: W = 0, H = 1.
        let expect = [(0, 1, 0.84), (0, 0, 1.4), (1, 1, 1.8), (1, 0, 0.6)];
        for (g, c, w) in expect {
            assert!((sw.get(&gi, g, c) - w).abs() < 1e-9, "slot ({g},{c})");
        }
    }

    #[test]
    fn promotion_row_weights() {
        let ds = promotion();
        let gi = build_group_index(&ds);
        let rows = expand_and_assign(&deterministic_weights(&ds, &gi), &ds, &gi).unwrap();
        let table = [0.84, 0.84, 0.84, 1.4, 0.6, 0.6, 0.84, 1.8, 1.4, 0.84];
        for (got, want) in rows.iter().zip(table) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn independent_groups_get_unit_weights() {
        // Each group has the same 50% positive rate.
        let target = vec![1, 0, 1, 0, 1, 0, 1, 0];
        let sensitive = vec![
            vec![0],
            vec![0],
            vec![1],
            vec![1],
            vec![0],
            vec![0],
            vec![1],
            vec![1],
        ];
        let ds = Dataset::from_parts(
            vec![],
            FeatureMatrix::new(vec![], 0).unwrap(),
            target,
            vec!["s".into()],
            sensitive,
            vec![vec!["a".into(), "b".into()]],
        )
        .unwrap();
        let gi = build_group_index(&ds);
        for &w in deterministic_weights(&ds, &gi).values() {
            assert!((w - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_slots_default_to_one() {
        let csv = "s,x,y\na,1,1\na,2,0\nb,3,1\n";
        let schema = crate::dataset::DatasetSchema::new("y", "1", vec!["s".into()]);
        let ds = crate::dataset::parse_csv(csv.as_bytes(), &schema).unwrap();
        let gi = build_group_index(&ds);
        assert_eq!(deterministic_weights(&ds, &gi).get(&gi, 1, 0), 1.0);
    }

    #[test]
    fn equal_weights_expand_to_ones() {
        let ds = promotion();
        let gi = build_group_index(&ds);
        let eq = equal_weights(&gi);
        assert_eq!(eq.values(), &[1.0; 4]);
        assert_eq!(expand_and_assign(&eq, &ds, &gi).unwrap(), vec![1.0; 10]);
    }

    #[test]
    fn slot_mismatch() {
        let ds = promotion();
        let gi = build_group_index(&ds);
        let err = expand_and_assign(&SlotWeights::new(vec![1.0; 3]), &ds, &gi).unwrap_err();
        assert!(matches!(
            err,
            ReweightError::SlotMismatch {
                expected: 4,
                got: 3
            }
        ));
    }

    #[test]
    fn json_document_shape_and_parse() {
        let ds = promotion();
        let gi = build_group_index(&ds);
        let sw = deterministic_weights(&ds, &gi);
        let json = sw.to_json(&gi).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let first = &v["slots"][0];
        assert_eq!(first["group"], serde_json::json!([0]));
        assert_eq!(first["class"], 0);
        assert!((first["weight"].as_f64().unwrap() - 1.4).abs() < 1e-9);
        assert_eq!(SlotWeights::from_json(&json, &gi).unwrap(), sw);

        let partial = r#"{"slots":[{"group":[0],"class":0,"weight":1.0}]}"#;
        assert!(SlotWeights::from_json(partial, &gi).is_err());
    }

    proptest! {
        #[test]
        fn reweighing_balances_positive_mass(
            rows in proptest::collection::vec((0u32..3, 0u8..2), 1..200)
        ) {
            let target: Vec<u8> = rows.iter().map(|r| r.1).collect();
            let sensitive: Vec<Vec<u32>> = rows.iter().map(|r| vec![r.0]).collect();
            let n = rows.len() as f64;
            let ds = Dataset::from_parts(
                vec![],
                FeatureMatrix::new(vec![], 0).unwrap(),
                target,
                vec!["s".into()],
                sensitive,
                vec![vec!["a".into(), "b".into(), "c".into()]],
            ).unwrap();
            let gi = build_group_index(&ds);
            let w = expand_and_assign(&deterministic_weights(&ds, &gi), &ds, &gi).unwrap();
            let p_pos = ds.class_counts()[1] as f64 / n;
            for (g, &size) in gi.group_sizes().iter().enumerate() {
                let mass: f64 = (0..ds.n_rows())
                    .filter(|&r| gi.group_of_row()[r] == g && ds.target()[r] == 1)
                    .map(|r| w[r])
                    .sum();
                let expected = if gi.group_sizes()[g] > 0 && mass > 0.0 {
                    size as f64 / n * p_pos
                } else {
                    0.0
                };
                prop_assert!((mass / n - expected).abs() < 1e-12);
            }
        }

        #[test]
        fn expansion_commutes_with_row_permutation(
            perm in Just((0..10usize).collect::<Vec<_>>()).prop_shuffle()
        ) {
            let ds = promotion();
            let gi = build_group_index(&ds);
            let sw = deterministic_weights(&ds, &gi);
            let full = expand_and_assign(&sw, &ds, &gi).unwrap();
            let shuffled = ds.subset(&perm);
            let gi2 = build_group_index(&shuffled);
            let part = expand_and_assign(&sw, &shuffled, &gi2).unwrap();
            for (i, &r) in perm.iter().enumerate() {
                prop_assert_eq!(part[i], full[r]);
            }
        }
    }
}
