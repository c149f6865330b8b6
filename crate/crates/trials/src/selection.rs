use std::collections::BTreeMap;

use polyrec_core::datagen::{CellKey, Manifest, Split};
use polyrec_core::geometry::DegradationKind;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::TrialError;

/// Which images a session may draw from. Absent fields match everything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StimulusFilter {
    pub classes: Option<Vec<u32>>,
    pub p_d: Option<Vec<f64>>,
    pub kinds: Option<Vec<DegradationKind>>,
    pub splits: Option<Vec<Split>>,
}

impl StimulusFilter {
    fn matches(&self, key: &CellKey, split: Split) -> bool {
        self.classes.as_ref().is_none_or(|c| c.contains(&key.class_label))
            && self.p_d.as_ref().is_none_or(|ps| {
                ps.iter()
                    .any(|&p| CellKey::new(0, p, key.kind).p_d_bp == key.p_d_bp)
            })
            && self.kinds.as_ref().is_none_or(|k| k.contains(&key.kind))
            && self.splits.as_ref().is_none_or(|s| s.contains(&split))
    }
}

/// Picks `length` images balanced across cells and returns them in a seeded
/// random order.
///
/// Each cell's images are shuffled, then cells are visited round-robin in key
/// order, one image per visit, until `length` images are taken. When
/// `length` is a multiple of the cell count and no cell runs dry, every cell
/// contributes the same number. `None` takes every matching image.
pub fn select_stimuli<R: rand::Rng + ?Sized>(
    manifest: &Manifest,
    filter: &StimulusFilter,
    length: Option<usize>,
    rng: &mut R,
) -> Result<Vec<String>, TrialError> {
    let mut cells: BTreeMap<CellKey, Vec<&str>> = BTreeMap::new();
    for r in &manifest.records {
        let key = CellKey::of(r);
        if filter.matches(&key, r.split) {
            cells.entry(key).or_default().push(&r.image_id);
        }
    }
    if cells.is_empty() {
        return Err(TrialError::Validation("filter selects no images".into()));
    }
    let available: usize = cells.values().map(Vec::len).sum();
    let length = length.unwrap_or(available);
    if length == 0 {
        return Err(TrialError::Validation("session length must be positive".into()));
    }
    if length > available {
        return Err(TrialError::Validation(format!(
            "session length {length} exceeds the {available} matching images"
        )));
    }

    let mut queues: Vec<Vec<&str>> = cells.into_values().collect();
    for q in &mut queues {
        q.shuffle(rng);
    }
    let mut picked = Vec::with_capacity(length);
    let mut round = 0;
    while picked.len() < length {
        for q in &queues {
            if let Some(id) = q.get(round) {
                picked.push(id.to_string());
                if picked.len() == length {
                    break;
                }
            }
        }
        round += 1;
    }
    picked.shuffle(rng);
    Ok(picked)
}
