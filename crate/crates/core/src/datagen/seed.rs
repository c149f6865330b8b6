//! Seed derivation and split assignment. Both depend only on their inputs,
//! never on which worker runs a record.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::SplitFractions;

/// Domain tag mixed into the master seed for split permutations.
const SPLIT_DOMAIN: u64 = 0x5350_4c49_545f_5045; // "SPLIT_PE"
/// Domain tag for per-cell resampling.
const CELL_DOMAIN: u64 = 0x4345_4c4c_5f52_4553; // "CELL_RES"

/// SplitMix64 finalizer; a bijection on `u64`.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of whole shape `index` of class `class_label`.
pub fn derive_seed(master_seed: u64, class_label: u32, index: u64) -> u64 {
    let h = splitmix64(master_seed);
    let h = splitmix64(h ^ u64::from(class_label));
    splitmix64(h ^ index)
}

/// Seed for an independently resampled degraded cell of a base.
pub fn derive_cell_seed(base_seed: u64, cell_ordinal: u64) -> u64 {
    splitmix64(splitmix64(base_seed ^ CELL_DOMAIN) ^ cell_ordinal)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

/// Exact split sizes: floors first, then leftovers one at a time to train,
/// val, test in turn.
pub fn split_counts(total: usize, fractions: &SplitFractions) -> [usize; 3] {
    let mut counts = fractions
        .as_array()
        .map(|f| (f * total as f64 + 1e-9).floor() as usize);
    let mut assigned: usize = counts.iter().sum();
    let mut slot = 0;
    while assigned < total {
        counts[slot % 3] += 1;
        assigned += 1;
        slot += 1;
    }
    counts
}

/// Split assignment for the whole shapes of one class.
#[derive(Debug, Clone)]
pub struct SplitPlan {
    counts: [usize; 3],
    /// `rank[index]` is the index's position in the seeded permutation.
    rank: Vec<usize>,
}

impl SplitPlan {
    pub fn new(
        per_class_whole: usize,
        fractions: &SplitFractions,
        master_seed: u64,
        class_label: u32,
    ) -> Self {
        let counts = split_counts(per_class_whole, fractions);
        let mut order: Vec<usize> = (0..per_class_whole).collect();
        let mut rng = rng_from_seed(derive_seed(master_seed ^ SPLIT_DOMAIN, class_label, 0));
        order.shuffle(&mut rng);
        let mut rank = vec![0; per_class_whole];
        for (position, &index) in order.iter().enumerate() {
            rank[index] = position;
        }
        Self { counts, rank }
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn split_of(&self, base_index: usize) -> Split {
        let position = self.rank[base_index];
        if position < self.counts[0] {
            Split::Train
        } else if position < self.counts[0] + self.counts[1] {
            Split::Val
        } else {
            Split::Test
        }
    }
}

/// Split of one whole shape; see [`SplitPlan`] for repeated queries.
pub fn assign_split(
    base_index: usize,
    per_class_whole: usize,
    fractions: &SplitFractions,
    master_seed: u64,
    class_label: u32,
) -> Split {
    SplitPlan::new(per_class_whole, fractions, master_seed, class_label).split_of(base_index)
}
