#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use polyrec_core::datagen::{generate_dataset, GenerationConfig, Manifest};
use polyrec_core::Workers;
use polyrec_trials::{TrialConfig, TrialStore};

/// Two classes, one grid value, both kinds: 3 images per cell.
pub fn dataset(dir: &Path) -> Arc<Manifest> {
    let config = GenerationConfig {
        classes: vec![3, 4],
        per_class_whole: 3,
        degradation_grid: vec![0.3],
        master_seed: 11,
        output_dir: Some(dir.to_path_buf()),
        ..GenerationConfig::default()
    };
    Arc::new(generate_dataset(&config, Workers::SERIAL).unwrap())
}

pub fn store(manifest: Arc<Manifest>, log: &Path) -> Arc<TrialStore> {
    Arc::new(TrialStore::open(manifest, TrialConfig::default(), log).unwrap())
}
