//! Seeded generation of whole and degraded polygon images, with a manifest
//! recording the provenance of every file, and re-verification of the
//! degradation proportions on disk.

mod config;
mod manifest;
mod seed;
mod verify;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

pub use config::{percent_of, GenerationConfig, SplitFractions, DEFAULT_GRID};
pub use manifest::{
    degraded_image_id, percent_dir, proportion_to_bp, record_path, whole_image_id, CellKey, ImageRecord,
    Manifest, ManifestHeader, HEADER_FILE, PIPELINE_VERSION, RECORDS_FILE,
};
pub use seed::{
    assign_split, derive_cell_seed, derive_seed, rng_from_seed, split_counts, splitmix64, Split, SplitPlan,
};
pub use verify::{verify_dataset, FlagReason, FlaggedRecord, VerificationReport};

use crate::error::{ConfigError, DatasetError};
use crate::exec::{map_ordered, Workers};
use crate::geometry::{erasure_disks, sample_polygon, DegradationSpec, PolygonSpec};
use crate::raster::{encode_png, render_polygon, Canvas};

/// Present in the output directory while generation is running or after
/// it failed.
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

/// One whole shape and the cells derived from it.
#[derive(Debug, Clone, Copy)]
struct BaseJob {
    class_label: u32,
    index: usize,
    split: Split,
}

/// Image plus its record, before anything touches the disk.
pub struct RenderedImage {
    pub record: ImageRecord,
    pub png: Vec<u8>,
}

/// Applies one degradation to a rendered whole shape.
pub fn degrade_canvas(
    whole: &Canvas,
    polygon: &PolygonSpec,
    degradation: &DegradationSpec,
) -> Result<Canvas, DatasetError> {
    let disks = erasure_disks(polygon, degradation)?;
    let mut out = whole.clone();
    out.stamp_disks(&disks);
    Ok(out)
}

/// Samples the polygon of a seed under `config`.
pub fn sample_for_seed(
    config: &GenerationConfig,
    class_label: u32,
    seed: u64,
) -> Result<PolygonSpec, DatasetError> {
    let mut rng = rng_from_seed(seed);
    Ok(sample_polygon(
        &mut rng,
        class_label,
        config.canvas_size,
        config.r_min,
        config.stroke_width,
    )?)
}

/// Degradation cells in manifest order: grid value outer, kind inner.
fn cells(config: &GenerationConfig) -> Result<Vec<DegradationSpec>, DatasetError> {
    let mut out = Vec::with_capacity(config.cells_per_base());
    for &p_d in &config.degradation_grid {
        for &kind in &config.kinds {
            out.push(DegradationSpec::new(kind, p_d)?);
        }
    }
    Ok(out)
}

fn render_base(
    config: &GenerationConfig,
    cells: &[DegradationSpec],
    job: &BaseJob,
) -> Result<Vec<RenderedImage>, DatasetError> {
    let seed = derive_seed(config.master_seed, job.class_label, job.index as u64);
    let polygon = sample_for_seed(config, job.class_label, seed)?;
    let whole = render_polygon(&polygon, config.canvas_size)?;
    let base_id = whole_image_id(seed);

    let mut out = Vec::with_capacity(1 + cells.len());
    out.push(RenderedImage {
        png: encode_png(&whole)?,
        record: ImageRecord {
            path: record_path(job.split, job.class_label, &DegradationSpec::NONE, &base_id),
            image_id: base_id.clone(),
            class_label: job.class_label,
            polygon,
            degradation: DegradationSpec::NONE,
            base_id: base_id.clone(),
            split: job.split,
            seed,
        },
    });

    for (ordinal, deg) in cells.iter().enumerate() {
        let image_id = degraded_image_id(seed, deg);
        let (cell_seed, cell_polygon, cell_base, canvas) = if config.resample_per_cell {
            let cell_seed = derive_cell_seed(seed, ordinal as u64);
            let p = sample_for_seed(config, job.class_label, cell_seed)?;
            let own_whole = render_polygon(&p, config.canvas_size)?;
            let canvas = degrade_canvas(&own_whole, &p, deg)?;
            (cell_seed, p, image_id.clone(), canvas)
        } else {
            (
                seed,
                polygon,
                base_id.clone(),
                degrade_canvas(&whole, &polygon, deg)?,
            )
        };
        out.push(RenderedImage {
            png: encode_png(&canvas)?,
            record: ImageRecord {
                path: record_path(job.split, job.class_label, deg, &image_id),
                image_id,
                class_label: job.class_label,
                polygon: cell_polygon,
                degradation: *deg,
                base_id: cell_base,
                split: job.split,
                seed: cell_seed,
            },
        });
    }
    Ok(out)
}

fn base_jobs(config: &GenerationConfig) -> Vec<BaseJob> {
    let mut jobs = Vec::with_capacity(config.classes.len() * config.per_class_whole);
    for &class_label in &config.classes {
        let plan = SplitPlan::new(
            config.per_class_whole,
            &config.split_fractions,
            config.master_seed,
            class_label,
        );
        for index in 0..config.per_class_whole {
            jobs.push(BaseJob {
                class_label,
                index,
                split: plan.split_of(index),
            });
        }
    }
    jobs
}

/// Renders every image of `config` in memory without writing anything.
/// Results are in manifest order.
pub fn render_all(config: &GenerationConfig, workers: Workers) -> Result<Vec<RenderedImage>, DatasetError> {
    config.validate()?;
    let cells = cells(config)?;
    let jobs = base_jobs(config);
    let nested = map_ordered(&jobs, workers, |job| render_base(config, &cells, job))?;
    Ok(nested.into_iter().flatten().collect())
}

/// Renders whole shapes only, in manifest order. Used for throughput
/// measurements.
pub fn render_wholes(config: &GenerationConfig, workers: Workers) -> Result<Vec<Vec<u8>>, DatasetError> {
    config.validate()?;
    let jobs = base_jobs(config);
    map_ordered(&jobs, workers, |job| {
        let seed = derive_seed(config.master_seed, job.class_label, job.index as u64);
        let polygon = sample_for_seed(config, job.class_label, seed)?;
        Ok(encode_png(&render_polygon(&polygon, config.canvas_size)?)?)
    })
}

/// Generates the dataset described by `config` into `config.output_dir`.
///
/// Every image depends only on its derived seed, so the files and the
/// manifest are byte-identical for any worker count. The manifest is written
/// last; on failure an [`INCOMPLETE_MARKER`] file holding the error is left
/// behind.
pub fn generate_dataset(config: &GenerationConfig, workers: Workers) -> Result<Manifest, DatasetError> {
    config.validate()?;
    let out_dir = config
        .output_dir
        .clone()
        .ok_or_else(|| ConfigError::Invalid("output_dir is required".into()))?;
    let cells = cells(config)?;
    let jobs = base_jobs(config);

    fs::create_dir_all(&out_dir).map_err(|e| DatasetError::io(&out_dir, e))?;
    let marker = out_dir.join(INCOMPLETE_MARKER);
    fs::write(&marker, b"generation in progress\n").map_err(|e| DatasetError::io(&marker, e))?;
    for stale in [RECORDS_FILE, HEADER_FILE] {
        let path = out_dir.join(stale);
        if path.exists() {
            fs::remove_file(&path).map_err(|e| DatasetError::io(&path, e))?;
        }
    }

    let result = write_all(config, &cells, &jobs, &out_dir, workers);
    match result {
        Ok(manifest) => {
            fs::remove_file(&marker).map_err(|e| DatasetError::io(&marker, e))?;
            Ok(manifest)
        }
        Err(err) => {
            let _ = fs::write(&marker, format!("generation failed: {err}\n"));
            Err(err)
        }
    }
}

fn write_all(
    config: &GenerationConfig,
    cells: &[DegradationSpec],
    jobs: &[BaseJob],
    out_dir: &Path,
    workers: Workers,
) -> Result<Manifest, DatasetError> {
    let mut dirs = BTreeSet::new();
    for job in jobs {
        for deg in std::iter::once(&DegradationSpec::NONE).chain(cells) {
            let rel = record_path(job.split, job.class_label, deg, "x");
            dirs.insert(
                out_dir
                    .join(rel)
                    .parent()
                    .map(Path::to_path_buf)
                    .unwrap_or_default(),
            );
        }
    }
    for dir in &dirs {
        fs::create_dir_all(dir).map_err(|e| DatasetError::io(dir, e))?;
    }

    let nested = map_ordered(jobs, workers, |job| {
        let images = render_base(config, cells, job)?;
        let mut records = Vec::with_capacity(images.len());
        for image in images {
            let path: PathBuf = out_dir.join(&image.record.path);
            fs::write(&path, &image.png).map_err(|e| DatasetError::io(&path, e))?;
            records.push(image.record);
        }
        Ok(records)
    })?;
    let records: Vec<ImageRecord> = nested.into_iter().flatten().collect();

    let manifest = Manifest::new(
        PIPELINE_VERSION.to_string(),
        Some(config.clone()),
        records,
        out_dir.to_path_buf(),
    );
    let unique: std::collections::HashSet<&str> =
        manifest.records.iter().map(|r| r.image_id.as_str()).collect();
    if unique.len() != manifest.len() {
        return Err(ConfigError::Invalid("derived seeds collided; choose another master_seed".into()).into());
    }
    manifest.write(out_dir)?;
    Ok(manifest)
}
