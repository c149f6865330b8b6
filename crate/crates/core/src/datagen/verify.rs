use std::collections::HashMap;
use std::fs;

use serde::Serialize;

use super::manifest::{ImageRecord, Manifest};
use crate::error::DatasetError;
use crate::exec::{map_ordered, Workers};
use crate::raster::{decode_png, measure_degradation, render_polygon, Canvas};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum FlagReason {
    /// Measured erasure is further than the tolerance from the declared one.
    Deviation {
        measured: f64,
    },
    Missing {
        detail: String,
    },
    Corrupt {
        detail: String,
    },
    /// A whole image does not match a fresh render of its polygon.
    WholeMismatch,
    /// The base record of a degraded image is missing or unusable.
    BadBase {
        base_id: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlaggedRecord {
    pub image_id: String,
    pub declared: f64,
    #[serde(flatten)]
    pub reason: FlagReason,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub tolerance: f64,
    pub checked: usize,
    /// Degraded records whose proportion was measured.
    pub measured: usize,
    pub max_abs_deviation: f64,
    pub mean_abs_deviation: f64,
    pub mean_signed_error: f64,
    pub flagged: Vec<FlaggedRecord>,
}

impl VerificationReport {
    pub fn is_clean(&self) -> bool {
        self.flagged.is_empty()
    }
}

struct Outcome {
    /// `Some(measured - declared)` when a proportion was measured.
    signed: Option<f64>,
    flag: Option<FlagReason>,
}

fn load(manifest: &Manifest, record: &ImageRecord) -> Result<Canvas, FlagReason> {
    let path = manifest.image_path(record);
    let bytes = fs::read(&path).map_err(|e| FlagReason::Missing {
        detail: format!("{}: {e}", path.display()),
    })?;
    decode_png(&bytes).map_err(|e| FlagReason::Corrupt {
        detail: e.to_string(),
    })
}

/// Re-measures every degraded image against its base and checks each whole
/// image against a fresh render of its polygon.
///
/// Unreadable files are flagged rather than aborting the run; the error case
/// is reserved for a failing worker pool.
pub fn verify_dataset(
    manifest: &Manifest,
    tolerance: f64,
    workers: Workers,
) -> Result<VerificationReport, DatasetError> {
    let canvas_size = manifest
        .config
        .as_ref()
        .map(|c| c.canvas_size)
        .unwrap_or(crate::geometry::DEFAULT_CANVAS_SIZE);

    // Group records by base so each base image is decoded once.
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<&ImageRecord>> = HashMap::new();
    for record in &manifest.records {
        let key = record.base_id.as_str();
        groups.entry(key).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        groups.get_mut(key).unwrap().push(record);
    }
    let jobs: Vec<(&str, &Vec<&ImageRecord>)> = order.iter().map(|k| (*k, &groups[k])).collect();

    let per_group = map_ordered(&jobs, workers, |(base_id, records)| {
        Ok(verify_group(manifest, canvas_size, base_id, records, tolerance))
    })?;

    let mut report = VerificationReport {
        tolerance,
        checked: 0,
        measured: 0,
        max_abs_deviation: 0.0,
        mean_abs_deviation: 0.0,
        mean_signed_error: 0.0,
        flagged: Vec::new(),
    };
    let (mut sum_abs, mut sum_signed) = (0.0, 0.0);
    for group in per_group {
        for (record, outcome) in group {
            report.checked += 1;
            if let Some(signed) = outcome.signed {
                report.measured += 1;
                sum_abs += signed.abs();
                sum_signed += signed;
                report.max_abs_deviation = report.max_abs_deviation.max(signed.abs());
            }
            if let Some(reason) = outcome.flag {
                report.flagged.push(FlaggedRecord {
                    image_id: record.image_id.clone(),
                    declared: record.degradation.proportion,
                    reason,
                });
            }
        }
    }
    if report.measured > 0 {
        report.mean_abs_deviation = sum_abs / report.measured as f64;
        report.mean_signed_error = sum_signed / report.measured as f64;
    }
    Ok(report)
}

fn verify_group<'a>(
    manifest: &Manifest,
    canvas_size: u32,
    base_id: &str,
    records: &[&'a ImageRecord],
    tolerance: f64,
) -> Vec<(&'a ImageRecord, Outcome)> {
    // The reference every degraded record in this group is measured against.
    let base_record = manifest.get(base_id);
    let reference: Result<Canvas, FlagReason> = match base_record {
        Some(base) if base.is_whole() => load(manifest, base),
        // Independently resampled cells are their own base: measure against
        // a fresh render of their polygon.
        Some(base) => render_polygon(&base.polygon, canvas_size).map_err(|e| FlagReason::Corrupt {
            detail: e.to_string(),
        }),
        None => Err(FlagReason::BadBase {
            base_id: base_id.to_string(),
        }),
    };

    records
        .iter()
        .map(|&record| {
            let outcome = if record.is_whole() {
                check_whole(manifest, canvas_size, record)
            } else {
                check_degraded(manifest, record, reference.as_ref(), base_id, tolerance)
            };
            (record, outcome)
        })
        .collect()
}

fn check_whole(manifest: &Manifest, canvas_size: u32, record: &ImageRecord) -> Outcome {
    let flag = match load(manifest, record) {
        Err(reason) => Some(reason),
        Ok(canvas) => match render_polygon(&record.polygon, canvas_size) {
            Ok(expected) if expected == canvas => None,
            Ok(_) => Some(FlagReason::WholeMismatch),
            Err(e) => Some(FlagReason::Corrupt {
                detail: e.to_string(),
            }),
        },
    };
    // A whole image is its own reference; its deviation is zero by
    // definition and stays out of the averages.
    Outcome { signed: None, flag }
}

fn check_degraded(
    manifest: &Manifest,
    record: &ImageRecord,
    reference: Result<&Canvas, &FlagReason>,
    base_id: &str,
    tolerance: f64,
) -> Outcome {
    let reference = match reference {
        Ok(canvas) => canvas,
        Err(_) => {
            return Outcome {
                signed: None,
                flag: Some(FlagReason::BadBase {
                    base_id: base_id.to_string(),
                }),
            }
        }
    };
    let degraded = match load(manifest, record) {
        Ok(canvas) => canvas,
        Err(reason) => {
            return Outcome {
                signed: None,
                flag: Some(reason),
            }
        }
    };
    match measure_degradation(reference, &degraded) {
        Ok(measured) => {
            let signed = measured - record.degradation.proportion;
            Outcome {
                signed: Some(signed),
                flag: (signed.abs() > tolerance).then_some(FlagReason::Deviation { measured }),
            }
        }
        Err(e) => Outcome {
            signed: None,
            flag: Some(FlagReason::Corrupt {
                detail: e.to_string(),
            }),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_dataset, GenerationConfig};
    use crate::raster::{encode_png, Canvas};
    use std::path::Path;

    fn generate(dir: &Path) -> Manifest {
        let config = GenerationConfig {
            classes: vec![3, 6],
            per_class_whole: 5,
            degradation_grid: vec![0.2, 0.6],
            master_seed: 5,
            output_dir: Some(dir.to_path_buf()),
            ..Default::default()
        };
        generate_dataset(&config, Workers::SERIAL).unwrap()
    }

    #[test]
    fn fresh_dataset_is_clean() {
        let tmp = tempfile::tempdir().unwrap();
        let manifest = generate(tmp.path());
        let report = verify_dataset(&manifest, 0.04, Workers::SERIAL).unwrap();
        assert!(report.is_clean(), "{:?}", report.flagged);
        assert_eq!(report.checked, manifest.len());
        assert_eq!(
            report.measured,
            manifest.records.iter().filter(|r| !r.is_whole()).count()
        );
        assert!(report.max_abs_deviation <= 0.04);
    }

    #[test]
    fn tampered_image_is_flagged() {
        let tmp = tempfile::tempdir().unwrap();
        let manifest = generate(tmp.path());
        let victim = manifest.records.iter().find(|r| !r.is_whole()).unwrap();
        let white = encode_png(&Canvas::white(224, 224)).unwrap();
        fs::write(manifest.image_path(victim), white).unwrap();
        let report = verify_dataset(&manifest, 0.04, Workers::SERIAL).unwrap();
        assert_eq!(report.flagged.len(), 1);
        assert_eq!(report.flagged[0].image_id, victim.image_id);
        assert_eq!(report.flagged[0].reason, FlagReason::Deviation { measured: 1.0 });
    }

    #[test]
    fn missing_and_corrupt_files_are_listed() {
        let tmp = tempfile::tempdir().unwrap();
        let manifest = generate(tmp.path());
        let degraded: Vec<_> = manifest.records.iter().filter(|r| !r.is_whole()).collect();
        fs::remove_file(manifest.image_path(degraded[0])).unwrap();
        fs::write(manifest.image_path(degraded[1]), b"junk").unwrap();
        let report = verify_dataset(&manifest, 0.04, Workers::SERIAL).unwrap();
        assert_eq!(report.flagged.len(), 2);
        assert!(matches!(report.flagged[0].reason, FlagReason::Missing { .. }));
        assert!(matches!(report.flagged[1].reason, FlagReason::Corrupt { .. }));
    }

    #[test]
    fn blanked_whole_flags_the_whole_group() {
        let tmp = tempfile::tempdir().unwrap();
        let manifest = generate(tmp.path());
        let whole = &manifest.records[0];
        fs::write(
            manifest.image_path(whole),
            encode_png(&Canvas::white(224, 224)).unwrap(),
        )
        .unwrap();
        let report = verify_dataset(&manifest, 0.04, Workers::SERIAL).unwrap();
        // The whole itself plus its four degraded variants.
        assert_eq!(report.flagged.len(), 5);
        assert_eq!(report.flagged[0].reason, FlagReason::WholeMismatch);
    }
}
