//! Dataset manifest: a JSON header (`manifest.json`) plus one JSON record
//! per line (`manifest.jsonl`). Record paths are relative to the manifest's
//! directory.

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{percent_of, GenerationConfig};
use super::seed::Split;
use crate::error::DatasetError;
use crate::geometry::{DegradationKind, DegradationSpec, PolygonSpec};

pub const HEADER_FILE: &str = "manifest.json";
pub const RECORDS_FILE: &str = "manifest.jsonl";

/// Version string stamped into every manifest header.
pub const PIPELINE_VERSION: &str = concat!("polyrec/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub class_label: u32,
    pub polygon: PolygonSpec,
    pub degradation: DegradationSpec,
    /// Whole-shape parent; equal to `image_id` for whole shapes.
    pub base_id: String,
    pub split: Split,
    pub seed: u64,
    pub path: String,
}

impl ImageRecord {
    pub fn is_whole(&self) -> bool {
        self.degradation.kind == DegradationKind::None
    }
}

/// One `(class, p_d, kind)` bucket, with `p_d` held as basis points so that
/// keys order and compare exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub class_label: u32,
    pub p_d_bp: u32,
    pub kind: DegradationKind,
}

impl CellKey {
    pub fn new(class_label: u32, p_d: f64, kind: DegradationKind) -> Self {
        Self {
            class_label,
            p_d_bp: proportion_to_bp(p_d),
            kind,
        }
    }

    pub fn of(record: &ImageRecord) -> Self {
        Self::new(
            record.class_label,
            record.degradation.proportion,
            record.degradation.kind,
        )
    }

    pub fn p_d(&self) -> f64 {
        f64::from(self.p_d_bp) / 10_000.0
    }
}

pub fn proportion_to_bp(p_d: f64) -> u32 {
    (p_d * 10_000.0).round() as u32
}

/// `p050`-style directory component for a proportion.
pub fn percent_dir(p_d: f64) -> String {
    match percent_of(p_d) {
        Ok(pct) => format!("p{pct:03}"),
        Err(_) => format!("p{:05}", proportion_to_bp(p_d)),
    }
}

pub fn whole_image_id(seed: u64) -> String {
    format!("{seed:016x}")
}

pub fn degraded_image_id(base_seed: u64, deg: &DegradationSpec) -> String {
    let tag = match deg.kind {
        DegradationKind::Corner => 'c',
        DegradationKind::Edge => 'e',
        DegradationKind::None => return whole_image_id(base_seed),
    };
    format!("{base_seed:016x}-{tag}{}", &percent_dir(deg.proportion)[1..])
}

pub fn record_path(split: Split, class_label: u32, deg: &DegradationSpec, image_id: &str) -> String {
    format!(
        "{split}/{class_label}/{}/{}/{image_id}.png",
        deg.kind,
        percent_dir(deg.proportion)
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub version: String,
    pub config: GenerationConfig,
    pub record_count: usize,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub version: String,
    pub config: Option<GenerationConfig>,
    pub records: Vec<ImageRecord>,
    /// Directory that record paths are relative to.
    pub root: PathBuf,
    index: HashMap<String, usize>,
}

impl Manifest {
    pub fn new(
        version: String,
        config: Option<GenerationConfig>,
        records: Vec<ImageRecord>,
        root: PathBuf,
    ) -> Self {
        let index = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.image_id.clone(), i))
            .collect();
        Self {
            version,
            config,
            records,
            root,
            index,
        }
    }

    pub fn get(&self, image_id: &str) -> Option<&ImageRecord> {
        self.index.get(image_id).map(|&i| &self.records[i])
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Side counts present in the manifest.
    pub fn class_set(&self) -> BTreeSet<u32> {
        match &self.config {
            Some(c) => c.classes.iter().copied().collect(),
            None => self.records.iter().map(|r| r.class_label).collect(),
        }
    }

    pub fn image_path(&self, record: &ImageRecord) -> PathBuf {
        self.root.join(&record.path)
    }

    /// Loads from a dataset directory or from a `.jsonl` file. The header is
    /// read from `manifest.json` next to the records when present.
    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let records_path = if path.is_dir() {
            path.join(RECORDS_FILE)
        } else {
            path.to_path_buf()
        };
        let root = records_path.parent().map(Path::to_path_buf).unwrap_or_default();
        let header_path = root.join(HEADER_FILE);
        let header: Option<ManifestHeader> = if header_path.is_file() {
            let text = fs::read_to_string(&header_path).map_err(|e| DatasetError::io(&header_path, e))?;
            Some(serde_json::from_str(&text).map_err(|e| DatasetError::Manifest {
                path: header_path.clone(),
                line: e.line(),
                message: e.to_string(),
            })?)
        } else {
            None
        };

        let file = File::open(&records_path).map_err(|e| DatasetError::io(&records_path, e))?;
        let mut records = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| DatasetError::io(&records_path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: ImageRecord = serde_json::from_str(&line).map_err(|e| DatasetError::Manifest {
                path: records_path.clone(),
                line: n + 1,
                message: e.to_string(),
            })?;
            records.push(record);
        }
        let (version, config) = match header {
            Some(h) => (h.version, Some(h.config)),
            None => (String::new(), None),
        };
        let manifest = Manifest::new(version, config, records, root);
        if manifest.index.len() != manifest.records.len() {
            return Err(DatasetError::Manifest {
                path: records_path,
                line: 0,
                message: "duplicate image_id".into(),
            });
        }
        Ok(manifest)
    }

    /// Writes header then records, each through a temporary file renamed
    /// into place. The records file appears last, so its presence means the
    /// dataset is complete.
    pub fn write(&self, dir: &Path) -> Result<(), DatasetError> {
        let header = ManifestHeader {
            version: self.version.clone(),
            config: self.config.clone().unwrap_or_default(),
            record_count: self.records.len(),
        };
        let mut header_bytes = serde_json::to_vec_pretty(&header).expect("header serializes");
        header_bytes.push(b'\n');
        write_atomic(&dir.join(HEADER_FILE), |w| w.write_all(&header_bytes))?;
        write_atomic(&dir.join(RECORDS_FILE), |w| {
            for record in &self.records {
                serde_json::to_writer(&mut *w, record).map_err(std::io::Error::other)?;
                w.write_all(b"\n")?;
            }
            Ok(())
        })
    }
}

fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), DatasetError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let file = File::create(&tmp).map_err(|e| DatasetError::io(&tmp, e))?;
    let mut writer = BufWriter::new(file);
    body(&mut writer)
        .and_then(|_| writer.flush())
        .map_err(|e| DatasetError::io(&tmp, e))?;
    drop(writer);
    fs::rename(&tmp, path).map_err(|e| DatasetError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_and_paths() {
        let deg = DegradationSpec::new(DegradationKind::Edge, 0.05).unwrap();
        assert_eq!(degraded_image_id(0xab, &deg), "00000000000000ab-e005");
        assert_eq!(whole_image_id(0xab), "00000000000000ab");
        assert_eq!(record_path(Split::Val, 6, &deg, "x"), "val/6/edge/p005/x.png");
        assert_eq!(
            record_path(Split::Train, 3, &DegradationSpec::NONE, "y"),
            "train/3/none/p000/y.png"
        );
    }

    #[test]
    fn cell_keys_are_exact() {
        let a = CellKey::new(3, 0.3, DegradationKind::Edge);
        let b = CellKey::new(3, 0.1 + 0.2, DegradationKind::Edge);
        assert_eq!(a, b);
        assert_eq!(a.p_d(), 0.3);
    }
}
