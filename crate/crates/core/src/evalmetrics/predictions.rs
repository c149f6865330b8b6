use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::datagen::Manifest;
use crate::error::{EvalError, LineError};

/// Exact header of a predictions file.
pub const PREDICTIONS_HEADER: [&str; 9] = [
    "image_id",
    "predicted",
    "rank2",
    "rank3",
    "rank4",
    "rank5",
    "rank6",
    "response_ms",
    "source",
];

/// Most labels a row can rank.
pub const MAX_RANKS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub image_id: String,
    /// Ranked labels, best first; never empty. `ranked[0]` is the top-1
    /// prediction.
    pub ranked: Vec<u32>,
    pub response_ms: Option<f64>,
    pub source: Option<String>,
}

impl PredictionRow {
    pub fn new(image_id: impl Into<String>, predicted: u32) -> Self {
        Self {
            image_id: image_id.into(),
            ranked: vec![predicted],
            response_ms: None,
            source: None,
        }
    }

    pub fn predicted(&self) -> u32 {
        self.ranked[0]
    }
}

/// Predictions from one model run or one or more human sessions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionSet {
    /// Model name or `human:{session}`; taken from the first row that names
    /// one when loading from a file.
    pub source: String,
    pub rows: Vec<PredictionRow>,
}

impl PredictionSet {
    pub fn new(source: impl Into<String>, rows: Vec<PredictionRow>) -> Self {
        Self {
            source: source.into(),
            rows,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn load_predictions(path: &Path, manifest: &Manifest) -> Result<PredictionSet, EvalError> {
    let file = File::open(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_predictions(file, manifest)
}

/// Parses and validates a predictions CSV against `manifest`. Every bad row
/// is reported with its line number.
pub fn parse_predictions<R: Read>(reader: R, manifest: &Manifest) -> Result<PredictionSet, EvalError> {
    let classes = manifest.class_set();
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = csv.records();

    let header = match records.next() {
        Some(h) => h?,
        None => {
            return Err(EvalError::Header {
                expected: PREDICTIONS_HEADER.join(","),
                found: String::new(),
            })
        }
    };
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found != PREDICTIONS_HEADER {
        return Err(EvalError::Header {
            expected: PREDICTIONS_HEADER.join(","),
            found: found.join(","),
        });
    }

    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        match parse_row(&record, manifest, &classes) {
            Ok(row) => rows.push(row),
            Err(message) => errors.push(LineError { line, message }),
        }
    }
    if !errors.is_empty() {
        return Err(EvalError::Rows(errors));
    }
    let source = rows.iter().find_map(|r| r.source.clone()).unwrap_or_default();
    Ok(PredictionSet { source, rows })
}

fn parse_label(field: &str, column: &str, classes: &BTreeSet<u32>) -> Result<u32, String> {
    let label: u32 = field
        .parse()
        .map_err(|_| format!("{column} `{field}` is not a side count"))?;
    if !classes.contains(&label) {
        return Err(format!("{column} {label} is not a class of this dataset"));
    }
    Ok(label)
}

fn parse_row(
    record: &csv::StringRecord,
    manifest: &Manifest,
    classes: &BTreeSet<u32>,
) -> Result<PredictionRow, String> {
    if record.len() != PREDICTIONS_HEADER.len() {
        return Err(format!(
            "expected {} fields, found {}",
            PREDICTIONS_HEADER.len(),
            record.len()
        ));
    }
    let field = |i: usize| record.get(i).unwrap_or("").trim();

    let image_id = field(0);
    if image_id.is_empty() {
        return Err("missing image_id".into());
    }
    if manifest.get(image_id).is_none() {
        return Err(format!("unknown image_id `{image_id}`"));
    }
    if field(1).is_empty() {
        return Err("missing predicted label".into());
    }
    let mut ranked = vec![parse_label(field(1), "predicted", classes)?];
    let mut gap = false;
    for (i, column) in PREDICTIONS_HEADER.iter().enumerate().take(7).skip(2) {
        let value = field(i);
        if value.is_empty() {
            gap = true;
            continue;
        }
        if gap {
            return Err(format!("{column} given after an empty rank"));
        }
        ranked.push(parse_label(value, column, classes)?);
    }
    let mut seen = HashSet::new();
    if !ranked.iter().all(|l| seen.insert(*l)) {
        return Err("ranked labels repeat".into());
    }

    let response_ms = match field(7) {
        "" => None,
        text => match text.parse::<f64>() {
            Ok(ms) if ms.is_finite() && ms >= 0.0 => Some(ms),
            _ => return Err(format!("response_ms `{text}` is not a nonnegative number")),
        },
    };
    let source = match field(8) {
        "" => None,
        s => Some(s.to_string()),
    };
    Ok(PredictionRow {
        image_id: image_id.to_string(),
        ranked,
        response_ms,
        source,
    })
}

/// Writes rows in the predictions CSV layout. Rows without their own source
/// get the set's.
pub fn write_predictions<W: Write>(writer: W, set: &PredictionSet) -> Result<(), EvalError> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(PREDICTIONS_HEADER)?;
    for row in &set.rows {
        let mut fields: Vec<String> = Vec::with_capacity(PREDICTIONS_HEADER.len());
        fields.push(row.image_id.clone());
        for slot in 0..MAX_RANKS {
            fields.push(row.ranked.get(slot).map(u32::to_string).unwrap_or_default());
        }
        fields.push(row.response_ms.map(format_ms).unwrap_or_default());
        fields.push(row.source.clone().unwrap_or_else(|| set.source.clone()));
        csv.write_record(&fields)?;
    }
    csv.flush().map_err(|e| EvalError::Csv(e.into()))?;
    Ok(())
}

fn format_ms(ms: f64) -> String {
    if ms.fract() == 0.0 {
        format!("{}", ms as u64)
    } else {
        format!("{ms}")
    }
}
