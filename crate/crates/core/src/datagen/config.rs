use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, GeometryError};
use crate::geometry::{DegradationKind, DEFAULT_CANVAS_SIZE, DEFAULT_R_MIN, DEFAULT_STROKE_WIDTH};

/// Default degradation proportions.
pub const DEFAULT_GRID: [f64; 9] = [0.10, 0.15, 0.20, 0.25, 0.30, 0.40, 0.50, 0.60, 0.70];

/// Train / validation / test shares of the whole shapes of each class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions(pub f64, pub f64, pub f64);

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions(0.6, 0.2, 0.2)
    }
}

impl SplitFractions {
    pub fn as_array(&self) -> [f64; 3] {
        [self.0, self.1, self.2]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let parts = self.as_array();
        if parts.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(ConfigError::Invalid(format!(
                "split fractions must be nonnegative, got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ConfigError::Invalid(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

/// Everything that determines a generated dataset. Two equal configs give
/// byte-identical outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    /// Side counts, one class each.
    pub classes: Vec<u32>,
    pub per_class_whole: usize,
    pub degradation_grid: Vec<f64>,
    pub kinds: Vec<DegradationKind>,
    pub master_seed: u64,
    pub canvas_size: u32,
    pub r_min: f64,
    pub stroke_width: f64,
    pub split_fractions: SplitFractions,
    /// Sample a fresh polygon for every degraded cell instead of editing the
    /// shared whole shape.
    pub resample_per_cell: bool,
    /// Where files go. Not part of the manifest snapshot.
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            classes: (3..=8).collect(),
            per_class_whole: 1000,
            degradation_grid: DEFAULT_GRID.to_vec(),
            kinds: vec![DegradationKind::Corner, DegradationKind::Edge],
            master_seed: 0,
            canvas_size: DEFAULT_CANVAS_SIZE,
            r_min: DEFAULT_R_MIN,
            stroke_width: DEFAULT_STROKE_WIDTH,
            split_fractions: SplitFractions::default(),
            resample_per_cell: false,
            output_dir: None,
        }
    }
}

impl GenerationConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Number of degraded variants per whole shape.
    pub fn cells_per_base(&self) -> usize {
        self.degradation_grid.len() * self.kinds.len()
    }

    pub fn expected_record_count(&self) -> usize {
        self.classes.len() * self.per_class_whole * (1 + self.cells_per_base())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.classes.is_empty() {
            return Err(ConfigError::Invalid("no classes".into()));
        }
        let mut seen = BTreeSet::new();
        for &c in &self.classes {
            if c < 3 {
                return Err(GeometryError::TooFewSides(c).into());
            }
            if !seen.insert(c) {
                return Err(ConfigError::Invalid(format!("duplicate class {c}")));
            }
        }
        if self.per_class_whole == 0 {
            return Err(ConfigError::Invalid("per_class_whole must be positive".into()));
        }
        let mut seen_pct = BTreeSet::new();
        for &p in &self.degradation_grid {
            let pct = percent_of(p)?;
            if !seen_pct.insert(pct) {
                return Err(ConfigError::Invalid(format!("duplicate grid value {p}")));
            }
        }
        let mut seen_kinds = BTreeSet::new();
        for &k in &self.kinds {
            if k == DegradationKind::None {
                return Err(ConfigError::Invalid(
                    "kinds lists degradations; `none` is implied by the whole shapes".into(),
                ));
            }
            if !seen_kinds.insert(k) {
                return Err(ConfigError::Invalid(format!("duplicate kind {k}")));
            }
        }
        if self.canvas_size == 0 {
            return Err(ConfigError::Invalid("canvas_size must be positive".into()));
        }
        for (field, value) in [("r_min", self.r_min), ("stroke_width", self.stroke_width)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(GeometryError::NonPositive { field, value }.into());
            }
        }
        if self.r_min + self.stroke_width / 2.0 > f64::from(self.canvas_size) / 2.0 {
            return Err(GeometryError::InfeasibleRadius {
                r_min: self.r_min,
                stroke_width: self.stroke_width,
                canvas_size: self.canvas_size,
            }
            .into());
        }
        self.split_fractions.validate()
    }
}

/// Integral percent for a grid value; rejects values that are not whole
/// percents so that directory names and image ids stay exact.
pub fn percent_of(p_d: f64) -> Result<u32, ConfigError> {
    if !(p_d.is_finite() && (0.0..1.0).contains(&p_d)) {
        return Err(GeometryError::ProportionOutOfRange(p_d).into());
    }
    let pct = (p_d * 100.0).round();
    if (pct - p_d * 100.0).abs() > 1e-9 {
        return Err(ConfigError::Invalid(format!(
            "grid value {p_d} is not a whole percent"
        )));
    }
    Ok(pct as u32)
}
