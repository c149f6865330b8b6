use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::predictions::PredictionSet;
use crate::datagen::{CellKey, Manifest};
use crate::error::EvalError;
use crate::geometry::DegradationKind;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CellStats {
    pub correct: u64,
    pub total: u64,
}

impl CellStats {
    /// Exact percentage.
    pub fn accuracy_exact(&self) -> BigRational {
        BigRational::new(BigInt::from(100u64 * self.correct), BigInt::from(self.total))
    }

    pub fn accuracy(&self) -> f64 {
        100.0 * self.correct as f64 / self.total as f64
    }
}

/// One point of a curve over degradation proportions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub p_d: f64,
    pub value: f64,
}

/// Edge-minus-corner accuracy per proportion, plus the proportions that had
/// to be skipped because one kind was missing.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DifferentialCurve {
    pub points: Vec<CurvePoint>,
    pub omitted: Vec<f64>,
}

/// Accuracy per `(class, p_d, kind)` cell. Cells without predictions are
/// absent, never zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub source: String,
    pub cells: BTreeMap<CellKey, CellStats>,
}

impl MetricsReport {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn accuracy(&self, key: &CellKey) -> Option<f64> {
        self.cells.get(key).map(CellStats::accuracy)
    }

    /// Pooled accuracy over every scored prediction.
    pub fn overall_accuracy(&self) -> Option<f64> {
        let (correct, total) = self
            .cells
            .values()
            .fold((0u64, 0u64), |(c, t), s| (c + s.correct, t + s.total));
        (total > 0).then(|| 100.0 * correct as f64 / total as f64)
    }

    /// Unweighted mean over classes of the cells at `(p_d_bp, kind)`, exact.
    pub fn class_mean_exact(&self, p_d_bp: u32, kind: DegradationKind) -> Option<BigRational> {
        let mut sum = BigRational::zero();
        let mut n = 0u64;
        for (key, stats) in &self.cells {
            if key.p_d_bp == p_d_bp && key.kind == kind {
                sum += stats.accuracy_exact();
                n += 1;
            }
        }
        (n > 0).then(|| sum / BigRational::from_integer(BigInt::from(n)))
    }

    pub fn class_mean(&self, p_d_bp: u32, kind: DegradationKind) -> Option<f64> {
        self.class_mean_exact(p_d_bp, kind).map(|r| to_f64(&r))
    }

    /// Proportions (basis points) present for `kind`, ascending.
    pub fn proportions(&self, kind: DegradationKind) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .cells
            .keys()
            .filter(|k| k.kind == kind)
            .map(|k| k.p_d_bp)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn kinds(&self) -> Vec<DegradationKind> {
        let mut out: Vec<DegradationKind> = self.cells.keys().map(|k| k.kind).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Accuracy against proportion for each kind, averaged over classes.
    pub fn marginal_curves(&self) -> BTreeMap<DegradationKind, Vec<CurvePoint>> {
        self.kinds()
            .into_iter()
            .map(|kind| {
                let points = self
                    .proportions(kind)
                    .into_iter()
                    .filter_map(|bp| {
                        self.class_mean(bp, kind).map(|value| CurvePoint {
                            p_d: f64::from(bp) / 10_000.0,
                            value,
                        })
                    })
                    .collect();
                (kind, points)
            })
            .collect()
    }

    /// Edge mean minus corner mean at every proportion where either kind
    /// appears. Proportions with only one kind are omitted and logged.
    pub fn differential_curve(&self) -> DifferentialCurve {
        let mut all: Vec<u32> = self.proportions(DegradationKind::Edge);
        all.extend(self.proportions(DegradationKind::Corner));
        all.sort_unstable();
        all.dedup();

        let mut curve = DifferentialCurve::default();
        for bp in all {
            let p_d = f64::from(bp) / 10_000.0;
            match (
                self.class_mean_exact(bp, DegradationKind::Edge),
                self.class_mean_exact(bp, DegradationKind::Corner),
            ) {
                (Some(edge), Some(corner)) => curve.points.push(CurvePoint {
                    p_d,
                    value: to_f64(&(edge - corner)),
                }),
                _ => {
                    log::warn!("p_d {p_d}: edge or corner cells missing, differential point omitted");
                    curve.omitted.push(p_d);
                }
            }
        }
        curve
    }

    /// The same report with corner and edge labels exchanged.
    pub fn with_kinds_swapped(&self) -> MetricsReport {
        let swap = |kind| match kind {
            DegradationKind::Corner => DegradationKind::Edge,
            DegradationKind::Edge => DegradationKind::Corner,
            DegradationKind::None => DegradationKind::None,
        };
        MetricsReport {
            source: self.source.clone(),
            cells: self
                .cells
                .iter()
                .map(|(k, s)| {
                    (
                        CellKey {
                            kind: swap(k.kind),
                            ..*k
                        },
                        *s,
                    )
                })
                .collect(),
        }
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Tallies top-1 correctness of every prediction into its manifest cell.
pub fn accuracy_by_cell(preds: &PredictionSet, manifest: &Manifest) -> Result<MetricsReport, EvalError> {
    let mut cells: BTreeMap<CellKey, CellStats> = BTreeMap::new();
    for row in &preds.rows {
        let record = manifest
            .get(&row.image_id)
            .ok_or_else(|| EvalError::UnknownImage(row.image_id.clone()))?;
        let stats = cells.entry(CellKey::of(record)).or_default();
        stats.total += 1;
        if row.predicted() == record.class_label {
            stats.correct += 1;
        }
    }
    Ok(MetricsReport {
        source: preds.source.clone(),
        cells,
    })
}

/// Percent of rows whose true label is among their first `k` ranked labels.
pub fn topk_accuracy(preds: &PredictionSet, manifest: &Manifest, k: usize) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    if preds.rows.is_empty() {
        return Err(EvalError::EmptyReport);
    }
    let mut correct = 0usize;
    for row in &preds.rows {
        let record = manifest
            .get(&row.image_id)
            .ok_or_else(|| EvalError::UnknownImage(row.image_id.clone()))?;
        if row.ranked.len() < k {
            return Err(EvalError::RankTooShort {
                image_id: row.image_id.clone(),
                k,
                available: row.ranked.len(),
            });
        }
        if row.ranked[..k].contains(&record.class_label) {
            correct += 1;
        }
    }
    Ok(100.0 * correct as f64 / preds.rows.len() as f64)
}

/// Free-function form of [`MetricsReport::differential_curve`].
pub fn differential_curve(report: &MetricsReport) -> DifferentialCurve {
    report.differential_curve()
}
