//! Scoring of prediction files against a dataset manifest.
//!
//! Model outputs and human trial exports share one CSV layout and one code
//! path: [`load_predictions`] → [`accuracy_by_cell`] → curves and exports.

mod export;
mod predictions;
mod report;

pub use export::{
    accuracy_svg, cells_csv, curves_csv, differential_svg, export_report, fmt_percent, load_baseline,
    parse_cells_csv, read_cells_csv, BaselinePoint, ExportedFiles, ACCURACY_SVG, BASELINE_HEADER, CELLS_FILE,
    CELLS_HEADER, CURVES_FILE, CURVES_HEADER, DIFFERENTIAL_SVG,
};
pub use predictions::{
    load_predictions, parse_predictions, write_predictions, PredictionRow, PredictionSet, MAX_RANKS,
    PREDICTIONS_HEADER,
};
pub use report::{
    accuracy_by_cell, differential_curve, to_f64, topk_accuracy, CellStats, CurvePoint, DifferentialCurve,
    MetricsReport,
};
