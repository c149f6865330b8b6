//! CSV tables and SVG line charts for a [`MetricsReport`].
//!
//! The SVG writer is a few hundred bytes of string formatting with fixed
//! precision, so equal reports always produce identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::report::{CellStats, CurvePoint, MetricsReport};
use crate::datagen::{proportion_to_bp, CellKey};
use crate::error::EvalError;
use crate::geometry::DegradationKind;

pub const CELLS_HEADER: [&str; 6] = ["class", "p_d", "kind", "accuracy", "count", "correct"];
pub const CURVES_HEADER: [&str; 3] = ["series", "p_d", "value"];
pub const BASELINE_HEADER: [&str; 3] = ["p_d", "kind", "accuracy"];

pub const CELLS_FILE: &str = "cells.csv";
pub const CURVES_FILE: &str = "curves.csv";
pub const ACCURACY_SVG: &str = "accuracy.svg";
pub const DIFFERENTIAL_SVG: &str = "differential.svg";

/// Externally supplied reference accuracy, e.g. published human data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselinePoint {
    pub p_d: f64,
    pub kind: DegradationKind,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExportedFiles {
    pub cells_csv: PathBuf,
    pub curves_csv: PathBuf,
    pub accuracy_svg: PathBuf,
    pub differential_svg: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn fmt_p(bp: u32) -> String {
    format!("{}", f64::from(bp) / 10_000.0)
}

/// Percent at 0.1 precision, the precision tables are reported at.
pub fn fmt_percent(value: f64) -> String {
    format!("{value:.1}")
}

pub fn cells_csv(report: &MetricsReport) -> Result<String, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CELLS_HEADER)?;
    for (key, stats) in &report.cells {
        w.write_record([
            key.class_label.to_string(),
            fmt_p(key.p_d_bp),
            key.kind.to_string(),
            fmt_percent(stats.accuracy()),
            stats.total.to_string(),
            stats.correct.to_string(),
        ])?;
    }
    Ok(String::from_utf8(
        w.into_inner()
            .map_err(|e| EvalError::Csv(e.into_error().into()))?,
    )
    .expect("csv output is utf-8"))
}

/// Marginal accuracy per kind and the edge-minus-corner differential.
pub fn curves_csv(report: &MetricsReport) -> Result<String, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CURVES_HEADER)?;
    for (kind, points) in report.marginal_curves() {
        for p in points {
            w.write_record([kind.to_string(), format!("{}", p.p_d), format!("{:.4}", p.value)])?;
        }
    }
    for p in report.differential_curve().points {
        w.write_record([
            "differential".to_string(),
            format!("{}", p.p_d),
            format!("{:.4}", p.value),
        ])?;
    }
    Ok(String::from_utf8(
        w.into_inner()
            .map_err(|e| EvalError::Csv(e.into_error().into()))?,
    )
    .expect("csv output is utf-8"))
}

/// Reads a cells table back into a report.
pub fn read_cells_csv(path: &Path) -> Result<MetricsReport, EvalError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_cells_csv(&text, path)
}

pub fn parse_cells_csv(text: &str, path: &Path) -> Result<MetricsReport, EvalError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut records = r.records();
    let bad = |line: usize, message: String| EvalError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    match records.next() {
        Some(h) if h.as_ref().map(|h| h.iter().eq(CELLS_HEADER)).unwrap_or(false) => {}
        _ => {
            return Err(EvalError::Header {
                expected: CELLS_HEADER.join(","),
                found: text.lines().next().unwrap_or("").to_string(),
            })
        }
    }
    let mut cells = BTreeMap::new();
    for record in records {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let get = |i: usize| record.get(i).unwrap_or("");
        let class_label: u32 = get(0)
            .parse()
            .map_err(|_| bad(line, format!("class `{}`", get(0))))?;
        let p_d: f64 = get(1)
            .parse()
            .map_err(|_| bad(line, format!("p_d `{}`", get(1))))?;
        let kind: DegradationKind = get(2).parse().map_err(|e| bad(line, format!("{e}")))?;
        let total: u64 = get(4)
            .parse()
            .map_err(|_| bad(line, format!("count `{}`", get(4))))?;
        let correct: u64 = get(5)
            .parse()
            .map_err(|_| bad(line, format!("correct `{}`", get(5))))?;
        if correct > total || total == 0 {
            return Err(bad(line, format!("{correct} correct of {total}")));
        }
        cells.insert(
            CellKey {
                class_label,
                p_d_bp: proportion_to_bp(p_d),
                kind,
            },
            CellStats { correct, total },
        );
    }
    Ok(MetricsReport {
        source: String::new(),
        cells,
    })
}

pub fn load_baseline(path: &Path) -> Result<Vec<BaselinePoint>, EvalError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut records = r.records();
    match records.next() {
        Some(Ok(h)) if h.iter().map(str::trim).eq(BASELINE_HEADER) => {}
        _ => {
            return Err(EvalError::Header {
                expected: BASELINE_HEADER.join(","),
                found: text.lines().next().unwrap_or("").to_string(),
            })
        }
    }
    let mut out = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let parse = || -> Option<BaselinePoint> {
            let p_d: f64 = record.get(0)?.trim().parse().ok()?;
            let kind: DegradationKind = record.get(1)?.trim().parse().ok()?;
            let accuracy: f64 = record.get(2)?.trim().parse().ok()?;
            ((0.0..=1.0).contains(&p_d) && (0.0..=100.0).contains(&accuracy)).then_some(BaselinePoint {
                p_d,
                kind,
                accuracy,
            })
        };
        out.push(parse().ok_or_else(|| EvalError::Parse {
            path: path.to_path_buf(),
            line,
            message: "expected p_d in [0,1], kind, accuracy in [0,100]".into(),
        })?);
    }
    Ok(out)
}

/// Writes the cells and curves tables plus two SVG charts into `dir`.
pub fn export_report(
    report: &MetricsReport,
    dir: &Path,
    baseline: Option<&[BaselinePoint]>,
) -> Result<ExportedFiles, EvalError> {
    if report.is_empty() {
        return Err(EvalError::EmptyReport);
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let files = ExportedFiles {
        cells_csv: dir.join(CELLS_FILE),
        curves_csv: dir.join(CURVES_FILE),
        accuracy_svg: dir.join(ACCURACY_SVG),
        differential_svg: dir.join(DIFFERENTIAL_SVG),
    };
    let outputs = [
        (&files.cells_csv, cells_csv(report)?),
        (&files.curves_csv, curves_csv(report)?),
        (&files.accuracy_svg, accuracy_svg(report, baseline.unwrap_or(&[]))),
        (&files.differential_svg, differential_svg(report)),
    ];
    for (path, body) in outputs {
        fs::write(path, body).map_err(io_err(path))?;
    }
    Ok(files)
}

struct Series<'a> {
    label: String,
    color: &'a str,
    dashed: bool,
    points: Vec<CurvePoint>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;

fn kind_color(kind: DegradationKind) -> &'static str {
    match kind {
        DegradationKind::Corner => "#d62728",
        DegradationKind::Edge => "#1f77b4",
        DegradationKind::None => "#7f7f7f",
    }
}

/// Accuracy against degradation proportion, one line per degradation kind.
pub fn accuracy_svg(report: &MetricsReport, baseline: &[BaselinePoint]) -> String {
    let mut series: Vec<Series> = report
        .marginal_curves()
        .into_iter()
        .filter(|(kind, _)| *kind != DegradationKind::None)
        .map(|(kind, points)| Series {
            label: kind.to_string(),
            color: kind_color(kind),
            dashed: false,
            points,
        })
        .collect();
    for kind in [DegradationKind::Corner, DegradationKind::Edge] {
        let mut points: Vec<CurvePoint> = baseline
            .iter()
            .filter(|b| b.kind == kind)
            .map(|b| CurvePoint {
                p_d: b.p_d,
                value: b.accuracy,
            })
            .collect();
        if points.is_empty() {
            continue;
        }
        points.sort_by(|a, b| a.p_d.total_cmp(&b.p_d));
        series.push(Series {
            label: format!("{kind} (baseline)"),
            color: kind_color(kind),
            dashed: true,
            points,
        });
    }
    line_chart("Top-1 accuracy (%)", (0.0, 100.0), &series)
}

/// Edge minus corner accuracy against degradation proportion.
pub fn differential_svg(report: &MetricsReport) -> String {
    let series = [Series {
        label: "edge - corner".into(),
        color: "#2ca02c",
        dashed: false,
        points: report.differential_curve().points,
    }];
    line_chart("Differential (edge - corner, %)", (-100.0, 100.0), &series)
}

fn line_chart(y_label: &str, (y_min, y_max): (f64, f64), series: &[Series]) -> String {
    let x_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.p_d))
        .fold(0.0f64, f64::max)
        .max(0.1);
    let x_max = (x_max * 10.0).ceil() / 10.0;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + x / x_max * plot_w;
    let sy = |y: f64| TOP + (y_max - y) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    // Axes and ticks.
    let _ = writeln!(
        svg,
        r#"<path d="M{:.2},{:.2}V{:.2}H{:.2}" fill="none" stroke="black"/>"#,
        LEFT,
        TOP,
        TOP + plot_h,
        LEFT + plot_w
    );
    let x_ticks = (x_max * 10.0).round() as u32;
    for t in 0..=x_ticks {
        let x = f64::from(t) / 10.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x:.1}</text>"#,
            sx(x),
            TOP + plot_h + 18.0
        );
    }
    for t in 0..=4 {
        let y = y_min + (y_max - y_min) * f64::from(t) / 4.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
            LEFT,
            sy(y),
            LEFT + plot_w,
            sy(y)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.0}</text>"#,
            LEFT - 6.0,
            sy(y) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Degradation proportion</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{y_label}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let points: Vec<String> = s
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.p_d), sy(p.value.clamp(y_min, y_max))))
            .collect();
        let dash = if s.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-label="{}" points="{}" fill="none" stroke="{}" stroke-width="2"{dash}/>"#,
            s.label,
            points.join(" "),
            s.color
        );
        let ly = TOP + 16.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"{dash}/>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0,
            s.color
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#,
            lx + 26.0,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}
