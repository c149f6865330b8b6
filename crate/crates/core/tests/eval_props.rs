use polyrec_core::datagen::{CellKey, ImageRecord, Manifest, Split};
use polyrec_core::evalmetrics::*;
use polyrec_core::geometry::{DegradationKind, DegradationSpec, Point, PolygonSpec};
use proptest::prelude::*;

const GRID: [f64; 3] = [0.3, 0.5, 0.7];
const KINDS: [DegradationKind; 2] = [DegradationKind::Edge, DegradationKind::Corner];

fn record(id: String, class_label: u32, kind: DegradationKind, p_d: f64) -> ImageRecord {
    ImageRecord {
        image_id: id.clone(),
        class_label,
        polygon: PolygonSpec {
            n_sides: class_label,
            center: Point::new(112.0, 112.0),
            circumradius: 60.0,
            rotation: 0.0,
            stroke_width: 2.0,
        },
        degradation: DegradationSpec {
            kind,
            proportion: p_d,
        },
        base_id: id.clone(),
        split: Split::Test,
        seed: 0,
        path: format!("{id}.png"),
    }
}

/// A manifest with `per_cell` images in every (class, p_d, kind) cell and a
/// prediction per image drawn from `guesses`.
fn fixture(per_cell: usize, guesses: &[u32]) -> (Manifest, PredictionSet) {
    let mut records = Vec::new();
    let mut rows = Vec::new();
    let mut g = guesses.iter().cycle();
    for class in 3..=5u32 {
        for p in GRID {
            for kind in KINDS {
                for i in 0..per_cell {
                    let id = format!("{class}-{p}-{kind}-{i}");
                    rows.push(PredictionRow::new(id.clone(), *g.next().unwrap()));
                    records.push(record(id, class, kind, p));
                }
            }
        }
    }
    (
        Manifest::new(String::new(), None, records, ".".into()),
        PredictionSet::new("m", rows),
    )
}

fn guesses() -> impl Strategy<Value = (usize, Vec<u32>)> {
    (1usize..6, proptest::collection::vec(3u32..=5, 1..40))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn swapping_kinds_negates_differential((per_cell, g) in guesses()) {
        let (m, preds) = fixture(per_cell, &g);
        let report = accuracy_by_cell(&preds, &m).unwrap();
        let a = report.differential_curve();
        let b = report.with_kinds_swapped().differential_curve();
        prop_assert_eq!(a.points.len(), GRID.len());
        for (x, y) in a.points.iter().zip(&b.points) {
            prop_assert_eq!(x.p_d, y.p_d);
            prop_assert!((x.value + y.value).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicating_rows_keeps_accuracies((per_cell, g) in guesses(), copies in 2usize..4) {
        let (m, preds) = fixture(per_cell, &g);
        let once = accuracy_by_cell(&preds, &m).unwrap();
        let mut rows = Vec::new();
        for _ in 0..copies {
            rows.extend(preds.rows.iter().cloned());
        }
        let many = accuracy_by_cell(&PredictionSet::new("m", rows), &m).unwrap();
        for (key, stats) in &once.cells {
            prop_assert_eq!(stats.accuracy_exact(), many.cells[key].accuracy_exact());
        }
    }

    #[test]
    fn marginals_are_class_means_of_cells((per_cell, g) in guesses()) {
        let (m, preds) = fixture(per_cell, &g);
        let report = accuracy_by_cell(&preds, &m).unwrap();
        for (kind, points) in report.marginal_curves() {
            for point in points {
                let mean: f64 = (3..=5u32)
                    .map(|c| report.accuracy(&CellKey::new(c, point.p_d, kind)).unwrap())
                    .sum::<f64>() / 3.0;
                prop_assert!((mean - point.value).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn csv_round_trip_preserves_every_cell((per_cell, g) in guesses()) {
        let (m, preds) = fixture(per_cell, &g);
        let mut buf = Vec::new();
        write_predictions(&mut buf, &preds).unwrap();
        let again = parse_predictions(buf.as_slice(), &m).unwrap();
        prop_assert_eq!(accuracy_by_cell(&again, &m).unwrap(), accuracy_by_cell(&preds, &m).unwrap());
        let report = accuracy_by_cell(&preds, &m).unwrap();
        let text = cells_csv(&report).unwrap();
        prop_assert_eq!(parse_cells_csv(&text, std::path::Path::new("cells.csv")).unwrap().cells, report.cells);
    }
}
