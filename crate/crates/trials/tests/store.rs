mod common;

use std::collections::HashMap;

use polyrec_core::evalmetrics::{accuracy_by_cell, load_predictions, parse_predictions, PREDICTIONS_HEADER};
use polyrec_core::geometry::DegradationKind;
use polyrec_trials::*;

fn request(length: Option<usize>, seed: u64) -> SessionRequest {
    SessionRequest {
        exposure_ms: 100,
        filter: StimulusFilter {
            kinds: Some(vec![DegradationKind::Edge, DegradationKind::Corner]),
            ..StimulusFilter::default()
        },
        length,
        seed: Some(seed),
    }
}

fn answer(store: &TrialStore, id: &str, wrong: bool) -> Ack {
    let NextStimulus::Stimulus(d) = store.next_stimulus(id).unwrap() else {
        panic!("session ended early")
    };
    let truth = store.manifest().get(&d.image_id).unwrap().class_label;
    let label = if wrong {
        if truth == 3 {
            4
        } else {
            3
        }
    } else {
        truth
    };
    store
        .record_response(
            id,
            &ResponseSubmission {
                image_id: d.image_id,
                chosen_label: label,
                response_ms: 400.0 + d.index as f64,
            },
        )
        .unwrap()
}

#[test]
fn session_walks_its_order_then_ends() {
    let tmp = tempfile::tempdir().unwrap();
    let store = common::store(
        common::dataset(&tmp.path().join("ds")),
        &tmp.path().join("log.jsonl"),
    );
    let s = store.create_session(&request(Some(10), 3)).unwrap();
    assert_eq!(s.order.len(), 10);
    let mut seen = Vec::new();
    for i in 0..10 {
        let a = store.next_stimulus(&s.session_id).unwrap();
        assert_eq!(store.next_stimulus(&s.session_id).unwrap(), a);
        let NextStimulus::Stimulus(d) = &a else { panic!() };
        assert_eq!(d.index, i);
        assert_eq!(d.choices, vec![3, 4]);
        assert_eq!(d.image_url, format!("/images/{}", d.image_id));
        seen.push(d.image_id.clone());
        let ack = answer(&store, &s.session_id, false);
        assert_eq!(ack.remaining, 9 - i);
    }
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 10);
    assert_eq!(
        store.next_stimulus(&s.session_id).unwrap(),
        NextStimulus::End { total: 10 }
    );
}

#[test]
fn conflicts_and_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let store = common::store(
        common::dataset(&tmp.path().join("ds")),
        &tmp.path().join("log.jsonl"),
    );
    let s = store.create_session(&request(Some(4), 1)).unwrap();
    let id = &s.session_id;
    let submit = |image_id: &str, label| {
        store.record_response(
            id,
            &ResponseSubmission {
                image_id: image_id.into(),
                chosen_label: label,
                response_ms: 300.0,
            },
        )
    };
    // Not yet served.
    assert!(matches!(submit(&s.order[0], 3), Err(TrialError::Conflict(_))));
    store.next_stimulus(id).unwrap();
    assert!(matches!(submit(&s.order[1], 3), Err(TrialError::Conflict(_))));
    assert!(matches!(submit(&s.order[0], 9), Err(TrialError::Validation(_))));
    submit(&s.order[0], 3).unwrap();
    assert!(matches!(submit(&s.order[0], 3), Err(TrialError::Conflict(_))));
    assert!(matches!(
        store.next_stimulus("nope"),
        Err(TrialError::UnknownSession(_))
    ));
    let bad_exposure = SessionRequest {
        exposure_ms: 150,
        ..request(None, 0)
    };
    assert!(matches!(
        store.create_session(&bad_exposure),
        Err(TrialError::Validation(_))
    ));
}

#[test]
fn responses_survive_restart() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = common::dataset(&tmp.path().join("ds"));
    let log = tmp.path().join("log.jsonl");
    let (id, order) = {
        let store = common::store(manifest.clone(), &log);
        let s = store.create_session(&request(Some(6), 9)).unwrap();
        for _ in 0..3 {
            answer(&store, &s.session_id, false);
        }
        store.next_stimulus(&s.session_id).unwrap();
        (s.session_id, s.order)
    };
    // Simulate a crash in the middle of an append.
    let mut bytes = std::fs::read(&log).unwrap();
    bytes.extend_from_slice(b"{\"event\":\"respo");
    std::fs::write(&log, bytes).unwrap();

    let store = common::store(manifest.clone(), &log);
    let s = store.session(&id).unwrap();
    assert_eq!(s.cursor, 3);
    assert_eq!(s.order, order);
    let NextStimulus::Stimulus(d) = store.next_stimulus(&id).unwrap() else {
        panic!()
    };
    assert_eq!(d.image_id, order[3]);
    for _ in 0..3 {
        answer(&store, &id, true);
    }
    assert_eq!(store.responses(&SessionFilter::Ids(vec![id.clone()])).len(), 6);
    let again = common::store(manifest, &log);
    assert_eq!(again.responses(&SessionFilter::All).len(), 6);
}

#[test]
fn export_matches_direct_aggregation_over_the_log() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = common::dataset(&tmp.path().join("ds"));
    let log = tmp.path().join("log.jsonl");
    let store = common::store(manifest.clone(), &log);
    let a = store.create_session(&request(Some(10), 1)).unwrap();
    let b = store.create_session(&request(Some(8), 2)).unwrap();
    for i in 0..10 {
        answer(&store, &a.session_id, i % 3 == 0);
    }
    for i in 0..8 {
        answer(&store, &b.session_id, i % 2 == 0);
    }

    let csv = store.export_human_predictions(&SessionFilter::Ids(vec![a.session_id.clone()]));
    assert_eq!(csv.lines().count(), 11);
    assert!(csv
        .lines()
        .skip(1)
        .all(|l| l.ends_with(&format!(",human:{}", a.session_id))));

    let path = tmp.path().join("human.csv");
    std::fs::write(&path, store.export_human_predictions(&SessionFilter::All)).unwrap();
    let preds = load_predictions(&path, &manifest).unwrap();
    assert_eq!(preds.len(), 18);
    assert!(preds.rows.iter().all(|r| r.response_ms.is_some()));
    let report = accuracy_by_cell(&preds, &manifest).unwrap();

    // Direct tally of the raw log lines.
    let mut direct: HashMap<_, (u64, u64)> = HashMap::new();
    for line in std::fs::read_to_string(&log).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if v["event"] != "response" {
            continue;
        }
        let record = manifest.get(v["image_id"].as_str().unwrap()).unwrap();
        let e = direct
            .entry(polyrec_core::datagen::CellKey::of(record))
            .or_default();
        e.1 += 1;
        if v["chosen_label"].as_u64().unwrap() == u64::from(record.class_label) {
            e.0 += 1;
        }
    }
    assert_eq!(direct.len(), report.cells.len());
    for (key, stats) in &report.cells {
        assert_eq!((stats.correct, stats.total), direct[key]);
    }
}

#[test]
fn empty_selection_exports_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = common::dataset(&tmp.path().join("ds"));
    let store = common::store(manifest.clone(), &tmp.path().join("log.jsonl"));
    let csv = store.export_human_predictions(&SessionFilter::Ids(vec![]));
    assert_eq!(csv.trim_end(), PREDICTIONS_HEADER.join(","));
    assert!(parse_predictions(csv.as_bytes(), &manifest).unwrap().is_empty());
}
