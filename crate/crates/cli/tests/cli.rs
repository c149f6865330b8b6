use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str =
    r#"{"classes": [3, 4], "per_class_whole": 10, "degradation_grid": [0.3, 0.5], "r_min": 50}"#;

fn polyrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyrec"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path) -> std::path::PathBuf {
    let config = dir.join("small.json");
    fs::write(&config, SMALL).unwrap();
    let out = dir.join("ds");
    let res = polyrec(&["gen", "--config", s(&config), "--out", s(&out), "--seed", "5"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    out
}

fn count_pngs(dir: &Path) -> usize {
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            n += count_pngs(&p);
        } else if p.extension().is_some_and(|e| e == "png") {
            n += 1;
        }
    }
    n
}

#[test]
fn gen_writes_100_images_and_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = generate(tmp.path());
    assert_eq!(count_pngs(&out), 100);
    let lines = fs::read_to_string(out.join("manifest.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 100);
    assert!(lines.contains("\"seed\""));
}

#[test]
fn verify_untouched_then_tampered() {
    let tmp = tempfile::tempdir().unwrap();
    let out = generate(tmp.path());
    let res = polyrec(&["verify", "--dataset", s(&out)]);
    assert_eq!(code(&res), 0);
    assert!(String::from_utf8_lossy(&res.stdout).contains("0 flagged"));

    let first_degraded = fs::read_to_string(out.join("manifest.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .find(|v| v["degradation"]["kind"] != "none")
        .unwrap();
    let png = out.join(first_degraded["path"].as_str().unwrap());
    let white = out.join(
        fs::read_to_string(out.join("manifest.jsonl"))
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
            .find(|v| v["degradation"]["kind"] == "none")
            .unwrap()["path"]
            .as_str()
            .unwrap(),
    );
    // A whole image in place of a degraded one measures zero erasure.
    fs::copy(&white, &png).unwrap();
    let report = tmp.path().join("verify.json");
    assert_eq!(
        code(&polyrec(&["verify", "--dataset", s(&out), "--out", s(&report)])),
        1
    );
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert!(!v["flagged"].as_array().unwrap().is_empty());
}

#[test]
fn eval_all_correct_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let out = generate(tmp.path());
    let manifest = out.join("manifest.jsonl");
    let mut csv = String::from("image_id,predicted,rank2,rank3,rank4,rank5,rank6,response_ms,source\n");
    for line in fs::read_to_string(&manifest).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        csv.push_str(&format!(
            "{},{},,,,,,,oracle\n",
            v["image_id"].as_str().unwrap(),
            v["class_label"]
        ));
    }
    let preds = tmp.path().join("p.csv");
    fs::write(&preds, csv).unwrap();
    let report = tmp.path().join("report");
    let res = polyrec(&[
        "eval",
        "--predictions",
        s(&preds),
        "--manifest",
        s(&manifest),
        "--out",
        s(&report),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let cells = fs::read_to_string(report.join("cells.csv")).unwrap();
    assert_eq!(cells.lines().count(), 1 + 2 * 5);
    assert!(
        cells
            .lines()
            .skip(1)
            .all(|l| l.split(',').nth(3) == Some("100.0")),
        "{cells}"
    );
    assert!(report.join("accuracy.svg").exists() && report.join("differential.svg").exists());
}

#[test]
fn degrade_one_image() {
    let tmp = tempfile::tempdir().unwrap();
    let out = generate(tmp.path());
    let whole = fs::read_to_string(out.join("manifest.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .find(|v| v["degradation"]["kind"] == "none")
        .unwrap();
    let spec = tmp.path().join("spec.json");
    fs::write(&spec, whole.to_string()).unwrap();
    let png = out.join(whole["path"].as_str().unwrap());
    let target = tmp.path().join("deg.png");
    let res = polyrec(&[
        "degrade",
        "--image",
        s(&png),
        "--spec",
        s(&spec),
        "--kind",
        "corner",
        "--proportion",
        "0.5",
        "--out",
        s(&target),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    // Same bytes as the generator's own corner 0.5 image.
    let generated = out.join(
        whole["path"]
            .as_str()
            .unwrap()
            .replace("/none/p000/", "/corner/p050/")
            .replace(
                &format!("{}.png", whole["image_id"].as_str().unwrap()),
                &format!("{}-c050.png", whole["image_id"].as_str().unwrap()),
            ),
    );
    assert_eq!(fs::read(&target).unwrap(), fs::read(generated).unwrap());

    let bad = polyrec(&[
        "degrade",
        "--image",
        s(&png),
        "--spec",
        s(&spec),
        "--kind",
        "corner",
        "--proportion",
        "1.5",
        "--out",
        s(&target),
    ]);
    assert_eq!(code(&bad), 1);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let res = polyrec(&["gen", "--bogus-flag"]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stderr).contains("Usage"));
    assert_eq!(code(&polyrec(&["frobnicate"])), 1);
    assert_eq!(code(&polyrec(&["--help"])), 0);

    let missing = tmp.path().join("nope");
    assert_eq!(code(&polyrec(&["verify", "--dataset", s(&missing)])), 2);
    assert_eq!(
        code(&polyrec(&[
            "gen",
            "--config",
            s(&missing.join("c.json")),
            "--out",
            s(tmp.path())
        ])),
        2
    );

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"classes": [2]}"#).unwrap();
    let out = tmp.path().join("never");
    assert_eq!(code(&polyrec(&["gen", "--config", s(&bad), "--out", s(&out)])), 1);
    assert!(!out.exists());
    fs::write(&bad, r#"{"degradation_grid": [1.2]}"#).unwrap();
    assert_eq!(code(&polyrec(&["gen", "--config", s(&bad), "--out", s(&out)])), 1);
}

#[test]
fn export_human_from_an_empty_log_is_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let out = generate(tmp.path());
    let log = tmp.path().join("trials.jsonl");
    let csv = tmp.path().join("human.csv");
    let res = polyrec(&[
        "export-human",
        "--dataset",
        s(&out),
        "--log",
        s(&log),
        "--out",
        s(&csv),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 1);
}
