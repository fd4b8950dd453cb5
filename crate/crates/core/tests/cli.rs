//! End-to-end checks of the command-line tool: exit codes, diagnostics,
//! determinism and the scoring of edited estimate files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn curvtrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvtrack"))
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &TempDir, name: &str) -> PathBuf {
    let out = path(dir, name);
    let o = curvtrack(&["generate", "--fixture", "bifurcation", "--seed", "3", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

fn track(scenario: &Path, out: &Path, extra: &[&str]) -> Value {
    let mut args = vec!["track", s(scenario), "--out", s(out)];
    args.extend_from_slice(extra);
    let o = curvtrack(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn read_lines(p: &Path) -> Vec<Value> {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn write_lines(p: &Path, values: &[Value]) {
    let text: String = values.iter().map(|v| format!("{v}\n")).collect();
    fs::write(p, text).unwrap();
}

fn metrics(p: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(p)
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect()
}

fn column(p: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(p).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].parse().unwrap()).collect()
}

#[test]
fn generation_and_tracking_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = generate(&dir, "a.jsonl");
    let b = generate(&dir, "b.jsonl");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    track(&a, &path(&dir, "ra"), &[]);
    track(&a, &path(&dir, "rb"), &[]);
    for f in ["estimates.jsonl", "truth.jsonl", "metrics.csv", "summary.json"] {
        assert_eq!(
            fs::read(path(&dir, "ra").join(f)).unwrap(),
            fs::read(path(&dir, "rb").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn shipped_scenario_generates_and_tracks() {
    let dir = TempDir::new().unwrap();
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let out = path(&dir, "overtake.jsonl");
    let map = path(&dir, "road.jsonl");
    let o = curvtrack(&[
        "generate",
        s(&root.join("overtake.toml")),
        "--config",
        s(&root.join("filter.toml")),
        "--road-map",
        s(&map),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("121 frames"));
    let summary = track(&out, &path(&dir, "r"), &["--road", s(&map)]);
    assert!(summary["position_rmse"].as_f64().unwrap() < 1.0);
    let timing: Value =
        serde_json::from_str(&fs::read_to_string(path(&dir, "r").join("timing.json")).unwrap()).unwrap();
    assert_eq!(timing["frames"], 121);
}

#[test]
fn missing_road_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let spec = path(&dir, "spec.toml");
    fs::write(&spec, "name = \"x\"\nseed = 1\nduration = 2.0\n").unwrap();
    let o = curvtrack(&["generate", s(&spec), "--out", s(&path(&dir, "x.jsonl"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("road") && err.contains("line"), "{err}");
}

#[test]
fn unknown_flag_prints_usage() {
    let o = curvtrack(&["track", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
}

#[test]
fn radar_changes_velocity_estimates() {
    let dir = TempDir::new().unwrap();
    let scenario = generate(&dir, "a.jsonl");
    let fused = track(&scenario, &path(&dir, "f"), &[]);
    let lidar = track(&scenario, &path(&dir, "l"), &["--no-radar"]);
    assert_ne!(fused["velocity_rmse"], lidar["velocity_rmse"]);
}

#[test]
fn bad_frame_reports_its_index() {
    let dir = TempDir::new().unwrap();
    let scenario = generate(&dir, "a.jsonl");
    let mut lines = read_lines(&scenario);
    // header first, then frames; frame 4 goes back in time
    lines[5]["t"] = Value::from(0.0);
    write_lines(&scenario, &lines);
    let o = curvtrack(&["track", s(&scenario), "--out", s(&path(&dir, "r"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("frame 4"), "{}", stderr(&o));
}

#[test]
fn eval_scores_edited_estimates() {
    let dir = TempDir::new().unwrap();
    let scenario = generate(&dir, "a.jsonl");
    let run = path(&dir, "r");
    track(&scenario, &run, &[]);
    let truth = run.join("truth.jsonl");
    let eval =
        |est: &Path, out: &Path| curvtrack(&["eval", "--estimates", s(est), "--truth", s(&truth), "--out", s(out)]);

    // re-scoring the tracker output reproduces its metrics
    let again = path(&dir, "again.csv");
    assert!(eval(&run.join("estimates.jsonl"), &again).status.success());
    assert_eq!(metrics(&again), metrics(&run.join("metrics.csv")));

    // truth against itself
    let same = path(&dir, "same.csv");
    assert!(eval(&truth, &same).status.success());
    assert!(column(&same, "gospa").iter().all(|&g| g == 0.0));

    // every truth shifted by 0.3 m
    let frames = read_lines(&truth);
    let shifted: Vec<Value> = frames
        .iter()
        .map(|f| {
            let mut f = f.clone();
            for e in f["estimates"].as_array_mut().unwrap() {
                e["x"] = Value::from(e["x"].as_f64().unwrap() + 0.3);
            }
            f
        })
        .collect();
    let shifted_path = path(&dir, "shifted.jsonl");
    write_lines(&shifted_path, &shifted);
    let out = path(&dir, "shifted.csv");
    assert!(eval(&shifted_path, &out).status.success());
    for ((loc, n), g) in column(&out, "localization")
        .iter()
        .zip(column(&out, "n_truth"))
        .zip(column(&out, "gospa"))
    {
        // the localization term sums squared errors over the pairs
        let expected = 0.3 * n.sqrt();
        assert!(
            (loc - expected).abs() < 1e-9 && (g - expected).abs() < 1e-9,
            "{loc} {n}"
        );
    }

    // no estimates at all
    let empty: Vec<Value> = frames
        .iter()
        .map(|f| {
            let mut f = f.clone();
            f["estimates"] = Value::Array(Vec::new());
            f["cardinality"] = Value::from(0);
            f
        })
        .collect();
    let empty_path = path(&dir, "empty.jsonl");
    write_lines(&empty_path, &empty);
    let out = path(&dir, "empty.csv");
    assert!(eval(&empty_path, &out).status.success());
    let missed = column(&out, "missed");
    for ((m, n), (loc, fa)) in missed.iter().zip(column(&out, "n_truth")).zip(
        column(&out, "localization")
            .into_iter()
            .zip(column(&out, "false_alarm")),
    ) {
        assert!((m - (50.0 * n).sqrt()).abs() < 1e-9);
        assert_eq!((loc, fa), (0.0, 0.0));
    }

    // frames missing from the estimates
    let partial_path = path(&dir, "partial.jsonl");
    write_lines(&partial_path, &frames[..frames.len() - 2]);
    let o = eval(&partial_path, &path(&dir, "partial.csv"));
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(
        err.contains("timestamps without estimates") && err.contains(&format!("frame {}", frames.len() - 1)),
        "{err}"
    );
}
