use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn slopeone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slopeone")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A: {I:1, J:1.5}, B: {I:2}, trained into a model file.
fn two_users_model(dir: &TempDir) -> PathBuf {
    let input = dir.path().join("two_users.csv");
    fs::write(&input, "user,item,rating\nA,I,1\nA,J,1.5\nB,I,2\n").unwrap();
    let model = dir.path().join("two_users.model");
    let o = slopeone(&[
        "train",
        "--input",
        path_str(&input),
        "--format",
        "delimited",
        "--header",
        "--scale",
        "0:5:0.5",
        "--output",
        path_str(&model),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("pairs plain 1"));
    model
}

fn prediction_for(out: &str, item: &str) -> Option<f64> {
    out.lines().skip(1).find_map(|l| {
        let cols: Vec<&str> = l.split('\t').collect();
        (cols[0] == item).then(|| cols[1].parse().unwrap())
    })
}

fn inspect_row(out: &str, matrix: &str) -> (f64, u32) {
    let line = out.lines().find(|l| l.starts_with(&format!("{matrix}\t"))).unwrap();
    let cols: Vec<&str> = line.split('\t').collect();
    (cols[1].parse().unwrap(), cols[2].parse().unwrap())
}

#[test]
fn two_users_prediction() {
    let dir = TempDir::new().unwrap();
    let model = two_users_model(&dir);
    for scheme in ["slope-one", "weighted-slope-one"] {
        let o = slopeone(&["predict", "--model", path_str(&model), "--scheme", scheme, "--ratings", "I=2"]);
        assert!(o.status.success());
        let out = stdout(&o);
        assert!(out.starts_with("item\tprediction\tscheme\tfallback\n"));
        assert_eq!(prediction_for(&out, "J"), Some(2.5), "{out}");
    }
}

#[test]
fn first_visitor_with_unknown_items() {
    let dir = TempDir::new().unwrap();
    let model = two_users_model(&dir);
    let o = slopeone(&["predict", "--model", path_str(&model), "--ratings", "K=4", "--items", "I,J,Z"]);
    assert!(o.status.success());
    let out = stdout(&o);
    // Nothing links K to the catalogue, so every prediction is the user's mean.
    for item in ["I", "J", "Z"] {
        assert_eq!(prediction_for(&out, item), Some(4.0), "{out}");
    }
}

#[test]
fn update_then_inspect_and_predict() {
    let dir = TempDir::new().unwrap();
    let model = two_users_model(&dir);
    let m = path_str(&model);

    let o = slopeone(&["inspect", "--model", m, "--pair", "J,I"]);
    assert_eq!(inspect_row(&stdout(&o), "plain"), (0.5, 1));

    let o = slopeone(&["update", "--model", m, "--add", "B,J,2.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("affected pairs plain 1"));

    let o = slopeone(&["inspect", "--model", m, "--pair", "J,I"]);
    assert_eq!(inspect_row(&stdout(&o), "plain"), (0.5, 2));
    // Both users rate J above and I below their mean, so neither pair store
    // sees them together.
    assert_eq!(inspect_row(&stdout(&o), "like"), (0.0, 0));
    assert_eq!(inspect_row(&stdout(&o), "dislike"), (0.0, 0));

    let o = slopeone(&["update", "--model", m, "--set", "A,J,3"]);
    assert!(o.status.success());
    let o = slopeone(&["inspect", "--model", m, "--pair", "I,J"]);
    assert_eq!(inspect_row(&stdout(&o), "plain"), (-1.25, 2));

    // No retrain between the edit and the query.
    let o = slopeone(&["predict", "--model", m, "--scheme", "slope-one", "--ratings", "I=2", "--items", "J"]);
    assert_eq!(prediction_for(&stdout(&o), "J"), Some(3.25));

    let o = slopeone(&["update", "--model", m, "--remove", "A,J"]);
    assert!(o.status.success());
    let o = slopeone(&["inspect", "--model", m, "--pair", "J,I"]);
    assert_eq!(inspect_row(&stdout(&o), "plain"), (0.5, 1));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let model = two_users_model(&dir);
    let m = path_str(&model);

    // Usage.
    assert_eq!(slopeone(&["predict", "--model", m]).status.code(), Some(1));
    assert_eq!(slopeone(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        slopeone(&["predict", "--model", m, "--ratings", "I=2", "--scheme", "nope"]).status.code(),
        Some(1)
    );
    assert_eq!(slopeone(&["update", "--model", m, "--remove", "Nobody,I"]).status.code(), Some(1));
    assert_eq!(slopeone(&["update", "--model", m, "--add", "A,I,4"]).status.code(), Some(1));

    // Data.
    assert_eq!(slopeone(&["predict", "--model", m, "--ratings", "I=9"]).status.code(), Some(2));
    let missing = dir.path().join("missing.model");
    assert_eq!(slopeone(&["inspect", "--model", path_str(&missing), "--pair", "I,J"]).status.code(), Some(2));
    let corrupt = dir.path().join("corrupt.model");
    let text = fs::read_to_string(&model).unwrap().replace("1.5", "2.5");
    fs::write(&corrupt, text).unwrap();
    let o = slopeone(&["inspect", "--model", path_str(&corrupt), "--pair", "I,J"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("checksum"));

    let bad = dir.path().join("bad.data");
    fs::write(&bad, "1\t1\t3\t0\n1\t2\tseven\t0\n").unwrap();
    let o =
        slopeone(&["train", "--input", path_str(&bad), "--scale", "1:5:1", "--output", path_str(&missing)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn evaluate_writes_delimited_report() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("u.data");
    let mut lines = String::new();
    for u in 0..12u32 {
        for i in 0..8u32 {
            if (u + i) % 3 != 0 {
                lines.push_str(&format!("{u}\t{i}\t{}\t0\n", 1 + (u * 7 + i * 3) % 5));
            }
        }
    }
    fs::write(&input, lines).unwrap();
    let csv = dir.path().join("report.csv");
    let args = [
        "evaluate",
        "--input",
        path_str(&input),
        "--scale",
        "1:5:1",
        "--train-ratings",
        "30",
        "--divisor",
        "4",
        "--seed",
        "3",
        "--out",
        path_str(&csv),
    ];
    let o = slopeone(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = stdout(&o);
    assert!(table.contains("Weighted Slope One") || table.contains("weighted-slope-one"), "{table}");

    let report = fs::read_to_string(&csv).unwrap();
    let mut rows = report.lines();
    let header: Vec<&str> = rows.next().unwrap().split(',').collect();
    assert_eq!(header[..3], ["scheme", "raw_mae", "normalized_mae"]);
    let body: Vec<Vec<&str>> = rows.map(|r| r.split(',').collect()).collect();
    assert_eq!(body.len(), 7);
    for row in &body {
        let raw: f64 = row[1].parse().unwrap();
        let norm: f64 = row[2].parse().unwrap();
        assert!((norm - raw / 4.0).abs() < 1e-12);
    }

    // Same seed, same output.
    let again = slopeone(&args);
    assert_eq!(stdout(&again), table);
    assert_eq!(fs::read_to_string(&csv).unwrap(), report);

    let o =
        slopeone(&["evaluate", "--input", path_str(&input), "--scale", "1:5:1", "--train-ratings", "100000"]);
    assert_eq!(o.status.code(), Some(2));
}
