use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use atlas_cli::report::validate;
use serde_json::Value;

fn atlas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atlas")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn golden(name: &str) -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).expect("golden file")
}

fn seeds_path() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/seeds.txt").display().to_string()
}

fn outputs(text: &str) -> Value {
    serde_json::from_str::<Value>(text).expect("json")["outputs"].clone()
}

#[test]
fn golden_reports() {
    let seeds = seeds_path();
    let cases: [(&[&str], &str); 7] = [
        (&["predict", "--m", "1"], "predict_m1.json"),
        (&["predict", "--m", "2", "--a", "5", "--b", "3"], "predict_m2_a5_b3.json"),
        (&["tree", "--m", "2", "--b", "3"], "tree_m2_b3.json"),
        (&["tree", "--m", "1", "--b", "2"], "tree_m1_b2.json"),
        (&["tree", "--m", "3", "--b", "0"], "tree_m3_b0.json"),
        (&["verify", "--m", "4", "--b", "1.5", "--level", "lemma1"], "verify_lemma1.json"),
        (&["trace", "--m", "2", "--b", "1", "--seeds", &seeds, "--budget", "2"], "trace_m2_b1.json"),
    ];
    for (args, file) in cases {
        let out = atlas(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        let text = stdout(&out);
        assert_eq!(text, golden(file), "{args:?}");
        validate(&text).unwrap();
    }
}

#[test]
fn predict_values() {
    let o = outputs(&stdout(&atlas(&["predict", "--m", "1"])));
    assert_eq!(o["alpha"].as_f64().unwrap(), 1.570796326795);
    let o = outputs(&stdout(&atlas(&["predict", "--m", "2", "--a", "5", "--b", "3"])));
    assert!((o["nu"].as_f64().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    let sum = o["alpha"].as_f64().unwrap() + o["alphaOtherBranch"].as_f64().unwrap();
    assert!((sum - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-11);
}

#[test]
fn tree_examples() {
    let o = outputs(&stdout(&atlas(&["tree", "--m", "2", "--b", "3"])));
    let v = &o["verification"];
    for key in ["quadratureVsClosedForm", "pathIntegralVsClosedForm", "pathIntegralVsQuadrature"] {
        assert!(v["deviations"][key].as_f64().unwrap() < 1e-8, "{key}");
    }
    assert_eq!(o["edges"].as_array().unwrap().len(), 3);

    let o = outputs(&stdout(&atlas(&["tree", "--m", "1", "--b", "2"])));
    let edges = o["edges"].as_array().unwrap();
    assert_eq!(edges.len(), 1);
    assert!((edges[0]["length"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-11);
    assert_eq!(o["notes"].as_array().unwrap().len(), 1);

    let o = outputs(&stdout(&atlas(&["tree", "--m", "3", "--b", "0"])));
    assert_eq!(o["rays"].as_array().unwrap().len(), 8);
    assert!(o["edges"].as_array().unwrap().is_empty());
}

#[test]
fn exit_codes() {
    assert_eq!(atlas(&["predict", "--m", "0"]).status.code(), Some(2));
    assert_eq!(atlas(&["predict"]).status.code(), Some(2));
    assert_eq!(atlas(&["tree", "--m", "1", "--foliation", "diagonal"]).status.code(), Some(2));
    assert_eq!(atlas(&["verify", "--m", "1", "--level", "nope"]).status.code(), Some(2));
    assert_eq!(atlas(&["predict", "--m", "1", "--svg"]).status.code(), Some(2));
    assert_eq!(atlas(&["trace", "--m", "1", "--seeds", "/nonexistent/seeds"]).status.code(), Some(2));
}

#[test]
fn domain_error_is_reported_as_json() {
    // every seed sits on a zero, so every trace fails
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds.txt");
    fs::write(&seeds, "1 1\n-1 -1\n").unwrap();
    let out = atlas(&["trace", "--m", "1", "--b", "2", "--seeds", seeds.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    validate(&text).unwrap();
    let o = outputs(&text);
    assert_eq!(o["failures"].as_u64(), Some(2));
}

#[test]
fn trace_respects_rotational_symmetry() {
    let out = atlas(&["trace", "--m", "2", "--b", "1", "--seeds", &seeds_path(), "--budget", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    validate(&text).unwrap();
    let traces = outputs(&text)["traces"].as_array().unwrap().clone();
    let pts = |k: usize| -> Vec<(f64, f64)> {
        traces[k]["points"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| (p[0].as_f64().unwrap(), p[1].as_f64().unwrap()))
            .collect()
    };
    // ±1 follows the local branch of the square root, so the rotated leaf may
    // run the other way; compare the curves, not the samples
    let (s, c) = (2.0 * std::f64::consts::PI / 3.0).sin_cos();
    let other = pts(1);
    let to_polyline = |p: (f64, f64)| {
        other
            .windows(2)
            .map(|w| {
                let (x, y) = (w[0], w[1]);
                let d = (y.0 - x.0, y.1 - x.1);
                let t = (((p.0 - x.0) * d.0 + (p.1 - x.1) * d.1) / (d.0 * d.0 + d.1 * d.1)).clamp(0.0, 1.0);
                (p.0 - x.0 - t * d.0).hypot(p.1 - x.1 - t * d.1)
            })
            .fold(f64::INFINITY, f64::min)
    };
    let worst = pts(0)
        .into_iter()
        .map(|p| to_polyline((c * p.0 - s * p.1, s * p.0 + c * p.1)))
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "rotated leaf is {worst:e} away");
    for t in &traces {
        assert!(t["drift"].as_f64().unwrap() < 1e-6 * 2.0);
    }
}

#[test]
fn svg_has_one_path_per_element() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let count_paths = |file: &str| {
        let text = fs::read_to_string(dir.path().join(file)).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        doc.descendants().filter(|n| n.has_tag_name("path")).count()
    };

    assert_eq!(atlas(&["predict", "--m", "2", "--b", "1", "--out", out_dir, "--svg"]).status.code(), Some(0));
    assert_eq!(count_paths("predict.svg"), 6);

    assert_eq!(atlas(&["tree", "--m", "2", "--b", "3", "--out", out_dir, "--svg"]).status.code(), Some(0));
    // three finite edges plus six rays
    assert_eq!(count_paths("tree.svg"), 9);

    let args = ["trace", "--m", "2", "--b", "1", "--seeds", &seeds_path(), "--budget", "2", "--out", out_dir, "--svg"];
    assert_eq!(atlas(&args).status.code(), Some(0));
    assert_eq!(count_paths("trace.svg"), 2);

    let written = fs::read_to_string(dir.path().join("trace.json")).unwrap();
    validate(&written).unwrap();
    assert!(!dir.path().join(".atlas.lock").exists());
}

#[test]
fn held_lock_blocks_a_second_writer() {
    let dir = tempfile::tempdir().unwrap();
    let lock = atlas_cli::OutputLock::acquire(dir.path()).unwrap();
    let out = atlas(&["predict", "--m", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("predict.json").exists());
    drop(lock);
    let out = atlas(&["predict", "--m", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(dir.path().join("predict.json")).unwrap(), golden("predict_m1.json"));
}
