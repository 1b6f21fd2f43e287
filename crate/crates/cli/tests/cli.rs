use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fpvtrack_core::dataset::load_dataset;
use fpvtrack_core::metrics::{breakdown_by_label, Aggregation, LabelKey};
use fpvtrack_core::protocols::Protocol;
use fpvtrack_core::report::{format_score, ResultsDocument};

const BIN: &str = env!("CARGO_BIN_EXE_fpvtrack");
const ADAPTER: &str = env!("CARGO_BIN_EXE_fpvtrack-mock-adapter");

fn fpvtrack(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = fpvtrack(args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    stdout(&o)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn demo(dir: &Path, n: usize) {
    ok(&[
        "synth",
        "--demo",
        &n.to_string(),
        "--seed",
        "3",
        "--out",
        p(dir),
    ]);
}

#[test]
fn oracle_evaluate_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let (ds, out) = (tmp.path().join("ds"), tmp.path().join("out"));
    demo(&ds, 3);
    ok(&[
        "evaluate",
        "--dataset",
        p(&ds),
        "--tracker",
        "oracle",
        "--protocol",
        "ope",
        "--out",
        p(&out),
    ]);
    let report = ok(&["report", "--results", p(&out)]);
    assert!(
        report.lines().any(|l| l == "oracle,1.0000,1.0000,1.0000"),
        "{report}"
    );
    assert_eq!(report, ok(&["report", "--results", p(&out)]));
    assert!(out.join("report/ope/ranking.csv").is_file());
}

#[test]
fn unknown_tracker_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fpvtrack(&[
        "evaluate",
        "--dataset",
        p(tmp.path()),
        "--tracker",
        "kcf",
        "--protocol",
        "ope",
        "--out",
        p(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("unknown tracker"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn usage_and_runtime_errors_are_single_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fpvtrack(&["evaluate", "--tracker", "oracle"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o).trim_end().lines().count(), 1);

    let o = fpvtrack(&["report", "--results", p(&tmp.path().join("missing"))]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("error: "), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);

    let o = fpvtrack(&[
        "evaluate",
        "--dataset",
        "x",
        "--tracker",
        "oracle",
        "--protocol",
        "ope",
        "--rte-latency",
        "5",
        "--out",
        "y",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_by_verb_matches_breakdown() {
    let tmp = tempfile::tempdir().unwrap();
    let (ds, out) = (tmp.path().join("ds"), tmp.path().join("out"));
    demo(&ds, 6);
    ok(&[
        "evaluate",
        "--dataset",
        p(&ds),
        "--tracker",
        "offset:2,2",
        "--protocol",
        "ope",
        "--out",
        p(&out),
        "--label",
        "shifted",
    ]);
    let text = ok(&["report", "--results", p(&out), "--by", "verb"]);

    let data = load_dataset(&ds).unwrap();
    let doc = ResultsDocument::load(&out).unwrap();
    let entry = &doc.entries["shifted"][&Protocol::Ope];
    let pairs: Vec<_> = data
        .sequences
        .iter()
        .map(|s| (s, &entry.sequences[s.name()]))
        .collect();
    let expected = breakdown_by_label(&pairs, LabelKey::Verb, Aggregation::Mean).unwrap();

    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(text.lines().nth(1), Some("verb,tracker,ss,nps,gsr"));
    assert_eq!(rows.len(), expected.len());
    for (row, (verb, s)) in rows.iter().zip(&expected) {
        let want = format!(
            "{verb},shifted,{},{},{}",
            format_score(s.ss),
            format_score(s.nps),
            format_score(s.gsr)
        );
        assert_eq!(*row, want);
    }

    let json = ok(&[
        "report",
        "--results",
        p(&out),
        "--by",
        "verb",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["ope"].as_array().unwrap().len(), expected.len());
    let first = expected.values().next().unwrap();
    assert_eq!(v["ope"][0]["ss"].as_f64().unwrap(), first.ss);
}

#[test]
fn attributes_write_keeps_manual_labels() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    demo(&ds, 2);
    let meta = ds.join("synth-000/meta.toml");
    let text = fs::read_to_string(&meta).unwrap();
    let stripped: String = text
        .lines()
        .map(|l| {
            if l.starts_with("attributes") {
                "attributes = [\"RIG\", \"SC\"]"
            } else {
                l
            }
        })
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(&meta, stripped).unwrap();

    let before = ok(&["attributes", "--dataset", p(&ds)]);
    let row = before
        .lines()
        .find(|l| l.starts_with("synth-000,"))
        .unwrap();
    assert!(row.ends_with(",RIG,true"), "{row}");
    ok(&["attributes", "--dataset", p(&ds), "--write"]);
    let after = ok(&["attributes", "--dataset", p(&ds)]);
    let row = after.lines().find(|l| l.starts_with("synth-000,")).unwrap();
    assert!(row.ends_with(",RIG,false"), "{row}");
    let meta_text = fs::read_to_string(&meta).unwrap();
    assert!(
        meta_text.contains("RIG") && !meta_text.contains("\"SC\""),
        "{meta_text}"
    );
}

#[test]
fn synth_from_spec_file() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.toml");
    fs::write(
        &spec,
        r#"
[[sequences]]
name = "slide"
width = 64
height = 48
length = 30
target = { x = 5.0, y = 10.0, w = 12.0, h = 10.0 }
motion = [{ start = 1, end = 29, vx = 1.0, vy = 0.5 }]
absent = [{ start = 10, end = 12 }]
verb = "take"
"#,
    )
    .unwrap();
    let out = tmp.path().join("ds");
    let msg = ok(&["synth", "--spec", p(&spec), "--out", p(&out)]);
    assert!(msg.contains("1 sequence(s), 30 frame(s)"), "{msg}");
    assert!(out.join("slide/frames/00000029.png").is_file());
    let gt = fs::read_to_string(out.join("slide/groundtruth.txt")).unwrap();
    assert_eq!(gt.lines().nth(11), Some(""));
    assert_eq!(gt.lines().nth(2), Some("7,11,12,10"));

    fs::write(&spec, "[[sequences]]\nname = \"bad\"\nwidth = 10\n").unwrap();
    let o = fpvtrack(&["synth", "--spec", p(&spec), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

fn single_sequence(tmp: &Path) -> std::path::PathBuf {
    let ds = tmp.join("ds");
    demo(&ds, 1);
    ds
}

#[test]
fn external_gt_replay_scores_one() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = single_sequence(tmp.path());
    let gt = ds.join("synth-000/groundtruth.txt");
    let tracker = format!("external:{ADAPTER} gt-replay {}", p(&gt));
    let out = tmp.path().join("out");
    let text = ok(&[
        "evaluate",
        "--dataset",
        p(&ds),
        "--tracker",
        &tracker,
        "--protocol",
        "ope",
        "--out",
        p(&out),
        "--label",
        "replay",
    ]);
    assert!(text.contains("replay,1.0000,1.0000,1.0000"), "{text}");
    let log = fs::read_to_string(out.join("replay/ope/logs/synth-000.stderr.log")).unwrap();
    assert!(log.contains("mock adapter started (seed 0)"), "{log}");
    assert!(log.trim_end().ends_with("quit"), "{log}");
}

#[test]
fn external_echo_matches_static_tracker() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = single_sequence(tmp.path());
    let out = tmp.path().join("out");
    let echo = format!("external:{ADAPTER} echo");
    let a = ok(&[
        "evaluate",
        "--dataset",
        p(&ds),
        "--tracker",
        &echo,
        "--protocol",
        "mse",
        "--out",
        p(&out),
        "--label",
        "x",
    ]);
    let b = ok(&[
        "evaluate",
        "--dataset",
        p(&ds),
        "--tracker",
        "static",
        "--protocol",
        "mse",
        "--out",
        p(&out),
        "--label",
        "x",
    ]);
    assert_eq!(a, b);
}

#[test]
fn external_failure_aborts_with_adapter_message() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = single_sequence(tmp.path());
    let out = tmp.path().join("out");
    for (mode, needle) in [
        ("fail-at 3", "scripted failure at frame 3"),
        ("crash-at 4", "crashing at frame 4"),
        ("garbage", "malformed message `not json`"),
    ] {
        let tracker = format!("external:{ADAPTER} {mode}");
        let o = fpvtrack(&[
            "evaluate",
            "--dataset",
            p(&ds),
            "--tracker",
            &tracker,
            "--protocol",
            "ope",
            "--out",
            p(&out),
        ]);
        assert_eq!(o.status.code(), Some(1), "{mode}");
        let err = stderr(&o);
        assert!(err.contains(needle), "{mode}: {err}");
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    }
}

#[test]
fn rte_with_injected_latency() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = single_sequence(tmp.path());
    let out = tmp.path().join("out");
    ok(&[
        "evaluate",
        "--dataset",
        p(&ds),
        "--tracker",
        "static",
        "--protocol",
        "rte",
        "--rte-latency",
        "50",
        "--out",
        p(&out),
    ]);
    let mask = fs::read_to_string(out.join("static/rte/synth-000.mask.txt")).unwrap();
    let frames: Vec<usize> = mask.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(&frames[..4], [0, 3, 6, 9]);
    let doc = ResultsDocument::load(&out).unwrap();
    let fps = doc.entries["static"][&Protocol::Rte].overall.fps.unwrap();
    assert!((fps - 20.0).abs() < 1e-9, "{fps}");
}

#[test]
fn tracks_eval_oracle_scores_one() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = single_sequence(tmp.path());
    let data = load_dataset(&ds).unwrap();
    let seq = &data.sequences[0];
    let mut csv = String::from("sequence,frame,x,y,w,h,state\n");
    for f in [0usize, 10, 20, 60, 75] {
        if let Some(b) = seq.gt(f) {
            csv += &format!(
                "{},{f},{},{},{},{},left\n",
                seq.name(),
                b.x(),
                b.y(),
                b.w(),
                b.h()
            );
        }
    }
    let dets = tmp.path().join("dets.csv");
    fs::write(&dets, csv).unwrap();
    let text = ok(&[
        "tracks-eval",
        "--detections",
        p(&dets),
        "--dataset",
        p(&ds),
        "--tracker",
        "oracle",
    ]);
    assert!(text.lines().any(|l| l == "overall,2,1.0000"), "{text}");
}
