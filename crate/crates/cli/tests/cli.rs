use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use progression_core::formats::{
    read_labels, read_predictions, AnnotationFile, DetectionFile, ProposalFile, SequenceFile,
};

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_progression"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_and_version_succeed() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["--help"])), 0);
    assert_eq!(code(&run(dir.path(), &["--version"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["bogus"])), 1);
    assert_eq!(code(&run(dir.path(), &["detect"])), 1);
    assert_eq!(code(&run(dir.path(), &["--jobs", "0", "simulate"])), 1);
    assert_eq!(code(&run(dir.path(), &["train-toy", "--method", "svm"])), 1);
}

#[test]
fn missing_input_exits_two_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.seq");
    let o = run(dir.path(), &["detect", p(&missing)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("absent.seq"), "{}", stderr(&o));
}

#[test]
fn bad_record_names_file_and_record() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels.csv");
    let preds = dir.path().join("preds.csv");
    fs::write(&labels, "video,frame,label\nv,0,1.0\nv,1,2.0\n").unwrap();
    fs::write(&preds, "video,frame,prediction\nv,0,1.0\nv,1,oops\n").unwrap();
    let o = run(
        dir.path(),
        &[
            "eval-mae",
            "--labels",
            p(&labels),
            "--predictions",
            p(&preds),
        ],
    );
    assert_eq!(code(&o), 2);
    let msg = stderr(&o);
    assert!(msg.contains("preds.csv") && msg.contains('3'), "{msg}");

    let ann = dir.path().join("ann.json");
    fs::write(
        &ann,
        r#"{"num_classes": 1, "videos": [
            {"id": "a", "num_frames": 10, "segments": []},
            {"id": "b", "num_frames": 10, "segments": [{"start": 4, "end": 20, "class": 0, "complete": true}]}
        ]}"#,
    )
    .unwrap();
    let o = run(dir.path(), &["label", "--annotations", p(&ann)]);
    assert_eq!(code(&o), 2);
    let msg = stderr(&o);
    assert!(
        msg.contains("ann.json") && msg.contains("record 1"),
        "{msg}"
    );
}

#[test]
fn label_spreads_ranks_over_a_segment() {
    let dir = tempfile::tempdir().unwrap();
    let ann = dir.path().join("ann.json");
    fs::write(
        &ann,
        r#"{"num_classes": 1, "videos": [{"id": "v", "num_frames": 10, "segments": [
            {"start": 2, "end": 5, "class": 0, "complete": true},
            {"start": 7, "end": 9, "class": 0, "complete": false}
        ]}]}"#,
    )
    .unwrap();
    let o = run(
        dir.path(),
        &["--k", "100", "label", "--annotations", p(&ann)],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = read_labels(&dir.path().join("labels.csv")).unwrap();
    let frames: Vec<usize> = rows.iter().map(|r| r.frame).collect();
    let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
    assert_eq!(frames, vec![2, 3, 4, 5]);
    assert_eq!(values, vec![25.0, 50.0, 75.0, 100.0]);
}

#[test]
fn noiseless_detection_scores_perfect_map() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (seqs, ann, dets) = (
        d.join("sequences"),
        d.join("annotations.json"),
        d.join("detections"),
    );
    let steps: [&[&str]; 3] = [
        &[
            "--seed",
            "5",
            "simulate",
            "--videos",
            "3",
            "--noise",
            "0",
            "--incomplete",
            "0",
        ],
        &["detect", p(&seqs)],
        &[
            "eval-det",
            "--annotations",
            p(&ann),
            p(&dets),
            "--iou",
            "0.5",
        ],
    ];
    for args in steps {
        let o = run(d, args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("eval_det.json")).unwrap()).unwrap();
    assert_eq!(report["map_at_iou"]["0.5"], 1.0);
}

#[test]
fn golden_examples_parse() {
    let ex = examples();
    let ann = AnnotationFile::read(&ex.join("annotations.json")).unwrap();
    let seq = SequenceFile::read(&ex.join("sequences/video_0000.seq")).unwrap();
    assert_eq!(seq.videos.len(), 1);
    assert_eq!(seq.videos[0].id, ann.videos[0].id);
    DetectionFile::read(&ex.join("detections/video_0000.json")).unwrap();
    ProposalFile::read(&ex.join("proposals/video_0000.json")).unwrap();
    assert_eq!(read_labels(&ex.join("labels.csv")).unwrap().len(), 6);
    assert_eq!(
        read_predictions(&ex.join("predictions.csv")).unwrap().len(),
        6
    );
}

#[test]
fn golden_examples_regenerate_byte_for_byte() {
    let ex = examples();
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = ex.join("config.toml");
    let j = |rel: &str| d.join(rel).to_str().unwrap().to_string();
    let preds = ex.join("predictions.csv");
    let steps: Vec<Vec<String>> = vec![
        vec!["simulate".into(), "--videos".into(), "1".into()],
        vec!["detect".into(), j("sequences")],
        vec!["propose".into(), j("sequences")],
        vec![
            "eval-det".into(),
            "--annotations".into(),
            j("annotations.json"),
            j("detections"),
        ],
        vec![
            "eval-prop".into(),
            "--annotations".into(),
            j("annotations.json"),
            j("proposals"),
            "--an".into(),
            "1,2".into(),
        ],
        vec![
            "label".into(),
            "--annotations".into(),
            j("annotations.json"),
        ],
        vec![
            "eval-mae".into(),
            "--labels".into(),
            j("labels.csv"),
            "--predictions".into(),
            p(&preds).into(),
        ],
        vec![
            "report".into(),
            j("eval_det.json"),
            j("eval_prop.json"),
            j("eval_mae.json"),
        ],
    ];
    for step in steps {
        let mut args = vec!["--config", p(&cfg)];
        args.extend(step.iter().map(String::as_str));
        let o = run(d, &args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for rel in [
        "annotations.json",
        "sequences/video_0000.seq",
        "detections/video_0000.json",
        "proposals/video_0000.json",
        "eval_det.json",
        "eval_prop.json",
        "labels.csv",
        "eval_mae.json",
        "report.json",
        "report.txt",
    ] {
        assert_eq!(
            fs::read(d.join(rel)).unwrap(),
            fs::read(ex.join(rel)).unwrap(),
            "{rel} differs from the checked-in example"
        );
    }
}

#[test]
fn config_file_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[sim]\nnum_frame = 3\n").unwrap();
    let o = run(dir.path(), &["--config", p(&cfg), "simulate"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.toml"), "{}", stderr(&o));
}
