use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"
mesh = "builtin:hook"
seeds = [4]
noise_sigmas_pct = [0]

[bin]
bin_w = 14.0
bin_h = 10.0
grid_nx = 2
grid_ny = 2
n_layers = 1
camera_height = 40.0

[camera]
width = 320
height = 240

[detector]
n_hypotheses = 3
"#;

fn binpick(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_binpick"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("BINPICK_THREADS", t),
        None => cmd.env_remove("BINPICK_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = binpick(args, None);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("pipeline.toml");
    fs::write(&path, text).unwrap();
    path
}

fn only_scene(out: &Path) -> PathBuf {
    let mut dirs: Vec<PathBuf> = fs::read_dir(out.join("scenes"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(dirs.len(), 1);
    dirs.pop().unwrap()
}

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn synth_writes_one_directory_of_four_files_reproducibly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["synth", "--config", s(&cfg), "--out", s(&a)]);
    ok(&["synth", "--config", s(&cfg), "--out", s(&b)]);
    let scene = only_scene(&a);
    let names: Vec<String> = files_in(&scene).into_iter().map(|(n, _)| n).collect();
    assert_eq!(names, ["depth.pfm", "ground_truth.json", "intensity.pgm", "scene.json"]);
    assert_eq!(files_in(&scene), files_in(&only_scene(&b)));
    let sidecar: Value = serde_json::from_slice(&fs::read(scene.join("scene.json")).unwrap()).unwrap();
    assert_eq!(sidecar["rng_seed"], 4);
    assert_eq!(sidecar["n_objects"], 4);
}

#[test]
fn synth_grid_of_sigmas_seeds_and_bins() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    ok(&[
        "synth", "--config", s(&cfg), "--out", s(&out), "--seed", "1,2", "--sigma", "0,1", "--bins", "2",
    ]);
    assert_eq!(fs::read_dir(out.join("scenes")).unwrap().count(), 8);
}

#[test]
fn train_cube_records_its_diameter_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a.ppfm"), tmp.path().join("b.ppfm"));
    let stdout = ok(&["train", "--mesh", "builtin:cube", "--model", s(&a)]);
    ok(&["train", "--mesh", "builtin:cube", "--model", s(&b)]);
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    assert_eq!(&bytes[..4], b"PPFM");
    // magic, version, two step counts, d_max, tau, then the diameter
    let d = f64::from_le_bytes(bytes[32..40].try_into().unwrap());
    assert!((d - 3f64.sqrt()).abs() < 1e-12);
    assert!(stdout.contains("diameter"));
}

#[test]
fn detect_and_eval_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    ok(&["synth", "--config", s(&cfg), "--out", s(&out)]);
    ok(&["train", "--config", s(&cfg), "--out", s(&out)]);
    let scene = only_scene(&out);
    ok(&["detect", "--config", s(&cfg), "--out", s(&out), "--no-timing", s(&scene)]);
    let reports = out.join("detections");
    let first = files_in(&reports);
    assert_eq!(first.len(), 1);
    let report: Value = serde_json::from_slice(&first[0].1).unwrap();
    let dets = report["detections"].as_array().unwrap();
    assert!(!dets.is_empty() && dets.len() <= 3);
    assert!(dets.iter().all(|d| d["elapsed_ms"] == 0.0));
    assert_eq!(dets.iter().filter(|d| d["best_by_votes"] == true).count(), 1);

    // same bytes at a different thread count
    let res = binpick(
        &["detect", "--config", s(&cfg), "--out", s(&out), "--no-timing", s(&scene)],
        Some("1"),
    );
    assert!(res.status.success());
    assert_eq!(files_in(&reports), first);

    let summary = ok(&["eval", "--config", s(&cfg), "--out", s(&out)]);
    assert!(summary.contains("max_votes_only"));
    let eval = out.join("eval");
    let csv = fs::read_to_string(eval.join("eval.csv")).unwrap();
    assert!(csv.starts_with("sigma,seed,scene_id,hypothesis_rank,votes,translation_err,translation_err_rel,rotation_err_deg,best_by_votes"));
    assert_eq!(csv.lines().count(), dets.len() + 1);
    let svg = fs::read_to_string(eval.join("precision.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);

    // the best detection of this easy scene is correct
    let best = csv.lines().skip(1).find(|l| l.contains(",true,")).unwrap();
    let cols: Vec<&str> = best.split(',').collect();
    assert!(cols[6].parse::<f64>().unwrap() <= 0.1);
    assert!(cols[7].parse::<f64>().unwrap() <= 20.0);
}

#[test]
fn hypotheses_flag_limits_detections() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("grid_nx = 2", "grid_nx = 3"));
    let out = tmp.path().join("o");
    ok(&["synth", "--config", s(&cfg), "--out", s(&out)]);
    ok(&["train", "--config", s(&cfg), "--out", s(&out)]);
    let scene = only_scene(&out);
    ok(&["detect", "--config", s(&cfg), "--out", s(&out), "--hypotheses", "1", s(&scene)]);
    let (_, bytes) = files_in(&out.join("detections")).pop().unwrap();
    let report: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(report["detections"].as_array().unwrap().len(), 1);
    assert_eq!(report["n_hypotheses"], 1);
}

#[test]
fn empty_scene_gives_an_empty_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    ok(&["synth", "--config", s(&cfg), "--out", s(&out), "--layers", "0"]);
    ok(&["train", "--config", s(&cfg), "--out", s(&out)]);
    ok(&["detect", "--config", s(&cfg), "--out", s(&out), s(&only_scene(&out))]);
    let (_, bytes) = files_in(&out.join("detections")).pop().unwrap();
    let report: Value = serde_json::from_slice(&bytes).unwrap();
    assert!(report["detections"].as_array().unwrap().is_empty());
}

#[test]
fn perfect_detection_scores_full_precision() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    ok(&["synth", "--config", s(&cfg), "--out", s(&out)]);
    let scene = only_scene(&out);
    let id = scene.file_name().unwrap().to_str().unwrap().to_string();
    let gt: Value = serde_json::from_slice(&fs::read(scene.join("ground_truth.json")).unwrap()).unwrap();
    let report = serde_json::json!({
        "scene_id": id,
        "n_hypotheses": 1,
        "hypotheses_exhausted": false,
        "scene_points": 1,
        "detections": [{
            "hypothesis_rank": 1,
            "votes": 10,
            "cluster_size": 1,
            "rotation": gt[0]["rotation"],
            "translation": gt[0]["translation"],
            "best_by_votes": true,
            "elapsed_ms": 0.0
        }]
    });
    let path = tmp.path().join("perfect.json");
    fs::write(&path, report.to_string()).unwrap();
    ok(&["eval", "--config", s(&cfg), "--out", s(&out), s(&path)]);
    let curves: Value = serde_json::from_slice(&fs::read(out.join("eval/curves.json")).unwrap()).unwrap();
    for c in curves.as_array().unwrap() {
        assert!(c["precision"].as_array().unwrap().iter().all(|p| p == 1.0));
    }
}

#[test]
fn mismatched_scene_id_is_a_user_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    ok(&["synth", "--config", s(&cfg), "--out", s(&out)]);
    let path = tmp.path().join("r.json");
    fs::write(
        &path,
        r#"{"scene_id":"nope","n_hypotheses":0,"hypotheses_exhausted":true,"scene_points":0,"detections":[]}"#,
    )
    .unwrap();
    let res = binpick(&["eval", "--config", s(&cfg), "--out", s(&out), s(&path)], None);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("scene mismatch"));
}

#[test]
fn sweep_is_reproducible_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let run = |name: &str, threads: &str| {
        let out = tmp.path().join(name);
        let res = binpick(
            &["sweep", "--config", s(&cfg), "--out", s(&out), "--sigma", "0,2", "--seed", "1,2"],
            Some(threads),
        );
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        out.join("sweep")
    };
    let (a, b) = (run("a", "1"), run("b", "4"));
    for f in ["eval.csv", "curves.json", "precision.svg", "model.ppfm"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(files_in(&a.join("reports")), files_in(&b.join("reports")));
    assert_eq!(files_in(&a.join("reports")).len(), 4);
    let svg = fs::read_to_string(a.join("precision.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 8);
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("out = \"from_config\"\n{}", SMALL.replace("seeds = [4]", "seeds = [9]"));
    let cfg = write_config(tmp.path(), &text);
    ok(&["synth", "--config", s(&cfg)]);
    let sidecar = only_scene(&tmp.path().join("from_config")).join("scene.json");
    let v: Value = serde_json::from_slice(&fs::read(sidecar).unwrap()).unwrap();
    assert_eq!(v["rng_seed"], 9);

    let out = tmp.path().join("flag");
    ok(&["synth", "--config", s(&cfg), "--out", s(&out), "--seed", "11"]);
    let v: Value = serde_json::from_slice(&fs::read(only_scene(&out).join("scene.json")).unwrap()).unwrap();
    assert_eq!(v["rng_seed"], 11);
}

#[test]
fn user_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(binpick(&["frobnicate"], None).status.code(), Some(1));
    assert_eq!(binpick(&["detect", "--bogus", "x"], None).status.code(), Some(1));
    let bad = write_config(tmp.path(), "mesh = \"builtin:teapot\"\n");
    assert_eq!(binpick(&["synth", "--config", s(&bad)], None).status.code(), Some(1));
    let missing = tmp.path().join("none.ppfm");
    let res = binpick(&["detect", "--model", s(&missing), s(tmp.path())], None);
    assert_eq!(res.status.code(), Some(1));
    let res = binpick(&["synth", "--out", s(tmp.path())], Some("zero"));
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn every_subcommand_documents_its_flags() {
    let expected: [(&str, &[&str]); 5] = [
        ("synth", &["--config", "--seed", "--sigma", "--out", "--mesh", "--bins", "--layers"]),
        ("train", &["--config", "--mesh", "--model", "--out"]),
        ("detect", &["--config", "--model", "--ref-fraction", "--hypotheses", "--no-timing", "--out"]),
        ("eval", &["--config", "--scenes", "--out"]),
        ("sweep", &["--config", "--seed", "--sigma", "--ref-fraction", "--hypotheses", "--out"]),
    ];
    for (cmd, flags) in expected {
        let help = ok(&[cmd, "--help"]);
        for f in flags {
            assert!(help.contains(f), "{cmd} --help lacks {f}");
        }
    }
}
