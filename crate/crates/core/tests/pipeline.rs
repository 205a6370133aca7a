use binpick_core::detect::{detect, DetectionReport};
use binpick_core::eval::{curves_by_sigma, evaluate_report, read_csv, write_csv, SelectionMode, Thresholds};
use binpick_core::mesh::{object_diameter, shapes};
use binpick_core::ppf::{load_model, model_from_bytes, model_to_bytes, save_model, train_model, DetectorParams};
use binpick_core::synth::io::{read_scene, write_scene, SceneSidecar};
use binpick_core::synth::{synthesize_scene, unproject, BinConfig, CameraIntrinsics};

fn small_bin() -> BinConfig {
    BinConfig {
        bin_w: 14.0,
        bin_h: 10.0,
        grid_nx: 2,
        grid_ny: 2,
        n_layers: 1,
        camera_height: 40.0,
        ..BinConfig::default()
    }
}

#[test]
fn files_round_trip_through_detection_and_eval() {
    let mesh = shapes::hook();
    let d = object_diameter(&mesh).unwrap();
    let bin = small_bin();
    let cam = CameraIntrinsics::covering(320, 240, bin.bin_w, bin.camera_height, 0.9);
    let dir = tempfile::tempdir().unwrap();

    let model = train_model(&mesh, &DetectorParams::for_diameter(d)).unwrap();
    let model_path = dir.path().join("model.ppfm");
    save_model(&model, &model_path).unwrap();
    let model = load_model(&model_path).unwrap();
    assert_eq!(model_to_bytes(&model_from_bytes(&model_to_bytes(&model)).unwrap()), model_to_bytes(&model));

    let scene = synthesize_scene(&mesh, &bin, &cam, 0.0, 4).unwrap();
    let scene_dir = dir.path().join("scene");
    write_scene(&scene_dir, &scene, &SceneSidecar::new("s4", &scene, &bin, "builtin:hook", d)).unwrap();
    let loaded = read_scene(&scene_dir).unwrap();
    let cloud = unproject(&loaded.depth);
    assert_eq!(cloud.len(), scene.scene_cloud.len());

    let params = DetectorParams {
        n_hypotheses: 3,
        ..model.params
    };
    let set = detect(&cloud, &model, &params).unwrap();
    let report = DetectionReport::new("s4", &set, false);
    assert_eq!(report.detections.len(), 3);
    assert_eq!(report.detections.iter().filter(|r| r.best_by_votes).count(), 1);

    let rows = evaluate_report(&report, &loaded.ground_truth, d, 0.0, 4).unwrap();
    let good = rows
        .iter()
        .filter(|r| r.translation_err_rel <= 0.1 && r.rotation_err_deg <= 20.0)
        .count();
    assert!(good >= 2, "{rows:?}");

    let csv = dir.path().join("eval.csv");
    write_csv(&csv, &rows).unwrap();
    assert_eq!(read_csv(&csv).unwrap(), rows);

    let curves = curves_by_sigma(&rows, &Thresholds::default());
    assert_eq!(curves.len(), 4);
    let best = curves.iter().find(|c| c.selection_mode == SelectionMode::MaxVotesOnly).unwrap();
    assert_eq!(best.n_detections, 1);
}
