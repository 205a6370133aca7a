use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use binpick_core::detect::{detect, DetectionReport};
use binpick_core::eval::{
    curves_by_sigma, evaluate_report, noise_sweep, render_svg, write_csv, DetectionRow, ErrorMetric,
    PrecisionCurve, SweepPlan,
};
use binpick_core::mesh::object_diameter;
use binpick_core::ppf::{load_model, save_model, train_model, DetectorParams, PPFModel};
use binpick_core::synth::io::{read_json, read_scene, write_json, write_scene, SceneSidecar};
use binpick_core::synth::{scene_seed, synthesize_scene, unproject};
use binpick_core::Error;

use crate::config::PipelineConfig;
use crate::{Cli, Command, DetectArgs, DetectorArgs, EvalArgs, SceneArgs, SweepArgs, TrainArgs};

pub const THREADS_ENV: &str = "BINPICK_THREADS";
pub const MODEL_FILE: &str = "model.ppfm";

pub fn run(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    match &cli.command {
        Command::Synth(a) => {
            apply_scene_args(&mut cfg, &a.scene)?;
            cmd_synth(&cfg)
        }
        Command::Train(a) => cmd_train(&cfg, a),
        Command::Detect(a) => cmd_detect(&cfg, a),
        Command::Eval(a) => cmd_eval(&cfg, a),
        Command::Sweep(a) => cmd_sweep(&mut cfg, a),
    }
}

fn apply_scene_args(cfg: &mut PipelineConfig, a: &SceneArgs) -> Result<()> {
    if let Some(m) = &a.mesh {
        cfg.mesh = m.clone();
    }
    if !a.seed.is_empty() {
        cfg.seeds = a.seed.clone();
    }
    if !a.sigma.is_empty() {
        cfg.noise_sigmas_pct = a.sigma.clone();
    }
    if let Some(b) = a.bins {
        cfg.n_bins = b;
    }
    if let Some(l) = a.layers {
        cfg.bin.n_layers = l;
    }
    cfg.validate()
}

fn apply_detector_args(cfg: &mut PipelineConfig, a: &DetectorArgs) {
    if a.ref_fraction.is_some() {
        cfg.detector.ref_fraction = a.ref_fraction;
    }
    if a.hypotheses.is_some() {
        cfg.detector.n_hypotheses = a.hypotheses;
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn cmd_synth(cfg: &PipelineConfig) -> Result<()> {
    let mesh = cfg.load_mesh()?;
    let diameter = object_diameter(&mesh)?;
    let cam = cfg.camera()?;
    let root = cfg.out.join("scenes");
    create_dir(&root)?;
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    for sigma in cfg.sigmas(diameter) {
        for &seed in &seeds {
            for b in 0..cfg.n_bins {
                let id = binpick_core::eval::sweep_scene_id(sigma, seed, b);
                let scene = synthesize_scene(&mesh, &cfg.bin, &cam, sigma, scene_seed(seed, b))?;
                let sidecar = SceneSidecar::new(&id, &scene, &cfg.bin, &cfg.mesh, diameter);
                let dir = root.join(&id);
                write_scene(&dir, &scene, &sidecar)?;
                println!(
                    "{}  objects {}  points {}",
                    dir.display(),
                    scene.ground_truth.len(),
                    scene.scene_cloud.len()
                );
            }
        }
    }
    Ok(())
}

pub fn cmd_train(cfg: &PipelineConfig, a: &TrainArgs) -> Result<()> {
    let mut cfg = cfg.clone();
    if let Some(m) = &a.mesh {
        cfg.mesh = m.clone();
        cfg.validate()?;
    }
    let mesh = cfg.load_mesh()?;
    let diameter = object_diameter(&mesh)?;
    let params = cfg.detector(DetectorParams::for_diameter(diameter))?;
    let model = train_model(&mesh, &params)?;
    let path = a.model.clone().unwrap_or_else(|| cfg.out.join(MODEL_FILE));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    save_model(&model, &path)?;
    println!("model      {}", path.display());
    println!("diameter   {}", model.diameter);
    println!("points     {}", model.model_cloud.len());
    println!("keys       {}", model.n_keys());
    println!("entries    {}", model.n_entries());
    Ok(())
}

fn detection_params(cfg: &PipelineConfig, model: &PPFModel, a: &DetectorArgs) -> Result<DetectorParams> {
    let mut cfg = cfg.clone();
    apply_detector_args(&mut cfg, a);
    cfg.detector(model.params)
}

pub fn cmd_detect(cfg: &PipelineConfig, a: &DetectArgs) -> Result<()> {
    let model_path = a.model.clone().unwrap_or_else(|| cfg.out.join(MODEL_FILE));
    let model = load_model(&model_path).with_context(|| format!("loading model {}", model_path.display()))?;
    let params = detection_params(cfg, &model, &a.detector)?;
    let out = cfg.out.join("detections");
    create_dir(&out)?;
    for dir in &a.scenes {
        let scene = read_scene(dir).with_context(|| format!("reading scene {}", dir.display()))?;
        let cloud = unproject(&scene.depth);
        let set = detect(&cloud, &model, &params)?;
        let report = DetectionReport::new(&scene.sidecar.scene_id, &set, !a.no_timing);
        let path = out.join(format!("{}.json", report.scene_id));
        write_json(&path, &report)?;
        let best = report
            .best()
            .map_or("none".to_string(), |b| format!("hypothesis {} ({} votes)", b.hypothesis_rank, b.votes));
        println!("{}  detections {}  best {best}", path.display(), report.detections.len());
    }
    Ok(())
}

fn collect_reports(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        bail!("no detection reports found");
    }
    Ok(files)
}

fn write_eval_outputs(dir: &Path, rows: &[DetectionRow], curves: &[PrecisionCurve], diameter: f64) -> Result<()> {
    create_dir(dir)?;
    write_csv(&dir.join("eval.csv"), rows)?;
    write_json(&dir.join("curves.json"), curves)?;
    let svg = dir.join("precision.svg");
    fs::write(&svg, render_svg(curves, diameter)).with_context(|| format!("writing {}", svg.display()))?;
    println!("wrote {}", dir.display());
    print_summary(curves, diameter);
    Ok(())
}

fn print_summary(curves: &[PrecisionCurve], diameter: f64) {
    println!("{:>8}  {:>14}  {:>10}  {:>10}  {:>10}", "sigma%", "mode", "n", "t<=10%d", "r<=20deg");
    for c in curves.iter().filter(|c| c.metric == ErrorMetric::TranslationRel) {
        let rot = curves.iter().find(|r| {
            r.metric == ErrorMetric::RotationDeg && r.selection_mode == c.selection_mode && r.noise_sigma == c.noise_sigma
        });
        println!(
            "{:>8.2}  {:>14}  {:>10}  {:>10.3}  {:>10.3}",
            100.0 * c.noise_sigma / diameter,
            c.selection_mode.name(),
            c.n_detections,
            c.at(0.10),
            rot.map_or(f64::NAN, |r| r.at(20.0))
        );
    }
}

pub fn cmd_eval(cfg: &PipelineConfig, a: &EvalArgs) -> Result<()> {
    let report_paths = if a.reports.is_empty() {
        collect_reports(&[cfg.out.join("detections")])?
    } else {
        collect_reports(&a.reports)?
    };
    let scenes = a.scenes.clone().unwrap_or_else(|| cfg.out.join("scenes"));
    let mut rows = Vec::new();
    let mut diameter = None;
    for path in &report_paths {
        let report: DetectionReport = read_json(path).with_context(|| format!("reading {}", path.display()))?;
        let dir = scenes.join(&report.scene_id);
        let scene = read_scene(&dir).map_err(|e| match e {
            Error::Io { .. } => anyhow::Error::new(Error::SceneMismatch(format!(
                "report {} names scene {:?}, which is not in {}",
                path.display(),
                report.scene_id,
                scenes.display()
            ))),
            e => anyhow::Error::new(e),
        })?;
        if scene.sidecar.scene_id != report.scene_id {
            return Err(Error::SceneMismatch(format!(
                "report {} is for {:?} but {} holds {:?}",
                path.display(),
                report.scene_id,
                dir.display(),
                scene.sidecar.scene_id
            ))
            .into());
        }
        let d = scene.sidecar.object_diameter;
        if diameter.is_some_and(|x: f64| (x - d).abs() > 1e-9 * d) {
            bail!("scenes use different objects (diameters differ)");
        }
        diameter = Some(d);
        rows.extend(evaluate_report(
            &report,
            &scene.ground_truth,
            d,
            scene.sidecar.noise_sigma,
            scene.sidecar.rng_seed,
        )?);
    }
    rows.sort_by(|a, b| {
        a.sigma
            .total_cmp(&b.sigma)
            .then(a.seed.cmp(&b.seed))
            .then(a.scene_id.cmp(&b.scene_id))
            .then(a.hypothesis_rank.cmp(&b.hypothesis_rank))
    });
    let curves = curves_by_sigma(&rows, &cfg.eval.thresholds());
    write_eval_outputs(&cfg.out.join("eval"), &rows, &curves, diameter.unwrap_or(0.0))
}

pub fn cmd_sweep(cfg: &mut PipelineConfig, a: &SweepArgs) -> Result<()> {
    apply_scene_args(cfg, &a.scene)?;
    apply_detector_args(cfg, &a.detector);
    let mesh = cfg.load_mesh()?;
    let diameter = object_diameter(&mesh)?;
    let params = cfg.detector(DetectorParams::for_diameter(diameter))?;
    let model = train_model(&mesh, &params)?;
    let dir = cfg.out.join("sweep");
    create_dir(&dir.join("reports"))?;
    save_model(&model, &dir.join(MODEL_FILE))?;
    let plan = SweepPlan {
        sigmas: cfg.sigmas(diameter),
        seeds: cfg.seeds.clone(),
        n_bins: cfg.n_bins,
        thresholds: cfg.eval.thresholds(),
    };
    let out = noise_sweep(&mesh, &model, &cfg.bin, &cfg.camera()?, &params, &plan)?;
    for r in &out.reports {
        write_json(&dir.join("reports").join(format!("{}.json", r.scene_id)), r)?;
    }
    write_eval_outputs(&dir, &out.rows, &out.curves, diameter)
}
