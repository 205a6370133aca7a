//! Pipeline configuration file (TOML).
//!
//! ```toml
//! mesh = "builtin:hook"          # or a path to an .obj / .ply file
//! out = "out"
//! seeds = [0, 1, 2]
//! noise_sigmas_pct = [0, 1, 2]   # percent of the object diameter
//! n_bins = 1                     # scenes per (sigma, seed)
//!
//! [bin]                          # bin and drop layout
//! n_layers = 1
//!
//! [camera]                       # focal length from `fill` unless `f` is set
//! width = 800
//! height = 450
//! fill = 0.9
//!
//! [detector]                     # unset fields scale with the diameter
//! ref_fraction = 0.2
//! cluster_angle_deg = 20
//!
//! [eval]
//! translation_thresholds_pct = [1, 2, 5, 10, 20]
//! rotation_thresholds_deg = [5, 10, 20]
//! ```
//!
//! Relative paths are resolved against the config file's directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use binpick_core::eval::Thresholds;
use binpick_core::mesh::{load_mesh, shapes, TriangleMesh};
use binpick_core::ppf::DetectorParams;
use binpick_core::synth::{BinConfig, CameraIntrinsics};
use serde::Deserialize;

pub const BUILTIN_PREFIX: &str = "builtin:";

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub mesh: String,
    pub out: PathBuf,
    pub seeds: Vec<u64>,
    pub noise_sigmas_pct: Vec<f64>,
    pub n_bins: usize,
    pub bin: BinConfig,
    pub camera: CameraConfig,
    pub detector: DetectorConfig,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mesh: "builtin:hook".into(),
            out: PathBuf::from("out"),
            seeds: vec![0],
            noise_sigmas_pct: vec![0.0],
            n_bins: 1,
            bin: BinConfig::default(),
            camera: CameraConfig::default(),
            detector: DetectorConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub width: usize,
    pub height: usize,
    /// Fraction of the image width the bin spans at floor depth.
    pub fill: f64,
    pub f: Option<f64>,
    pub d_near: f64,
    pub d_far: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            width: 800,
            height: 450,
            fill: 0.9,
            f: None,
            d_near: 1.0,
            d_far: 200.0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub n_angle_steps: Option<u32>,
    pub n_dist_steps: Option<u32>,
    pub n_alpha_steps: Option<u32>,
    pub d_max: Option<f64>,
    pub tau: Option<f64>,
    pub ref_fraction: Option<f64>,
    pub cluster_dist: Option<f64>,
    pub cluster_angle_deg: Option<f64>,
    pub n_hypotheses: Option<usize>,
    pub exclusion_radius: Option<f64>,
    pub peak_ratio: Option<f64>,
    pub smoothing: Option<bool>,
    pub height_axis: Option<[f64; 3]>,
    pub ref_seed: Option<u64>,
}

impl DetectorConfig {
    /// Overlays the set fields on `base`.
    pub fn apply(&self, base: DetectorParams) -> DetectorParams {
        DetectorParams {
            n_angle_steps: self.n_angle_steps.unwrap_or(base.n_angle_steps),
            n_dist_steps: self.n_dist_steps.unwrap_or(base.n_dist_steps),
            n_alpha_steps: self.n_alpha_steps.unwrap_or(base.n_alpha_steps),
            d_max: self.d_max.unwrap_or(base.d_max),
            tau: self.tau.unwrap_or(base.tau),
            ref_fraction: self.ref_fraction.unwrap_or(base.ref_fraction),
            cluster_dist: self.cluster_dist.unwrap_or(base.cluster_dist),
            cluster_angle: self.cluster_angle_deg.map_or(base.cluster_angle, f64::to_radians),
            n_hypotheses: self.n_hypotheses.unwrap_or(base.n_hypotheses),
            exclusion_radius: self.exclusion_radius.unwrap_or(base.exclusion_radius),
            peak_ratio: self.peak_ratio.unwrap_or(base.peak_ratio),
            smoothing: self.smoothing.unwrap_or(base.smoothing),
            height_axis: self.height_axis.unwrap_or(base.height_axis),
            ref_seed: self.ref_seed.or(base.ref_seed),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub translation_thresholds_pct: Option<Vec<f64>>,
    pub rotation_thresholds_deg: Option<Vec<f64>>,
}

impl EvalConfig {
    pub fn thresholds(&self) -> Thresholds {
        let d = Thresholds::default();
        Thresholds {
            translation_rel: self
                .translation_thresholds_pct
                .as_ref()
                .map_or(d.translation_rel, |v| v.iter().map(|p| p / 100.0).collect()),
            rotation_deg: self.rotation_thresholds_deg.clone().unwrap_or(d.rotation_deg),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: PipelineConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if !cfg.mesh.starts_with(BUILTIN_PREFIX) && Path::new(&cfg.mesh).is_relative() {
            cfg.mesh = base.join(&cfg.mesh).to_string_lossy().into_owned();
        }
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(name) = self.mesh.strip_prefix(BUILTIN_PREFIX) {
            if shapes::builtin(name).is_none() {
                bail!("unknown builtin mesh {name:?}");
            }
        } else if !Path::new(&self.mesh).is_file() {
            bail!("mesh file {} not found", self.mesh);
        }
        if self.seeds.is_empty() {
            bail!("seeds must not be empty");
        }
        if self.noise_sigmas_pct.is_empty() || self.noise_sigmas_pct.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            bail!("noise_sigmas_pct must be a non-empty list of non-negative numbers");
        }
        if self.n_bins == 0 {
            bail!("n_bins must be positive");
        }
        self.bin.validate()?;
        self.camera()?;
        Ok(())
    }

    pub fn load_mesh(&self) -> Result<TriangleMesh> {
        match self.mesh.strip_prefix(BUILTIN_PREFIX) {
            Some(name) => shapes::builtin(name).with_context(|| format!("unknown builtin mesh {name:?}")),
            None => load_mesh(&self.mesh).with_context(|| format!("loading mesh {}", self.mesh)),
        }
    }

    /// Camera above the bin; the default focal length makes the bin span
    /// `fill` of the image width at floor depth.
    pub fn camera(&self) -> Result<CameraIntrinsics> {
        let c = &self.camera;
        let f = c
            .f
            .unwrap_or_else(|| CameraIntrinsics::covering(c.width, c.height, self.bin.bin_w, self.bin.camera_height, c.fill).f);
        Ok(CameraIntrinsics::new(f, c.width, c.height, c.d_near, c.d_far)?)
    }

    pub fn detector(&self, base: DetectorParams) -> Result<DetectorParams> {
        let p = self.detector.apply(base);
        p.validate()?;
        Ok(p)
    }

    /// Noise levels in scene units, ascending.
    pub fn sigmas(&self, diameter: f64) -> Vec<f64> {
        let mut s: Vec<f64> = self.noise_sigmas_pct.iter().map(|p| p / 100.0 * diameter).collect();
        s.sort_by(f64::total_cmp);
        s.dedup();
        s
    }
}
