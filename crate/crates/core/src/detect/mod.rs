//! Scene-side detection: highest-point hypotheses, voting inside each
//! hypothesis region and pose clustering.

mod cluster;
mod hypotheses;
mod report;
mod voting;

pub use cluster::{cluster_poses, Detection};
pub use hypotheses::{select_hypotheses, smoothed_heights, Hypothesis, HypothesisSelection};
pub use report::{DetectionRecord, DetectionReport};
pub use voting::{
    accumulator_peaks, alpha_bin, alpha_bin_center, pose_from_alignment, reference_indices, vote,
    vote_accumulator, vote_into, Accumulator, RawPose,
};

use std::time::{Duration, Instant};

use nalgebra::Vector3;

use crate::error::Result;
use crate::mesh::{voxel_subsample, PointCloud};
use crate::ppf::{DetectorParams, PPFModel};

/// Outcome of one hypothesis.
#[derive(Debug, Clone)]
pub struct HypothesisRun {
    pub rank: usize,
    pub center: Vector3<f64>,
    pub region_size: usize,
    pub n_reference: usize,
    /// Voting and clustering time.
    pub elapsed: Duration,
    /// Strongest cluster, if any votes were cast.
    pub detection: Option<Detection>,
}

#[derive(Debug, Clone, Default)]
pub struct DetectionSet {
    pub runs: Vec<HypothesisRun>,
    /// Index into `runs` of the detection with the most votes (lowest rank
    /// on ties).
    pub best: Option<usize>,
    /// Fewer hypotheses than requested were available.
    pub exhausted: bool,
    /// Scene points after subsampling.
    pub scene_points: usize,
}

impl DetectionSet {
    pub fn detections(&self) -> impl Iterator<Item = &Detection> + '_ {
        self.runs.iter().filter_map(|r| r.detection.as_ref())
    }

    pub fn best_detection(&self) -> Option<&Detection> {
        self.best.and_then(|i| self.runs[i].detection.as_ref())
    }
}

/// `params` with the quantization fields the model was trained with.
pub fn effective_params(model: &PPFModel, params: &DetectorParams) -> DetectorParams {
    let m = &model.params;
    if (m.n_angle_steps, m.n_dist_steps, m.d_max, m.tau)
        != (params.n_angle_steps, params.n_dist_steps, params.d_max, params.tau)
    {
        log::warn!("quantization parameters differ from the model's; using the model's");
    }
    DetectorParams {
        n_angle_steps: m.n_angle_steps,
        n_dist_steps: m.n_dist_steps,
        d_max: m.d_max,
        tau: m.tau,
        ..*params
    }
}

/// Full detection on a camera-frame scene cloud. The cloud is subsampled
/// at the model's `tau` first.
pub fn detect(scene: &PointCloud, model: &PPFModel, params: &DetectorParams) -> Result<DetectionSet> {
    let params = effective_params(model, params);
    params.validate()?;
    if scene.is_empty() {
        return Ok(DetectionSet::default());
    }
    let sub = voxel_subsample(scene, params.tau)?;
    let selection = select_hypotheses(&sub, &params);

    let runs: Vec<HypothesisRun> = selection
        .hypotheses
        .iter()
        .map(|h| run_hypothesis(h, model, &params))
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.detection.map(|d| (i, d.votes)))
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i);
    Ok(DetectionSet {
        runs,
        best,
        exhausted: selection.exhausted,
        scene_points: sub.len(),
    })
}

pub fn run_hypothesis(h: &Hypothesis, model: &PPFModel, params: &DetectorParams) -> HypothesisRun {
    let start = Instant::now();
    let raw = vote(&h.region, model, params);
    let detection = cluster_poses(&raw, params).into_iter().next().map(|d| Detection {
        hypothesis_rank: h.rank,
        ..d
    });
    let elapsed = start.elapsed();
    log::debug!(
        "hypothesis {}: {} region points, {} raw poses, {:.1} ms",
        h.rank,
        h.region.len(),
        raw.len(),
        elapsed.as_secs_f64() * 1e3
    );
    HypothesisRun {
        rank: h.rank,
        center: h.center,
        region_size: h.region.len(),
        n_reference: reference_indices(h.region.len(), params).len(),
        elapsed,
        detection,
    }
}
