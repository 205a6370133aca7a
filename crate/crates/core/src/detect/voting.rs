//! Voting in the local coordinates of scene reference points.

use std::f64::consts::PI;

use nalgebra::{Rotation3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::mesh::{OrientedPoint, PointCloud};
use crate::pose::Pose;
use crate::ppf::{compute_ppf, quantize, wrap_angle, DetectorParams, LocalFrame, PPFModel};

/// Votes of one reference point: `votes[point * n_alpha + alpha_bin]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Accumulator {
    pub n_points: usize,
    pub n_alpha: usize,
    pub votes: Vec<u32>,
}

impl Accumulator {
    pub fn new(n_points: usize, n_alpha: usize) -> Self {
        Self {
            n_points,
            n_alpha,
            votes: vec![0; n_points * n_alpha],
        }
    }

    #[inline]
    pub fn get(&self, point: usize, alpha_bin: usize) -> u32 {
        self.votes[point * self.n_alpha + alpha_bin]
    }

    pub fn max(&self) -> u32 {
        self.votes.iter().copied().max().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.votes.iter().map(|&v| v as u64).sum()
    }

    fn clear(&mut self) {
        self.votes.fill(0);
    }
}

/// A voted pose before clustering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawPose {
    pub pose: Pose,
    pub votes: u32,
    /// Position of the reference point in the region.
    pub reference: usize,
}

#[inline]
pub fn alpha_bin(alpha: f64, n_alpha: u32) -> usize {
    let step = std::f64::consts::TAU / n_alpha as f64;
    (((alpha + PI) / step).floor().max(0.0) as usize).min(n_alpha as usize - 1)
}

#[inline]
pub fn alpha_bin_center(bin: usize, n_alpha: u32) -> f64 {
    let step = std::f64::consts::TAU / n_alpha as f64;
    -PI + (bin as f64 + 0.5) * step
}

/// Reference points: every `round(1 / ref_fraction)`-th region point, or a
/// seeded random subset of the same size when `ref_seed` is set.
pub fn reference_indices(n: usize, params: &DetectorParams) -> Vec<usize> {
    match params.ref_seed {
        None => (0..n).step_by(params.ref_stride()).collect(),
        Some(seed) => {
            let k = n.div_ceil(params.ref_stride());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = rand::seq::index::sample(&mut rng, n, k).into_vec();
            idx.sort_unstable();
            idx
        }
    }
}

/// Fills `acc` with the votes of `region[reference]` against every other
/// region point within `d_max`.
pub fn vote_into(
    acc: &mut Accumulator,
    region: &[OrientedPoint],
    reference: usize,
    model: &PPFModel,
    params: &DetectorParams,
) {
    acc.clear();
    let sr = &region[reference];
    let frame = LocalFrame::of(sr);
    let n_alpha = params.n_alpha_steps;
    let d_max2 = params.d_max * params.d_max;
    for (j, so) in region.iter().enumerate() {
        if j == reference || (so.position - sr.position).norm_squared() > d_max2 {
            continue;
        }
        let Some(f) = compute_ppf(sr, so) else {
            continue;
        };
        if f.dist > params.d_max {
            continue;
        }
        let entries = model.get(quantize(&f, params).pack());
        if entries.is_empty() {
            continue;
        }
        let alpha_s = frame.alpha(&so.position);
        for e in entries {
            let bin = alpha_bin(wrap_angle(e.alpha - alpha_s), n_alpha);
            acc.votes[e.point as usize * acc.n_alpha + bin] += 1;
        }
    }
}

/// Accumulator of a single reference point.
pub fn vote_accumulator(
    region: &[OrientedPoint],
    reference: usize,
    model: &PPFModel,
    params: &DetectorParams,
) -> Accumulator {
    let mut acc = Accumulator::new(model.model_cloud.len(), params.n_alpha_steps as usize);
    vote_into(&mut acc, region, reference, model, params);
    acc
}

/// Pose taking `model_point` onto `scene_point` with a residual rotation
/// `alpha` about the shared normal.
pub fn pose_from_alignment(model_point: &OrientedPoint, scene_point: &OrientedPoint, alpha: f64) -> Pose {
    let tm = LocalFrame::of(model_point);
    let ts = LocalFrame::of(scene_point);
    let rx = Rotation3::from_axis_angle(&Vector3::x_axis(), alpha);
    let rotation = ts.rotation.inverse() * rx * tm.rotation;
    let translation = scene_point.position - rotation * model_point.position;
    Pose::new(rotation, translation)
}

/// Cells holding at least `peak_ratio` of the maximum, as poses.
pub fn accumulator_peaks(
    acc: &Accumulator,
    scene_point: &OrientedPoint,
    reference: usize,
    model: &PPFModel,
    params: &DetectorParams,
) -> Vec<RawPose> {
    let max = acc.max();
    if max == 0 {
        return Vec::new();
    }
    let threshold = params.peak_ratio * max as f64;
    acc.votes
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v as f64 >= threshold)
        .map(|(cell, &votes)| {
            let (m, bin) = (cell / acc.n_alpha, cell % acc.n_alpha);
            RawPose {
                pose: pose_from_alignment(
                    &model.model_cloud.points[m],
                    scene_point,
                    alpha_bin_center(bin, params.n_alpha_steps),
                ),
                votes,
                reference,
            }
        })
        .collect()
}

/// Raw poses from every reference point of `region`, in reference order.
pub fn vote(region: &PointCloud, model: &PPFModel, params: &DetectorParams) -> Vec<RawPose> {
    let pts = &region.points;
    if pts.is_empty() {
        return Vec::new();
    }
    let refs = reference_indices(pts.len(), params);
    let n_alpha = params.n_alpha_steps as usize;
    let n_model = model.model_cloud.len();
    let per_ref: Vec<Vec<RawPose>> = refs
        .par_iter()
        .map_init(
            || Accumulator::new(n_model, n_alpha),
            |acc, &r| {
                vote_into(acc, pts, r, model, params);
                accumulator_peaks(acc, &pts[r], r, model, params)
            },
        )
        .collect();
    per_ref.into_iter().flatten().collect()
}
