//! Pose errors and ground-truth matching.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    pub translation_err: f64,
    /// `translation_err` as a fraction of the object diameter.
    pub translation_err_rel: f64,
    /// Radians in `[0, π]`.
    pub rotation_err: f64,
    /// `0` when not produced by [`match_to_ground_truth`].
    pub matched_gt_id: u32,
    /// Another ground-truth object also lies within half a diameter of the
    /// detection.
    pub ambiguous: bool,
}

impl PoseError {
    pub fn rotation_err_deg(&self) -> f64 {
        self.rotation_err.to_degrees()
    }
}

pub fn pose_error(det: &Pose, gt: &Pose, diameter: f64) -> PoseError {
    let translation_err = det.translation_distance_to(gt);
    PoseError {
        translation_err,
        translation_err_rel: translation_err / diameter,
        rotation_err: det.rotation_angle_to(gt),
        matched_gt_id: 0,
        ambiguous: false,
    }
}

/// Error against the nearest ground truth by translation, ties broken by
/// the smaller rotation error and then the lower id.
pub fn match_to_ground_truth(det: &Pose, gts: &[(u32, Pose)], diameter: f64) -> Result<PoseError> {
    let (id, mut best) = gts
        .iter()
        .map(|(id, gt)| (*id, pose_error(det, gt, diameter)))
        .min_by(|a, b| {
            a.1.translation_err
                .total_cmp(&b.1.translation_err)
                .then(a.1.rotation_err.total_cmp(&b.1.rotation_err))
                .then(a.0.cmp(&b.0))
        })
        .ok_or(Error::EmptyGroundTruth)?;
    best.matched_gt_id = id;
    best.ambiguous = gts
        .iter()
        .filter(|(_, gt)| det.translation_distance_to(gt) <= 0.5 * diameter)
        .count()
        > 1;
    Ok(best)
}
