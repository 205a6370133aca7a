use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Training and detection parameters. Lengths are scene units, angles
/// radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Quantization steps over `[0, π]` for the three feature angles.
    pub n_angle_steps: u32,
    /// Quantization steps over `[0, d_max]` for the pair distance.
    pub n_dist_steps: u32,
    /// Accumulator bins over the planar rotation angle in `(-π, π]`.
    pub n_alpha_steps: u32,
    pub d_max: f64,
    /// Voxel edge for model and scene subsampling.
    pub tau: f64,
    /// Fraction of region points used as voting reference points.
    pub ref_fraction: f64,
    pub cluster_dist: f64,
    pub cluster_angle: f64,
    pub n_hypotheses: usize,
    pub exclusion_radius: f64,
    /// Accumulator cells at or above this fraction of the maximum become
    /// raw poses.
    pub peak_ratio: f64,
    /// Radius-mean height smoothing before picking hypothesis centers.
    pub smoothing: bool,
    /// Direction of "up" in the scene frame.
    pub height_axis: [f64; 3],
    /// Pick reference points at random with this seed instead of by stride.
    pub ref_seed: Option<u64>,
}

impl DetectorParams {
    /// Defaults scaled to an object diameter: 30 angle steps, 20
    /// distance steps up to one diameter, 5 % subsampling, 20 % reference
    /// points, clustering within 0.75 units and 20°, five hypotheses with a
    /// 1.1-diameter exclusion radius.
    pub fn for_diameter(diameter: f64) -> Self {
        Self {
            n_angle_steps: 30,
            n_dist_steps: 20,
            n_alpha_steps: 30,
            d_max: diameter,
            tau: 0.05 * diameter,
            ref_fraction: 0.20,
            cluster_dist: 0.75,
            cluster_angle: 20f64.to_radians(),
            n_hypotheses: 5,
            exclusion_radius: 1.1 * diameter,
            peak_ratio: 0.9,
            smoothing: true,
            height_axis: [0.0, 0.0, -1.0],
            ref_seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let steps = [
            ("n_angle_steps", self.n_angle_steps),
            ("n_dist_steps", self.n_dist_steps),
            ("n_alpha_steps", self.n_alpha_steps),
        ];
        for (name, v) in steps {
            if v == 0 {
                return Err(Error::InvalidParam(format!("{name} must be positive")));
            }
        }
        // keys pack into 8 bits per field
        if self.n_angle_steps > 256 || self.n_dist_steps > 256 {
            return Err(Error::InvalidParam(
                "n_angle_steps and n_dist_steps must be at most 256".into(),
            ));
        }
        let lengths = [
            ("d_max", self.d_max),
            ("tau", self.tau),
            ("cluster_dist", self.cluster_dist),
            ("cluster_angle", self.cluster_angle),
            ("exclusion_radius", self.exclusion_radius),
        ];
        for (name, v) in lengths {
            if !(v > 0.0) || v.is_nan() {
                return Err(Error::InvalidParam(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.ref_fraction > 0.0 && self.ref_fraction <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "ref_fraction must be in (0, 1], got {}",
                self.ref_fraction
            )));
        }
        if !(self.peak_ratio > 0.0 && self.peak_ratio <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "peak_ratio must be in (0, 1], got {}",
                self.peak_ratio
            )));
        }
        if self.n_hypotheses == 0 {
            return Err(Error::InvalidParam("n_hypotheses must be positive".into()));
        }
        let axis = nalgebra::Vector3::from(self.height_axis);
        if !(axis.norm() > 0.0) {
            return Err(Error::InvalidParam("height_axis must be non-zero".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn dist_step(&self) -> f64 {
        self.d_max / self.n_dist_steps as f64
    }

    #[inline]
    pub fn angle_step(&self) -> f64 {
        std::f64::consts::PI / self.n_angle_steps as f64
    }

    #[inline]
    pub fn alpha_step(&self) -> f64 {
        std::f64::consts::TAU / self.n_alpha_steps as f64
    }

    /// Stride between reference points, `round(1 / ref_fraction)`.
    pub fn ref_stride(&self) -> usize {
        ((1.0 / self.ref_fraction).round() as usize).max(1)
    }
}
