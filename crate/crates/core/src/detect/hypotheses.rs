//! Highest-point hypotheses.

use nalgebra::Vector3;

use crate::mesh::spatial::RadiusIndex;
use crate::mesh::{OrientedPoint, PointCloud};
use crate::ppf::DetectorParams;

#[derive(Debug, Clone)]
pub struct Hypothesis {
    /// 1 for the highest point.
    pub rank: usize,
    pub center: Vector3<f64>,
    /// Index of the center in the scene cloud.
    pub center_index: usize,
    /// Every scene point within `exclusion_radius` of the center, in scene
    /// order.
    pub region: PointCloud,
}

#[derive(Debug, Clone, Default)]
pub struct HypothesisSelection {
    pub hypotheses: Vec<Hypothesis>,
    /// Set when the scene ran out of candidates before `n_hypotheses`.
    pub exhausted: bool,
}

/// Per-point height along `axis`, averaged over neighbors within `radius`
/// when `radius > 0`.
pub fn smoothed_heights(points: &[OrientedPoint], axis: &Vector3<f64>, radius: f64) -> Vec<f64> {
    let raw: Vec<f64> = points.iter().map(|p| p.position.dot(axis)).collect();
    if radius <= 0.0 || points.is_empty() {
        return raw;
    }
    let positions: Vec<Vector3<f64>> = points.iter().map(|p| p.position).collect();
    let index = RadiusIndex::new(&positions, radius);
    positions
        .iter()
        .map(|c| {
            let (mut sum, mut n) = (0.0, 0usize);
            index.for_each_within(&positions, c, radius, |j| {
                sum += raw[j];
                n += 1;
            });
            sum / n as f64
        })
        .collect()
}

/// Repeatedly picks the highest remaining point and excludes its
/// neighborhood from later picks.
pub fn select_hypotheses(scene: &PointCloud, params: &DetectorParams) -> HypothesisSelection {
    let n_wanted = params.n_hypotheses;
    if scene.is_empty() {
        return HypothesisSelection {
            hypotheses: Vec::new(),
            exhausted: n_wanted > 0,
        };
    }
    let axis = Vector3::from(params.height_axis).normalize();
    let smoothing = if params.smoothing { 2.0 * params.tau } else { 0.0 };
    let heights = smoothed_heights(&scene.points, &axis, smoothing);

    let positions: Vec<Vector3<f64>> = scene.positions().copied().collect();
    let radius = params.exclusion_radius;
    let index = RadiusIndex::new(&positions, radius);

    let mut order: Vec<usize> = (0..positions.len()).collect();
    order.sort_by(|&a, &b| heights[b].total_cmp(&heights[a]).then(a.cmp(&b)));
    let mut excluded = vec![false; positions.len()];
    let mut cursor = 0;
    let mut hypotheses = Vec::with_capacity(n_wanted);

    while hypotheses.len() < n_wanted {
        while cursor < order.len() && excluded[order[cursor]] {
            cursor += 1;
        }
        let Some(&center_index) = order.get(cursor) else {
            break;
        };
        let center = positions[center_index];
        let members = index.within(&positions, &center, radius);
        for &i in &members {
            excluded[i] = true;
        }
        hypotheses.push(Hypothesis {
            rank: hypotheses.len() + 1,
            center,
            center_index,
            region: PointCloud {
                points: members.iter().map(|&i| scene.points[i]).collect(),
                sampling_resolution: scene.sampling_resolution,
            },
        });
    }
    let exhausted = hypotheses.len() < n_wanted;
    if exhausted {
        log::warn!(
            "only {} of {n_wanted} hypotheses available in a scene of {} points",
            hypotheses.len(),
            scene.len()
        );
    }
    HypothesisSelection {
        hypotheses,
        exhausted,
    }
}
