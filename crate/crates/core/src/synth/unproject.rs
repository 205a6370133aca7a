//! Depth image → oriented point cloud.

use nalgebra::Vector3;
use rayon::prelude::*;

use super::camera::DepthImage;
use crate::mesh::{OrientedPoint, PointCloud};

/// Neighbors whose depth differs from the center pixel by more than this
/// fraction of its depth are treated as invalid (silhouette edges).
pub const DEPTH_JUMP_RATIO: f64 = 0.02;

/// Unprojects every pixel whose four neighbors are valid. Normals come from
/// central-difference tangents and are oriented toward the camera. Points
/// are emitted in row-major pixel order.
pub fn unproject(depth: &DepthImage) -> PointCloud {
    unproject_with(depth, DEPTH_JUMP_RATIO)
}

pub fn unproject_with(depth: &DepthImage, jump_ratio: f64) -> PointCloud {
    let cam = depth.intrinsics;
    let (w, h) = (cam.width, cam.height);
    if w < 3 || h < 3 {
        return PointCloud::default();
    }
    let positions: Vec<Option<Vector3<f64>>> = (0..w * h)
        .into_par_iter()
        .map(|idx| {
            let b = depth.zbuffer[idx];
            (b < 1.0).then(|| cam.unproject_pixel(idx % w, idx / w, b))
        })
        .collect();

    let points = (1..h - 1)
        .into_par_iter()
        .flat_map_iter(|j| {
            let positions = &positions;
            (1..w - 1).filter_map(move |i| {
                let p = positions[j * w + i]?;
                let limit = jump_ratio * p.z;
                let near = |q: Option<Vector3<f64>>| q.filter(|q| (q.z - p.z).abs() <= limit);
                let left = near(positions[j * w + i - 1])?;
                let right = near(positions[j * w + i + 1])?;
                let up = near(positions[(j - 1) * w + i])?;
                let down = near(positions[(j + 1) * w + i])?;
                let n = (right - left).cross(&(down - up)).try_normalize(1e-300)?;
                let facing = n.dot(&(-p));
                if facing == 0.0 {
                    return None;
                }
                let normal = if facing > 0.0 { n } else { -n };
                Some(OrientedPoint {
                    position: p,
                    normal,
                })
            })
        })
        .collect();
    PointCloud::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::camera::CameraIntrinsics;

    #[test]
    fn empty_image_gives_empty_cloud() {
        let cam = CameraIntrinsics::new(100.0, 20, 10, 1.0, 50.0).unwrap();
        assert!(unproject(&DepthImage::empty(cam)).is_empty());
    }

    #[test]
    fn near_plane_block_at_center() {
        let cam = CameraIntrinsics::new(100.0, 9, 9, 1.0, 50.0).unwrap();
        let mut img = DepthImage::empty(cam);
        for j in 3..6 {
            for i in 3..6 {
                let idx = img.index(i, j);
                img.zbuffer[idx] = 0.0;
            }
        }
        let cloud = unproject(&img);
        assert_eq!(cloud.len(), 1);
        assert_eq!(cloud.points[0].position, Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(cloud.points[0].normal, Vector3::new(0.0, 0.0, -1.0));
    }

    #[test]
    fn isolated_pixel_has_no_point() {
        let cam = CameraIntrinsics::new(100.0, 5, 5, 1.0, 50.0).unwrap();
        let mut img = DepthImage::empty(cam);
        img.zbuffer[12] = 0.2;
        assert!(unproject(&img).is_empty());
    }
}
