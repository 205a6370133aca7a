//! Software z-buffer rasterizer.

use nalgebra::Vector3;

use super::camera::{CameraIntrinsics, DepthImage};
use crate::mesh::TriangleMesh;
use crate::pose::Pose;

#[derive(Debug, Clone)]
pub struct Rendered {
    pub depth: DepthImage,
    /// Lambertian shading with the light at the camera, row-major in `[0, 1]`.
    pub intensity: Vec<f64>,
}

/// Renders every `(mesh, pose)` instance. Poses map mesh coordinates into
/// the camera frame. Equal depths keep the earlier instance, then the
/// earlier triangle.
pub fn render_instances(instances: &[(&TriangleMesh, Pose)], cam: &CameraIntrinsics) -> Rendered {
    let mut depth = DepthImage::empty(*cam);
    // unclamped depth used for the z-test so surfaces past the far plane
    // cannot hide each other's ordering
    let mut ztest = vec![f64::INFINITY; cam.width * cam.height];
    let mut intensity = vec![0.0; cam.width * cam.height];

    for (mesh, pose) in instances {
        for fi in 0..mesh.faces.len() {
            let tri = mesh.triangle(fi).map(|v| pose.transform_point(&v));
            let normal = match (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).try_normalize(0.0) {
                Some(n) => n,
                None => continue,
            };
            let clipped = clip_near(&tri, cam.d_near);
            for k in 1..clipped.len().saturating_sub(1) {
                raster_triangle(
                    [clipped[0], clipped[k], clipped[k + 1]],
                    &normal,
                    cam,
                    &mut depth.zbuffer,
                    &mut ztest,
                    &mut intensity,
                );
            }
        }
    }
    Rendered { depth, intensity }
}

pub fn render_depth(mesh: &TriangleMesh, poses: &[Pose], cam: &CameraIntrinsics) -> Rendered {
    let instances: Vec<_> = poses.iter().map(|p| (mesh, *p)).collect();
    render_instances(&instances, cam)
}

/// Sutherland–Hodgman against `z ≥ d_near`.
fn clip_near(tri: &[Vector3<f64>; 3], d_near: f64) -> Vec<Vector3<f64>> {
    if tri.iter().all(|p| p.z >= d_near) {
        return tri.to_vec();
    }
    let mut out = Vec::with_capacity(4);
    for k in 0..3 {
        let a = tri[k];
        let b = tri[(k + 1) % 3];
        let (ina, inb) = (a.z >= d_near, b.z >= d_near);
        if ina {
            out.push(a);
        }
        if ina != inb {
            let t = (d_near - a.z) / (b.z - a.z);
            let mut p = a + (b - a) * t;
            p.z = d_near;
            out.push(p);
        }
    }
    out
}

fn raster_triangle(
    tri: [Vector3<f64>; 3],
    normal: &Vector3<f64>,
    cam: &CameraIntrinsics,
    zbuffer: &mut [f64],
    ztest: &mut [f64],
    intensity: &mut [f64],
) {
    let s = tri.map(|p| cam.project(&p));
    let b = tri.map(|p| cam.encode_depth_unclamped(p.z));
    let area = edge(s[0], s[1], s[2]);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    let min_x = s.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).ceil().max(0.0);
    let max_x = s.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max).floor();
    let min_y = s.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).ceil().max(0.0);
    let max_y = s.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).floor();
    if max_x < 0.0 || max_y < 0.0 {
        return;
    }
    let max_x = max_x.min((cam.width - 1) as f64) as usize;
    let max_y = max_y.min((cam.height - 1) as f64) as usize;
    let (min_x, min_y) = (min_x as usize, min_y as usize);
    let inv_area = 1.0 / area;

    for j in min_y..=max_y {
        for i in min_x..=max_x {
            let p = (i as f64, j as f64);
            let w0 = edge(s[1], s[2], p) * inv_area;
            let w1 = edge(s[2], s[0], p) * inv_area;
            let w2 = edge(s[0], s[1], p) * inv_area;
            if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                continue;
            }
            // b is affine in screen space
            let depth = b[0] + w1 * (b[1] - b[0]) + w2 * (b[2] - b[0]);
            let idx = j * cam.width + i;
            if depth < ztest[idx] {
                ztest[idx] = depth;
                zbuffer[idx] = depth.clamp(0.0, 1.0);
                let (u, v) = cam.pixel_uv(i, j);
                let view = -Vector3::new(u / cam.f, v / cam.f, 1.0).normalize();
                intensity[idx] = if depth < 1.0 { normal.dot(&view).max(0.0) } else { 0.0 };
            }
        }
    }
}

#[inline]
fn edge(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    fn cam() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 40, 30, 10.0, 100.0).unwrap()
    }

    fn plane_at(z: f64, size: f64) -> (TriangleMesh, Pose) {
        (
            shapes::square(size),
            Pose::from_translation(Vector3::new(0.0, 0.0, z)),
        )
    }

    #[test]
    fn plane_at_near_plane_is_zero() {
        let (m, p) = plane_at(10.0, 1.0);
        let r = render_depth(&m, &[p], &cam());
        let covered: Vec<f64> = r.depth.zbuffer.iter().copied().filter(|&b| b < 1.0).collect();
        assert!(!covered.is_empty());
        assert!(covered.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn plane_at_far_plane_is_one() {
        let (m, p) = plane_at(100.0, 10.0);
        let r = render_depth(&m, &[p], &cam());
        assert!(r.depth.zbuffer.iter().all(|&b| b == 1.0));
        // the far-plane surface still passed the coverage test
        assert!(r.intensity.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nearer_surface_wins() {
        let m = shapes::square(20.0);
        let near = Pose::from_translation(Vector3::new(0.0, 0.0, 50.0));
        let far = Pose::from_translation(Vector3::new(0.0, 0.0, 80.0));
        let c = cam();
        for order in [[far, near], [near, far]] {
            let r = render_depth(&m, &order, &c);
            let z = c.decode_depth(r.depth.get(20, 15));
            assert!((z - 50.0).abs() < 1e-9, "{z}");
        }
    }

    #[test]
    fn fully_behind_near_plane_is_skipped() {
        let (m, p) = plane_at(5.0, 1.0);
        let r = render_depth(&m, &[p], &cam());
        assert_eq!(r.depth.valid_count(), 0);
    }

    #[test]
    fn straddling_near_plane_is_clipped() {
        // tilted plane crossing z = d_near
        let m = shapes::square(40.0);
        let pose = Pose::new(
            nalgebra::Rotation3::from_axis_angle(&Vector3::x_axis(), 1.2),
            Vector3::new(0.0, 0.0, 12.0),
        );
        let c = cam();
        let r = render_depth(&m, &[pose], &c);
        assert!(r.depth.valid_count() > 0);
        for j in 0..c.height {
            for i in 0..c.width {
                let b = r.depth.get(i, j);
                assert!((0.0..=1.0).contains(&b));
            }
        }
    }

    #[test]
    fn facing_plane_is_bright_at_center() {
        let (m, p) = plane_at(50.0, 10.0);
        let r = render_depth(&m, &[p], &cam());
        // square() faces +z, away from the camera
        assert_eq!(r.intensity[15 * 40 + 20], 0.0);
        let flipped = Pose::new(
            nalgebra::Rotation3::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI),
            Vector3::new(0.0, 0.0, 50.0),
        );
        let r = render_depth(&m, &[flipped], &cam());
        assert!((r.intensity[15 * 40 + 20] - 1.0).abs() < 1e-12);
    }
}
