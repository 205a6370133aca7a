//! Geometry kernel: triangle meshes, oriented point clouds, voxel
//! subsampling and surface sampling.

mod io;
pub mod shapes;
pub mod spatial;

use nalgebra::Vector3;
use rayon::prelude::*;

pub use io::{load_mesh, parse_obj, parse_ply, write_obj};

use crate::error::{Error, Result};
use crate::pose::Pose;

/// Vertex count above which [`object_diameter`] goes through the convex hull.
pub const BRUTE_FORCE_DIAMETER_LIMIT: usize = 5000;

/// Vertex normals deviating from their face normal by more than this are
/// treated as belonging to a sharp edge during surface sampling.
pub const CREASE_ANGLE: f64 = std::f64::consts::FRAC_PI_6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedPoint {
    pub position: Vector3<f64>,
    pub normal: Vector3<f64>,
}

impl OrientedPoint {
    /// Normalizes `normal`; a zero normal falls back to `+z`.
    pub fn new(position: Vector3<f64>, normal: Vector3<f64>) -> Self {
        let normal = normal.try_normalize(0.0).unwrap_or_else(Vector3::z);
        Self { position, normal }
    }

    pub fn transformed(&self, pose: &Pose) -> Self {
        Self {
            position: pose.transform_point(&self.position),
            normal: pose.rotate(&self.normal),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<OrientedPoint>,
    /// Voxel edge used to produce the cloud, `0` for raw clouds.
    pub sampling_resolution: f64,
}

impl PointCloud {
    pub fn new(points: Vec<OrientedPoint>) -> Self {
        Self {
            points,
            sampling_resolution: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn transformed(&self, pose: &Pose) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| p.transformed(pose)).collect(),
            sampling_resolution: self.sampling_resolution,
        }
    }

    pub fn positions(&self) -> impl Iterator<Item = &Vector3<f64>> + '_ {
        self.points.iter().map(|p| &p.position)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[u32; 3]>,
    pub vertex_normals: Option<Vec<Vector3<f64>>>,
    /// Zero-area faces removed at construction.
    pub dropped_faces: usize,
    /// Vertices without incident faces, given a `+z` normal.
    pub isolated_vertices: Vec<usize>,
}

impl TriangleMesh {
    /// Validates indices and drops zero-area faces.
    pub fn new(vertices: Vec<Vector3<f64>>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        let mut kept = Vec::with_capacity(faces.len());
        let mut dropped = 0;
        for (fi, f) in faces.into_iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i as usize >= n) {
                return Err(Error::Degenerate(format!(
                    "face {fi} references vertex {bad} but the mesh has {n} vertices"
                )));
            }
            if is_degenerate(&vertices, &f) {
                dropped += 1;
            } else {
                kept.push(f);
            }
        }
        if kept.is_empty() {
            return Err(Error::EmptyMesh);
        }
        if dropped > 0 {
            log::warn!("dropped {dropped} zero-area face(s)");
        }
        Ok(Self {
            vertices,
            faces: kept,
            vertex_normals: None,
            dropped_faces: dropped,
            isolated_vertices: Vec::new(),
        })
    }

    pub fn triangle(&self, face: usize) -> [Vector3<f64>; 3] {
        let f = self.faces[face];
        [
            self.vertices[f[0] as usize],
            self.vertices[f[1] as usize],
            self.vertices[f[2] as usize],
        ]
    }

    /// Unnormalized face normal; its length is twice the face area.
    pub fn face_cross(&self, face: usize) -> Vector3<f64> {
        let [a, b, c] = self.triangle(face);
        (b - a).cross(&(c - a))
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| 0.5 * self.face_cross(f).norm())
            .sum()
    }

    /// Area-weighted vertex normals following face winding.
    pub fn compute_vertex_normals(mut self) -> Self {
        let mut sums = vec![Vector3::zeros(); self.vertices.len()];
        let mut touched = vec![false; self.vertices.len()];
        for fi in 0..self.faces.len() {
            let cross = self.face_cross(fi);
            for &v in &self.faces[fi] {
                sums[v as usize] += cross;
                touched[v as usize] = true;
            }
        }
        let mut isolated = Vec::new();
        let normals = sums
            .into_iter()
            .enumerate()
            .map(|(i, s)| match s.try_normalize(1e-300) {
                Some(n) if touched[i] => n,
                _ => {
                    isolated.push(i);
                    Vector3::z()
                }
            })
            .collect();
        if !isolated.is_empty() {
            log::warn!("{} vertex normal(s) fell back to +z", isolated.len());
        }
        self.vertex_normals = Some(normals);
        self.isolated_vertices = isolated;
        self
    }

    /// Applies a rigid transform to vertices and, if present, normals.
    pub fn transformed(&self, pose: &Pose) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| pose.transform_point(v)).collect(),
            faces: self.faces.clone(),
            vertex_normals: self
                .vertex_normals
                .as_ref()
                .map(|ns| ns.iter().map(|n| pose.rotate(n)).collect()),
            dropped_faces: self.dropped_faces,
            isolated_vertices: self.isolated_vertices.clone(),
        }
    }

    /// Uniform scale about the origin. Normals are unaffected.
    pub fn scaled(mut self, factor: f64) -> Self {
        for v in &mut self.vertices {
            *v *= factor;
        }
        self
    }

    /// Translates so the bounding-box center sits at the origin.
    pub fn centered(mut self) -> Self {
        let (lo, hi) = bounding_box(&self.vertices);
        let c = (lo + hi) * 0.5;
        for v in &mut self.vertices {
            *v -= c;
        }
        self
    }
}

fn is_degenerate(vertices: &[Vector3<f64>], f: &[u32; 3]) -> bool {
    let a = vertices[f[0] as usize];
    let b = vertices[f[1] as usize];
    let c = vertices[f[2] as usize];
    let scale = (b - a)
        .norm_squared()
        .max((c - a).norm_squared())
        .max((c - b).norm_squared());
    (b - a).cross(&(c - a)).norm() <= f64::EPSILON * scale
}

pub fn bounding_box(points: &[Vector3<f64>]) -> (Vector3<f64>, Vector3<f64>) {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

/// Index of the origin-anchored voxel of edge `tau` containing `p`.
#[inline]
pub fn voxel_key(p: &Vector3<f64>, tau: f64) -> [i64; 3] {
    [
        (p.x / tau).floor() as i64,
        (p.y / tau).floor() as i64,
        (p.z / tau).floor() as i64,
    ]
}

/// One point per occupied voxel: member centroid and normalized mean
/// normal. Output is sorted by voxel index.
pub fn voxel_subsample(cloud: &PointCloud, tau: f64) -> Result<PointCloud> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "voxel size must be positive, got {tau}"
        )));
    }
    let mut order: Vec<([i64; 3], u32)> = cloud
        .points
        .par_iter()
        .enumerate()
        .map(|(i, p)| (voxel_key(&p.position, tau), i as u32))
        .collect();
    order.par_sort_unstable();

    let mut starts = Vec::new();
    for i in 0..order.len() {
        if i == 0 || order[i].0 != order[i - 1].0 {
            starts.push(i);
        }
    }
    starts.push(order.len());

    let points = starts
        .par_windows(2)
        .map(|w| {
            let members = &order[w[0]..w[1]];
            let inv = 1.0 / members.len() as f64;
            let mut pos = Vector3::zeros();
            let mut nrm = Vector3::zeros();
            for &(_, i) in members {
                let p = &cloud.points[i as usize];
                pos += p.position;
                nrm += p.normal;
            }
            let centroid = pos * inv;
            let normal = if nrm.norm() < 1e-9 {
                members
                    .iter()
                    .map(|&(_, i)| &cloud.points[i as usize])
                    .min_by(|a, b| {
                        (a.position - centroid)
                            .norm_squared()
                            .total_cmp(&(b.position - centroid).norm_squared())
                    })
                    .map(|p| p.normal)
                    .unwrap_or_else(Vector3::z)
            } else {
                nrm.normalize()
            };
            OrientedPoint {
                position: centroid,
                normal,
            }
        })
        .collect();

    Ok(PointCloud {
        points,
        sampling_resolution: tau,
    })
}

/// Samples the surface on a per-triangle barycentric lattice with spacing at
/// most `tau / 2`, then voxel-subsamples at `tau`.
pub fn mesh_to_cloud(mesh: &TriangleMesh, tau: f64) -> Result<PointCloud> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "sampling resolution must be positive, got {tau}"
        )));
    }
    let normals = mesh
        .vertex_normals
        .as_ref()
        .ok_or_else(|| Error::InvalidParam("mesh has no vertex normals".into()))?;
    if mesh.surface_area() <= 0.0 {
        return Err(Error::Degenerate("mesh has zero surface area".into()));
    }
    let spacing = 0.5 * tau;
    let cos_crease = CREASE_ANGLE.cos();

    let samples: Vec<OrientedPoint> = (0..mesh.faces.len())
        .into_par_iter()
        .flat_map_iter(|fi| {
            let f = mesh.faces[fi];
            let [a, b, c] = mesh.triangle(fi);
            let face_n = mesh.face_cross(fi).normalize();
            let corner = |k: usize| {
                let n = normals[f[k] as usize];
                if n.dot(&face_n) < cos_crease {
                    face_n
                } else {
                    n
                }
            };
            let (na, nb, nc) = (corner(0), corner(1), corner(2));
            let longest = (b - a).norm().max((c - a).norm()).max((c - b).norm());
            let steps = ((longest / spacing).ceil() as usize).max(1);
            let inv = 1.0 / steps as f64;
            (0..=steps).flat_map(move |i| {
                (0..=steps - i).map(move |j| {
                    let wb = i as f64 * inv;
                    let wc = j as f64 * inv;
                    let wa = 1.0 - wb - wc;
                    let p = a * wa + b * wb + c * wc;
                    let n = (na * wa + nb * wb + nc * wc)
                        .try_normalize(1e-12)
                        .unwrap_or(face_n);
                    OrientedPoint {
                        position: p,
                        normal: n,
                    }
                })
            })
        })
        .collect();

    voxel_subsample(&PointCloud::new(samples), tau)
}

/// Maximum pairwise vertex distance.
pub fn object_diameter(mesh: &TriangleMesh) -> Result<f64> {
    points_diameter(&mesh.vertices)
}

pub fn points_diameter(points: &[Vector3<f64>]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Degenerate(format!(
            "diameter needs at least 2 points, got {}",
            points.len()
        )));
    }
    if points.len() <= BRUTE_FORCE_DIAMETER_LIMIT {
        return Ok(brute_force_diameter(points));
    }
    let hull_input: Vec<parry3d_f64::math::Vector3> = points
        .iter()
        .map(|p| parry3d_f64::math::Vector3::new(p.x, p.y, p.z))
        .collect();
    match parry3d_f64::transformation::try_convex_hull(&hull_input) {
        Ok((hull, _)) if hull.len() >= 2 => {
            let hull: Vec<Vector3<f64>> =
                hull.iter().map(|v| Vector3::new(v.x, v.y, v.z)).collect();
            Ok(brute_force_diameter(&hull))
        }
        // flat or collinear inputs have no 3-D hull
        _ => Ok(brute_force_diameter(points)),
    }
}

fn brute_force_diameter(points: &[Vector3<f64>]) -> f64 {
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            points[i + 1..]
                .iter()
                .map(|q| (points[i] - q).norm_squared())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::UnitQuaternion;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(x: f64, y: f64, z: f64) -> OrientedPoint {
        OrientedPoint::new(Vector3::new(x, y, z), Vector3::z())
    }

    #[test]
    fn zero_area_face_is_dropped() {
        let v = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(2.0, 0.0, 0.0),
        ];
        let m = TriangleMesh::new(v, vec![[0, 1, 2], [0, 1, 3]]).unwrap();
        assert_eq!(m.faces.len(), 1);
        assert_eq!(m.dropped_faces, 1);
    }

    #[test]
    fn out_of_range_index_rejected() {
        let v = vec![Vector3::zeros(), Vector3::x(), Vector3::y()];
        assert!(TriangleMesh::new(v, vec![[0, 1, 3]]).is_err());
    }

    #[test]
    fn all_degenerate_is_empty_mesh() {
        let v = vec![Vector3::zeros(), Vector3::x(), Vector3::x() * 2.0];
        assert!(matches!(
            TriangleMesh::new(v, vec![[0, 1, 2]]),
            Err(Error::EmptyMesh)
        ));
    }

    #[test]
    fn planar_square_normals_point_up() {
        let m = shapes::square(2.0).compute_vertex_normals();
        for n in m.vertex_normals.unwrap() {
            assert_relative_eq!(n, Vector3::z(), epsilon = 1e-12);
        }
    }

    #[test]
    fn cube_corner_normal_is_diagonal() {
        let m = shapes::cube(1.0).compute_vertex_normals();
        let corner = m
            .vertices
            .iter()
            .position(|v| (v - Vector3::new(0.5, 0.5, 0.5)).norm() < 1e-12)
            .unwrap();
        let n = m.vertex_normals.as_ref().unwrap()[corner];
        assert_relative_eq!(n, Vector3::new(1.0, 1.0, 1.0).normalize(), epsilon = 1e-12);
        for n in m.vertex_normals.unwrap() {
            assert!((n.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn isolated_vertex_gets_up_normal_and_flag() {
        let v = vec![
            Vector3::zeros(),
            Vector3::x(),
            Vector3::y(),
            Vector3::new(5.0, 5.0, 5.0),
        ];
        let m = TriangleMesh::new(v, vec![[0, 2, 1]])
            .unwrap()
            .compute_vertex_normals();
        assert_eq!(m.isolated_vertices, vec![3]);
        assert_eq!(m.vertex_normals.as_ref().unwrap()[3], Vector3::z());
        assert_relative_eq!(m.vertex_normals.unwrap()[0], -Vector3::z());
    }

    #[test]
    fn normals_commute_with_rigid_transform() {
        let mesh = shapes::bracket();
        let pose = Pose::from_quaternion(
            &UnitQuaternion::from_euler_angles(0.4, 1.2, -0.7),
            Vector3::new(3.0, -1.0, 8.0),
        );
        let a = mesh.clone().compute_vertex_normals().transformed(&pose);
        let b = mesh.transformed(&pose).compute_vertex_normals();
        for (x, y) in a
            .vertex_normals
            .unwrap()
            .iter()
            .zip(b.vertex_normals.unwrap().iter())
        {
            assert!((x - y).norm() < 1e-6);
        }
    }

    #[test]
    fn subsample_merges_close_points() {
        let c = PointCloud::new(vec![pt(0.2, 0.2, 0.2), pt(0.3, 0.2, 0.2)]);
        let s = voxel_subsample(&c, 1.0).unwrap();
        assert_eq!(s.len(), 1);
        assert_relative_eq!(s.points[0].position, Vector3::new(0.25, 0.2, 0.2));
        assert_eq!(s.sampling_resolution, 1.0);
    }

    #[test]
    fn subsample_keeps_separate_voxels() {
        let c = PointCloud::new(vec![pt(0.5, 0.5, 0.5), pt(2.5, 0.5, 0.5)]);
        let s = voxel_subsample(&c, 1.0).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.points[0].position, Vector3::new(0.5, 0.5, 0.5));
        assert_eq!(s.points[1].position, Vector3::new(2.5, 0.5, 0.5));
    }

    #[test]
    fn subsample_rejects_non_positive_tau() {
        assert!(voxel_subsample(&PointCloud::default(), 0.0).is_err());
        assert!(voxel_subsample(&PointCloud::default(), -1.0).is_err());
    }

    #[test]
    fn opposing_normals_fall_back_to_closest_member() {
        let c = PointCloud::new(vec![
            OrientedPoint::new(Vector3::new(0.1, 0.5, 0.5), Vector3::x()),
            OrientedPoint::new(Vector3::new(0.5, 0.5, 0.5), -Vector3::x()),
            OrientedPoint::new(Vector3::new(0.6, 0.5, 0.5), Vector3::y()),
            OrientedPoint::new(Vector3::new(0.9, 0.5, 0.5), -Vector3::y()),
        ]);
        let s = voxel_subsample(&c, 1.0).unwrap();
        assert_eq!(s.len(), 1);
        // centroid x = 0.525, closest member is the second point
        assert_eq!(s.points[0].normal, -Vector3::x());
    }

    #[test]
    fn random_cube_occupancy_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000);
        let pts: Vec<_> = (0..1000)
            .map(|_| pt(rng.random(), rng.random(), rng.random()))
            .collect();
        let tau = 0.5;
        // brute-force occupancy over the 2x2x2 cells spanning [0,1)³ plus the
        // next cell layer, i.e. the 3x3x3 bound
        let mut occupied = [[[false; 3]; 3]; 3];
        for p in &pts {
            let i = (p.position.x / tau).floor() as usize;
            let j = (p.position.y / tau).floor() as usize;
            let k = (p.position.z / tau).floor() as usize;
            occupied[i][j][k] = true;
        }
        let expected = occupied.iter().flatten().flatten().filter(|&&o| o).count();
        let s = voxel_subsample(&PointCloud::new(pts), tau).unwrap();
        assert_eq!(s.len(), expected);
        assert!(s.len() <= 27);
    }

    #[test]
    fn square_cloud_counts_and_normals() {
        let mesh = shapes::square(10.0)
            .scaled(1.0)
            .compute_vertex_normals();
        // square() is centered; shift to [0,10]² so the grid matches the
        // occupancy bound of 11x11
        let shifted = mesh.transformed(&Pose::from_translation(Vector3::new(5.0, 5.0, 0.0)));
        let cloud = mesh_to_cloud(&shifted, 1.0).unwrap();
        assert!((100..=121).contains(&cloud.len()), "{}", cloud.len());
        for p in &cloud.points {
            assert_relative_eq!(p.normal, Vector3::z(), epsilon = 1e-12);
        }
    }

    #[test]
    fn tiny_triangle_is_one_point() {
        let v = vec![
            Vector3::new(0.1, 0.1, 0.1),
            Vector3::new(0.3, 0.1, 0.1),
            Vector3::new(0.1, 0.3, 0.1),
        ];
        let m = TriangleMesh::new(v, vec![[0, 1, 2]])
            .unwrap()
            .compute_vertex_normals();
        assert_eq!(mesh_to_cloud(&m, 1.0).unwrap().len(), 1);
    }

    #[test]
    fn sphere_normals_are_radial() {
        let m = shapes::uv_sphere(1.0, 48, 24).compute_vertex_normals();
        let cloud = mesh_to_cloud(&m, 0.1).unwrap();
        assert!(cloud.len() > 500);
        let limit = 6f64.to_radians().cos();
        for p in &cloud.points {
            let radial = p.position.normalize();
            assert!(p.normal.dot(&radial) > limit);
        }
    }

    #[test]
    fn mesh_to_cloud_requires_normals() {
        assert!(mesh_to_cloud(&shapes::cube(1.0), 0.1).is_err());
    }

    #[test]
    fn cube_diameter() {
        assert_relative_eq!(
            object_diameter(&shapes::cube(1.0)).unwrap(),
            3f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn two_point_diameter() {
        let d = points_diameter(&[Vector3::zeros(), Vector3::new(7.0, 0.0, 0.0)]).unwrap();
        assert_eq!(d, 7.0);
        assert!(points_diameter(&[Vector3::zeros()]).is_err());
    }

    #[test]
    fn diameter_matches_pairwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let pts: Vec<Vector3<f64>> = (0..100)
            .map(|_| Vector3::new(rng.random(), rng.random(), rng.random()) * 4.0)
            .collect();
        let mut best: f64 = 0.0;
        for a in &pts {
            for b in &pts {
                best = best.max((a - b).norm());
            }
        }
        assert_eq!(points_diameter(&pts).unwrap(), best);
    }

    #[test]
    fn hull_diameter_equals_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Vector3<f64>> = (0..6000)
            .map(|_| {
                Vector3::new(
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                ) * 3.0
            })
            .collect();
        assert_relative_eq!(
            points_diameter(&pts).unwrap(),
            brute_force_diameter(&pts),
            max_relative = 1e-12
        );
    }
}
