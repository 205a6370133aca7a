//! Heightmap drop placement.
//!
//! Objects are released over a grid of cells, layer after layer, and
//! lowered straight down until their surface touches the running
//! heightmap. There are no dynamics: an object settles on whatever it hits
//! first, in the orientation it was dropped with.

use nalgebra::{Rotation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{bounding_box, mesh_to_cloud, object_diameter, TriangleMesh};
use crate::pose::{random_rotation, Pose};

/// Bin and drop layout. Lengths are scene units, the bin floor is `z = 0`
/// in the bin frame with `+z` up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BinConfig {
    pub bin_w: f64,
    pub bin_h: f64,
    pub bin_d: f64,
    /// Caps the pile height; objects that would settle above it are dropped.
    pub drop_height: f64,
    pub camera_height: f64,
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub n_layers: usize,
    /// Render the bin floor. The walls are never rendered.
    pub render_floor: bool,
}

impl Default for BinConfig {
    fn default() -> Self {
        Self {
            bin_w: 60.0,
            bin_h: 40.0,
            bin_d: 30.0,
            drop_height: 60.0,
            camera_height: 100.0,
            grid_nx: 7,
            grid_ny: 5,
            n_layers: 10,
            render_floor: false,
        }
    }
}

impl BinConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("bin_w", self.bin_w),
            ("bin_h", self.bin_h),
            ("bin_d", self.bin_d),
            ("drop_height", self.drop_height),
            ("camera_height", self.camera_height),
        ];
        for (name, v) in dims {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam(format!("{name} must be positive, got {v}")));
            }
        }
        if self.grid_nx == 0 || self.grid_ny == 0 {
            return Err(Error::InvalidParam("drop grid must be at least 1x1".into()));
        }
        Ok(())
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (
            self.bin_w / self.grid_nx as f64,
            self.bin_h / self.grid_ny as f64,
        )
    }

    /// Camera straight above the bin center looking down: camera `x` along
    /// bin `x`, camera `y` along bin `-y`, camera `z` along bin `-z`.
    pub fn camera_from_bin(&self) -> Pose {
        Pose::new(
            Rotation3::from_matrix_unchecked(nalgebra::Matrix3::from_diagonal(&Vector3::new(
                1.0, -1.0, -1.0,
            ))),
            Vector3::new(0.0, 0.0, self.camera_height),
        )
    }
}

#[derive(Debug, Clone)]
pub struct Placement {
    /// Object-to-bin poses in drop order.
    pub poses: Vec<Pose>,
    /// Objects skipped because they would rest above `drop_height`.
    pub truncated: usize,
}

/// Drops `grid_nx × grid_ny × n_layers` objects with uniformly random
/// orientations.
pub fn place_objects(mesh: &TriangleMesh, cfg: &BinConfig, seed: u64) -> Result<Placement> {
    place_objects_with(mesh, cfg, seed, random_rotation)
}

/// As [`place_objects`] with a caller-supplied orientation sampler.
pub fn place_objects_with<F>(
    mesh: &TriangleMesh,
    cfg: &BinConfig,
    seed: u64,
    mut orientation: F,
) -> Result<Placement>
where
    F: FnMut(&mut ChaCha8Rng) -> UnitQuaternion<f64>,
{
    cfg.validate()?;
    let diameter = object_diameter(mesh)?;
    let (cell_w, cell_h) = cfg.cell_size();
    let limit = cell_w.min(cell_h) * 1.5;
    if diameter > limit {
        return Err(Error::ObjectTooLarge { diameter, limit });
    }

    let res = 0.05 * diameter;
    let with_normals;
    let mesh = if mesh.vertex_normals.is_some() {
        mesh
    } else {
        with_normals = mesh.clone().compute_vertex_normals();
        &with_normals
    };
    // vertices carry the extremes, the surface samples fill the footprint
    let samples: Vec<Vector3<f64>> = mesh
        .vertices
        .iter()
        .copied()
        .chain(mesh_to_cloud(mesh, 0.5 * res)?.points.into_iter().map(|p| p.position))
        .collect();

    let mut height = Heightmap::new(cfg.bin_w, cfg.bin_h, res);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut poses = Vec::with_capacity(cfg.grid_nx * cfg.grid_ny * cfg.n_layers);
    let mut truncated = 0;

    for layer in 0..cfg.n_layers {
        let mut layer_truncated = 0;
        for gy in 0..cfg.grid_ny {
            for gx in 0..cfg.grid_nx {
                let q = orientation(&mut rng);
                let jx = (rng.random::<f64>() - 0.5) * 0.5 * cell_w;
                let jy = (rng.random::<f64>() - 0.5) * 0.5 * cell_h;
                let rot = q.to_rotation_matrix();
                let rotated: Vec<Vector3<f64>> = samples.iter().map(|p| rot * p).collect();

                let (lo, hi) = bounding_box(&rotated);
                let mut x = -0.5 * cfg.bin_w + (gx as f64 + 0.5) * cell_w + jx;
                let mut y = -0.5 * cfg.bin_h + (gy as f64 + 0.5) * cell_h + jy;
                // walls: keep the footprint inside the bin
                x = x.max(-0.5 * cfg.bin_w - lo.x).min(0.5 * cfg.bin_w - hi.x);
                y = y.max(-0.5 * cfg.bin_h - lo.y).min(0.5 * cfg.bin_h - hi.y);

                let dz = rotated
                    .iter()
                    .map(|p| height.at(x + p.x, y + p.y) - p.z)
                    .fold(f64::NEG_INFINITY, f64::max);
                if dz + hi.z > cfg.drop_height {
                    layer_truncated += 1;
                    continue;
                }
                for p in &rotated {
                    height.raise(x + p.x, y + p.y, dz + p.z);
                }
                poses.push(Pose::new(rot, Vector3::new(x, y, dz)));
            }
        }
        if layer_truncated > 0 {
            log::warn!("layer {layer}: {layer_truncated} object(s) would exceed the drop height");
            truncated += layer_truncated;
        }
    }
    Ok(Placement { poses, truncated })
}

struct Heightmap {
    nx: usize,
    ny: usize,
    cell: f64,
    x0: f64,
    y0: f64,
    h: Vec<f64>,
}

impl Heightmap {
    fn new(w: f64, d: f64, cell: f64) -> Self {
        let nx = (w / cell).ceil() as usize;
        let ny = (d / cell).ceil() as usize;
        Self {
            nx,
            ny,
            cell,
            x0: -0.5 * w,
            y0: -0.5 * d,
            h: vec![0.0; nx * ny],
        }
    }

    fn index(&self, x: f64, y: f64) -> usize {
        let i = (((x - self.x0) / self.cell).floor().max(0.0) as usize).min(self.nx - 1);
        let j = (((y - self.y0) / self.cell).floor().max(0.0) as usize).min(self.ny - 1);
        j * self.nx + i
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        self.h[self.index(x, y)]
    }

    fn raise(&mut self, x: f64, y: f64, z: f64) {
        let idx = self.index(x, y);
        if z > self.h[idx] {
            self.h[idx] = z;
        }
    }
}
