//! Synthetic bin scenes with exact ground truth.

mod camera;
pub mod io;
mod noise;
mod place;
mod render;
mod unproject;

pub use camera::{CameraIntrinsics, DepthImage};
pub use noise::{add_depth_noise, NOISE_STREAM};
pub use place::{place_objects, place_objects_with, BinConfig, Placement};
pub use render::{render_depth, render_instances, Rendered};
pub use unproject::{unproject, unproject_with, DEPTH_JUMP_RATIO};

use crate::error::Result;
use crate::mesh::{shapes, PointCloud, TriangleMesh};
use crate::pose::Pose;

#[derive(Debug, Clone)]
pub struct SceneDataset {
    /// Noisy depth as the sensor would report it.
    pub depth: DepthImage,
    pub intensity: Option<Vec<f64>>,
    /// `(object id, object-to-camera pose)`.
    pub ground_truth: Vec<(u32, Pose)>,
    pub scene_cloud: PointCloud,
    pub rng_seed: u64,
    pub noise_sigma: f64,
    pub truncated: usize,
}

/// Scene seed of bin `bin` in a run seeded with `seed`; bin 0 keeps `seed`.
pub fn scene_seed(seed: u64, bin: usize) -> u64 {
    seed.wrapping_add((bin as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Drops objects, renders them from a camera above the bin center, adds
/// depth noise and unprojects.
pub fn synthesize_scene(
    mesh: &TriangleMesh,
    cfg: &BinConfig,
    cam: &CameraIntrinsics,
    sigma: f64,
    seed: u64,
) -> Result<SceneDataset> {
    cam.validate()?;
    cfg.validate()?;
    let placement = if cfg.n_layers == 0 {
        Placement {
            poses: Vec::new(),
            truncated: 0,
        }
    } else {
        place_objects(mesh, cfg, seed)?
    };
    let cam_from_bin = cfg.camera_from_bin();
    let ground_truth: Vec<(u32, Pose)> = placement
        .poses
        .iter()
        .enumerate()
        .map(|(i, p)| (i as u32, cam_from_bin.compose(p)))
        .collect();

    let floor = shapes::rectangle(cfg.bin_w, cfg.bin_h);
    let mut instances: Vec<(&TriangleMesh, Pose)> =
        ground_truth.iter().map(|(_, p)| (mesh, *p)).collect();
    if cfg.render_floor {
        instances.push((&floor, cam_from_bin));
    }
    let rendered = render_instances(&instances, cam);
    let depth = add_depth_noise(&rendered.depth, sigma, seed)?;
    let scene_cloud = unproject(&depth);

    Ok(SceneDataset {
        depth,
        intensity: Some(rendered.intensity),
        ground_truth,
        scene_cloud,
        rng_seed: seed,
        noise_sigma: sigma,
        truncated: placement.truncated,
    })
}
