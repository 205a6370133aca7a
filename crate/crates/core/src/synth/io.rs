//! Scene directory layout: `depth.pfm` (metric depth, float32), `intensity.pgm`
//! (8-bit), `ground_truth.json` and the `scene.json` sidecar.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BinConfig, CameraIntrinsics, DepthImage, SceneDataset, NOISE_STREAM};
use crate::error::{Error, Result};
use crate::pose::{Pose, PoseRecord};

pub const DEPTH_FILE: &str = "depth.pfm";
pub const INTENSITY_FILE: &str = "intensity.pgm";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const SIDECAR_FILE: &str = "scene.json";

pub const ZBUFFER_MAPPING: &str = "z = d_near * d_far / (d_far + b * (d_near - d_far)); x = z * u / f; y = z * v / f; (u, v) relative to principal_point";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSidecar {
    pub scene_id: String,
    pub intrinsics: CameraIntrinsics,
    pub principal_point: [f64; 2],
    pub zbuffer_mapping: String,
    pub bin: BinConfig,
    pub rng_seed: u64,
    /// Depth noise uses `rng_seed` on this ChaCha stream.
    pub noise_stream: u64,
    pub noise_sigma: f64,
    pub mesh: String,
    pub object_diameter: f64,
    pub n_objects: usize,
    pub truncated: usize,
}

impl SceneSidecar {
    pub fn new(
        scene_id: impl Into<String>,
        scene: &SceneDataset,
        bin: &BinConfig,
        mesh: impl Into<String>,
        object_diameter: f64,
    ) -> Self {
        let cam = scene.depth.intrinsics;
        Self {
            scene_id: scene_id.into(),
            intrinsics: cam,
            principal_point: [cam.cx(), cam.cy()],
            zbuffer_mapping: ZBUFFER_MAPPING.to_string(),
            bin: *bin,
            rng_seed: scene.rng_seed,
            noise_stream: NOISE_STREAM,
            noise_sigma: scene.noise_sigma,
            mesh: mesh.into(),
            object_diameter,
            n_objects: scene.ground_truth.len(),
            truncated: scene.truncated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub object_id: u32,
    #[serde(flatten)]
    pub pose: PoseRecord,
}

#[derive(Debug, Clone)]
pub struct LoadedScene {
    pub sidecar: SceneSidecar,
    pub depth: DepthImage,
    pub ground_truth: Vec<(u32, Pose)>,
}

pub fn write_scene(dir: &Path, scene: &SceneDataset, sidecar: &SceneSidecar) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cam = scene.depth.intrinsics;

    let z: Vec<f32> = scene
        .depth
        .metric_depth()
        .into_iter()
        .map(|z| z.map_or(f32::INFINITY, |z| z as f32))
        .collect();
    write_pfm(&dir.join(DEPTH_FILE), cam.width, cam.height, &z)?;

    let empty = vec![0.0; cam.width * cam.height];
    let intensity = scene.intensity.as_deref().unwrap_or(&empty);
    write_pgm(&dir.join(INTENSITY_FILE), cam.width, cam.height, intensity)?;

    let gt: Vec<GroundTruthRecord> = scene
        .ground_truth
        .iter()
        .map(|(id, p)| GroundTruthRecord {
            object_id: *id,
            pose: p.into(),
        })
        .collect();
    write_json(&dir.join(GROUND_TRUTH_FILE), &gt)?;
    write_json(&dir.join(SIDECAR_FILE), sidecar)
}

pub fn read_scene(dir: &Path) -> Result<LoadedScene> {
    let sidecar: SceneSidecar = read_json(&dir.join(SIDECAR_FILE))?;
    sidecar.intrinsics.validate()?;
    let (w, h, z) = read_pfm(&dir.join(DEPTH_FILE))?;
    if w != sidecar.intrinsics.width || h != sidecar.intrinsics.height {
        return Err(Error::InvalidParam(format!(
            "depth image is {w}x{h} but the sidecar says {}x{}",
            sidecar.intrinsics.width, sidecar.intrinsics.height
        )));
    }
    let far = sidecar.intrinsics.d_far as f32;
    let z: Vec<f64> = z
        .into_iter()
        .map(|v| if v.is_finite() && v < far { v as f64 } else { f64::INFINITY })
        .collect();
    let depth = DepthImage::from_metric_depth(sidecar.intrinsics, &z)?;
    let records: Vec<GroundTruthRecord> = read_json(&dir.join(GROUND_TRUTH_FILE))?;
    let ground_truth = records
        .iter()
        .map(|r| Ok((r.object_id, Pose::try_from(&r.pose)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LoadedScene {
        sidecar,
        depth,
        ground_truth,
    })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Little-endian grayscale PFM; rows are stored bottom to top.
pub fn write_pfm(path: &Path, width: usize, height: usize, data: &[f32]) -> Result<()> {
    assert_eq!(data.len(), width * height);
    let mut bytes = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    bytes.reserve(data.len() * 4);
    for row in (0..height).rev() {
        for v in &data[row * width..(row + 1) * width] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a grayscale PFM into top-to-bottom row-major order.
pub fn read_pfm(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse("pfm", 1, "truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "Pf" {
        return Err(Error::parse("pfm", 1, format!("expected 'Pf', found '{}'", fields[0])));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| Error::parse("pfm", 2, format!("bad size '{s}'")));
    let (w, h) = (num(&fields[1])?, num(&fields[2])?);
    let scale: f64 = fields[3]
        .parse()
        .map_err(|_| Error::parse("pfm", 3, format!("bad scale '{}'", fields[3])))?;
    let little = scale < 0.0;
    let payload = &bytes[pos.min(bytes.len())..];
    if payload.len() != w * h * 4 {
        return Err(Error::parse(
            "pfm",
            4,
            format!("expected {} data bytes, found {}", w * h * 4, payload.len()),
        ));
    }
    let mut data = vec![0f32; w * h];
    for (k, chunk) in payload.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let (row, col) = (h - 1 - k / w, k % w);
        data[row * w + col] = v;
    }
    Ok((w, h, data))
}

/// Binary 8-bit PGM from values in `[0, 1]`.
pub fn write_pgm(path: &Path, width: usize, height: usize, data: &[f64]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    bytes.extend(data.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use crate::synth::synthesize_scene;

    #[test]
    fn pfm_round_trip_preserves_row_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.pfm");
        let data: Vec<f32> = (0..12).map(|v| v as f32 * 0.5).chain([f32::INFINITY]).take(12).collect();
        write_pfm(&path, 4, 3, &data).unwrap();
        let (w, h, back) = read_pfm(&path).unwrap();
        assert_eq!((w, h), (4, 3));
        assert_eq!(back, data);
        let raw = fs::read(&path).unwrap();
        // last row first
        let first = f32::from_le_bytes(raw[12..16].try_into().unwrap());
        assert!(raw.starts_with(b"Pf\n4 3\n-1.0\n"));
        assert_eq!(first, data[8]);
    }

    #[test]
    fn truncated_pfm_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pfm");
        fs::write(&path, b"Pf\n4 3\n-1.0\n\0\0").unwrap();
        assert!(read_pfm(&path).is_err());
    }

    #[test]
    fn scene_directory_round_trip() {
        let mesh = shapes::bracket();
        let cfg = BinConfig {
            n_layers: 1,
            ..BinConfig::default()
        };
        let cam = CameraIntrinsics::covering(160, 90, cfg.bin_w, cfg.camera_height, 0.9);
        let scene = synthesize_scene(&mesh, &cfg, &cam, 0.0, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let sidecar = SceneSidecar::new("bin-000", &scene, &cfg, "builtin:bracket", 5.2);
        write_scene(dir.path(), &scene, &sidecar).unwrap();
        let names: Vec<String> = {
            let mut v: Vec<_> = fs::read_dir(dir.path())
                .unwrap()
                .map(|e| e.unwrap().file_name().into_string().unwrap())
                .collect();
            v.sort();
            v
        };
        assert_eq!(names, ["depth.pfm", "ground_truth.json", "intensity.pgm", "scene.json"]);

        let loaded = read_scene(dir.path()).unwrap();
        assert_eq!(loaded.sidecar, sidecar);
        assert_eq!(loaded.ground_truth.len(), scene.ground_truth.len());
        for ((ia, a), (ib, b)) in loaded.ground_truth.iter().zip(&scene.ground_truth) {
            assert_eq!(ia, ib);
            assert_eq!(a.translation, b.translation);
        }
        let c = cam;
        for (x, y) in loaded.depth.zbuffer.iter().zip(&scene.depth.zbuffer) {
            assert_eq!(*x >= 1.0, *y >= 1.0);
            if *y < 1.0 {
                let (za, zb) = (c.decode_depth(*x), c.decode_depth(*y));
                assert!((za - zb).abs() < 1e-5 * zb);
            }
        }
    }
}
