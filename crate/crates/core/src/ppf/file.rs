//! Model file format, all fields little-endian:
//!
//! ```text
//! magic "PPFM" | version u32 | n_angle_steps u32 | n_dist_steps u32
//! d_max f64 | tau f64 | diameter f64 | point count u64
//! points: (px py pz nx ny nz) f64 each
//! key count u64
//! per key, ascending: key u32 | count u32 | count × (point u32, alpha f64)
//! ```
//!
//! Keys pack the four bins as `d << 24 | a1 << 16 | a2 << 8 | a3`.

use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use serde::Serialize;

use super::feature::QuantizedKey;
use super::model::{ModelEntry, PPFModel};
use super::params::DetectorParams;
use crate::error::{Error, Result};
use crate::mesh::{OrientedPoint, PointCloud};

pub const MODEL_MAGIC: &[u8; 4] = b"PPFM";
pub const MODEL_VERSION: u32 = 1;

pub fn model_to_bytes(model: &PPFModel) -> Vec<u8> {
    let p = &model.params;
    let mut out = Vec::with_capacity(64 + model.model_cloud.len() * 48 + model.n_entries() * 12);
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&p.n_angle_steps.to_le_bytes());
    out.extend_from_slice(&p.n_dist_steps.to_le_bytes());
    for v in [p.d_max, p.tau, model.diameter] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(model.model_cloud.len() as u64).to_le_bytes());
    for pt in &model.model_cloud.points {
        for v in pt.position.iter().chain(pt.normal.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(&(model.n_keys() as u64).to_le_bytes());
    for (key, entries) in model.iter() {
        out.extend_from_slice(&key.to_le_bytes());
        out.extend_from_slice(&(entries.len() as u32).to_le_bytes());
        for e in entries {
            out.extend_from_slice(&e.point.to_le_bytes());
            out.extend_from_slice(&e.alpha.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::ModelFormat(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(chunk.try_into().unwrap())
    }

    fn u32(&mut self) -> Result<u32> {
        self.take().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64> {
        self.take().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64> {
        self.take().map(f64::from_le_bytes)
    }

    fn count(&mut self, item_size: usize) -> Result<usize> {
        let n = self.u64()?;
        let remaining = (self.bytes.len() - self.pos) as u64;
        if n.saturating_mul(item_size as u64) > remaining {
            return Err(Error::ModelFormat(format!("count {n} exceeds file size")));
        }
        Ok(n as usize)
    }
}

/// Detection-time fields of the returned params take the defaults for the
/// stored diameter.
pub fn model_from_bytes(bytes: &[u8]) -> Result<PPFModel> {
    let mut r = Reader { bytes, pos: 0 };
    if &r.take::<4>()? != MODEL_MAGIC {
        return Err(Error::ModelFormat("not a model file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::ModelVersion {
            found: version,
            expected: MODEL_VERSION,
        });
    }
    let n_angle_steps = r.u32()?;
    let n_dist_steps = r.u32()?;
    let d_max = r.f64()?;
    let tau = r.f64()?;
    let diameter = r.f64()?;
    let params = DetectorParams {
        n_angle_steps,
        n_dist_steps,
        d_max,
        tau,
        ..DetectorParams::for_diameter(diameter)
    };
    params
        .validate()
        .map_err(|e| Error::ModelFormat(format!("bad header: {e}")))?;

    let n_points = r.count(48)?;
    let mut points = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let mut v = [0.0; 6];
        for x in &mut v {
            *x = r.f64()?;
        }
        points.push(OrientedPoint {
            position: Vector3::new(v[0], v[1], v[2]),
            normal: Vector3::new(v[3], v[4], v[5]),
        });
    }

    let n_keys = r.count(8)?;
    let mut keys = Vec::with_capacity(n_keys);
    let mut offsets = Vec::with_capacity(n_keys + 1);
    let mut entries = Vec::new();
    offsets.push(0);
    for _ in 0..n_keys {
        keys.push(r.u32()?);
        let count = r.u32()?;
        for _ in 0..count {
            let point = r.u32()?;
            let alpha = r.f64()?;
            entries.push(ModelEntry { point, alpha });
        }
        offsets.push(entries.len() as u32);
    }
    if r.pos != bytes.len() {
        return Err(Error::ModelFormat(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    let cloud = PointCloud {
        points,
        sampling_resolution: tau,
    };
    PPFModel::from_parts(keys, offsets, entries, cloud, diameter, params)
}

pub fn save_model(model: &PPFModel, path: &Path) -> Result<()> {
    fs::write(path, model_to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<PPFModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes)
}

#[derive(Serialize)]
struct JsonDump {
    version: u32,
    n_angle_steps: u32,
    n_dist_steps: u32,
    d_max: f64,
    tau: f64,
    diameter: f64,
    points: Vec<[f64; 6]>,
    table: Vec<JsonKey>,
}

#[derive(Serialize)]
struct JsonKey {
    key: u32,
    bins: QuantizedKey,
    entries: Vec<(u32, f64)>,
}

/// Human-readable dump of the whole model, for debugging.
pub fn model_to_json(model: &PPFModel) -> Result<String> {
    let p = &model.params;
    let dump = JsonDump {
        version: MODEL_VERSION,
        n_angle_steps: p.n_angle_steps,
        n_dist_steps: p.n_dist_steps,
        d_max: p.d_max,
        tau: p.tau,
        diameter: model.diameter,
        points: model
            .model_cloud
            .points
            .iter()
            .map(|q| {
                [
                    q.position.x,
                    q.position.y,
                    q.position.z,
                    q.normal.x,
                    q.normal.y,
                    q.normal.z,
                ]
            })
            .collect(),
        table: model
            .iter()
            .map(|(key, entries)| JsonKey {
                key,
                bins: QuantizedKey::unpack(key),
                entries: entries.iter().map(|e| (e.point, e.alpha)).collect(),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&dump)?)
}
