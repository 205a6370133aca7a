//! The hashed object model.

use std::collections::HashMap;

use rayon::prelude::*;

use super::feature::{compute_ppf, quantize, LocalFrame};
use super::params::DetectorParams;
use crate::error::{Error, Result};
use crate::mesh::{mesh_to_cloud, object_diameter, PointCloud, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelEntry {
    /// Index of the first point of the pair in the model cloud.
    pub point: u32,
    /// Planar angle of the second point in the first point's local frame.
    pub alpha: f64,
}

/// Key-sorted, contiguous storage: entries of `keys[k]` are
/// `entries[offsets[k]..offsets[k + 1]]`.
#[derive(Debug, Clone)]
pub struct PPFModel {
    keys: Vec<u32>,
    offsets: Vec<u32>,
    entries: Vec<ModelEntry>,
    lookup: Lookup,
    pub model_cloud: PointCloud,
    pub diameter: f64,
    pub params: DetectorParams,
}

/// Slot tables are used when the whole key space is small enough.
const DENSE_LOOKUP_LIMIT: usize = 1 << 24;

#[derive(Debug, Clone)]
enum Lookup {
    Dense { n_angle: u32, slots: Vec<u32> },
    Sparse(HashMap<u32, u32>),
}

const NO_SLOT: u32 = u32::MAX;

impl PPFModel {
    pub(crate) fn from_parts(
        keys: Vec<u32>,
        offsets: Vec<u32>,
        entries: Vec<ModelEntry>,
        model_cloud: PointCloud,
        diameter: f64,
        params: DetectorParams,
    ) -> Result<Self> {
        if offsets.len() != keys.len() + 1
            || offsets.first() != Some(&0)
            || *offsets.last().unwrap() as usize != entries.len()
            || offsets.windows(2).any(|w| w[0] > w[1])
            || keys.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::ModelFormat("inconsistent table layout".into()));
        }
        let n = model_cloud.len();
        if let Some(e) = entries.iter().find(|e| e.point as usize >= n) {
            return Err(Error::ModelFormat(format!(
                "entry refers to point {} of {n}",
                e.point
            )));
        }
        let (na, nd) = (params.n_angle_steps, params.n_dist_steps);
        let space = nd as usize * (na as usize).pow(3);
        let lookup = if space <= DENSE_LOOKUP_LIMIT {
            let mut slots = vec![NO_SLOT; space];
            for (k, &key) in keys.iter().enumerate() {
                let idx = dense_index(key, na)
                    .filter(|&i| i < space)
                    .ok_or_else(|| Error::ModelFormat(format!("key {key:#010x} out of range")))?;
                slots[idx] = k as u32;
            }
            Lookup::Dense { n_angle: na, slots }
        } else {
            Lookup::Sparse(keys.iter().enumerate().map(|(k, &key)| (key, k as u32)).collect())
        };
        Ok(Self {
            keys,
            offsets,
            entries,
            lookup,
            model_cloud,
            diameter,
            params,
        })
    }

    /// Entries stored under a packed key, in insertion order.
    #[inline]
    pub fn get(&self, key: u32) -> &[ModelEntry] {
        let slot = match &self.lookup {
            Lookup::Dense { n_angle, slots } => match dense_index(key, *n_angle) {
                Some(i) if i < slots.len() => slots[i],
                _ => NO_SLOT,
            },
            Lookup::Sparse(map) => map.get(&key).copied().unwrap_or(NO_SLOT),
        };
        if slot == NO_SLOT {
            return &[];
        }
        let k = slot as usize;
        &self.entries[self.offsets[k] as usize..self.offsets[k + 1] as usize]
    }

    pub fn n_keys(&self) -> usize {
        self.keys.len()
    }

    pub fn n_entries(&self) -> usize {
        self.entries.len()
    }

    /// `(key, entries)` in ascending key order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &[ModelEntry])> + '_ {
        self.keys.iter().enumerate().map(|(k, &key)| {
            (
                key,
                &self.entries[self.offsets[k] as usize..self.offsets[k + 1] as usize],
            )
        })
    }
}

#[inline]
fn dense_index(key: u32, n_angle: u32) -> Option<usize> {
    let [d, a1, a2, a3] = key.to_be_bytes().map(|b| b as usize);
    let na = n_angle as usize;
    if a1 >= na || a2 >= na || a3 >= na {
        return None;
    }
    Some(((d * na + a1) * na + a2) * na + a3)
}

/// Hashes every ordered pair of `cloud` whose distance is within `d_max`.
pub fn build_model(cloud: &PointCloud, params: &DetectorParams, diameter: f64) -> Result<PPFModel> {
    params.validate()?;
    if cloud.len() < 2 {
        return Err(Error::Degenerate(format!(
            "a model needs at least 2 points, got {}",
            cloud.len()
        )));
    }
    if !(diameter > 0.0 && diameter.is_finite()) {
        return Err(Error::InvalidParam(format!("diameter must be positive, got {diameter}")));
    }
    let pts = &cloud.points;
    let d_max = params.d_max;

    let mut pairs: Vec<(u32, ModelEntry)> = (0..pts.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let frame = LocalFrame::of(&pts[i]);
            pts.iter().enumerate().filter_map(move |(j, pj)| {
                if i == j {
                    return None;
                }
                let f = compute_ppf(&pts[i], pj)?;
                if f.dist > d_max {
                    return None;
                }
                Some((
                    quantize(&f, params).pack(),
                    ModelEntry {
                        point: i as u32,
                        alpha: frame.alpha(&pj.position),
                    },
                ))
            })
        })
        .collect();
    // stable: entries under one key stay in i-major order
    pairs.par_sort_by_key(|&(k, _)| k);

    let mut keys = Vec::new();
    let mut offsets = Vec::new();
    for (n, &(k, _)) in pairs.iter().enumerate() {
        if keys.last() != Some(&k) {
            keys.push(k);
            offsets.push(n as u32);
        }
    }
    offsets.push(pairs.len() as u32);
    let entries = pairs.into_iter().map(|(_, e)| e).collect();

    PPFModel::from_parts(keys, offsets, entries, cloud.clone(), diameter, *params)
}

/// Samples `mesh` at `params.tau` and builds its model. Vertex normals are
/// computed when the mesh has none.
pub fn train_model(mesh: &TriangleMesh, params: &DetectorParams) -> Result<PPFModel> {
    let diameter = object_diameter(mesh)?;
    let cloud = if mesh.vertex_normals.is_some() {
        mesh_to_cloud(mesh, params.tau)?
    } else {
        mesh_to_cloud(&mesh.clone().compute_vertex_normals(), params.tau)?
    };
    log::info!(
        "model: diameter {diameter:.4}, {} points at tau {:.4}",
        cloud.len(),
        params.tau
    );
    build_model(&cloud, params, diameter)
}
