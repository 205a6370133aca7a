//! Uniform hash grid for fixed-radius neighbor queries.

use std::collections::HashMap;

use nalgebra::Vector3;

use super::voxel_key;

#[derive(Debug, Clone)]
pub struct RadiusIndex {
    cell: f64,
    cells: HashMap<[i64; 3], Vec<u32>>,
}

impl RadiusIndex {
    /// `cell` should be on the order of the query radius.
    pub fn new<'a>(points: impl IntoIterator<Item = &'a Vector3<f64>>, cell: f64) -> Self {
        assert!(cell > 0.0, "cell size must be positive");
        let mut cells: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        for (i, p) in points.into_iter().enumerate() {
            cells.entry(voxel_key(p, cell)).or_default().push(i as u32);
        }
        Self { cell, cells }
    }

    /// Visits every indexed point within `radius` of `center`, in a
    /// deterministic order. `positions` must be the slice the index was
    /// built from.
    pub fn for_each_within(
        &self,
        positions: &[Vector3<f64>],
        center: &Vector3<f64>,
        radius: f64,
        mut visit: impl FnMut(usize),
    ) {
        let lo = voxel_key(&(center - Vector3::repeat(radius)), self.cell);
        let hi = voxel_key(&(center + Vector3::repeat(radius)), self.cell);
        let r2 = radius * radius;
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    let Some(members) = self.cells.get(&[x, y, z]) else {
                        continue;
                    };
                    for &i in members {
                        if (positions[i as usize] - center).norm_squared() <= r2 {
                            visit(i as usize);
                        }
                    }
                }
            }
        }
    }

    pub fn within(&self, positions: &[Vector3<f64>], center: &Vector3<f64>, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(positions, center, radius, |i| out.push(i));
        out.sort_unstable();
        out
    }
}
