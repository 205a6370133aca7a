//! The four-dimensional point pair feature and its quantization.

use std::f64::consts::PI;

use nalgebra::{Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use super::params::DetectorParams;
use crate::mesh::OrientedPoint;

/// `(‖d‖, ∠(n₁, d), ∠(n₂, d), ∠(n₁, n₂))` with `d = m₂ − m₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ppf {
    pub dist: f64,
    pub angle_n1_d: f64,
    pub angle_n2_d: f64,
    pub angle_n1_n2: f64,
}

/// Angle between two vectors in `[0, π]`, stable near both ends.
#[inline]
pub fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Feature of the ordered pair `(p1, p2)`; `None` for coincident points.
#[inline]
pub fn compute_ppf(p1: &OrientedPoint, p2: &OrientedPoint) -> Option<Ppf> {
    let d = p2.position - p1.position;
    let dist = d.norm();
    if dist == 0.0 {
        return None;
    }
    Some(Ppf {
        dist,
        angle_n1_d: angle_between(&p1.normal, &d),
        angle_n2_d: angle_between(&p2.normal, &d),
        angle_n1_n2: angle_between(&p1.normal, &p2.normal),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuantizedKey {
    pub d_bin: u8,
    pub a1_bin: u8,
    pub a2_bin: u8,
    pub a3_bin: u8,
}

impl QuantizedKey {
    /// `d << 24 | a1 << 16 | a2 << 8 | a3`.
    #[inline]
    pub fn pack(&self) -> u32 {
        (self.d_bin as u32) << 24
            | (self.a1_bin as u32) << 16
            | (self.a2_bin as u32) << 8
            | self.a3_bin as u32
    }

    #[inline]
    pub fn unpack(key: u32) -> Self {
        Self {
            d_bin: (key >> 24) as u8,
            a1_bin: (key >> 16) as u8,
            a2_bin: (key >> 8) as u8,
            a3_bin: key as u8,
        }
    }
}

#[inline]
fn bin(value: f64, step: f64, steps: u32) -> u8 {
    ((value / step).floor().max(0.0) as u32).min(steps - 1) as u8
}

/// Floor quantization with the top edge clamped into the last bin.
#[inline]
pub fn quantize(f: &Ppf, params: &DetectorParams) -> QuantizedKey {
    let a = params.angle_step();
    let n = params.n_angle_steps;
    QuantizedKey {
        d_bin: bin(f.dist, params.dist_step(), params.n_dist_steps),
        a1_bin: bin(f.angle_n1_d, a, n),
        a2_bin: bin(f.angle_n2_d, a, n),
        a3_bin: bin(f.angle_n1_n2, a, n),
    }
}

/// Wraps an angle into `(-π, π]`.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(std::f64::consts::TAU);
    if w > PI {
        w -= std::f64::consts::TAU;
    }
    if w <= -PI {
        w += std::f64::consts::TAU;
    }
    w
}

/// Rotation taking the unit vector `n` onto `+x` along the shortest arc
/// (a half turn about `z` when `n = -x`).
pub fn align_to_x(n: &Vector3<f64>) -> Rotation3<f64> {
    let axis = Vector3::new(0.0, n.z, -n.y);
    let s = axis.norm();
    if s < 1e-12 {
        return if n.x >= 0.0 {
            Rotation3::identity()
        } else {
            Rotation3::from_axis_angle(&Vector3::z_axis(), PI)
        };
    }
    Rotation3::from_axis_angle(&Unit::new_unchecked(axis / s), s.atan2(n.x))
}

/// Local frame of a reference point: moves it to the origin with its normal
/// along `+x`.
#[derive(Debug, Clone, Copy)]
pub struct LocalFrame {
    pub rotation: Rotation3<f64>,
    pub origin: Vector3<f64>,
}

impl LocalFrame {
    pub fn of(reference: &OrientedPoint) -> Self {
        Self {
            rotation: align_to_x(&reference.normal),
            origin: reference.position,
        }
    }

    #[inline]
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * (p - self.origin)
    }

    /// Rotation about `+x` bringing `other` into the half-plane `z = 0,
    /// y ≥ 0`, in `(-π, π]`. Points on the normal axis give `0`.
    #[inline]
    pub fn alpha(&self, other: &Vector3<f64>) -> f64 {
        let t = self.apply(other);
        if t.y == 0.0 && t.z == 0.0 {
            return 0.0;
        }
        let a = (-t.z).atan2(t.y);
        if a <= -PI {
            PI
        } else {
            a
        }
    }
}

pub fn local_alpha(reference: &OrientedPoint, other: &OrientedPoint) -> f64 {
    LocalFrame::of(reference).alpha(&other.position)
}
