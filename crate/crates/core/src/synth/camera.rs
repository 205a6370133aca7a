use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pinhole camera looking down `+z`, principal point at the image center.
///
/// Pixel `(i, j)` has image-centered coordinates `u = i - cx`, `v = j - cy`
/// with `cx = ⌊width/2⌋`, `cy = ⌊height/2⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    /// Focal length in pixels.
    pub f: f64,
    pub width: usize,
    pub height: usize,
    pub d_near: f64,
    pub d_far: f64,
}

impl CameraIntrinsics {
    pub fn new(f: f64, width: usize, height: usize, d_near: f64, d_far: f64) -> Result<Self> {
        let cam = Self {
            f,
            width,
            height,
            d_near,
            d_far,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f > 0.0 && self.f.is_finite()) {
            return Err(Error::InvalidParam(format!("focal length must be positive, got {}", self.f)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParam("image size must be at least 1x1".into()));
        }
        if !(0.0 < self.d_near && self.d_near < self.d_far && self.d_far.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "need 0 < d_near < d_far, got {} / {}",
                self.d_near, self.d_far
            )));
        }
        Ok(())
    }

    /// Focal length such that a span `extent` wide at `depth` covers
    /// `fill` of the image width.
    pub fn covering(width: usize, height: usize, extent: f64, depth: f64, fill: f64) -> Self {
        Self {
            f: fill * width as f64 * depth / extent,
            width,
            height,
            d_near: 1.0,
            d_far: 200.0,
        }
    }

    #[inline]
    pub fn cx(&self) -> f64 {
        (self.width / 2) as f64
    }

    #[inline]
    pub fn cy(&self) -> f64 {
        (self.height / 2) as f64
    }

    #[inline]
    pub fn pixel_uv(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 - self.cx(), j as f64 - self.cy())
    }

    /// Continuous pixel coordinates of a camera-frame point.
    #[inline]
    pub fn project(&self, p: &Vector3<f64>) -> (f64, f64) {
        (self.f * p.x / p.z + self.cx(), self.f * p.y / p.z + self.cy())
    }

    /// Z-buffer value for camera depth `z`, unclamped:
    /// `b = d_f (d_n − z) / (z (d_n − d_f))`, so `b(d_n) = 0`, `b(d_f) = 1`.
    #[inline]
    pub fn encode_depth_unclamped(&self, z: f64) -> f64 {
        (self.d_far * (self.d_near - z)) / (z * (self.d_near - self.d_far))
    }

    #[inline]
    pub fn encode_depth(&self, z: f64) -> f64 {
        self.encode_depth_unclamped(z).clamp(0.0, 1.0)
    }

    /// Camera depth from a z-buffer value: `z = d_n d_f / (d_f + b (d_n − d_f))`.
    ///
    /// The denominator is expanded around whichever clipping plane is
    /// closer so both endpoints come out exact.
    #[inline]
    pub fn decode_depth(&self, b: f64) -> f64 {
        let (dn, df) = (self.d_near, self.d_far);
        if b <= 0.5 {
            dn * (df / (df + b * (dn - df)))
        } else {
            df * (dn / (dn + (1.0 - b) * (df - dn)))
        }
    }

    /// Camera-frame point for pixel `(i, j)` with z-buffer value `b`.
    #[inline]
    pub fn unproject_pixel(&self, i: usize, j: usize, b: f64) -> Vector3<f64> {
        let z = self.decode_depth(b);
        let (u, v) = self.pixel_uv(i, j);
        Vector3::new(z * u / self.f, z * v / self.f, z)
    }
}

/// Normalized projective depth per pixel, row-major; `1` means empty.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub zbuffer: Vec<f64>,
    pub intrinsics: CameraIntrinsics,
}

impl DepthImage {
    pub fn empty(intrinsics: CameraIntrinsics) -> Self {
        Self {
            zbuffer: vec![1.0; intrinsics.width * intrinsics.height],
            intrinsics,
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.intrinsics.width + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.zbuffer[self.index(i, j)]
    }

    #[inline]
    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.get(i, j) < 1.0
    }

    pub fn valid_count(&self) -> usize {
        self.zbuffer.iter().filter(|&&b| b < 1.0).count()
    }

    /// Metric depth per pixel, `None` where empty.
    pub fn metric_depth(&self) -> Vec<Option<f64>> {
        self.zbuffer
            .iter()
            .map(|&b| (b < 1.0).then(|| self.intrinsics.decode_depth(b)))
            .collect()
    }

    /// Inverse of [`DepthImage::metric_depth`]; non-finite or far values
    /// become empty pixels.
    pub fn from_metric_depth(intrinsics: CameraIntrinsics, z: &[f64]) -> Result<Self> {
        if z.len() != intrinsics.width * intrinsics.height {
            return Err(Error::InvalidParam(format!(
                "depth buffer has {} values, expected {}",
                z.len(),
                intrinsics.width * intrinsics.height
            )));
        }
        let zbuffer = z
            .iter()
            .map(|&z| {
                if z.is_finite() && z < intrinsics.d_far {
                    intrinsics.encode_depth(z)
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { zbuffer, intrinsics })
    }
}
