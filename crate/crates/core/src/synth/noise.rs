use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::camera::DepthImage;
use crate::error::{Error, Result};

/// ChaCha stream reserved for depth noise so it never shares draws with
/// object placement for the same seed.
pub const NOISE_STREAM: u64 = 1;

/// Adds `N(0, σ²)` to the metric depth of every valid pixel (a shift along
/// the pixel's ray), then re-encodes. Pixels are visited in row-major
/// order, one draw each.
pub fn add_depth_noise(depth: &DepthImage, sigma: f64, seed: u64) -> Result<DepthImage> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParam(format!("noise sigma must be ≥ 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(depth.clone());
    }
    let cam = depth.intrinsics;
    let normal = Normal::new(0.0, sigma).expect("sigma checked above");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    let zbuffer = depth
        .zbuffer
        .iter()
        .map(|&b| {
            if b >= 1.0 {
                return b;
            }
            let z = cam.decode_depth(b) + normal.sample(&mut rng);
            if z <= 0.0 {
                0.0
            } else {
                cam.encode_depth(z)
            }
        })
        .collect();
    Ok(DepthImage {
        zbuffer,
        intrinsics: cam,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::camera::CameraIntrinsics;

    fn plane(w: usize, h: usize, z: f64) -> DepthImage {
        let cam = CameraIntrinsics::new(300.0, w, h, 1.0, 200.0).unwrap();
        let mut img = DepthImage::empty(cam);
        img.zbuffer.iter_mut().for_each(|b| *b = cam.encode_depth(z));
        img
    }

    #[test]
    fn zero_sigma_is_bit_identical() {
        let img = plane(16, 16, 40.0);
        let out = add_depth_noise(&img, 0.0, 5).unwrap();
        assert!(img
            .zbuffer
            .iter()
            .zip(&out.zbuffer)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn residual_std_matches_sigma() {
        let img = plane(400, 300, 50.0);
        let sigma = 0.26;
        let out = add_depth_noise(&img, sigma, 11).unwrap();
        let cam = img.intrinsics;
        let residuals: Vec<f64> = out
            .zbuffer
            .iter()
            .map(|&b| cam.decode_depth(b) - 50.0)
            .collect();
        assert!(residuals.len() >= 100_000);
        let n = residuals.len() as f64;
        let mean = residuals.iter().sum::<f64>() / n;
        let std = (residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((std - sigma).abs() <= 0.05 * sigma, "std {std}");
    }

    #[test]
    fn reproducible_per_seed() {
        let img = plane(1, 1, 20.0);
        let a = add_depth_noise(&img, 0.5, 42).unwrap();
        let b = add_depth_noise(&img, 0.5, 42).unwrap();
        let c = add_depth_noise(&img, 0.5, 43).unwrap();
        assert_eq!(a.zbuffer[0].to_bits(), b.zbuffer[0].to_bits());
        assert_ne!(a.zbuffer[0], c.zbuffer[0]);
    }

    #[test]
    fn empty_pixels_untouched() {
        let cam = CameraIntrinsics::new(300.0, 8, 8, 1.0, 200.0).unwrap();
        let out = add_depth_noise(&DepthImage::empty(cam), 1.0, 1).unwrap();
        assert!(out.zbuffer.iter().all(|&b| b == 1.0));
    }

    #[test]
    fn negative_sigma_rejected() {
        assert!(add_depth_noise(&plane(2, 2, 3.0), -0.1, 0).is_err());
    }
}
