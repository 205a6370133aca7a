//! Point pair feature object detection for random bin picking.
//!
//! The crate covers the whole loop:
//!
//! - [`mesh`]: mesh loading, oriented point clouds, voxel subsampling.
//! - [`synth`]: synthetic bin scenes (heightmap drop placement, z-buffer
//!   rendering, unprojection, depth noise) with ground-truth poses.
//! - [`ppf`]: point pair features and the hashed object model.
//! - [`detect`]: highest-point hypotheses, voting, pose clustering.
//! - [`eval`]: pose errors, precision curves and noise sweeps.

pub mod detect;
pub mod error;
pub mod eval;
pub mod mesh;
pub mod pose;
pub mod ppf;
pub mod synth;

pub use error::{Error, Result};
pub use pose::Pose;
