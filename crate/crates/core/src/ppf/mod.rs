//! Point pair features and the hashed object model.

mod feature;
mod file;
mod model;
mod params;

pub use feature::{
    align_to_x, angle_between, compute_ppf, local_alpha, quantize, wrap_angle, LocalFrame, Ppf,
    QuantizedKey,
};
pub use file::{load_model, model_from_bytes, model_to_bytes, model_to_json, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use model::{build_model, train_model, ModelEntry, PPFModel};
pub use params::DetectorParams;
