//! Precision as a function of an error threshold.

use serde::{Deserialize, Serialize};

use super::DetectionRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Every hypothesis's detection.
    AllDetections,
    /// Per scene, only the detection with the most votes.
    MaxVotesOnly,
}

impl SelectionMode {
    pub const ALL: [SelectionMode; 2] = [SelectionMode::AllDetections, SelectionMode::MaxVotesOnly];

    pub fn name(self) -> &'static str {
        match self {
            SelectionMode::AllDetections => "all_detections",
            SelectionMode::MaxVotesOnly => "max_votes_only",
        }
    }

    pub fn includes(self, row: &DetectionRow) -> bool {
        match self {
            SelectionMode::AllDetections => true,
            SelectionMode::MaxVotesOnly => row.best_by_votes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMetric {
    /// Translation error as a fraction of the object diameter.
    TranslationRel,
    RotationDeg,
}

impl ErrorMetric {
    pub const ALL: [ErrorMetric; 2] = [ErrorMetric::TranslationRel, ErrorMetric::RotationDeg];

    pub fn of(self, row: &DetectionRow) -> f64 {
        match self {
            ErrorMetric::TranslationRel => row.translation_err_rel,
            ErrorMetric::RotationDeg => row.rotation_err_deg,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorMetric::TranslationRel => "translation",
            ErrorMetric::RotationDeg => "rotation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionCurve {
    pub metric: ErrorMetric,
    pub selection_mode: SelectionMode,
    pub noise_sigma: f64,
    /// Ascending.
    pub thresholds: Vec<f64>,
    pub precision: Vec<f64>,
    /// Detections the curve was computed from.
    pub n_detections: usize,
}

impl PrecisionCurve {
    /// Mean precision over the threshold range (trapezoidal), in `[0, 1]`.
    pub fn auc(&self) -> f64 {
        match self.thresholds.len() {
            0 => 0.0,
            1 => self.precision[0],
            n => {
                let span = self.thresholds[n - 1] - self.thresholds[0];
                if span <= 0.0 {
                    return self.precision.iter().sum::<f64>() / n as f64;
                }
                let area: f64 = (1..n)
                    .map(|i| {
                        0.5 * (self.precision[i] + self.precision[i - 1])
                            * (self.thresholds[i] - self.thresholds[i - 1])
                    })
                    .sum();
                area / span
            }
        }
    }

    /// Precision at the largest threshold not above `t`, `0` below the range.
    pub fn at(&self, t: f64) -> f64 {
        match self.thresholds.partition_point(|&x| x <= t) {
            0 => 0.0,
            i => self.precision[i - 1],
        }
    }
}

/// Fraction of the selected detections whose error is at most each
/// threshold. Thresholds are sorted first; with nothing selected every
/// precision is `0`.
pub fn precision_sweep(
    rows: &[DetectionRow],
    thresholds: &[f64],
    metric: ErrorMetric,
    mode: SelectionMode,
    noise_sigma: f64,
) -> PrecisionCurve {
    let mut thresholds = thresholds.to_vec();
    thresholds.sort_by(f64::total_cmp);
    let mut errors: Vec<f64> = rows.iter().filter(|r| mode.includes(r)).map(|r| metric.of(r)).collect();
    errors.sort_by(f64::total_cmp);
    let n = errors.len();
    let precision: Vec<f64> = thresholds
        .iter()
        .map(|&t| {
            if n == 0 {
                0.0
            } else {
                errors.partition_point(|&e| e <= t) as f64 / n as f64
            }
        })
        .collect();
    assert!(
        precision.windows(2).all(|w| w[0] <= w[1]),
        "precision curve must be non-decreasing"
    );
    PrecisionCurve {
        metric,
        selection_mode: mode,
        noise_sigma,
        thresholds,
        precision,
        n_detections: n,
    }
}

/// `a` is at least `b` at every threshold and above it at one or more.
pub fn dominates(a: &PrecisionCurve, b: &PrecisionCurve) -> bool {
    a.thresholds == b.thresholds
        && a.precision.iter().zip(&b.precision).all(|(x, y)| x >= y)
        && a.precision.iter().zip(&b.precision).any(|(x, y)| x > y)
}
