//! Pose errors, precision curves and noise sweeps.

mod curve;
mod metrics;
mod plot;
mod sweep;

pub use curve::{dominates, precision_sweep, ErrorMetric, PrecisionCurve, SelectionMode};
pub use metrics::{match_to_ground_truth, pose_error, PoseError};
pub use plot::render_svg;
pub use sweep::{noise_sweep, sweep_scene_id, SweepOutput, SweepPlan};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detect::DetectionReport;
use crate::error::{Error, Result};
use crate::pose::Pose;

/// One evaluated detection; also the CSV row layout.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub sigma: f64,
    pub seed: u64,
    pub scene_id: String,
    pub hypothesis_rank: usize,
    pub votes: u64,
    pub translation_err: f64,
    pub translation_err_rel: f64,
    pub rotation_err_deg: f64,
    pub best_by_votes: bool,
    pub matched_gt_id: u32,
    pub ambiguous: bool,
}

/// Threshold grids for the two error metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Fractions of the object diameter.
    pub translation_rel: Vec<f64>,
    pub rotation_deg: Vec<f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            translation_rel: (1..=25).map(|i| i as f64 / 100.0).collect(),
            rotation_deg: (1..=30).map(f64::from).collect(),
        }
    }
}

impl Thresholds {
    pub fn for_metric(&self, metric: ErrorMetric) -> &[f64] {
        match metric {
            ErrorMetric::TranslationRel => &self.translation_rel,
            ErrorMetric::RotationDeg => &self.rotation_deg,
        }
    }
}

/// Matches every detection of a report against the scene's ground truth.
pub fn evaluate_report(
    report: &DetectionReport,
    ground_truth: &[(u32, Pose)],
    diameter: f64,
    sigma: f64,
    seed: u64,
) -> Result<Vec<DetectionRow>> {
    report
        .detections
        .iter()
        .map(|d| {
            let e = match_to_ground_truth(&d.pose()?, ground_truth, diameter)?;
            Ok(DetectionRow {
                sigma,
                seed,
                scene_id: report.scene_id.clone(),
                hypothesis_rank: d.hypothesis_rank,
                votes: d.votes,
                translation_err: e.translation_err,
                translation_err_rel: e.translation_err_rel,
                rotation_err_deg: e.rotation_err_deg(),
                best_by_votes: d.best_by_votes,
                matched_gt_id: e.matched_gt_id,
                ambiguous: e.ambiguous,
            })
        })
        .collect()
}

/// Curves for every sigma present in `rows` (ascending), each metric and
/// each selection mode, in that nesting order.
pub fn curves_by_sigma(rows: &[DetectionRow], thresholds: &Thresholds) -> Vec<PrecisionCurve> {
    let mut sigmas: Vec<f64> = rows.iter().map(|r| r.sigma).collect();
    sigmas.sort_by(f64::total_cmp);
    sigmas.dedup();
    let mut out = Vec::new();
    for sigma in sigmas {
        let subset: Vec<DetectionRow> = rows.iter().filter(|r| r.sigma == sigma).cloned().collect();
        for metric in ErrorMetric::ALL {
            for mode in SelectionMode::ALL {
                out.push(precision_sweep(&subset, thresholds.for_metric(metric), metric, mode, sigma));
            }
        }
    }
    out
}

pub fn rows_to_csv(rows: &[DetectionRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner()
        .map_err(|e| Error::Degenerate(format!("csv buffer: {e}")))
}

pub fn read_csv(path: &Path) -> Result<Vec<DetectionRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_csv(path: &Path, rows: &[DetectionRow]) -> Result<()> {
    fs::write(path, rows_to_csv(rows)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::DetectionRecord;
    use nalgebra::Vector3;

    fn record(rank: usize, votes: u64, t: [f64; 3], best: bool) -> DetectionRecord {
        DetectionRecord {
            hypothesis_rank: rank,
            votes,
            cluster_size: 1,
            rotation: Pose::identity().rotation_row_major(),
            translation: t,
            best_by_votes: best,
            elapsed_ms: 0.0,
        }
    }

    fn report() -> DetectionReport {
        DetectionReport {
            scene_id: "s0".into(),
            n_hypotheses: 2,
            hypotheses_exhausted: false,
            scene_points: 10,
            detections: vec![record(1, 9, [0.0; 3], true), record(2, 4, [10.5, 0.0, 0.0], false)],
        }
    }

    #[test]
    fn report_rows_match_nearest_objects() {
        let gts = vec![
            (3, Pose::identity()),
            (4, Pose::from_translation(Vector3::new(10.0, 0.0, 0.0))),
        ];
        let rows = evaluate_report(&report(), &gts, 5.0, 0.1, 7).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].matched_gt_id, rows[1].matched_gt_id), (3, 4));
        assert!((rows[1].translation_err_rel - 0.1).abs() < 1e-12);
        assert_eq!((rows[0].sigma, rows[0].seed, rows[0].scene_id.as_str()), (0.1, 7, "s0"));
        assert!(evaluate_report(&report(), &[], 5.0, 0.0, 0).is_err());
    }

    #[test]
    fn csv_header_and_round_trip() {
        let gts = vec![(0, Pose::identity())];
        let rows = evaluate_report(&report(), &gts, 5.0, 0.0, 1).unwrap();
        let bytes = rows_to_csv(&rows).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "sigma,seed,scene_id,hypothesis_rank,votes,translation_err,translation_err_rel,rotation_err_deg,best_by_votes,matched_gt_id,ambiguous"
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        write_csv(&path, &rows).unwrap();
        assert_eq!(read_csv(&path).unwrap(), rows);
    }

    #[test]
    fn curves_per_sigma_metric_and_mode() {
        let mut rows = evaluate_report(&report(), &[(0, Pose::identity())], 5.0, 0.0, 1).unwrap();
        rows.extend(evaluate_report(&report(), &[(0, Pose::identity())], 5.0, 0.2, 1).unwrap());
        let curves = curves_by_sigma(&rows, &Thresholds::default());
        assert_eq!(curves.len(), 8);
        assert_eq!(curves[0].noise_sigma, 0.0);
        assert_eq!(curves[4].noise_sigma, 0.2);
        assert_eq!(curves[1].selection_mode, SelectionMode::MaxVotesOnly);
        assert_eq!(curves[2].metric, ErrorMetric::RotationDeg);
        // the best detection is perfect, the other is over two diameters off
        assert_eq!(curves[1].precision[0], 1.0);
        assert_eq!(curves[0].precision[0], 0.5);
    }
}
