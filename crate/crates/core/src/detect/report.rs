//! JSON detection report.

use serde::{Deserialize, Serialize};

use super::{Detection, DetectionSet};
use crate::error::Result;
use crate::pose::{Pose, PoseRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub hypothesis_rank: usize,
    pub votes: u64,
    pub cluster_size: usize,
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
    pub best_by_votes: bool,
    pub elapsed_ms: f64,
}

impl DetectionRecord {
    pub fn pose(&self) -> Result<Pose> {
        Pose::from_row_major(&self.rotation, &self.translation)
    }

    pub fn detection(&self) -> Result<Detection> {
        Ok(Detection {
            pose: self.pose()?,
            votes: self.votes,
            cluster_size: self.cluster_size,
            hypothesis_rank: self.hypothesis_rank,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub scene_id: String,
    pub n_hypotheses: usize,
    pub hypotheses_exhausted: bool,
    pub scene_points: usize,
    pub detections: Vec<DetectionRecord>,
}

impl DetectionReport {
    /// With `timing` off every `elapsed_ms` is written as `0`, making the
    /// report reproducible byte for byte.
    pub fn new(scene_id: impl Into<String>, set: &DetectionSet, timing: bool) -> Self {
        let detections = set
            .runs
            .iter()
            .enumerate()
            .filter_map(|(i, run)| {
                let d = run.detection?;
                let r = PoseRecord::from(&d.pose);
                Some(DetectionRecord {
                    hypothesis_rank: d.hypothesis_rank,
                    votes: d.votes,
                    cluster_size: d.cluster_size,
                    rotation: r.rotation,
                    translation: r.translation,
                    best_by_votes: set.best == Some(i),
                    elapsed_ms: if timing {
                        run.elapsed.as_secs_f64() * 1e3
                    } else {
                        0.0
                    },
                })
            })
            .collect();
        Self {
            scene_id: scene_id.into(),
            n_hypotheses: set.runs.len(),
            hypotheses_exhausted: set.exhausted,
            scene_points: set.scene_points,
            detections,
        }
    }

    pub fn best(&self) -> Option<&DetectionRecord> {
        self.detections.iter().find(|d| d.best_by_votes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::HypothesisRun;
    use nalgebra::Vector3;
    use std::time::Duration;

    fn run(rank: usize, votes: Option<u64>) -> HypothesisRun {
        HypothesisRun {
            rank,
            center: Vector3::zeros(),
            region_size: 10,
            n_reference: 2,
            elapsed: Duration::from_millis(3),
            detection: votes.map(|v| Detection {
                pose: Pose::from_translation(Vector3::new(rank as f64, 0.0, 0.0)),
                votes: v,
                cluster_size: 1,
                hypothesis_rank: rank,
            }),
        }
    }

    #[test]
    fn report_marks_best_and_skips_empty_runs() {
        let set = DetectionSet {
            runs: vec![run(1, Some(4)), run(2, None), run(3, Some(9))],
            best: Some(2),
            exhausted: false,
            scene_points: 100,
        };
        let rep = DetectionReport::new("s", &set, false);
        assert_eq!(rep.detections.len(), 2);
        assert_eq!(rep.best().unwrap().hypothesis_rank, 3);
        assert!(rep.detections.iter().all(|d| d.elapsed_ms == 0.0));
        let timed = DetectionReport::new("s", &set, true);
        assert!((timed.detections[0].elapsed_ms - 3.0).abs() < 1e-9);

        let text = serde_json::to_string(&rep).unwrap();
        let back: DetectionReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rep);
        assert_eq!(back.detections[1].detection().unwrap().pose.translation.x, 3.0);
    }
}
