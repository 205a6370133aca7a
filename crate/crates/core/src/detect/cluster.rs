//! Greedy pose clustering with vote-weighted averaging.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use super::voting::RawPose;
use crate::pose::Pose;
use crate::ppf::DetectorParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    /// Object-to-camera pose.
    pub pose: Pose,
    /// Summed votes of the cluster members.
    pub votes: u64,
    pub cluster_size: usize,
    /// Rank of the hypothesis that produced it, `0` if none.
    pub hypothesis_rank: usize,
}

struct Cluster {
    seed: Pose,
    seed_q: UnitQuaternion<f64>,
    votes: u64,
    size: usize,
    t_sum: Vector3<f64>,
    q_sum: Quaternion<f64>,
}

/// Each raw pose, strongest first, joins the first cluster whose seed is
/// within `cluster_dist` and `cluster_angle`, or starts a new one.
pub fn cluster_poses(raw: &[RawPose], params: &DetectorParams) -> Vec<Detection> {
    let mut order: Vec<&RawPose> = raw.iter().collect();
    order.sort_by(|a, b| b.votes.cmp(&a.votes).then(a.reference.cmp(&b.reference)));

    let mut clusters: Vec<Cluster> = Vec::new();
    for r in order {
        let w = r.votes as f64;
        let q = r.pose.quaternion();
        let home = clusters.iter_mut().find(|c| {
            c.seed.translation_distance_to(&r.pose) <= params.cluster_dist
                && c.seed.rotation_angle_to(&r.pose) <= params.cluster_angle
        });
        match home {
            Some(c) => {
                let aligned = if c.seed_q.coords.dot(&q.coords) < 0.0 {
                    -q.into_inner()
                } else {
                    q.into_inner()
                };
                c.votes += r.votes as u64;
                c.size += 1;
                c.t_sum += r.pose.translation * w;
                c.q_sum += aligned * w;
            }
            None => clusters.push(Cluster {
                seed: r.pose,
                seed_q: q,
                votes: r.votes as u64,
                size: 1,
                t_sum: r.pose.translation * w,
                q_sum: q.into_inner() * w,
            }),
        }
    }

    let mut out: Vec<Detection> = clusters
        .into_iter()
        .map(|c| {
            let pose = if c.votes == 0 {
                c.seed
            } else {
                let total = c.votes as f64;
                Pose::from_quaternion(
                    &UnitQuaternion::new_normalize(c.q_sum / total),
                    c.t_sum / total,
                )
            };
            Detection {
                pose,
                votes: c.votes,
                cluster_size: c.size,
                hypothesis_rank: 0,
            }
        })
        .collect();
    out.sort_by(|a, b| b.votes.cmp(&a.votes));
    out
}
