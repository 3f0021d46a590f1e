//! Serial-chain robot model with revolute joints.
//!
//! Each joint rotates about its own axis and then applies a fixed
//! translation, so a joint's `origin` is the offset to the next joint (the
//! link length for a planar arm). The link box attached to a joint lives in
//! the frame obtained right after that joint's rotation.

use std::f64::consts::TAU;

use nalgebra::{Isometry3, Matrix3, Rotation3, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::collision::Obb;
use crate::config::JointConfig;
use crate::error::{Error, Result};

/// Box geometry attached to a link frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBox {
    #[serde(default)]
    pub center: [f64; 3],
    pub half_extents: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Joint {
    #[serde(default)]
    pub name: String,
    pub axis: [f64; 3],
    /// Translation applied after the rotation, in the rotated frame.
    #[serde(default)]
    pub origin: [f64; 3],
    pub limits: [f64; 2],
    pub link: LinkBox,
}

/// Rigid placement in the world frame; rotation given as roll, pitch, yaw.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    #[serde(default)]
    pub translation: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl Pose {
    pub fn isometry(&self) -> Isometry3<f64> {
        let [x, y, z] = self.translation;
        let [r, p, yaw] = self.rpy;
        Isometry3::from_parts(Translation3::new(x, y, z), UnitQuaternion::from_euler_angles(r, p, yaw))
    }
}

/// Two-finger gripper: one box per finger, fixed to the chain's final frame
/// and placed symmetrically at `±opening / 2` along the frame's y axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gripper {
    pub finger_half_extents: [f64; 3],
    #[serde(default)]
    pub finger_offset: [f64; 3],
    pub opening: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Chain {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub base: Pose,
    pub joints: Vec<Joint>,
    /// Offset of the tool centre point from the final joint frame.
    #[serde(default)]
    pub tcp_offset: [f64; 3],
    #[serde(default)]
    pub gripper: Option<Gripper>,
}

impl Chain {
    /// Number of collision bodies: one per joint plus the gripper fingers.
    pub fn link_count(&self) -> usize {
        self.joints.len() + if self.gripper.is_some() { 2 } else { 0 }
    }
}

/// What a global link index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkId {
    pub chain: usize,
    /// Position inside the chain; joints first, then fingers.
    pub local: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RobotRepr", into = "RobotRepr")]
pub struct RobotModel {
    chains: Vec<Chain>,
    limits: Vec<[f64; 2]>,
    joint_chain: Vec<usize>,
    links: Vec<LinkId>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotRepr {
    chains: Vec<Chain>,
}

impl TryFrom<RobotRepr> for RobotModel {
    type Error = Error;

    fn try_from(r: RobotRepr) -> Result<Self> {
        RobotModel::new(r.chains)
    }
}

impl From<RobotModel> for RobotRepr {
    fn from(m: RobotModel) -> Self {
        RobotRepr { chains: m.chains }
    }
}

fn positive(v: &[f64; 3]) -> bool {
    v.iter().all(|x| x.is_finite() && *x > 0.0)
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl RobotModel {
    pub fn new(chains: Vec<Chain>) -> Result<Self> {
        if chains.is_empty() {
            return Err(Error::InvalidModel("robot has no chains".into()));
        }
        let mut limits = Vec::new();
        let mut joint_chain = Vec::new();
        let mut links = Vec::new();
        for (c, chain) in chains.iter().enumerate() {
            if chain.joints.is_empty() {
                return Err(Error::InvalidModel(format!("chain {c} has no joints")));
            }
            if !finite(&chain.base.translation) || !finite(&chain.base.rpy) {
                return Err(Error::InvalidModel(format!("chain {c} base pose is not finite")));
            }
            if !finite(&chain.tcp_offset) {
                return Err(Error::InvalidModel(format!("chain {c} tcp offset is not finite")));
            }
            for (j, joint) in chain.joints.iter().enumerate() {
                let [lo, hi] = joint.limits;
                if !(lo < hi && lo >= -TAU && hi <= TAU) {
                    return Err(Error::InvalidModel(format!(
                        "chain {c} joint {j}: limits [{lo}, {hi}] must satisfy -2pi <= lo < hi <= 2pi"
                    )));
                }
                let axis = Vector3::from(joint.axis);
                if !finite(&joint.axis) || axis.norm() < 1e-9 {
                    return Err(Error::InvalidModel(format!(
                        "chain {c} joint {j}: rotation axis must be a non-zero vector"
                    )));
                }
                if !finite(&joint.origin) || !finite(&joint.link.center) {
                    return Err(Error::InvalidModel(format!(
                        "chain {c} joint {j}: offsets must be finite"
                    )));
                }
                if !positive(&joint.link.half_extents) {
                    return Err(Error::InvalidModel(format!(
                        "chain {c} joint {j}: link half-extents must be positive"
                    )));
                }
                limits.push(joint.limits);
                joint_chain.push(c);
            }
            if let Some(g) = &chain.gripper {
                if !positive(&g.finger_half_extents) {
                    return Err(Error::InvalidModel(format!(
                        "chain {c}: finger half-extents must be positive"
                    )));
                }
                if !(g.opening.is_finite() && g.opening >= 0.0) || !finite(&g.finger_offset) {
                    return Err(Error::InvalidModel(format!(
                        "chain {c}: gripper opening and offset must be finite, opening >= 0"
                    )));
                }
            }
            links.extend((0..chain.link_count()).map(|local| LinkId { chain: c, local }));
        }
        Ok(RobotModel {
            chains,
            limits,
            joint_chain,
            links,
        })
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    /// Configuration-space dimension.
    pub fn dim(&self) -> usize {
        self.limits.len()
    }

    pub fn limits(&self) -> &[[f64; 2]] {
        &self.limits
    }

    /// Chain that owns joint `j`.
    pub fn chain_of_joint(&self, j: usize) -> usize {
        self.joint_chain[j]
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn link_id(&self, link: usize) -> LinkId {
        self.links[link]
    }

    /// Global link index of the last body of `chain`.
    pub fn last_link_of_chain(&self, chain: usize) -> usize {
        self.links
            .iter()
            .rposition(|l| l.chain == chain)
            .expect("every chain has links")
    }

    /// Links that share a joint, or a finger and the link it is mounted on.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        let (la, lb) = (self.links[a], self.links[b]);
        if la.chain != lb.chain {
            return false;
        }
        let joints = self.chains[la.chain].joints.len();
        let (lo, hi) = (la.local.min(lb.local), la.local.max(lb.local));
        if hi < joints {
            return hi - lo == 1;
        }
        // at least one finger: fingers touch each other and the last link
        lo + 1 >= joints
    }

    /// Index gap between two links of the same chain, `None` across chains.
    /// Fingers count as one step past the last joint link.
    pub fn link_gap(&self, a: usize, b: usize) -> Option<usize> {
        let (la, lb) = (self.links[a], self.links[b]);
        if la.chain != lb.chain {
            return None;
        }
        let joints = self.chains[la.chain].joints.len();
        let rank = |l: usize| l.min(joints);
        Some(rank(la.local).abs_diff(rank(lb.local)))
    }

    pub fn check_config(&self, q: &JointConfig) -> Result<()> {
        Error::check_dim(self.dim(), q.dim())?;
        if let Some(index) = q.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(())
    }

    pub fn within_limits(&self, q: &JointConfig) -> bool {
        q.within(&self.limits)
    }

    pub fn forward_kinematics(&self, q: &JointConfig) -> Result<LinkPoseSet> {
        forward_kinematics(self, q)
    }
}

/// World-frame pose of one link body.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkPose {
    pub chain: usize,
    pub frame: Isometry3<f64>,
    pub obb: Obb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkPoseSet {
    pub links: Vec<LinkPose>,
    /// Final (tool) frame of each chain; its origin is the TCP.
    pub tcp_frames: Vec<Isometry3<f64>>,
    /// False when some joint value lies outside its limits.
    pub within_limits: bool,
}

impl LinkPoseSet {
    pub fn tcp(&self, chain: usize) -> Vector3<f64> {
        self.tcp_frames[chain].translation.vector
    }
}

fn rotation_matrix(iso: &Isometry3<f64>) -> Matrix3<f64> {
    *iso.rotation.to_rotation_matrix().matrix()
}

fn local_box(frame: &Isometry3<f64>, center: Vector3<f64>, half: [f64; 3]) -> Obb {
    Obb::new(
        frame.transform_point(&center.into()).coords,
        Vector3::from(half),
        rotation_matrix(frame),
    )
}

/// Chains every joint's rotation and translation from each chain's base.
pub fn forward_kinematics(model: &RobotModel, q: &JointConfig) -> Result<LinkPoseSet> {
    model.check_config(q)?;
    let mut links = Vec::with_capacity(model.link_count());
    let mut tcp_frames = Vec::with_capacity(model.chains.len());
    let mut qi = 0;
    for (c, chain) in model.chains.iter().enumerate() {
        let mut frame = chain.base.isometry();
        for joint in &chain.joints {
            let axis = Unit::new_normalize(Vector3::from(joint.axis));
            let rot = UnitQuaternion::from_rotation_matrix(&Rotation3::from_axis_angle(&axis, q[qi]));
            frame *= rot;
            links.push(LinkPose {
                chain: c,
                frame,
                obb: local_box(&frame, Vector3::from(joint.link.center), joint.link.half_extents),
            });
            frame *= Translation3::from(Vector3::from(joint.origin));
            qi += 1;
        }
        if let Some(g) = &chain.gripper {
            let base = Vector3::from(g.finger_offset);
            for side in [-1.0, 1.0] {
                let center = base + Vector3::new(0.0, side * 0.5 * g.opening, 0.0);
                links.push(LinkPose {
                    chain: c,
                    frame,
                    obb: local_box(&frame, center, g.finger_half_extents),
                });
            }
        }
        tcp_frames.push(frame * Translation3::from(Vector3::from(chain.tcp_offset)));
    }
    Ok(LinkPoseSet {
        links,
        tcp_frames,
        within_limits: model.within_limits(q),
    })
}

/// TCP positions of every chain, without building link boxes.
pub fn tcp_positions(model: &RobotModel, q: &JointConfig) -> Result<Vec<Vector3<f64>>> {
    let poses = forward_kinematics(model, q)?;
    Ok((0..model.chains.len()).map(|c| poses.tcp(c)).collect())
}

/// Euclidean distance between the TCPs of `chain` at two configurations.
pub fn tcp_distance(model: &RobotModel, q_a: &JointConfig, q_b: &JointConfig, chain: usize) -> Result<f64> {
    if chain >= model.chains.len() {
        return Err(Error::UnknownChain(chain));
    }
    let a = forward_kinematics(model, q_a)?.tcp(chain);
    let b = forward_kinematics(model, q_b)?.tcp(chain);
    Ok((a - b).norm())
}
