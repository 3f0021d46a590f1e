//! Collision world: occupancy voxels plus static boxes, checked against
//! margin-inflated link boxes.

mod grid;
mod obb;

use std::cmp::Ordering;

use nalgebra::Vector3;

pub use grid::{GridRepr, OccupancyGrid, VoxelIndex, DEFAULT_RESOLUTION};
pub use obb::{BoxSpec, Obb};

use crate::config::JointConfig;
use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, RobotModel};

pub const DEFAULT_D_SAFE: f64 = 0.01;
pub const DEFAULT_CHECK_RESOLUTION: f64 = 0.05;
pub const DEFAULT_SWEEP_RESOLUTION: f64 = 0.02;

/// Payload box rigidly attached to a chain's tool frame.
///
/// As a collision body it takes the index one past the robot's last link.
#[derive(Debug, Clone, PartialEq)]
pub struct Attachment {
    pub chain: usize,
    /// Centre in the tool frame.
    pub center: Vector3<f64>,
    pub half_extents: Vector3<f64>,
}

/// How self-collision pairs are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum SelfCollision {
    /// Explicit body index pairs; adjacent pairs are dropped.
    Pairs(Vec<[usize; 2]>),
    /// Every pair within a chain whose link gap is at least `min_gap`, every
    /// cross-chain pair, and the attachment against other chains.
    Auto { min_gap: usize },
}

impl Default for SelfCollision {
    fn default() -> Self {
        SelfCollision::Pairs(Vec::new())
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    robot: RobotModel,
    grid: OccupancyGrid,
    static_boxes: Vec<Obb>,
    d_safe: f64,
    sweep_resolution: f64,
    self_pairs: Vec<[usize; 2]>,
    attachment: Option<Attachment>,
}

impl Scene {
    pub fn new(
        robot: RobotModel,
        grid: OccupancyGrid,
        static_boxes: Vec<Obb>,
        d_safe: f64,
        self_collision: SelfCollision,
        attachment: Option<Attachment>,
    ) -> Result<Self> {
        if !(d_safe.is_finite() && d_safe >= 0.0) {
            return Err(Error::param(format!("d_safe must be >= 0, got {d_safe}")));
        }
        for (i, b) in static_boxes.iter().enumerate() {
            let ok = b.half_extents.iter().all(|h| h.is_finite() && *h > 0.0) && b.center.iter().all(|v| v.is_finite());
            if !ok {
                return Err(Error::Scenario(format!("static box {i} is degenerate")));
            }
        }
        if let Some(a) = &attachment {
            if a.chain >= robot.chains().len() {
                return Err(Error::UnknownChain(a.chain));
            }
            if !a.half_extents.iter().all(|h| h.is_finite() && *h > 0.0) || !a.center.iter().all(|v| v.is_finite()) {
                return Err(Error::Scenario("attachment box is degenerate".into()));
            }
        }
        let mut scene = Scene {
            robot,
            grid,
            static_boxes,
            d_safe,
            sweep_resolution: DEFAULT_SWEEP_RESOLUTION,
            self_pairs: Vec::new(),
            attachment,
        };
        scene.self_pairs = scene.resolve_pairs(self_collision)?;
        Ok(scene)
    }

    /// Robot alone in empty space.
    pub fn empty(robot: RobotModel) -> Self {
        Scene::new(
            robot,
            OccupancyGrid::default(),
            Vec::new(),
            DEFAULT_D_SAFE,
            SelfCollision::default(),
            None,
        )
        .expect("empty scene is valid")
    }

    fn body_count(&self) -> usize {
        self.robot.link_count() + usize::from(self.attachment.is_some())
    }

    fn attachment_index(&self) -> Option<usize> {
        self.attachment.as_ref().map(|_| self.robot.link_count())
    }

    /// Bodies that touch by construction and are never checked.
    fn bodies_adjacent(&self, a: usize, b: usize) -> bool {
        let links = self.robot.link_count();
        match (a >= links, b >= links) {
            (false, false) => self.robot.adjacent(a, b),
            (true, true) => true,
            (att, _) => {
                let link = if att { b } else { a };
                let chain = self.attachment.as_ref().map(|x| x.chain);
                let id = self.robot.link_id(link);
                // held payload touches the fingers and the last joint link
                Some(id.chain) == chain && id.local + 1 >= self.robot.chains()[id.chain].joints.len()
            }
        }
    }

    fn resolve_pairs(&self, mode: SelfCollision) -> Result<Vec<[usize; 2]>> {
        let n = self.body_count();
        let mut pairs = Vec::new();
        match mode {
            SelfCollision::Pairs(list) => {
                for [a, b] in list {
                    if a == b {
                        return Err(Error::Scenario(format!("self-collision pair ({a}, {a})")));
                    }
                    if a >= n || b >= n {
                        return Err(Error::Scenario(format!(
                            "self-collision pair ({a}, {b}) out of range for {n} bodies"
                        )));
                    }
                    if !self.bodies_adjacent(a, b) {
                        pairs.push([a.min(b), a.max(b)]);
                    }
                }
            }
            SelfCollision::Auto { min_gap } => {
                let links = self.robot.link_count();
                for a in 0..links {
                    for b in a + 1..links {
                        let far = match self.robot.link_gap(a, b) {
                            None => true,
                            Some(gap) => gap >= min_gap.max(2),
                        };
                        if far && !self.robot.adjacent(a, b) {
                            pairs.push([a, b]);
                        }
                    }
                }
                if let (Some(att), Some(idx)) = (&self.attachment, self.attachment_index()) {
                    for l in 0..links {
                        if self.robot.link_id(l).chain != att.chain {
                            pairs.push([l, idx]);
                        }
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        Ok(pairs)
    }

    pub fn robot(&self) -> &RobotModel {
        &self.robot
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn static_boxes(&self) -> &[Obb] {
        &self.static_boxes
    }

    pub fn d_safe(&self) -> f64 {
        self.d_safe
    }

    /// Sample spacing of the swept-body pass in [`Scene::segment_is_free`].
    pub fn sweep_resolution(&self) -> f64 {
        self.sweep_resolution
    }

    pub fn self_pairs(&self) -> &[[usize; 2]] {
        &self.self_pairs
    }

    pub fn attachment(&self) -> Option<&Attachment> {
        self.attachment.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.robot.dim()
    }

    /// Same world with another safety margin.
    pub fn with_d_safe(&self, d_safe: f64) -> Result<Scene> {
        if !(d_safe.is_finite() && d_safe >= 0.0) {
            return Err(Error::param(format!("d_safe must be >= 0, got {d_safe}")));
        }
        Ok(Scene { d_safe, ..self.clone() })
    }

    /// Same world with another swept-body sample spacing.
    pub fn with_sweep_resolution(&self, sweep_resolution: f64) -> Result<Scene> {
        if !(sweep_resolution.is_finite() && sweep_resolution > 0.0) {
            return Err(Error::param(format!(
                "sweep_resolution must be > 0, got {sweep_resolution}"
            )));
        }
        Ok(Scene {
            sweep_resolution,
            ..self.clone()
        })
    }

    /// Margin-inflated collision bodies at `q`: links, then the attachment.
    pub fn bodies(&self, q: &JointConfig) -> Result<Vec<Obb>> {
        let poses = forward_kinematics(&self.robot, q)?;
        let mut out: Vec<Obb> = poses.links.iter().map(|l| l.obb.inflated(self.d_safe)).collect();
        if let Some(a) = &self.attachment {
            let frame = poses.tcp_frames[a.chain];
            let b = Obb::new(
                frame.transform_point(&a.center.into()).coords,
                a.half_extents,
                *frame.rotation.to_rotation_matrix().matrix(),
            );
            out.push(b.inflated(self.d_safe));
        }
        Ok(out)
    }

    /// Bodies at `q` grown to cover every pose reachable while each joint
    /// `j` moves by at most `spacing[j]`.
    ///
    /// A rotation by `d` about an axis moves a point at distance `r` from it
    /// by at most `d * r`, and only perpendicular to the axis, so each local
    /// box axis `u` grows by `d * r * sqrt(1 - (u . a)^2)` per upstream
    /// joint with world axis `a`. The bound is first order in the motion:
    /// axes and lever arms are taken at `q`.
    pub fn swept_bodies(&self, q: &JointConfig, spacing: &[f64]) -> Result<Vec<Obb>> {
        Error::check_dim(self.dim(), spacing.len())?;
        let poses = forward_kinematics(&self.robot, q)?;
        let mut bodies = self.bodies(q)?;
        let mut first_link = 0;
        let mut first_joint = 0;
        let mut chain_first = Vec::with_capacity(self.robot.chains().len());
        for chain in self.robot.chains() {
            chain_first.push((first_link, first_joint));
            first_link += chain.link_count();
            first_joint += chain.joints.len();
        }
        let growth = |body: &Obb, chain: usize, upstream: usize| -> Vector3<f64> {
            let (link0, joint0) = chain_first[chain];
            let joints = &self.robot.chains()[chain].joints;
            let radius = body.half_extents.norm();
            let mut grow = Vector3::zeros();
            for k in 0..upstream {
                let step = spacing[joint0 + k].abs();
                if step == 0.0 {
                    continue;
                }
                let frame = &poses.links[link0 + k].frame;
                let axis = frame.rotation * Vector3::from(joints[k].axis).normalize();
                let d = body.center - frame.translation.vector;
                let lever = (d - axis * d.dot(&axis)).norm() + radius;
                for i in 0..3 {
                    let along = body.rotation.column(i).dot(&axis);
                    grow[i] += step * lever * (1.0 - along * along).max(0.0).sqrt();
                }
            }
            grow
        };
        for (i, body) in bodies.iter_mut().enumerate() {
            let (chain, upstream) = if i < self.robot.link_count() {
                let id = self.robot.link_id(i);
                let joints = self.robot.chains()[id.chain].joints.len();
                (id.chain, (id.local + 1).min(joints))
            } else {
                let c = self.attachment.as_ref().map_or(0, |a| a.chain);
                (c, self.robot.chains()[c].joints.len())
            };
            body.half_extents += growth(body, chain, upstream);
        }
        Ok(bodies)
    }

    /// True when no inflated body touches the grid, a static box, or a
    /// listed partner body.
    pub fn config_is_free(&self, q: &JointConfig) -> Result<bool> {
        Ok(self.bodies_are_free(&self.bodies(q)?))
    }

    fn bodies_are_free(&self, bodies: &[Obb]) -> bool {
        for b in bodies {
            if self.grid.intersects(b) || self.static_boxes.iter().any(|s| s.intersects(b)) {
                return false;
            }
        }
        !self.self_pairs.iter().any(|[a, b]| bodies[*a].intersects(&bodies[*b]))
    }

    /// Checks `q_a + t (q_b - q_a)` at `t = k / m`, `k = 0..=m`, where `m`
    /// is the smallest power of two with `‖q_b − q_a‖∞ / m ≤
    /// check_resolution`, and also runs the swept pass at the scene's
    /// sweep resolution, growing every body over one sample spacing (see
    /// [`Scene::swept_bodies`]).
    ///
    /// The swept pass covers the whole segment and does not depend on
    /// `check_resolution`, so a passing segment also passes at any finer
    /// resolution. A finer resolution visits a superset of the same points,
    /// so a failing segment keeps failing. Endpoints are put in a canonical
    /// order first, making the answer independent of direction.
    pub fn segment_is_free(&self, q_a: &JointConfig, q_b: &JointConfig, check_resolution: f64) -> Result<bool> {
        if !(check_resolution.is_finite() && check_resolution > 0.0) {
            return Err(Error::param(format!(
                "check_resolution must be > 0, got {check_resolution}"
            )));
        }
        self.robot.check_config(q_a)?;
        self.robot.check_config(q_b)?;
        let (a, b) = match lex_cmp(q_a, q_b) {
            Ordering::Greater => (q_b, q_a),
            _ => (q_a, q_b),
        };
        let span = a.linf_distance(b);
        let swept = subdivisions(span, self.sweep_resolution);
        let spacing: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| (y - x) / swept as f64).collect();
        let at = |k: usize, m: usize| {
            if k == m {
                b.clone()
            } else {
                a.lerp(b, k as f64 / m as f64)
            }
        };
        let swept_free =
            |k: usize| -> Result<bool> { Ok(self.bodies_are_free(&self.swept_bodies(&at(k, swept), &spacing)?)) };
        if !swept_free(0)? || !swept_free(swept)? {
            return Ok(false);
        }
        // coarse-to-fine: midpoint first, then quarter points, ...
        let mut step = swept;
        while step > 1 {
            let half = step / 2;
            let mut k = half;
            while k < swept {
                if !swept_free(k)? {
                    return Ok(false);
                }
                k += step;
            }
            step = half;
        }
        // both counts are powers of two, so swept samples already cover
        // every point sample they share
        let points = subdivisions(span, check_resolution);
        if points > swept {
            let stride = points / swept;
            for k in (1..points).filter(|k| k % stride != 0) {
                if !self.bodies_are_free(&self.bodies(&at(k, points))?) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Power-of-two interval count for a segment of infinity-norm length `span`.
pub fn subdivisions(span: f64, check_resolution: f64) -> usize {
    let n = (span / check_resolution).ceil();
    if n <= 1.0 {
        1
    } else {
        (n as usize).next_power_of_two()
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}
