use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::Pose;

// Guards the cross-product axes when two edges are (nearly) parallel.
const PARALLEL_EPS: f64 = 1e-12;

/// Oriented bounding box. The columns of `rotation` are the box axes in the
/// world frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Obb {
    pub center: Vector3<f64>,
    pub half_extents: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

impl Obb {
    pub fn new(center: Vector3<f64>, half_extents: Vector3<f64>, rotation: Matrix3<f64>) -> Self {
        Obb {
            center,
            half_extents,
            rotation,
        }
    }

    pub fn axis_aligned(center: Vector3<f64>, half_extents: Vector3<f64>) -> Self {
        Obb::new(center, half_extents, Matrix3::identity())
    }

    /// Grows every half-extent by `margin`.
    pub fn inflated(&self, margin: f64) -> Obb {
        Obb {
            half_extents: self.half_extents.add_scalar(margin),
            ..self.clone()
        }
    }

    /// Half-extents of the world-axis-aligned box enclosing this one.
    pub fn aabb_half_extents(&self) -> Vector3<f64> {
        self.rotation.abs() * self.half_extents
    }

    pub fn contains_point(&self, p: &Vector3<f64>, tol: f64) -> bool {
        let local = self.rotation.transpose() * (p - self.center);
        (0..3).all(|k| local[k].abs() <= self.half_extents[k] + tol)
    }

    /// Separating-axis test over the 15 candidate axes. Touching boxes count
    /// as intersecting.
    pub fn intersects(&self, other: &Obb) -> bool {
        let a = &self.half_extents;
        let b = &other.half_extents;
        // other's axes expressed in self's frame
        let r = self.rotation.transpose() * other.rotation;
        let abs_r = r.abs().add_scalar(PARALLEL_EPS);
        let t = self.rotation.transpose() * (other.center - self.center);

        for i in 0..3 {
            let ra = a[i];
            let rb = b[0] * abs_r[(i, 0)] + b[1] * abs_r[(i, 1)] + b[2] * abs_r[(i, 2)];
            if t[i].abs() > ra + rb {
                return false;
            }
        }
        for j in 0..3 {
            let ra = a[0] * abs_r[(0, j)] + a[1] * abs_r[(1, j)] + a[2] * abs_r[(2, j)];
            let rb = b[j];
            let proj = t[0] * r[(0, j)] + t[1] * r[(1, j)] + t[2] * r[(2, j)];
            if proj.abs() > ra + rb {
                return false;
            }
        }
        // a_i x b_j
        for i in 0..3 {
            let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
            for j in 0..3 {
                let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                let ra = a[i1] * abs_r[(i2, j)] + a[i2] * abs_r[(i1, j)];
                let rb = b[j1] * abs_r[(i, j2)] + b[j2] * abs_r[(i, j1)];
                let proj = t[i2] * r[(i1, j)] - t[i1] * r[(i2, j)];
                if proj.abs() > ra + rb {
                    return false;
                }
            }
        }
        true
    }
}

/// Box as written in scene files: centre, half-extents and roll/pitch/yaw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub center: [f64; 3],
    pub half_extents: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl BoxSpec {
    pub fn to_obb(&self) -> Result<Obb> {
        let all = self.center.iter().chain(&self.half_extents).chain(&self.rpy);
        if !all.into_iter().all(|v| v.is_finite()) {
            return Err(Error::Scenario("box has non-finite fields".into()));
        }
        if self.half_extents.iter().any(|h| *h <= 0.0) {
            return Err(Error::Scenario("box half-extents must be positive".into()));
        }
        let pose = Pose {
            translation: self.center,
            rpy: self.rpy,
        }
        .isometry();
        Ok(Obb::new(
            Vector3::from(self.center),
            Vector3::from(self.half_extents),
            *pose.rotation.to_rotation_matrix().matrix(),
        ))
    }
}
