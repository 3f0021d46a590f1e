use serde::{Deserialize, Serialize};

use crate::config::JointConfig;
use crate::error::{Error, Result};

/// Coordinates closer than this are treated as the same waypoint.
pub const DUPLICATE_TOL: f64 = 1e-12;

/// Ordered waypoint sequence in joint space.
///
/// Construction drops consecutive duplicates, so every edge has non-zero
/// length unless the path is a single waypoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathRepr", into = "PathRepr")]
pub struct Path {
    waypoints: Vec<JointConfig>,
}

#[derive(Serialize, Deserialize)]
struct PathRepr {
    waypoints: Vec<JointConfig>,
}

impl Path {
    pub fn new(waypoints: Vec<JointConfig>) -> Result<Self> {
        let first = waypoints.first().ok_or(Error::TooFewWaypoints { needed: 1, got: 0 })?;
        let dim = first.dim();
        for w in &waypoints {
            Error::check_dim(dim, w.dim())?;
        }
        let goal = waypoints[waypoints.len() - 1].clone();
        let mut deduped: Vec<JointConfig> = Vec::with_capacity(waypoints.len());
        for w in waypoints {
            match deduped.last() {
                Some(last) if last.approx_eq(&w, DUPLICATE_TOL) => {}
                _ => deduped.push(w),
            }
        }
        // keep the goal bitwise even if it collapsed onto its predecessor
        if deduped.len() > 1 {
            *deduped.last_mut().unwrap() = goal;
        }
        Ok(Path { waypoints: deduped })
    }

    pub fn waypoints(&self) -> &[JointConfig] {
        &self.waypoints
    }

    pub fn into_waypoints(self) -> Vec<JointConfig> {
        self.waypoints
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.waypoints[0].dim()
    }

    pub fn first(&self) -> &JointConfig {
        &self.waypoints[0]
    }

    pub fn last(&self) -> &JointConfig {
        self.waypoints.last().expect("path is never empty")
    }

    /// Sum of Manhattan edge lengths.
    pub fn l1_length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].l1_distance(&w[1])).sum()
    }
}

impl TryFrom<PathRepr> for Path {
    type Error = Error;

    fn try_from(r: PathRepr) -> Result<Self> {
        Path::new(r.waypoints)
    }
}

impl From<Path> for PathRepr {
    fn from(p: Path) -> Self {
        PathRepr { waypoints: p.waypoints }
    }
}
