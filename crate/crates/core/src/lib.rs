//! Prior-guided motion planning for single- and dual-arm manipulators.
//!
//! The crate is organised bottom-up:
//!
//! * [`kinematics`]: serial-chain robot model and forward kinematics.
//! * [`collision`]: voxel occupancy grid, oriented boxes and the [`Scene`]
//!   that answers configuration and segment validity queries.
//! * [`fgmm`]: finite Gaussian mixtures over joint space, fitted with
//!   K-means initialised expectation-maximisation.
//! * [`exemplars`]: variance-adaptive collection of collision-free
//!   configurations around a start or goal.
//! * [`planner`]: bidirectional RRT-Connect whose samples mix a mixture prior
//!   with a tree-progress Gaussian.
//! * [`optimizer`]: shortcutting, Douglas-Peucker simplification, joint
//!   reversal refinement and clamped cubic B-spline fitting.
//! * [`bench`]: scenario files, baseline samplers, the seeded benchmark
//!   harness and a flood-fill connectivity oracle.

pub mod bench;
pub mod collision;
mod config;
mod error;
pub mod exemplars;
pub mod fgmm;
pub mod kinematics;
pub mod optimizer;
mod path;
pub mod planner;

pub use collision::{Obb, OccupancyGrid, Scene};
pub use config::JointConfig;
pub use error::{Error, Result};
pub use fgmm::{Dataset, Fgmm};
pub use kinematics::{LinkPoseSet, RobotModel};
pub use path::Path;
pub use planner::{PlanResult, PlannerParams};
