//! Path post-processing: shortcutting, Douglas-Peucker simplification,
//! joint-reversal refinement and B-spline fitting, applied in that order.

mod bspline;
mod refine;
mod shortcut;
mod simplify;

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use bspline::{check_curve, fit_bspline, second_derivative_jump, BSpline, Trajectory};
pub use refine::{joint_rotation_metrics, joint_rotation_refine, RefineReport, RotationMetrics};
pub use shortcut::shortcut_optimize;
pub use simplify::{douglas_peucker, dp_mask, point_segment_distance, DpMetric};

use crate::collision::{Scene, DEFAULT_CHECK_RESOLUTION};
use crate::error::{Error, Result};
use crate::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerParams {
    pub shortcut_iterations: usize,
    /// Douglas-Peucker threshold; meters in task space, radians in joint space.
    pub dp_threshold: f64,
    /// Reversal bound on `G`, rad/m.
    pub alpha_max: f64,
    pub dp_metric: DpMetric,
    /// Dense samples per B-spline knot span.
    pub spline_samples: usize,
    /// Extension step used while shortcutting.
    pub step_size: f64,
    /// Point-sample resolution for every edge the optimizer creates.
    pub check_resolution: f64,
    /// Also check the sampled curve, failing with `CurveInCollision`.
    pub strict_curve_check: bool,
    pub refine_passes: usize,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        OptimizerParams {
            shortcut_iterations: 200,
            dp_threshold: 0.005,
            alpha_max: PI,
            dp_metric: DpMetric::TaskSpace,
            spline_samples: 10,
            step_size: 0.1,
            check_resolution: DEFAULT_CHECK_RESOLUTION,
            strict_curve_check: false,
            refine_passes: 10,
        }
    }
}

impl OptimizerParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dp_threshold", self.dp_threshold),
            ("alpha_max", self.alpha_max),
            ("step_size", self.step_size),
            ("check_resolution", self.check_resolution),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.spline_samples == 0 {
            return Err(Error::param("spline_samples must be >= 1"));
        }
        Ok(())
    }
}

/// Waypoint counts and Manhattan lengths after each stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMetrics {
    pub raw_nodes: usize,
    pub raw_len_rad: f64,
    pub shortcut_nodes: usize,
    pub shortcut_len_rad: f64,
    pub dp_nodes: usize,
    pub dp_len_rad: f64,
    pub refined_joints: usize,
    pub unresolved: usize,
}

/// Result of the full pipeline, with the intermediate paths kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimized {
    pub shortcut: Path,
    pub simplified: Path,
    pub refined: RefineReport,
    pub trajectory: Trajectory,
    pub metrics: StageMetrics,
}

pub fn optimize<R: Rng + ?Sized>(
    scene: &Scene,
    path: &Path,
    params: &OptimizerParams,
    rng: &mut R,
) -> Result<Optimized> {
    params.validate()?;
    Error::check_dim(scene.dim(), path.dim())?;
    let shortcut = shortcut_optimize(
        scene,
        path,
        params.shortcut_iterations,
        rng,
        params.step_size,
        params.check_resolution,
    )?;
    let simplified = douglas_peucker(
        scene,
        &shortcut,
        params.dp_threshold,
        params.dp_metric,
        params.check_resolution,
    )?;
    let refined = joint_rotation_refine(
        scene,
        &simplified,
        params.alpha_max,
        params.check_resolution,
        params.refine_passes,
    )?;
    let trajectory = if refined.path.len() < 2 {
        // start equals goal: a degenerate segment
        let q = refined.path.first().clone();
        bspline::trajectory_from(&refined.path, vec![q.clone(), q], params.spline_samples)?
    } else {
        fit_bspline(&refined.path, params.spline_samples)?
    };
    if params.strict_curve_check {
        check_curve(scene, &trajectory, params.check_resolution)?;
    }
    let metrics = StageMetrics {
        raw_nodes: path.len(),
        raw_len_rad: path.l1_length(),
        shortcut_nodes: shortcut.len(),
        shortcut_len_rad: shortcut.l1_length(),
        dp_nodes: simplified.len(),
        dp_len_rad: simplified.l1_length(),
        refined_joints: refined.refined_count(),
        unresolved: refined.unresolved.len(),
    };
    Ok(Optimized {
        shortcut,
        simplified,
        refined,
        trajectory,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::config::JointConfig;
    use crate::kinematics::test_models::planar;

    fn q(v: &[f64]) -> JointConfig {
        JointConfig::new(v.to_vec()).unwrap()
    }

    #[test]
    fn straight_path_passes_through() {
        let scene = Scene::empty(planar(&[0.5, 0.5]));
        let p = Path::new(vec![q(&[0.0, 0.0]), q(&[1.0, -0.5])]).unwrap();
        let out = optimize(
            &scene,
            &p,
            &OptimizerParams::default(),
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!(out.shortcut, p);
        assert_eq!(out.simplified, p);
        assert_eq!(out.refined.path, p);
        assert_eq!(out.metrics.refined_joints, 0);
        assert_eq!(out.trajectory.spline.degree(), 1);
        let mid = out.trajectory.spline.eval(0.5);
        assert!((mid[0] - 0.5).abs() < 1e-15 && (mid[1] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn single_waypoint_path() {
        let scene = Scene::empty(planar(&[0.5, 0.5]));
        let p = Path::new(vec![q(&[0.2, 0.1])]).unwrap();
        let out = optimize(
            &scene,
            &p,
            &OptimizerParams::default(),
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!(out.metrics.raw_nodes, 1);
        assert!(out.trajectory.samples.iter().all(|s| s == p.first()));
    }

    #[test]
    fn stage_metrics_are_monotone() {
        let scene = Scene::empty(planar(&[0.5, 0.5]));
        let p = Path::new(
            (0..12)
                .map(|i| q(&[0.1 * i as f64, if i % 2 == 0 { 0.0 } else { 0.3 }]))
                .collect(),
        )
        .unwrap();
        let out = optimize(
            &scene,
            &p,
            &OptimizerParams::default(),
            &mut ChaCha8Rng::seed_from_u64(3),
        )
        .unwrap();
        let m = &out.metrics;
        assert_eq!(m.raw_nodes, 12);
        assert!(m.shortcut_len_rad <= m.raw_len_rad);
        assert!(m.dp_nodes <= m.shortcut_nodes);
        assert_eq!(out.trajectory.samples.first(), Some(p.first()));
        assert_eq!(out.trajectory.samples.last(), Some(p.last()));
    }

    #[test]
    fn rejects_bad_params() {
        let bad = OptimizerParams {
            dp_threshold: 0.0,
            ..OptimizerParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerParams {
            alpha_max: -1.0,
            ..OptimizerParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
