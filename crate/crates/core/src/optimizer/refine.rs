use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::collision::Scene;
use crate::config::JointConfig;
use crate::error::Result;
use crate::kinematics::{tcp_positions, RobotModel};
use crate::path::Path;

/// TCP displacements at or below this are treated as no motion.
const STILL_TCP: f64 = 1e-12;

/// Per-waypoint, per-joint rotation rates.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMetrics {
    /// `alpha[i][j] = |Δq_ij| / |Δp_i|` with `Δ` taken from waypoint `i - 1`
    /// and `p` the TCP of the chain owning joint `j`. Row 0 is all zeros.
    /// Infinite when the joint moves but its TCP does not.
    pub alpha: Vec<Vec<f64>>,
    /// `g[i][j] = alpha[i][j] + alpha[i + 1][j]` when the joint reverses
    /// direction at waypoint `i`, else 0. First and last rows are zero.
    pub g: Vec<Vec<f64>>,
}

fn tcps(model: &RobotModel, path: &[JointConfig]) -> Result<Vec<Vec<Vector3<f64>>>> {
    path.iter().map(|w| tcp_positions(model, w)).collect()
}

fn metrics_from(model: &RobotModel, wps: &[JointConfig], tcp: &[Vec<Vector3<f64>>]) -> RotationMetrics {
    let (n, dim) = (wps.len(), model.dim());
    let mut alpha = vec![vec![0.0; dim]; n];
    for i in 1..n {
        for j in 0..dim {
            let dq = (wps[i][j] - wps[i - 1][j]).abs();
            if dq == 0.0 {
                continue;
            }
            let c = model.chain_of_joint(j);
            let dp = (tcp[i][c] - tcp[i - 1][c]).norm();
            alpha[i][j] = if dp > 0.0 { dq / dp } else { f64::INFINITY };
        }
    }
    let mut g = vec![vec![0.0; dim]; n];
    for i in 1..n.saturating_sub(1) {
        for j in 0..dim {
            let before = wps[i][j] - wps[i - 1][j];
            let after = wps[i + 1][j] - wps[i][j];
            if before * after < 0.0 {
                g[i][j] = alpha[i][j] + alpha[i + 1][j];
            }
        }
    }
    RotationMetrics { alpha, g }
}

pub fn joint_rotation_metrics(model: &RobotModel, path: &Path) -> Result<RotationMetrics> {
    let tcp = tcps(model, path.waypoints())?;
    Ok(metrics_from(model, path.waypoints(), &tcp))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineReport {
    pub path: Path,
    /// Distinct `(waypoint, joint)` entries that were modified.
    pub refined: Vec<(usize, usize)>,
    /// Modified entries whose final `G` is below the bound.
    pub resolved: Vec<(usize, usize)>,
    /// Entries whose final `G` still reaches the bound.
    pub unresolved: Vec<(usize, usize)>,
}

impl RefineReport {
    pub fn refined_count(&self) -> usize {
        self.refined.len()
    }
}

/// Drops interior waypoints whose TCPs all coincide with the previous
/// waypoint's, when the bridging edge is free.
fn merge_still_waypoints(scene: &Scene, wps: Vec<JointConfig>, check_resolution: f64) -> Result<Vec<JointConfig>> {
    let tcp = tcps(scene.robot(), &wps)?;
    let n = wps.len();
    let mut out: Vec<JointConfig> = Vec::with_capacity(n);
    let mut out_tcp: Vec<&Vec<Vector3<f64>>> = Vec::with_capacity(n);
    for i in 0..n {
        let still = out_tcp
            .last()
            .is_some_and(|prev| prev.iter().zip(&tcp[i]).all(|(a, b)| (a - b).norm() <= STILL_TCP));
        if still && i + 1 < n {
            let prev = out.last().expect("checked above");
            if scene.segment_is_free(prev, &wps[i + 1], check_resolution)? {
                continue;
            }
        }
        out.push(wps[i].clone());
        out_tcp.push(&tcp[i]);
    }
    Ok(out)
}

/// Removes direction reversals whose `G` reaches `alpha_max` by moving the
/// joint onto the straight line between its neighbours, at the waypoint's
/// TCP arc-length fraction. A change is kept only when both adjacent edges
/// stay free. Passes repeat until nothing changes or `max_passes` is hit.
pub fn joint_rotation_refine(
    scene: &Scene,
    path: &Path,
    alpha_max: f64,
    check_resolution: f64,
    max_passes: usize,
) -> Result<RefineReport> {
    let model = scene.robot();
    let mut wps = merge_still_waypoints(scene, path.waypoints().to_vec(), check_resolution)?;
    let mut refined: Vec<(usize, usize)> = Vec::new();
    for _ in 0..max_passes {
        let mut changed = false;
        let mut tcp = tcps(model, &wps)?;
        let mut metrics = metrics_from(model, &wps, &tcp);
        for i in 1..wps.len().saturating_sub(1) {
            for j in 0..model.dim() {
                let g = metrics.g[i][j];
                if g.is_nan() || g < alpha_max {
                    continue;
                }
                let c = model.chain_of_joint(j);
                let before = (tcp[i][c] - tcp[i - 1][c]).norm();
                let after = (tcp[i + 1][c] - tcp[i][c]).norm();
                let s = if before + after > 0.0 {
                    before / (before + after)
                } else {
                    0.5
                };
                let mut values = wps[i].to_vec();
                values[j] = wps[i - 1][j] + s * (wps[i + 1][j] - wps[i - 1][j]);
                let candidate = JointConfig::new(values)?;
                if scene.segment_is_free(&wps[i - 1], &candidate, check_resolution)?
                    && scene.segment_is_free(&candidate, &wps[i + 1], check_resolution)?
                {
                    wps[i] = candidate;
                    if !refined.contains(&(i, j)) {
                        refined.push((i, j));
                    }
                    changed = true;
                    tcp[i] = tcp_positions(model, &wps[i])?;
                    metrics = metrics_from(model, &wps, &tcp);
                }
            }
        }
        if !changed {
            break;
        }
    }
    let tcp = tcps(model, &wps)?;
    let final_metrics = metrics_from(model, &wps, &tcp);
    let violating = |&(i, j): &(usize, usize)| final_metrics.g[i][j] >= alpha_max;
    let unresolved: Vec<(usize, usize)> = (1..wps.len().saturating_sub(1))
        .flat_map(|i| (0..model.dim()).map(move |j| (i, j)))
        .filter(violating)
        .collect();
    let resolved = refined.iter().copied().filter(|e| !violating(e)).collect();
    refined.sort_unstable();
    Ok(RefineReport {
        path: Path::new(wps)?,
        refined,
        resolved,
        unresolved,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use nalgebra::Vector3;

    use super::*;
    use crate::collision::{Obb, OccupancyGrid, SelfCollision};
    use crate::kinematics::test_models::planar;

    fn q(v: &[f64]) -> JointConfig {
        JointConfig::new(v.to_vec()).unwrap()
    }

    #[test]
    fn monotone_sweep_has_no_reversals() {
        let model = planar(&[1.0, 1.0]);
        let p = Path::new((0..6).map(|i| q(&[0.2 * i as f64, 0.1 * i as f64])).collect()).unwrap();
        let m = joint_rotation_metrics(&model, &p).unwrap();
        assert!(m.g.iter().flatten().all(|g| *g == 0.0));
        let scene = Scene::empty(model);
        let r = joint_rotation_refine(&scene, &p, PI, 0.05, 10).unwrap();
        assert_eq!(r.refined_count(), 0);
        assert_eq!(r.path, p);
    }

    #[test]
    fn hand_evaluated_reversal() {
        // straight planar arm of reach R swinging joint 1 by 0.1 rad: the TCP
        // chord is 2 R sin(0.05), so R = 0.1 / sin(0.05) gives 0.2 m
        let reach = 0.1 / 0.05f64.sin();
        let model = planar(&[reach / 2.0, reach / 2.0]);
        let p = Path::new(vec![q(&[0.0, 0.0]), q(&[0.1, 0.0]), q(&[0.0, 0.0])]).unwrap();
        let m = joint_rotation_metrics(&model, &p).unwrap();
        assert!((m.alpha[1][0] - 0.5).abs() < 1e-12);
        assert!((m.alpha[2][0] - 0.5).abs() < 1e-12);
        assert!((m.g[1][0] - 1.0).abs() < 1e-12);
        assert_eq!(m.g[1][1], 0.0);
    }

    #[test]
    fn zero_change_gives_zero_g() {
        let model = planar(&[1.0, 1.0]);
        let p = Path::new(vec![q(&[0.0, 0.0]), q(&[0.1, 0.0]), q(&[0.1, 0.3])]).unwrap();
        let m = joint_rotation_metrics(&model, &p).unwrap();
        assert!(m.g[1].iter().all(|g| *g == 0.0));
    }

    /// Single-link arm whose joint reverses once, at waypoint 1, with G = 2π.
    fn violating_path() -> (RobotModel, Path) {
        let (up, down) = (0.1f64, 0.08f64);
        // G * r for a unit-radius arm; the chord of an arc of angle a is 2 r sin(a / 2)
        let g_unit = up / (2.0 * (up / 2.0).sin()) + down / (2.0 * (down / 2.0).sin());
        let model = planar(&[g_unit / (2.0 * PI)]);
        let p = Path::new(vec![q(&[0.0]), q(&[up]), q(&[up - down])]).unwrap();
        (model, p)
    }

    #[test]
    fn constructed_violation_is_refined() {
        let (model, p) = violating_path();
        let m = joint_rotation_metrics(&model, &p).unwrap();
        assert!((m.g[1][0] - 2.0 * PI).abs() < 1e-9);
        let scene = Scene::empty(model.clone());
        let r = joint_rotation_refine(&scene, &p, PI, 0.05, 10).unwrap();
        assert_eq!(r.refined, vec![(1, 0)]);
        assert_eq!(r.resolved, vec![(1, 0)]);
        assert!(r.unresolved.is_empty());
        let after = joint_rotation_metrics(&model, &r.path).unwrap();
        assert!(after.g.iter().flatten().all(|g| *g < PI));
        assert_eq!(after.g[1][0], 0.0);
        assert_eq!(r.path.first(), p.first());
        assert_eq!(r.path.last(), p.last());
    }

    #[test]
    fn blocked_refinement_is_reported() {
        // the pan joint reverses while tilt keeps rising; straightening pan at
        // waypoint 1 would swing the rod tip into a box the path never visits
        let model = crate::kinematics::test_models::pan_tilt(1.0);
        let p = Path::new(vec![q(&[0.0, 0.0]), q(&[0.3, 0.6]), q(&[0.0, 1.2])]).unwrap();
        let tip = Vector3::new(0.6f64.cos(), 0.0, -(0.6f64.sin()));
        let block = Obb::axis_aligned(tip * 0.95, Vector3::repeat(0.04));
        let scene = Scene::new(
            model.clone(),
            OccupancyGrid::default(),
            vec![block],
            0.0,
            SelfCollision::default(),
            None,
        )
        .unwrap();
        for w in p.waypoints().windows(2) {
            assert!(scene.segment_is_free(&w[0], &w[1], 0.05).unwrap());
        }
        let alpha_max = 0.5;
        let g = joint_rotation_metrics(&model, &p).unwrap().g[1][0];
        assert!(g >= alpha_max);
        let r = joint_rotation_refine(&scene, &p, alpha_max, 0.05, 10).unwrap();
        assert!(r.refined.is_empty() && r.resolved.is_empty());
        assert_eq!(r.unresolved, vec![(1, 0)]);
        assert_eq!(r.path, p);
        // without the box the same request succeeds
        let r = joint_rotation_refine(&Scene::empty(model), &p, alpha_max, 0.05, 10).unwrap();
        assert_eq!(r.resolved, vec![(1, 0)]);
    }

    #[test]
    fn still_waypoints_are_merged() {
        // joint 2 of a 2-link arm with zero-length second link never moves the TCP
        let mut chain = crate::kinematics::test_models::planar_chain(&[1.0, 0.5]);
        chain.joints[1].origin = [0.0; 3];
        let model = RobotModel::new(vec![chain]).unwrap();
        let p = Path::new(vec![q(&[0.0, 0.0]), q(&[0.2, 0.0]), q(&[0.2, 0.4]), q(&[0.5, 0.4])]).unwrap();
        let m = joint_rotation_metrics(&model, &p).unwrap();
        assert!(m.alpha[2][1].is_infinite());
        let scene = Scene::empty(model);
        let r = joint_rotation_refine(&scene, &p, PI, 0.05, 10).unwrap();
        assert_eq!(r.path.len(), 3);
        assert_eq!(r.path.last(), p.last());
    }
}
