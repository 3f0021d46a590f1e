use rand::Rng;

use crate::collision::Scene;
use crate::config::JointConfig;
use crate::error::Result;
use crate::path::Path;
use crate::planner::{extend, Tree};

/// Random restart-node shortcutting.
///
/// Each of the `iterations` rounds picks two distinct waypoints `i < j`,
/// walks from `q_i` toward `q_j` in `step_size` increments, and splices the
/// walk in when it reaches `q_j` with a strictly smaller Manhattan length than
/// the current `i..=j` stretch.
pub fn shortcut_optimize<R: Rng + ?Sized>(
    scene: &Scene,
    path: &Path,
    iterations: usize,
    rng: &mut R,
    step_size: f64,
    check_resolution: f64,
) -> Result<Path> {
    let mut wps: Vec<JointConfig> = path.waypoints().to_vec();
    for _ in 0..iterations {
        let n = wps.len();
        if n < 3 {
            break;
        }
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let (i, j) = (a.min(b), a.max(b));
        if j == i + 1 {
            continue;
        }
        let old: f64 = wps[i..=j].windows(2).map(|w| w[0].l1_distance(&w[1])).sum();
        let mut tree = Tree::new(wps[i].clone(), wps[j].clone());
        let reached = extend(&mut tree, 0, &wps[j], scene, step_size, check_resolution)?;
        if tree.node(reached) != &wps[j] {
            continue;
        }
        let bridge = tree.branch(reached);
        let new: f64 = bridge.windows(2).map(|w| w[0].l1_distance(&w[1])).sum();
        if new < old {
            wps.splice(i..=j, bridge);
        }
    }
    Path::new(wps)
}

#[cfg(test)]
mod tests {
    use nalgebra::Vector3;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::collision::{Obb, OccupancyGrid, SelfCollision};
    use crate::kinematics::test_models::planar;

    fn q(v: &[f64]) -> JointConfig {
        JointConfig::new(v.to_vec()).unwrap()
    }

    fn zigzag() -> Path {
        Path::new(vec![
            q(&[0.0, 0.0]),
            q(&[1.0, 1.0]),
            q(&[2.0, 0.0]),
            q(&[3.0, 1.0]),
            q(&[4.0, 0.0]),
        ])
        .unwrap()
    }

    #[test]
    fn two_waypoints_unchanged() {
        let scene = Scene::empty(planar(&[1.0, 1.0]));
        let p = Path::new(vec![q(&[0.0, 0.0]), q(&[1.0, 1.0])]).unwrap();
        let out = shortcut_optimize(&scene, &p, 50, &mut ChaCha8Rng::seed_from_u64(0), 0.1, 0.05).unwrap();
        assert_eq!(out, p);
    }

    #[test]
    fn zigzag_collapses_to_chord() {
        let scene = Scene::empty(planar(&[1.0, 1.0]));
        let p = zigzag();
        let out = shortcut_optimize(&scene, &p, 200, &mut ChaCha8Rng::seed_from_u64(1), 0.1, 0.05).unwrap();
        // the straight chord from (0,0) to (4,0) has Manhattan length 4
        assert!(out.l1_length() <= 4.0 + 2.0 * 0.1, "length {}", out.l1_length());
        assert_eq!(out.first(), p.first());
        assert_eq!(out.last(), p.last());
    }

    #[test]
    fn blocked_shortcut_is_rejected() {
        // a post near full reach blocks the straight swing from +0.6 to -0.6;
        // the folded detour never reaches that radius
        let post = Obb::axis_aligned(Vector3::new(1.96, 0.0, 0.0), Vector3::new(0.02, 0.02, 0.2));
        let scene = Scene::new(
            planar(&[1.0, 1.0]),
            OccupancyGrid::default(),
            vec![post],
            0.01,
            SelfCollision::default(),
            None,
        )
        .unwrap();
        let p = Path::new(vec![q(&[0.6, 0.0]), q(&[0.0, 2.5]), q(&[-0.6, 0.0])]).unwrap();
        for w in p.waypoints().windows(2) {
            assert!(scene.segment_is_free(&w[0], &w[1], 0.05).unwrap());
        }
        let out = shortcut_optimize(&scene, &p, 100, &mut ChaCha8Rng::seed_from_u64(2), 0.1, 0.05).unwrap();
        assert_eq!(out, p);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn never_longer(pts in prop::collection::vec(prop::array::uniform2(-3.0..3.0f64), 2..8), seed in 0u64..1000) {
            let post = Obb::axis_aligned(Vector3::new(0.0, 1.2, 0.0), Vector3::new(0.1, 0.1, 0.2));
            let scene = Scene::new(planar(&[1.0, 1.0]), OccupancyGrid::default(), vec![post], 0.01, SelfCollision::default(), None)
                .unwrap();
            let p = Path::new(pts.iter().map(|v| q(v)).collect()).unwrap();
            let out = shortcut_optimize(&scene, &p, 40, &mut ChaCha8Rng::seed_from_u64(seed), 0.1, 0.05).unwrap();
            prop_assert!(out.l1_length() <= p.l1_length() + 1e-9);
            prop_assert_eq!(out.first(), p.first());
            prop_assert_eq!(out.last(), p.last());
        }
    }
}
