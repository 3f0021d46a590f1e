use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::collision::Scene;
use crate::config::JointConfig;
use crate::error::Result;
use crate::kinematics::tcp_positions;
use crate::path::Path;

/// How Douglas-Peucker measures a waypoint's deviation from a chord.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DpMetric {
    /// Largest distance, over chains, from the TCP to the chord between the
    /// endpoint TCPs. Meters.
    #[default]
    TaskSpace,
    /// Euclidean joint-space distance to the chord. Radians.
    JointSpace,
}

/// Distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let ap: Vec<f64> = a.iter().zip(p).map(|(x, y)| y - x).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let t = if len2 > 0.0 {
        (ab.iter().zip(&ap).map(|(u, v)| u * v).sum::<f64>() / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ap.iter()
        .zip(&ab)
        .map(|(v, u)| (v - t * u) * (v - t * u))
        .sum::<f64>()
        .sqrt()
}

/// Keep-mask of recursive Douglas-Peucker over `n` points, where
/// `deviation(k, a, b)` measures point `k` against the chord `a..b`.
/// Interior points are dropped when the largest deviation is strictly below
/// `threshold`; otherwise the first maximiser is kept and both halves recurse.
pub fn dp_mask(n: usize, threshold: f64, deviation: impl Fn(usize, usize, usize) -> f64) -> Vec<bool> {
    let mut keep = vec![false; n];
    if n == 0 {
        return keep;
    }
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0, n - 1)];
    while let Some((a, b)) = stack.pop() {
        if b < a + 2 {
            continue;
        }
        let (mut best, mut best_d) = (a + 1, f64::NEG_INFINITY);
        for k in a + 1..b {
            let d = deviation(k, a, b);
            if d > best_d {
                best = k;
                best_d = d;
            }
        }
        if best_d >= threshold {
            keep[best] = true;
            stack.push((best, b));
            stack.push((a, best));
        }
    }
    keep
}

/// Douglas-Peucker simplification followed by re-validation: a shortened
/// edge that is no longer collision-free gets its removed waypoints back.
pub fn douglas_peucker(
    scene: &Scene,
    path: &Path,
    threshold: f64,
    metric: DpMetric,
    check_resolution: f64,
) -> Result<Path> {
    let wps = path.waypoints();
    let n = wps.len();
    if n < 3 {
        return Ok(path.clone());
    }
    let keep = match metric {
        DpMetric::JointSpace => dp_mask(n, threshold, |k, a, b| {
            point_segment_distance(&wps[k], &wps[a], &wps[b])
        }),
        DpMetric::TaskSpace => {
            let tcps: Vec<Vec<Vector3<f64>>> = wps
                .iter()
                .map(|w| tcp_positions(scene.robot(), w))
                .collect::<Result<_>>()?;
            dp_mask(n, threshold, |k, a, b| {
                (0..tcps[k].len())
                    .map(|c| {
                        point_segment_distance(tcps[k][c].as_slice(), tcps[a][c].as_slice(), tcps[b][c].as_slice())
                    })
                    .fold(0.0, f64::max)
            })
        }
    };
    let kept: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
    let mut out: Vec<JointConfig> = vec![wps[0].clone()];
    for w in kept.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b > a + 1 && !scene.segment_is_free(&wps[a], &wps[b], check_resolution)? {
            out.extend(wps[a + 1..b].iter().cloned());
        }
        out.push(wps[b].clone());
    }
    Path::new(out)
}
