use serde::{Deserialize, Serialize};

use crate::collision::Scene;
use crate::config::JointConfig;
use crate::error::{Error, Result};
use crate::path::Path;

/// Clamped uniform B-spline on `[0, 1]` with joint-space control points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSpline {
    degree: usize,
    knots: Vec<f64>,
    control: Vec<JointConfig>,
}

impl BSpline {
    /// Degree `min(max_degree, n - 1)`, end knots repeated `degree + 1`
    /// times, interior knots evenly spaced.
    pub fn clamped_uniform(control: Vec<JointConfig>, max_degree: usize) -> Result<Self> {
        let n = control.len();
        if n < 2 {
            return Err(Error::TooFewWaypoints { needed: 2, got: n });
        }
        if max_degree == 0 {
            return Err(Error::param("spline degree must be >= 1"));
        }
        let dim = control[0].dim();
        for c in &control {
            Error::check_dim(dim, c.dim())?;
        }
        let p = max_degree.min(n - 1);
        let spans = n - p;
        let mut knots = vec![0.0; p + 1];
        knots.extend((1..spans).map(|i| i as f64 / spans as f64));
        knots.extend(std::iter::repeat_n(1.0, p + 1));
        Ok(BSpline {
            degree: p,
            knots,
            control,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn control_points(&self) -> &[JointConfig] {
        &self.control
    }

    /// Number of non-empty knot spans.
    pub fn span_count(&self) -> usize {
        self.control.len() - self.degree
    }

    /// Distinct interior knot values.
    pub fn interior_knots(&self) -> &[f64] {
        &self.knots[self.degree + 1..self.control.len()]
    }

    /// Index `k` with `knots[k] <= u < knots[k + 1]`; `u = 1` maps to the
    /// last span.
    fn span(&self, u: f64) -> usize {
        let n = self.control.len();
        if u >= self.knots[n] {
            return n - 1;
        }
        let mut k = self.degree;
        while k + 1 < n && self.knots[k + 1] <= u {
            k += 1;
        }
        k
    }

    /// De Boor evaluation; `u` is clamped into `[0, 1]`.
    pub fn eval(&self, u: f64) -> Vec<f64> {
        let u = u.clamp(0.0, 1.0);
        let p = self.degree;
        let k = self.span(u);
        let t = &self.knots;
        let mut d: Vec<Vec<f64>> = (0..=p).map(|j| self.control[j + k - p].to_vec()).collect();
        for r in 1..=p {
            for j in (r..=p).rev() {
                let lo = t[j + k - p];
                let hi = t[j + 1 + k - r];
                let a = if hi > lo { (u - lo) / (hi - lo) } else { 0.0 };
                let (left, right) = d.split_at_mut(j);
                for (x, y) in right[0].iter_mut().zip(&left[j - 1]) {
                    *x = y + a * (*x - y);
                }
            }
        }
        d.swap_remove(p)
    }

    pub fn eval_config(&self, u: f64) -> JointConfig {
        JointConfig::from_vec(self.eval(u))
    }
}

/// Largest jump, over interior knots and joints, between the second
/// derivatives of the two adjoining polynomial pieces. Each side is measured
/// with central second differences of step `h` taken entirely on that side
/// and extrapolated linearly onto the knot.
pub fn second_derivative_jump(spline: &BSpline, h: f64) -> f64 {
    let d2 = |u: f64| -> Vec<f64> {
        let (a, b, c) = (spline.eval(u - h), spline.eval(u), spline.eval(u + h));
        a.iter()
            .zip(&b)
            .zip(&c)
            .map(|((a, b), c)| (a - 2.0 * b + c) / (h * h))
            .collect()
    };
    let mut worst: f64 = 0.0;
    for &k in spline.interior_knots() {
        let (l1, l2) = (d2(k - h), d2(k - 2.0 * h));
        let (r1, r2) = (d2(k + h), d2(k + 2.0 * h));
        for j in 0..l1.len() {
            let left = 2.0 * l1[j] - l2[j];
            let right = 2.0 * r1[j] - r2[j];
            worst = worst.max((left - right).abs());
        }
    }
    worst
}

/// Path, its spline and a dense sampling of the spline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub path: Path,
    pub spline: BSpline,
    pub samples: Vec<JointConfig>,
}

/// Cubic (or lower, for short paths) clamped B-spline through the path's
/// endpoints with the waypoints as control points, sampled at
/// `samples_per_span` points per knot span.
pub fn fit_bspline(path: &Path, samples_per_span: usize) -> Result<Trajectory> {
    trajectory_from(path, path.waypoints().to_vec(), samples_per_span)
}

pub(crate) fn trajectory_from(path: &Path, control: Vec<JointConfig>, samples_per_span: usize) -> Result<Trajectory> {
    if samples_per_span == 0 {
        return Err(Error::param("spline_samples must be >= 1"));
    }
    let spline = BSpline::clamped_uniform(control, 3)?;
    let ctrl = spline.control_points();
    let (first, last) = (ctrl[0].clone(), ctrl[ctrl.len() - 1].clone());
    let total = samples_per_span * spline.span_count();
    let mut samples: Vec<JointConfig> = (0..total)
        .map(|i| spline.eval_config(i as f64 / total as f64))
        .collect();
    // endpoints exactly as given
    samples[0] = first;
    samples.push(last);
    Ok(Trajectory {
        path: path.clone(),
        spline,
        samples,
    })
}

/// Checks the straight segments between consecutive dense samples.
pub fn check_curve(scene: &Scene, traj: &Trajectory, check_resolution: f64) -> Result<()> {
    let n = traj.samples.len();
    for (i, w) in traj.samples.windows(2).enumerate() {
        if !scene.segment_is_free(&w[0], &w[1], check_resolution)? {
            return Err(Error::CurveInCollision {
                parameter: i as f64 / (n - 1) as f64,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn q(v: &[f64]) -> JointConfig {
        JointConfig::new(v.to_vec()).unwrap()
    }

    /// Cox-de Boor basis recursion, written independently of `eval`.
    fn basis(i: usize, p: usize, u: f64, t: &[f64], last: usize) -> f64 {
        if p == 0 {
            let inside = t[i] <= u && u < t[i + 1];
            // the closed right end belongs to the last non-empty span
            let at_end = u == t[t.len() - 1] && i == last;
            return if inside || at_end { 1.0 } else { 0.0 };
        }
        let mut out = 0.0;
        if t[i + p] > t[i] {
            out += (u - t[i]) / (t[i + p] - t[i]) * basis(i, p - 1, u, t, last);
        }
        if t[i + p + 1] > t[i + 1] {
            out += (t[i + p + 1] - u) / (t[i + p + 1] - t[i + 1]) * basis(i + 1, p - 1, u, t, last);
        }
        out
    }

    fn oracle(s: &BSpline, u: f64) -> Vec<f64> {
        let n = s.control_points().len();
        let last = n - 1;
        let dim = s.control_points()[0].dim();
        let mut out = vec![0.0; dim];
        for i in 0..n {
            let b = basis(i, s.degree(), u, s.knots(), last);
            for (o, c) in out.iter_mut().zip(s.control_points()[i].iter()) {
                *o += b * c;
            }
        }
        out
    }

    #[test]
    fn knot_vectors() {
        let s = BSpline::clamped_uniform((0..6).map(|i| q(&[i as f64])).collect(), 3).unwrap();
        assert_eq!(
            s.knots(),
            &[0.0, 0.0, 0.0, 0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0, 1.0, 1.0, 1.0]
        );
        assert_eq!(s.interior_knots(), &[1.0 / 3.0, 2.0 / 3.0]);
        let s = BSpline::clamped_uniform(vec![q(&[0.0]), q(&[1.0]), q(&[0.0])], 3).unwrap();
        assert_eq!(s.degree(), 2);
        assert!(BSpline::clamped_uniform(vec![q(&[0.0])], 3).is_err());
    }

    #[test]
    fn two_points_give_a_line() {
        let p = Path::new(vec![q(&[0.0, 2.0]), q(&[1.0, -2.0])]).unwrap();
        let t = fit_bspline(&p, 10).unwrap();
        assert_eq!(t.spline.degree(), 1);
        let mid = t.spline.eval(0.5);
        assert!((mid[0] - 0.5).abs() < 1e-15 && mid[1].abs() < 1e-15);
        assert_eq!(t.samples.len(), 11);
    }

    #[test]
    fn constant_control_gives_constant_curve() {
        let s = BSpline::clamped_uniform(vec![q(&[0.3, -0.7]); 5], 3).unwrap();
        for i in 0..=20 {
            let v = s.eval(i as f64 / 20.0);
            assert!((v[0] - 0.3).abs() < 1e-15 && (v[1] + 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_basis_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.random_range(2..9);
            let ctrl: Vec<JointConfig> = (0..n)
                .map(|_| q(&[rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]))
                .collect();
            let s = BSpline::clamped_uniform(ctrl.clone(), 3).unwrap();
            for i in 0..20 {
                let u = i as f64 / 19.0;
                let (a, b) = (s.eval(u), oracle(&s, u));
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() < 1e-12, "u = {u}: {x} vs {y}");
                }
            }
            let (first, last) = (s.eval(0.0), s.eval(1.0));
            for j in 0..2 {
                assert!((first[j] - ctrl[0][j]).abs() < 1e-9);
                assert!((last[j] - ctrl[n - 1][j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cubic_is_twice_continuous() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ctrl: Vec<JointConfig> = (0..9).map(|_| q(&[rng.random_range(-3.0..3.0)])).collect();
        let s = BSpline::clamped_uniform(ctrl, 3).unwrap();
        assert!(second_derivative_jump(&s, 1e-4) < 1e-6);
        // a quadratic is only C1, so the detector must fire
        let quad = BSpline::clamped_uniform((0..5).map(|i| q(&[(i % 2) as f64])).collect(), 2).unwrap();
        assert!(second_derivative_jump(&quad, 1e-4) > 1.0);
    }
}
