use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the composite joint space of the robot, in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct JointConfig(Vec<f64>);

impl JointConfig {
    /// Builds a configuration, rejecting NaN and infinite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(JointConfig(values))
    }

    pub fn zeros(dim: usize) -> Self {
        JointConfig(vec![0.0; dim])
    }

    /// Wraps values that are finite by construction (interpolation of finite
    /// endpoints, clamped samples).
    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        JointConfig(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// `self + t * (other - self)`.
    pub fn lerp(&self, other: &JointConfig, t: f64) -> JointConfig {
        JointConfig(self.0.iter().zip(&other.0).map(|(a, b)| a + t * (b - a)).collect())
    }

    /// True when every coordinate differs by at most `tol`.
    pub fn approx_eq(&self, other: &JointConfig, tol: f64) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| (a - b).abs() <= tol)
    }

    pub fn l1_distance(&self, other: &JointConfig) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn l2_distance(&self, other: &JointConfig) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn linf_distance(&self, other: &JointConfig) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Clamps each coordinate into its `[lo, hi]` interval.
    pub fn clamped(&self, limits: &[[f64; 2]]) -> JointConfig {
        JointConfig(
            self.0
                .iter()
                .zip(limits)
                .map(|(v, [lo, hi])| v.clamp(*lo, *hi))
                .collect(),
        )
    }

    pub fn within(&self, limits: &[[f64; 2]]) -> bool {
        self.0.len() == limits.len() && self.0.iter().zip(limits).all(|(v, [lo, hi])| *v >= *lo && *v <= *hi)
    }
}

impl Deref for JointConfig {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for JointConfig {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        JointConfig::new(values)
    }
}

impl From<JointConfig> for Vec<f64> {
    fn from(q: JointConfig) -> Vec<f64> {
        q.0
    }
}
