//! Collision-free configurations gathered around a target with an isotropic
//! Gaussian whose standard deviation grows by 10% per attempt and resets once
//! it passes a ceiling.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::collision::Scene;
use crate::config::JointConfig;
use crate::error::{Error, Result};
use crate::fgmm::Dataset;

pub const DEFAULT_M: usize = 500;
pub const DEFAULT_SIGMA_INIT: f64 = 0.0872;
pub const DEFAULT_SIGMA_MAX: f64 = 0.3491;
const SIGMA_GROWTH: f64 = 1.1;
/// Attempt budget per requested sample when none is given.
pub const ATTEMPTS_PER_SAMPLE: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExemplarParams {
    /// Number of configurations to collect.
    pub m: usize,
    pub sigma_init: f64,
    pub sigma_max: f64,
    pub max_attempts: usize,
}

impl Default for ExemplarParams {
    fn default() -> Self {
        ExemplarParams {
            m: DEFAULT_M,
            sigma_init: DEFAULT_SIGMA_INIT,
            sigma_max: DEFAULT_SIGMA_MAX,
            max_attempts: ATTEMPTS_PER_SAMPLE * DEFAULT_M,
        }
    }
}

impl ExemplarParams {
    /// Defaults with `m` samples and a matching attempt budget.
    pub fn with_m(m: usize) -> Self {
        ExemplarParams {
            m,
            max_attempts: ATTEMPTS_PER_SAMPLE * m,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::param("exemplar count m must be >= 1"));
        }
        if !(self.sigma_init.is_finite() && self.sigma_init > 0.0 && self.sigma_init <= self.sigma_max) {
            return Err(Error::param(format!(
                "need 0 < sigma_init <= sigma_max, got {} and {}",
                self.sigma_init, self.sigma_max
            )));
        }
        if !self.sigma_max.is_finite() {
            return Err(Error::param("sigma_max must be finite"));
        }
        if self.max_attempts < self.m {
            return Err(Error::param(format!(
                "max_attempts {} is below m {}",
                self.max_attempts, self.m
            )));
        }
        Ok(())
    }
}

/// Standard-deviation sequence: grow by 10% while at or below the ceiling,
/// otherwise fall back to the initial value.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSchedule {
    sigma: f64,
    init: f64,
    max: f64,
}

impl SigmaSchedule {
    pub fn new(init: f64, max: f64) -> Self {
        SigmaSchedule { sigma: init, init, max }
    }

    pub fn current(&self) -> f64 {
        self.sigma
    }

    pub fn advance(&mut self) {
        self.sigma = if self.sigma <= self.max {
            SIGMA_GROWTH * self.sigma
        } else {
            self.init
        };
    }
}

impl Iterator for SigmaSchedule {
    type Item = f64;

    /// Yields the current value, then advances.
    fn next(&mut self) -> Option<f64> {
        let s = self.sigma;
        self.advance();
        Some(s)
    }
}

#[derive(Debug, Clone)]
pub struct ExemplarRun {
    pub dataset: Dataset,
    pub attempts: usize,
}

impl ExemplarRun {
    pub fn acceptance_rate(&self) -> f64 {
        self.dataset.len() as f64 / self.attempts.max(1) as f64
    }
}

/// Collects `params.m` in-limit, collision-free configurations around
/// `target`.
pub fn collect_exemplars<R: Rng + ?Sized>(
    scene: &Scene,
    target: &JointConfig,
    params: &ExemplarParams,
    rng: &mut R,
) -> Result<Dataset> {
    collect_exemplars_run(scene, target, params, rng).map(|r| r.dataset)
}

/// As [`collect_exemplars`], also reporting the number of attempts.
pub fn collect_exemplars_run<R: Rng + ?Sized>(
    scene: &Scene,
    target: &JointConfig,
    params: &ExemplarParams,
    rng: &mut R,
) -> Result<ExemplarRun> {
    params.validate()?;
    if !scene.config_is_free(target)? {
        return Err(Error::TargetInCollision);
    }
    let robot = scene.robot();
    let mut schedule = SigmaSchedule::new(params.sigma_init, params.sigma_max);
    let mut points = Vec::with_capacity(params.m);
    let mut attempts = 0;
    while points.len() < params.m {
        if attempts == params.max_attempts {
            return Err(Error::ExemplarBudgetExhausted {
                accepted: points.len(),
                attempts,
                rate: points.len() as f64 / attempts as f64,
            });
        }
        attempts += 1;
        let sigma = schedule.next().expect("schedule is endless");
        let q = JointConfig::from_vec(
            target
                .iter()
                .map(|t| t + sigma * rng.sample::<f64, _>(StandardNormal))
                .collect(),
        );
        if robot.within_limits(&q) && scene.config_is_free(&q)? {
            points.push(q);
        }
    }
    Ok(ExemplarRun {
        dataset: Dataset::new(points)?,
        attempts,
    })
}
