use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::JointConfig;
use crate::error::{Error, Result};
use crate::planner::{SampleContext, Sampler};

/// Default goal probability of the goal-bias baseline.
pub const DEFAULT_P_GOAL: f64 = 0.05;

/// One independent uniform draw per joint inside its limits.
pub fn uniform_sampling<R: Rng + ?Sized>(limits: &[[f64; 2]], rng: &mut R) -> JointConfig {
    JointConfig::from_vec(
        limits
            .iter()
            .map(|[lo, hi]| lo + (hi - lo) * rng.random::<f64>())
            .collect(),
    )
}

/// `q_goal` with probability `p_goal`, else a uniform draw.
pub fn goal_bias_sampling<R: Rng + ?Sized>(
    limits: &[[f64; 2]],
    q_goal: &JointConfig,
    p_goal: f64,
    rng: &mut R,
) -> Result<JointConfig> {
    if !(0.0..=1.0).contains(&p_goal) {
        return Err(Error::param(format!("p_goal must lie in [0, 1], got {p_goal}")));
    }
    Error::check_dim(limits.len(), q_goal.dim())?;
    // the coin is always drawn so the stream does not depend on p_goal's value
    if rng.random::<f64>() < p_goal {
        Ok(q_goal.clone())
    } else {
        Ok(uniform_sampling(limits, rng))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct UniformSampler;

impl Sampler for UniformSampler {
    fn sample<R: Rng + ?Sized>(&mut self, ctx: &SampleContext<'_>, rng: &mut R) -> Result<JointConfig> {
        Ok(uniform_sampling(ctx.limits, rng))
    }
}

/// Biased toward the active tree's target, which is the goal for the start
/// tree and the start for the goal tree.
#[derive(Debug, Clone, Copy)]
pub struct GoalBiasSampler {
    pub p_goal: f64,
}

impl Default for GoalBiasSampler {
    fn default() -> Self {
        GoalBiasSampler { p_goal: DEFAULT_P_GOAL }
    }
}

impl Sampler for GoalBiasSampler {
    fn sample<R: Rng + ?Sized>(&mut self, ctx: &SampleContext<'_>, rng: &mut R) -> Result<JointConfig> {
        goal_bias_sampling(ctx.limits, ctx.target, self.p_goal, rng)
    }
}

/// Sampling strategy selectable from the command line and the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Uniform,
    GoalBias,
    Prior,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 3] = [SamplerKind::Uniform, SamplerKind::GoalBias, SamplerKind::Prior];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Uniform => "uniform",
            SamplerKind::GoalBias => "goal-bias",
            SamplerKind::Prior => "prior",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SamplerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param(format!("unknown sampler '{s}'; expected uniform, goal-bias or prior")))
    }
}
