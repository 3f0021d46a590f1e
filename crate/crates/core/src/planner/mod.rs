//! Bidirectional RRT-Connect with prior-guided sampling.
//!
//! Two trees grow from the start and the goal and swap roles every
//! iteration. With probability `p_bias` a sample comes from the mixture
//! fitted around the endpoint the active tree is heading for; otherwise it is
//! drawn from a Gaussian that slides from the tree's root toward its target
//! as the tree gets closer.

mod tree;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use tree::{extend, manhattan_distance, nearest_node, Tree};

use crate::collision::{Scene, DEFAULT_CHECK_RESOLUTION};
use crate::config::JointConfig;
use crate::error::{Error, Result};
use crate::exemplars::{collect_exemplars, ExemplarParams};
use crate::fgmm::{em_fit, Fgmm, DEFAULT_EM_MAX_ITER, DEFAULT_EM_TOL};
use crate::path::Path;

/// Lower bound on the current-information standard deviation, in radians.
pub const SIGMA_FLOOR: f64 = 0.01;
/// Per-joint tolerance for declaring that the two trees met.
pub const CONNECT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerParams {
    /// Maximum Euclidean joint-space length of one extension step.
    pub step_size: f64,
    /// Probability of drawing from the mixture prior.
    pub p_bias: f64,
    pub max_iterations: usize,
    pub check_resolution: f64,
    pub exemplars: ExemplarParams,
    /// Mixture components per endpoint.
    pub k: usize,
    pub em_tol: f64,
    pub em_max_iter: usize,
    pub seed: u64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            step_size: 0.1,
            p_bias: 0.3,
            max_iterations: 50_000,
            check_resolution: DEFAULT_CHECK_RESOLUTION,
            exemplars: ExemplarParams::default(),
            k: 2,
            em_tol: DEFAULT_EM_TOL,
            em_max_iter: DEFAULT_EM_MAX_ITER,
            seed: 0,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::param(format!("step_size must be > 0, got {}", self.step_size)));
        }
        if !(0.0..=1.0).contains(&self.p_bias) {
            return Err(Error::param(format!("p_bias must lie in [0, 1], got {}", self.p_bias)));
        }
        if self.max_iterations == 0 {
            return Err(Error::param("max_iterations must be >= 1"));
        }
        if !(self.check_resolution.is_finite() && self.check_resolution > 0.0) {
            return Err(Error::param(format!(
                "check_resolution must be > 0, got {}",
                self.check_resolution
            )));
        }
        if self.k == 0 {
            return Err(Error::param("k must be >= 1"));
        }
        self.exemplars.validate()
    }
}

/// What a sampler may look at when drawing for the active tree.
#[derive(Debug, Clone, Copy)]
pub struct SampleContext<'a> {
    pub limits: &'a [[f64; 2]],
    /// Root of the tree being grown.
    pub root: &'a JointConfig,
    /// Endpoint that tree is growing toward.
    pub target: &'a JointConfig,
    /// True while the start tree is active.
    pub toward_goal: bool,
    /// Manhattan distance between start and goal.
    pub total_distance: f64,
    /// Smallest Manhattan distance from the active tree to its target.
    pub tree_distance: f64,
}

pub trait Sampler {
    fn sample<R: Rng + ?Sized>(&mut self, ctx: &SampleContext<'_>, rng: &mut R) -> Result<JointConfig>;
}

/// Gaussian whose mean moves from `q_init` to `q_goal` as `d` shrinks from
/// `total` to 0; its standard deviation shrinks from 1 rad to [`SIGMA_FLOOR`].
pub fn current_info_sampling<R: Rng + ?Sized>(
    total: f64,
    d: f64,
    q_init: &JointConfig,
    q_goal: &JointConfig,
    rng: &mut R,
) -> Result<JointConfig> {
    let (mean, sigma) = current_info_params(total, d, q_init, q_goal)?;
    Ok(JointConfig::from_vec(
        mean.iter()
            .map(|m| m + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect(),
    ))
}

/// Mean and standard deviation used by [`current_info_sampling`].
pub fn current_info_params(
    total: f64,
    d: f64,
    q_init: &JointConfig,
    q_goal: &JointConfig,
) -> Result<(JointConfig, f64)> {
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::param(format!("total distance must be > 0, got {total}")));
    }
    if !(d.is_finite() && d >= 0.0) {
        return Err(Error::param(format!("tree distance must be >= 0, got {d}")));
    }
    Error::check_dim(q_init.dim(), q_goal.dim())?;
    let rate = ((total - d) / total).clamp(0.0, 1.0);
    Ok((q_init.lerp(q_goal, rate), (1.0 - rate).max(SIGMA_FLOOR)))
}

/// Mixture prior around each endpoint mixed with current-information
/// sampling.
#[derive(Debug, Clone)]
pub struct PriorGuidedSampler {
    pub init_model: Fgmm,
    pub goal_model: Fgmm,
    pub p_bias: f64,
}

impl PriorGuidedSampler {
    pub fn from_models(init_model: Fgmm, goal_model: Fgmm, p_bias: f64) -> Result<Self> {
        Error::check_dim(init_model.dim(), goal_model.dim())?;
        if !(0.0..=1.0).contains(&p_bias) {
            return Err(Error::param(format!("p_bias must lie in [0, 1], got {p_bias}")));
        }
        Ok(PriorGuidedSampler {
            init_model,
            goal_model,
            p_bias,
        })
    }

    /// Collects exemplars around both endpoints and fits one mixture to each.
    pub fn fit<R: Rng + ?Sized>(
        scene: &Scene,
        q_init: &JointConfig,
        q_goal: &JointConfig,
        params: &PlannerParams,
        rng: &mut R,
    ) -> Result<Self> {
        let mut fit_one = |target: &JointConfig| -> Result<Fgmm> {
            let data = collect_exemplars(scene, target, &params.exemplars, rng)?;
            Ok(em_fit(&data, params.k, params.em_tol, params.em_max_iter, rng)?.model)
        };
        let init_model = fit_one(q_init)?;
        let goal_model = fit_one(q_goal)?;
        PriorGuidedSampler::from_models(init_model, goal_model, params.p_bias)
    }
}

impl Sampler for PriorGuidedSampler {
    fn sample<R: Rng + ?Sized>(&mut self, ctx: &SampleContext<'_>, rng: &mut R) -> Result<JointConfig> {
        let q = if rng.random::<f64>() < self.p_bias {
            let model = if ctx.toward_goal {
                &self.goal_model
            } else {
                &self.init_model
            };
            model.sample(rng)
        } else {
            current_info_sampling(ctx.total_distance, ctx.tree_distance, ctx.root, ctx.target, rng)?
        };
        Ok(q.clamped(ctx.limits))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    /// Start-to-goal waypoints; `None` when the budget ran out.
    pub path: Option<Path>,
    /// Nodes added to both trees, roots excluded.
    pub extended_nodes: usize,
    pub iterations: usize,
    /// Tree-growth wall time.
    pub planning_time_s: f64,
    /// Exemplar collection and mixture fitting wall time.
    pub fit_time_s: f64,
}

impl PlanResult {
    pub fn success(&self) -> bool {
        self.path.is_some()
    }
}

fn check_endpoints(scene: &Scene, q_init: &JointConfig, q_goal: &JointConfig) -> Result<()> {
    for (name, q) in [("q_init", q_init), ("q_goal", q_goal)] {
        scene.robot().check_config(q)?;
        if !scene.robot().within_limits(q) {
            return Err(Error::InvalidEndpoint(format!("{name} is outside the joint limits")));
        }
        if !scene.config_is_free(q)? {
            return Err(Error::InvalidEndpoint(format!("{name} is in collision")));
        }
    }
    Ok(())
}

fn trivial(q: &JointConfig) -> Result<PlanResult> {
    Ok(PlanResult {
        path: Some(Path::new(vec![q.clone()])?),
        extended_nodes: 0,
        iterations: 0,
        planning_time_s: 0.0,
        fit_time_s: 0.0,
    })
}

/// Full pipeline: fit both priors, then grow the trees.
pub fn plan<R: Rng + ?Sized>(
    scene: &Scene,
    q_init: &JointConfig,
    q_goal: &JointConfig,
    params: &PlannerParams,
    rng: &mut R,
) -> Result<PlanResult> {
    params.validate()?;
    check_endpoints(scene, q_init, q_goal)?;
    if q_init == q_goal {
        return trivial(q_init);
    }
    let started = Instant::now();
    let mut sampler = PriorGuidedSampler::fit(scene, q_init, q_goal, params, rng)?;
    let fit_time_s = started.elapsed().as_secs_f64();
    let mut result = plan_with_sampler(scene, q_init, q_goal, params, &mut sampler, rng)?;
    result.fit_time_s = fit_time_s;
    Ok(result)
}

/// [`plan`] seeded from `params.seed`.
pub fn plan_seeded(
    scene: &Scene,
    q_init: &JointConfig,
    q_goal: &JointConfig,
    params: &PlannerParams,
) -> Result<PlanResult> {
    plan(
        scene,
        q_init,
        q_goal,
        params,
        &mut ChaCha8Rng::seed_from_u64(params.seed),
    )
}

/// Grows the two trees with an arbitrary sampler. `params.p_bias` and the
/// fitting fields are not consulted here.
pub fn plan_with_sampler<S: Sampler, R: Rng + ?Sized>(
    scene: &Scene,
    q_init: &JointConfig,
    q_goal: &JointConfig,
    params: &PlannerParams,
    sampler: &mut S,
    rng: &mut R,
) -> Result<PlanResult> {
    params.validate()?;
    check_endpoints(scene, q_init, q_goal)?;
    if q_init == q_goal {
        return trivial(q_init);
    }
    let started = Instant::now();
    let total = q_init.l1_distance(q_goal);
    let limits = scene.robot().limits();
    let mut trees = [
        Tree::new(q_init.clone(), q_goal.clone()),
        Tree::new(q_goal.clone(), q_init.clone()),
    ];
    let mut active = 0;
    let mut meeting = None;
    let mut iterations = 0;
    while iterations < params.max_iterations {
        iterations += 1;
        let passive = 1 - active;
        let sample = {
            let t = &trees[active];
            let ctx = SampleContext {
                limits,
                root: t.root(),
                target: t.target(),
                toward_goal: active == 0,
                total_distance: total,
                tree_distance: t.closest_to_target(),
            };
            sampler.sample(&ctx, rng)?
        };
        let near = nearest_node(&trees[active], &sample);
        let a_reach = extend(
            &mut trees[active],
            near,
            &sample,
            scene,
            params.step_size,
            params.check_resolution,
        )?;
        let a_q = trees[active].node(a_reach).clone();
        let near = nearest_node(&trees[passive], &a_q);
        let b_reach = extend(
            &mut trees[passive],
            near,
            &a_q,
            scene,
            params.step_size,
            params.check_resolution,
        )?;
        if trees[passive].node(b_reach).approx_eq(&a_q, CONNECT_TOL) {
            meeting = Some((active, a_reach, b_reach));
            break;
        }
        active = passive;
    }
    let extended_nodes = trees[0].len() + trees[1].len() - 2;
    let path = match meeting {
        None => None,
        Some((a, a_idx, b_idx)) => {
            let mut waypoints = trees[a].branch(a_idx);
            let mut other = trees[1 - a].branch(b_idx);
            other.pop();
            other.reverse();
            waypoints.extend(other);
            if a == 1 {
                waypoints.reverse();
            }
            Some(Path::new(waypoints)?)
        }
    };
    Ok(PlanResult {
        path,
        extended_nodes,
        iterations,
        planning_time_s: started.elapsed().as_secs_f64(),
        fit_time_s: 0.0,
    })
}
