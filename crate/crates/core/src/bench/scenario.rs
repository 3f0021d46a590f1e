use std::collections::HashSet;
use std::path::Path as FsPath;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::collision::{
    Attachment, BoxSpec, OccupancyGrid, Scene, SelfCollision, VoxelIndex, DEFAULT_RESOLUTION, DEFAULT_SWEEP_RESOLUTION,
};
use crate::config::JointConfig;
use crate::error::{Error, Result};
use crate::kinematics::RobotModel;
use crate::optimizer::OptimizerParams;
use crate::planner::PlannerParams;

/// Names of the scenarios compiled into the crate.
pub const BUILTIN_SCENARIOS: [&str; 3] = ["narrow_passage_2dof", "lid_6dof", "handover_12dof"];

/// JSON schema describing scenario files.
pub const SCENARIO_SCHEMA: &str = include_str!("../../scenarios/schema.json");

pub fn builtin_json(name: &str) -> Option<&'static str> {
    match name {
        "narrow_passage_2dof" => Some(include_str!("../../scenarios/narrow_passage_2dof.json")),
        "lid_6dof" => Some(include_str!("../../scenarios/lid_6dof.json")),
        "handover_12dof" => Some(include_str!("../../scenarios/handover_12dof.json")),
        _ => None,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub origin: [f64; 3],
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    /// Explicit voxel indices.
    #[serde(default)]
    pub occupied: Vec<VoxelIndex>,
    /// Boxes voxelised at `resolution`: every voxel whose centre lies inside.
    #[serde(default)]
    pub boxes: Vec<BoxSpec>,
}

fn default_resolution() -> f64 {
    DEFAULT_RESOLUTION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SelfCollisionSpec {
    Pairs(Vec<[usize; 2]>),
    Auto { min_gap: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttachmentSpec {
    pub chain: usize,
    pub center: [f64; 3],
    pub half_extents: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub name: String,
    pub q_init: Vec<f64>,
    pub q_goal: Vec<f64>,
}

fn default_sweep_resolution() -> f64 {
    DEFAULT_SWEEP_RESOLUTION
}

/// On-disk scenario layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub robot: RobotModel,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub static_boxes: Vec<BoxSpec>,
    pub d_safe: f64,
    #[serde(default = "default_sweep_resolution")]
    pub sweep_resolution: f64,
    #[serde(default)]
    pub self_collision: Option<SelfCollisionSpec>,
    #[serde(default)]
    pub attachment: Option<AttachmentSpec>,
    pub queries: Vec<QuerySpec>,
    #[serde(default)]
    pub planner: PlannerParams,
    #[serde(default)]
    pub optimizer: OptimizerParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub name: String,
    pub q_init: JointConfig,
    pub q_goal: JointConfig,
}

/// Validated scenario: scene, queries and parameter sets.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub scene: Scene,
    pub queries: Vec<Query>,
    pub planner: PlannerParams,
    pub optimizer: OptimizerParams,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        Scenario::from_file(file)
    }

    pub fn from_path(path: impl AsRef<FsPath>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
        Scenario::from_json(&text)
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let text = builtin_json(name).ok_or_else(|| {
            Error::Scenario(format!(
                "unknown scenario '{name}'; built-ins are {}",
                BUILTIN_SCENARIOS.join(", ")
            ))
        })?;
        Scenario::from_json(text)
    }

    /// A file path if one exists, else a built-in name.
    pub fn load(arg: &str) -> Result<Self> {
        if FsPath::new(arg).exists() {
            Scenario::from_path(arg)
        } else {
            Scenario::builtin(arg)
        }
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        if file.name.trim().is_empty() {
            return Err(Error::Scenario("scenario name is empty".into()));
        }
        let mut grid = OccupancyGrid::new(Vector3::from(file.grid.origin), file.grid.resolution)
            .map_err(|e| Error::Scenario(format!("grid: {e}")))?;
        for v in &file.grid.occupied {
            grid.insert(*v);
        }
        for (i, b) in file.grid.boxes.iter().enumerate() {
            let obb = b.to_obb().map_err(|e| Error::Scenario(format!("grid box {i}: {e}")))?;
            grid.fill_box(&obb);
        }
        let static_boxes = file
            .static_boxes
            .iter()
            .enumerate()
            .map(|(i, b)| b.to_obb().map_err(|e| Error::Scenario(format!("static box {i}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let self_collision = match file.self_collision {
            None => SelfCollision::default(),
            Some(SelfCollisionSpec::Pairs(p)) => SelfCollision::Pairs(p),
            Some(SelfCollisionSpec::Auto { min_gap }) => SelfCollision::Auto { min_gap },
        };
        let attachment = file.attachment.map(|a| Attachment {
            chain: a.chain,
            center: Vector3::from(a.center),
            half_extents: Vector3::from(a.half_extents),
        });
        let scene = Scene::new(file.robot, grid, static_boxes, file.d_safe, self_collision, attachment)
            .and_then(|s| s.with_sweep_resolution(file.sweep_resolution))
            .map_err(|e| Error::Scenario(e.to_string()))?;
        file.planner
            .validate()
            .map_err(|e| Error::Scenario(format!("planner: {e}")))?;
        file.optimizer
            .validate()
            .map_err(|e| Error::Scenario(format!("optimizer: {e}")))?;
        if file.queries.is_empty() {
            return Err(Error::Scenario("scenario has no queries".into()));
        }
        let mut names = HashSet::new();
        let mut queries = Vec::with_capacity(file.queries.len());
        for spec in file.queries {
            if !names.insert(spec.name.clone()) {
                return Err(Error::Scenario(format!("duplicate query name '{}'", spec.name)));
            }
            queries.push(validate_query(&scene, spec)?);
        }
        Ok(Scenario {
            name: file.name,
            description: file.description,
            scene,
            queries,
            planner: file.planner,
            optimizer: file.optimizer,
        })
    }

    pub fn query(&self, name: &str) -> Option<&Query> {
        self.queries.iter().find(|q| q.name == name)
    }
}

fn validate_query(scene: &Scene, spec: QuerySpec) -> Result<Query> {
    let name = spec.name;
    let fail = |what: &str, msg: String| Error::Scenario(format!("query '{name}': {what} {msg}"));
    let mut out = Vec::with_capacity(2);
    for (what, values) in [("q_init", spec.q_init), ("q_goal", spec.q_goal)] {
        let q = JointConfig::new(values).map_err(|e| fail(what, e.to_string()))?;
        scene.robot().check_config(&q).map_err(|e| fail(what, e.to_string()))?;
        if !scene.robot().within_limits(&q) {
            return Err(fail(what, "is outside the joint limits".into()));
        }
        if !scene.config_is_free(&q)? {
            return Err(fail(what, "is in collision".into()));
        }
        out.push(q);
    }
    let q_goal = out.pop().expect("two entries");
    let q_init = out.pop().expect("two entries");
    Ok(Query { name, q_init, q_goal })
}
