use crate::collision::Scene;
use crate::config::JointConfig;
use crate::error::{Error, Result};

/// Sum of absolute joint differences.
pub fn manhattan_distance(a: &JointConfig, b: &JointConfig) -> Result<f64> {
    Error::check_dim(a.dim(), b.dim())?;
    Ok(a.l1_distance(b))
}

/// Search tree rooted at one endpoint and grown toward `target`.
///
/// Tracks the smallest Manhattan distance from any node to the target.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<JointConfig>,
    parents: Vec<Option<usize>>,
    target: JointConfig,
    closest: f64,
}

impl Tree {
    pub fn new(root: JointConfig, target: JointConfig) -> Self {
        let closest = root.l1_distance(&target);
        Tree {
            nodes: vec![root],
            parents: vec![None],
            target,
            closest,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &JointConfig {
        &self.nodes[0]
    }

    pub fn target(&self) -> &JointConfig {
        &self.target
    }

    pub fn node(&self, i: usize) -> &JointConfig {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[JointConfig] {
        &self.nodes
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parents[i]
    }

    /// Minimum Manhattan distance from any node to the target.
    pub fn closest_to_target(&self) -> f64 {
        self.closest
    }

    pub fn push(&mut self, q: JointConfig, parent: usize) -> usize {
        assert!(parent < self.nodes.len(), "parent {parent} out of range");
        self.closest = self.closest.min(q.l1_distance(&self.target));
        self.nodes.push(q);
        self.parents.push(Some(parent));
        self.nodes.len() - 1
    }

    /// Configurations from the root to node `i`, inclusive.
    pub fn branch(&self, i: usize) -> Vec<JointConfig> {
        let mut out = vec![self.nodes[i].clone()];
        let mut cur = i;
        while let Some(p) = self.parents[cur] {
            out.push(self.nodes[p].clone());
            cur = p;
        }
        out.reverse();
        out
    }
}

/// Index of the node closest to `q` in Manhattan distance; ties go to the
/// lowest index.
pub fn nearest_node(tree: &Tree, q: &JointConfig) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, n) in tree.nodes.iter().enumerate() {
        let d = n.l1_distance(q);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Walks from node `near` toward `sample` in steps of at most `step_size`
/// (Euclidean, in radians) along the straight segment, appending every step
/// whose motion is collision-free. Stops at the sample, at the first blocked
/// step, or when a step no longer reduces the Manhattan distance. Returns
/// the index of the last node appended, or `near` if none was.
pub fn extend(
    tree: &mut Tree,
    near: usize,
    sample: &JointConfig,
    scene: &Scene,
    step_size: f64,
    check_resolution: f64,
) -> Result<usize> {
    if !(step_size.is_finite() && step_size > 0.0) {
        return Err(Error::param(format!("step_size must be > 0, got {step_size}")));
    }
    let start = tree.node(near).clone();
    Error::check_dim(start.dim(), sample.dim())?;
    let length = start.l2_distance(sample);
    let mut current = near;
    let mut remaining = start.l1_distance(sample);
    let mut k = 1usize;
    while remaining > 0.0 {
        let t = k as f64 * step_size / length;
        let next = if t >= 1.0 {
            sample.clone()
        } else {
            start.lerp(sample, t)
        };
        let d = next.l1_distance(sample);
        if d >= remaining {
            break;
        }
        if !scene.segment_is_free(tree.node(current), &next, check_resolution)? {
            break;
        }
        current = tree.push(next, current);
        remaining = d;
        k += 1;
    }
    Ok(current)
}
