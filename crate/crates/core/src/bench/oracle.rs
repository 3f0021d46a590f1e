use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collision::Scene;
use crate::config::JointConfig;
use crate::error::{Error, Result};

/// Largest joint-space dimension the grid oracle accepts.
pub const ORACLE_MAX_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Connectivity {
    pub cells_per_joint: usize,
    pub free_cells: usize,
    pub components: usize,
    /// Component of each probe's cell; `None` when that cell is blocked.
    pub probe_components: Vec<Option<usize>>,
}

impl Connectivity {
    /// True when every probe sits in one and the same free component.
    pub fn probes_connected(&self) -> bool {
        match self.probe_components.first() {
            Some(Some(c)) => self.probe_components.iter().all(|p| *p == Some(*c)),
            _ => false,
        }
    }
}

/// Splits each joint range into `cells_per_joint` equal cells, marks a cell
/// free when its centre passes `config_is_free`, and labels the
/// 2n-connected free components. Probes are located by the cell that
/// contains them.
pub fn flood_fill_oracle(scene: &Scene, cells_per_joint: usize, probes: &[JointConfig]) -> Result<Connectivity> {
    let dim = scene.dim();
    if dim > ORACLE_MAX_DIM {
        return Err(Error::param(format!(
            "flood-fill oracle supports at most {ORACLE_MAX_DIM} joints, scene has {dim}"
        )));
    }
    if cells_per_joint == 0 {
        return Err(Error::param("cells_per_joint must be >= 1"));
    }
    for p in probes {
        Error::check_dim(dim, p.dim())?;
    }
    let limits = scene.robot().limits().to_vec();
    let n = cells_per_joint;
    let total = n.pow(dim as u32);
    let width: Vec<f64> = limits.iter().map(|[lo, hi]| (hi - lo) / n as f64).collect();
    let coords = |mut idx: usize| -> Vec<usize> {
        (0..dim)
            .map(|_| {
                let c = idx % n;
                idx /= n;
                c
            })
            .collect()
    };
    let free: Vec<bool> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let c = coords(idx);
            let q = JointConfig::from_vec(
                (0..dim)
                    .map(|j| limits[j][0] + (c[j] as f64 + 0.5) * width[j])
                    .collect(),
            );
            scene.config_is_free(&q)
        })
        .collect::<Result<_>>()?;
    let mut label = vec![usize::MAX; total];
    let mut components = 0;
    let mut queue = VecDeque::new();
    for start in 0..total {
        if !free[start] || label[start] != usize::MAX {
            continue;
        }
        label[start] = components;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            let mut stride = 1;
            for c in coords(idx) {
                let mut visit = |next: usize| {
                    if free[next] && label[next] == usize::MAX {
                        label[next] = components;
                        queue.push_back(next);
                    }
                };
                if c > 0 {
                    visit(idx - stride);
                }
                if c + 1 < n {
                    visit(idx + stride);
                }
                stride *= n;
            }
        }
        components += 1;
    }
    let probe_components = probes
        .iter()
        .map(|p| {
            let mut idx = 0;
            let mut stride = 1;
            for j in 0..dim {
                let c = ((p[j] - limits[j][0]) / width[j]).floor().clamp(0.0, (n - 1) as f64) as usize;
                idx += c * stride;
                stride *= n;
            }
            (label[idx] != usize::MAX).then_some(label[idx])
        })
        .collect();
    Ok(Connectivity {
        cells_per_joint: n,
        free_cells: free.iter().filter(|f| **f).count(),
        components,
        probe_components,
    })
}
