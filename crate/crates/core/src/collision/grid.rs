use std::collections::{HashMap, HashSet};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::Obb;
use crate::error::{Error, Result};

/// Voxels per chunk edge. Chunks only speed up the range query; the grid is
/// still a flat set of occupied voxel indices.
const CHUNK: i32 = 8;

pub type VoxelIndex = [i32; 3];

/// Occupancy voxel map. Voxel `i` covers
/// `[origin + i * resolution, origin + (i + 1) * resolution]` on each axis.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    origin: Vector3<f64>,
    resolution: f64,
    occupied: HashSet<VoxelIndex>,
    chunks: HashMap<VoxelIndex, Vec<VoxelIndex>>,
}

/// Serialized form: sorted index list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRepr {
    #[serde(default)]
    pub origin: [f64; 3],
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default)]
    pub occupied: Vec<VoxelIndex>,
}

pub const DEFAULT_RESOLUTION: f64 = 0.01;

fn default_resolution() -> f64 {
    DEFAULT_RESOLUTION
}

impl Default for OccupancyGrid {
    fn default() -> Self {
        OccupancyGrid::new(Vector3::zeros(), DEFAULT_RESOLUTION).expect("default grid is valid")
    }
}

fn chunk_of(v: &VoxelIndex) -> VoxelIndex {
    [v[0].div_euclid(CHUNK), v[1].div_euclid(CHUNK), v[2].div_euclid(CHUNK)]
}

impl OccupancyGrid {
    pub fn new(origin: Vector3<f64>, resolution: f64) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::param(format!("grid resolution must be > 0, got {resolution}")));
        }
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::param("grid origin must be finite"));
        }
        Ok(OccupancyGrid {
            origin,
            resolution,
            occupied: HashSet::new(),
            chunks: HashMap::new(),
        })
    }

    pub fn origin(&self) -> Vector3<f64> {
        self.origin
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn is_occupied(&self, v: &VoxelIndex) -> bool {
        self.occupied.contains(v)
    }

    pub fn insert(&mut self, v: VoxelIndex) {
        if self.occupied.insert(v) {
            self.chunks.entry(chunk_of(&v)).or_default().push(v);
        }
    }

    /// Occupied voxels in lexicographic order.
    pub fn occupied_sorted(&self) -> Vec<VoxelIndex> {
        let mut v: Vec<_> = self.occupied.iter().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn voxel_center(&self, v: &VoxelIndex) -> Vector3<f64> {
        self.origin + Vector3::new(v[0] as f64 + 0.5, v[1] as f64 + 0.5, v[2] as f64 + 0.5) * self.resolution
    }

    pub fn voxel_box(&self, v: &VoxelIndex) -> Obb {
        Obb::axis_aligned(self.voxel_center(v), Vector3::repeat(0.5 * self.resolution))
    }

    /// Index of the voxel containing world point `p`.
    pub fn voxel_of(&self, p: &Vector3<f64>) -> VoxelIndex {
        let rel = (p - self.origin) / self.resolution;
        [rel.x.floor() as i32, rel.y.floor() as i32, rel.z.floor() as i32]
    }

    /// Marks every voxel whose centre lies inside `b`.
    pub fn fill_box(&mut self, b: &Obb) {
        let h = b.aabb_half_extents();
        let lo = self.voxel_of(&(b.center - h));
        let hi = self.voxel_of(&(b.center + h));
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    let v = [i, j, k];
                    if b.contains_point(&self.voxel_center(&v), 1e-12) {
                        self.insert(v);
                    }
                }
            }
        }
    }

    /// True when `b` touches any occupied voxel cube.
    pub fn intersects(&self, b: &Obb) -> bool {
        if self.occupied.is_empty() {
            return false;
        }
        let h = b.aabb_half_extents();
        // one voxel of slack so faces that merely touch are not lost to rounding
        let lo = self.voxel_of(&(b.center - h)).map(|v| v - 1);
        let hi = self.voxel_of(&(b.center + h)).map(|v| v + 1);
        let in_range = |v: &VoxelIndex| (0..3).all(|k| v[k] >= lo[k] && v[k] <= hi[k]);
        let (clo, chi) = (chunk_of(&lo), chunk_of(&hi));
        let span = |k: usize| (chi[k] - clo[k] + 1) as usize;
        let chunk_hit = |key: &VoxelIndex, voxels: &Vec<VoxelIndex>| {
            let size = CHUNK as f64 * self.resolution;
            let corner = self.origin + Vector3::new(key[0] as f64, key[1] as f64, key[2] as f64) * size;
            let chunk_box = Obb::axis_aligned(corner + Vector3::repeat(0.5 * size), Vector3::repeat(0.5 * size));
            chunk_box.intersects(b) && voxels.iter().any(|v| in_range(v) && self.voxel_box(v).intersects(b))
        };
        if span(0) * span(1) * span(2) <= self.chunks.len() {
            for ci in clo[0]..=chi[0] {
                for cj in clo[1]..=chi[1] {
                    for ck in clo[2]..=chi[2] {
                        let key = [ci, cj, ck];
                        if let Some(voxels) = self.chunks.get(&key) {
                            if chunk_hit(&key, voxels) {
                                return true;
                            }
                        }
                    }
                }
            }
            false
        } else {
            self.chunks
                .iter()
                .any(|(key, voxels)| (0..3).all(|k| key[k] >= clo[k] && key[k] <= chi[k]) && chunk_hit(key, voxels))
        }
    }

    pub fn to_repr(&self) -> GridRepr {
        GridRepr {
            origin: self.origin.into(),
            resolution: self.resolution,
            occupied: self.occupied_sorted(),
        }
    }

    pub fn from_repr(r: &GridRepr) -> Result<Self> {
        let mut g = OccupancyGrid::new(Vector3::from(r.origin), r.resolution)?;
        for v in &r.occupied {
            g.insert(*v);
        }
        Ok(g)
    }
}
