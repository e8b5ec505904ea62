use rayon::prelude::*;

use super::bvh::TriangleBvh;
use super::voxel::{require_watertight, Lattice};
use super::SurfaceMesh;
use crate::error::{Error, Result};

/// Signed distance sampled on a lattice; negative inside.
#[derive(Clone, Debug, PartialEq)]
pub struct SdfGrid {
    pub lattice: Lattice,
    pub values: Vec<f64>,
}

impl SdfGrid {
    /// Global minimum (deepest interior value). `None` for an empty grid.
    pub fn s_min(&self) -> Option<f64> {
        self.values.iter().copied().reduce(f64::min)
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.lattice.index(i, j, k)]
    }

    pub fn has_interior(&self) -> bool {
        self.values.iter().any(|&v| v < 0.0)
    }
}

/// Exact unsigned distance to the nearest triangle at every lattice point,
/// signed by the ray-parity inside test.
pub fn signed_distance(mesh: &SurfaceMesh, lattice: Lattice) -> Result<SdfGrid> {
    if mesh.is_empty() {
        return Err(Error::Degenerate("cannot evaluate the SDF of an empty mesh".into()));
    }
    require_watertight(mesh)?;
    let bvh = TriangleBvh::new(mesh);
    let values = (0..lattice.len())
        .into_par_iter()
        .map(|idx| {
            let p = lattice.point_at(idx);
            let d = bvh.closest_dist2(p).sqrt();
            if bvh.contains(p) {
                -d
            } else {
                d
            }
        })
        .collect();
    Ok(SdfGrid { lattice, values })
}
