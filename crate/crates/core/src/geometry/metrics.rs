//! Shape comparison metrics: voxel IoU and Chamfer distance, plus the surface
//! sampler that feeds the latter.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{add, dist2, scale, sub, Aabb, Point3, SurfaceMesh, VoxelGrid};
use crate::error::{Error, Result};

/// `|a ∧ b| / |a ∨ b|`, with 1.0 when both grids are empty.
pub fn voxel_iou(a: &VoxelGrid, b: &VoxelGrid) -> Result<f64> {
    if !a.lattice.same_as(&b.lattice) || a.occupancy.len() != b.occupancy.len() {
        return Err(Error::LatticeMismatch(format!("{:?} vs {:?}", a.lattice, b.lattice)));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.occupancy.iter().zip(&b.occupancy) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Symmetric mean of squared nearest-neighbour distances:
/// `mean_a min_b |a-b|² + mean_b min_a |a-b|²`.
pub fn chamfer_distance(a: &[Point3], b: &[Point3]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("chamfer distance needs two non-empty point sets".into()));
    }
    Ok(mean_nearest_dist2(a, b) + mean_nearest_dist2(b, a))
}

fn mean_nearest_dist2(from: &[Point3], to: &[Point3]) -> f64 {
    let index = PointGrid::new(to);
    let mins: Vec<f64> = from.par_iter().map(|&p| index.nearest_dist2(p)).collect();
    mins.iter().sum::<f64>() / from.len() as f64
}

/// Uniform hash grid for exact nearest-neighbour queries.
struct PointGrid<'a> {
    points: &'a [Point3],
    origin: Point3,
    cell: f64,
    dims: [i64; 3],
    buckets: HashMap<[i64; 3], Vec<u32>>,
}

impl<'a> PointGrid<'a> {
    fn new(points: &'a [Point3]) -> Self {
        let bb = Aabb::from_points(points).unwrap();
        let e = bb.extent();
        let longest = e[0].max(e[1]).max(e[2]);
        // ~2 points per cell on average for surface-like sets
        let per_axis = ((points.len() as f64 / 2.0).sqrt().ceil()).max(1.0);
        let cell = if longest > 0.0 { longest / per_axis } else { 1.0 };
        let dims = [0, 1, 2].map(|a| ((e[a] / cell).floor() as i64 + 1).max(1));
        let mut grid = PointGrid { points, origin: bb.min, cell, dims, buckets: HashMap::new() };
        for (i, &p) in points.iter().enumerate() {
            let key = grid.key(p);
            grid.buckets.entry(key).or_default().push(i as u32);
        }
        grid
    }

    fn key(&self, p: Point3) -> [i64; 3] {
        [0, 1, 2].map(|a| (((p[a] - self.origin[a]) / self.cell).floor() as i64).clamp(0, self.dims[a] - 1))
    }

    fn nearest_dist2(&self, p: Point3) -> f64 {
        let c = self.key(p);
        let mut best = f64::INFINITY;
        let max_ring = self.dims.iter().copied().max().unwrap();
        for r in 0..=max_ring {
            // cells in ring r are at least (r - 1) cells away from p's cell boundary
            if r >= 1 {
                let reach = (r - 1) as f64 * self.cell;
                if reach * reach > best {
                    break;
                }
            }
            for dx in -r..=r {
                for dy in -r..=r {
                    for dz in -r..=r {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                            continue;
                        }
                        let key = [c[0] + dx, c[1] + dy, c[2] + dz];
                        if let Some(ids) = self.buckets.get(&key) {
                            for &i in ids {
                                let d = dist2(p, self.points[i as usize]);
                                if d < best {
                                    best = d;
                                }
                            }
                        }
                    }
                }
            }
        }
        best
    }
}

/// `n` points drawn area-uniformly from the triangles; deterministic per seed.
pub fn surface_samples(mesh: &SurfaceMesh, n: usize, seed: u64) -> Result<Vec<Point3>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        total += mesh.triangle_area(f);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::Degenerate("surface has zero area".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.random::<f64>() * total;
        let f = cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1);
        let [a, b, c] = mesh.triangle(f);
        let (r1, r2): (f64, f64) = (rng.random(), rng.random());
        let s = r1.sqrt();
        // (1 - s) a + s (1 - r2) b + s r2 c
        let p = add(a, add(scale(sub(b, a), s * (1.0 - r2)), scale(sub(c, a), s * r2)));
        out.push(p);
    }
    Ok(out)
}
