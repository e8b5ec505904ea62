//! Regular cubic lattices, occupancy grids and their tetrahedralization.

use std::collections::VecDeque;

use rayon::prelude::*;

use super::bvh::TriangleBvh;
use super::{Point3, SurfaceMesh, TetMesh};
use crate::error::{Error, Result};
use crate::topology;

pub const MIN_RESOLUTION: usize = 1;
pub const MAX_RESOLUTION: usize = 256;

/// `resolution³` points at `origin + (i, j, k) * spacing`, x fastest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    pub origin: Point3,
    pub spacing: f64,
    pub resolution: usize,
}

impl Lattice {
    pub fn new(origin: Point3, spacing: f64, resolution: usize) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidArgument(format!("lattice spacing must be positive, got {spacing}")));
        }
        if resolution == 0 {
            return Err(Error::InvalidArgument("lattice resolution must be at least 1".into()));
        }
        Ok(Lattice { origin, spacing, resolution })
    }

    /// Cell-center lattice of `resolution³` cells tiling the cube
    /// `center ± half_extent`.
    pub fn cell_centers(center: Point3, half_extent: f64, resolution: usize) -> Result<Self> {
        let spacing = 2.0 * half_extent / resolution as f64;
        let origin = [
            center[0] - half_extent + 0.5 * spacing,
            center[1] - half_extent + 0.5 * spacing,
            center[2] - half_extent + 0.5 * spacing,
        ];
        Lattice::new(origin, spacing, resolution)
    }

    /// Cell centers tiling `[-1, 1]³`.
    pub fn unit_cube(resolution: usize) -> Result<Self> {
        Lattice::cell_centers([0.0; 3], 1.0, resolution)
    }

    pub fn len(&self) -> usize {
        self.resolution * self.resolution * self.resolution
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.resolution * (j + self.resolution * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.resolution;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize, k: usize) -> Point3 {
        [
            self.origin[0] + i as f64 * self.spacing,
            self.origin[1] + j as f64 * self.spacing,
            self.origin[2] + k as f64 * self.spacing,
        ]
    }

    pub fn point_at(&self, idx: usize) -> Point3 {
        let [i, j, k] = self.coords(idx);
        self.point(i, j, k)
    }

    /// Exact equality of origin, spacing and resolution.
    pub fn same_as(&self, other: &Lattice) -> bool {
        self == other
    }

    /// Six face neighbours of `idx` that lie inside the lattice.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let [i, j, k] = self.coords(idx);
        let n = self.resolution as isize;
        const OFFSETS: [[isize; 3]; 6] = [[-1, 0, 0], [1, 0, 0], [0, -1, 0], [0, 1, 0], [0, 0, -1], [0, 0, 1]];
        OFFSETS.iter().filter_map(move |o| {
            let (a, b, c) = (i as isize + o[0], j as isize + o[1], k as isize + o[2]);
            if a < 0 || b < 0 || c < 0 || a >= n || b >= n || c >= n {
                None
            } else {
                Some(self.index(a as usize, b as usize, c as usize))
            }
        })
    }
}

/// Dense occupancy over a cell-center lattice; cell `idx` covers
/// `point_at(idx) ± spacing / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    pub lattice: Lattice,
    pub occupancy: Vec<bool>,
}

impl VoxelGrid {
    pub fn empty(lattice: Lattice) -> Self {
        VoxelGrid { occupancy: vec![false; lattice.len()], lattice }
    }

    pub fn from_fn(lattice: Lattice, f: impl Fn(Point3) -> bool + Sync) -> Self {
        let occupancy = (0..lattice.len()).into_par_iter().map(|i| f(lattice.point_at(i))).collect();
        VoxelGrid { lattice, occupancy }
    }

    pub fn resolution(&self) -> usize {
        self.lattice.resolution
    }

    pub fn spacing(&self) -> f64 {
        self.lattice.spacing
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    pub fn is_occupied(&self, i: usize, j: usize, k: usize) -> bool {
        self.occupancy[self.lattice.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: bool) {
        let idx = self.lattice.index(i, j, k);
        self.occupancy[idx] = value;
    }

    pub fn volume(&self) -> f64 {
        self.occupied_count() as f64 * self.lattice.spacing.powi(3)
    }

    /// Occupied cells with at least one unoccupied or out-of-lattice face
    /// neighbour.
    pub fn boundary_layer(&self) -> Vec<bool> {
        let l = &self.lattice;
        let n = l.resolution;
        (0..l.len())
            .map(|idx| {
                if !self.occupancy[idx] {
                    return false;
                }
                let [i, j, k] = l.coords(idx);
                if i == 0 || j == 0 || k == 0 || i + 1 == n || j + 1 == n || k + 1 == n {
                    return true;
                }
                l.neighbors(idx).any(|nb| !self.occupancy[nb])
            })
            .collect()
    }

    /// Occupied cells touching the outside: on the lattice border or next to
    /// an empty cell that is face-connected to the border. Cavity walls are
    /// excluded.
    pub fn exterior_layer(&self) -> Vec<bool> {
        let l = &self.lattice;
        let n = l.resolution;
        let on_border = |idx: usize| {
            let [i, j, k] = l.coords(idx);
            i == 0 || j == 0 || k == 0 || i + 1 == n || j + 1 == n || k + 1 == n
        };
        let mut outside = vec![false; l.len()];
        let mut queue = VecDeque::new();
        for idx in 0..l.len() {
            if !self.occupancy[idx] && on_border(idx) {
                outside[idx] = true;
                queue.push_back(idx);
            }
        }
        while let Some(c) = queue.pop_front() {
            for nb in l.neighbors(c) {
                if !self.occupancy[nb] && !outside[nb] {
                    outside[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
        (0..l.len())
            .map(|idx| self.occupancy[idx] && (on_border(idx) || l.neighbors(idx).any(|nb| outside[nb])))
            .collect()
    }

    /// Number of face-connected (6-neighbour) components of occupied cells.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.occupancy.len()];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.occupancy.len() {
            if !self.occupancy[start] || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(c) = queue.pop_front() {
                for nb in self.lattice.neighbors(c) {
                    if self.occupancy[nb] && !seen[nb] {
                        seen[nb] = true;
                        queue.push_back(nb);
                    }
                }
            }
        }
        count
    }

    /// Closed quad surface of the occupied cells, two outward triangles per
    /// exposed cell face. Diagonal-only contacts produce non-manifold edges.
    pub fn boundary_surface(&self) -> SurfaceMesh {
        let l = &self.lattice;
        let n = l.resolution;
        let corners = CornerIndex::new(n);
        let mut used = vec![u32::MAX; corners.len()];
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        let mut vid = |c: usize, vertices: &mut Vec<Point3>| -> usize {
            if used[c] == u32::MAX {
                used[c] = vertices.len() as u32;
                vertices.push(corners.position(l, c));
            }
            used[c] as usize
        };
        // For each axis direction, the quad corners (as cube-corner bit codes)
        // wound counterclockwise seen from outside.
        const FACES: [([isize; 3], [usize; 4]); 6] = [
            ([-1, 0, 0], [0b000, 0b100, 0b110, 0b010]),
            ([1, 0, 0], [0b001, 0b011, 0b111, 0b101]),
            ([0, -1, 0], [0b000, 0b001, 0b101, 0b100]),
            ([0, 1, 0], [0b010, 0b110, 0b111, 0b011]),
            ([0, 0, -1], [0b000, 0b010, 0b011, 0b001]),
            ([0, 0, 1], [0b100, 0b101, 0b111, 0b110]),
        ];
        for idx in 0..l.len() {
            if !self.occupancy[idx] {
                continue;
            }
            let [i, j, k] = l.coords(idx);
            for (dir, quad) in FACES {
                let (a, b, c) = (i as isize + dir[0], j as isize + dir[1], k as isize + dir[2]);
                let outside = a < 0 || b < 0 || c < 0 || a >= n as isize || b >= n as isize || c >= n as isize;
                if !outside && self.occupancy[l.index(a as usize, b as usize, c as usize)] {
                    continue;
                }
                let q = quad.map(|bits| vid(corners.of_cell(i, j, k, bits), &mut vertices));
                faces.push([q[0], q[1], q[2]]);
                faces.push([q[0], q[2], q[3]]);
            }
        }
        SurfaceMesh { vertices, faces }
    }
}

/// Index of the `(n+1)³` cell-corner lattice.
struct CornerIndex {
    m: usize,
}

impl CornerIndex {
    fn new(n: usize) -> Self {
        CornerIndex { m: n + 1 }
    }

    fn len(&self) -> usize {
        self.m * self.m * self.m
    }

    /// `bits` is the corner code: bit 0 = +x, bit 1 = +y, bit 2 = +z.
    fn of_cell(&self, i: usize, j: usize, k: usize, bits: usize) -> usize {
        let (a, b, c) = (i + (bits & 1), j + ((bits >> 1) & 1), k + ((bits >> 2) & 1));
        a + self.m * (b + self.m * c)
    }

    fn position(&self, l: &Lattice, c: usize) -> Point3 {
        let (a, b, cc) = (c % self.m, (c / self.m) % self.m, c / (self.m * self.m));
        let h = l.spacing;
        [
            l.origin[0] - 0.5 * h + a as f64 * h,
            l.origin[1] - 0.5 * h + b as f64 * h,
            l.origin[2] - 0.5 * h + cc as f64 * h,
        ]
    }
}

/// Voxelizes a watertight surface on the cell-center lattice tiling its
/// bounding cube (`[-1, 1]³` for a normalized mesh). A cell is occupied iff
/// its center is inside.
pub fn voxelize(mesh: &SurfaceMesh, resolution: usize) -> Result<VoxelGrid> {
    let bb = mesh
        .bounding_box()
        .filter(|_| !mesh.is_empty())
        .ok_or_else(|| Error::Degenerate("cannot voxelize an empty mesh".into()))?;
    if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&resolution) {
        return Err(Error::InvalidArgument(format!(
            "voxel resolution {resolution} outside [{MIN_RESOLUTION}, {MAX_RESOLUTION}]"
        )));
    }
    let half = bb.half_extent();
    if !(half > 0.0) {
        return Err(Error::Degenerate("mesh has zero extent".into()));
    }
    voxelize_in(mesh, Lattice::cell_centers(bb.center(), half, resolution)?)
}

/// Voxelizes on a caller-supplied cell-center lattice.
pub fn voxelize_in(mesh: &SurfaceMesh, lattice: Lattice) -> Result<VoxelGrid> {
    if mesh.is_empty() {
        return Err(Error::Degenerate("cannot voxelize an empty mesh".into()));
    }
    require_watertight(mesh)?;
    let bvh = TriangleBvh::new(mesh);
    Ok(VoxelGrid::from_fn(lattice, |p| bvh.contains(p)))
}

pub(crate) fn require_watertight(mesh: &SurfaceMesh) -> Result<()> {
    let (_, watertight) = topology::manifold_watertight_check(mesh);
    if !watertight {
        return Err(Error::NotWatertight("every edge must border exactly two oppositely oriented faces".into()));
    }
    Ok(())
}

/// Kuhn split of the unit cube: one tetrahedron per axis permutation, all
/// sharing the 000–111 diagonal. Identical for every cell, so neighbouring
/// cells induce matching face triangulations.
const KUHN_TETS: [[usize; 4]; 6] = [
    [0b000, 0b001, 0b011, 0b111],
    [0b000, 0b001, 0b101, 0b111],
    [0b000, 0b010, 0b011, 0b111],
    [0b000, 0b010, 0b110, 0b111],
    [0b000, 0b100, 0b101, 0b111],
    [0b000, 0b100, 0b110, 0b111],
];

/// Splits every occupied cell into six tetrahedra over deduplicated lattice
/// corners. Vertices are numbered in corner-lattice order.
pub fn voxel_to_tet(grid: &VoxelGrid) -> Result<TetMesh> {
    let l = &grid.lattice;
    let n = l.resolution;
    let corners = CornerIndex::new(n);
    let mut used = vec![false; corners.len()];
    for idx in 0..l.len() {
        if grid.occupancy[idx] {
            let [i, j, k] = l.coords(idx);
            for bits in 0..8 {
                used[corners.of_cell(i, j, k, bits)] = true;
            }
        }
    }
    let mut remap = vec![u32::MAX; corners.len()];
    let mut vertices = Vec::new();
    for (c, &u) in used.iter().enumerate() {
        if u {
            remap[c] = vertices.len() as u32;
            vertices.push(corners.position(l, c));
        }
    }
    if vertices.is_empty() {
        return Err(Error::Degenerate("voxel grid has no occupied cells".into()));
    }
    let mut tets = Vec::new();
    for idx in 0..l.len() {
        if !grid.occupancy[idx] {
            continue;
        }
        let [i, j, k] = l.coords(idx);
        for kt in KUHN_TETS {
            let mut t = kt.map(|bits| remap[corners.of_cell(i, j, k, bits)] as usize);
            let p = t.map(|v| vertices[v]);
            if super::mesh::tet_signed_volume(&p) < 0.0 {
                t.swap(1, 2);
            }
            tets.push(t);
        }
    }
    TetMesh::new(vertices, tets)
}
