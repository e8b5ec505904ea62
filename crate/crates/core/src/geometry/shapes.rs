//! Procedural closed surfaces used as fixtures and for the bundled corpus.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::{Lattice, Point3, SurfaceMesh, VoxelGrid};

/// Axis-aligned box with outward winding, 8 vertices and 12 triangles.
pub fn cuboid(min: Point3, max: Point3) -> SurfaceMesh {
    let v = |bits: usize| -> Point3 {
        [
            if bits & 1 == 0 { min[0] } else { max[0] },
            if bits & 2 == 0 { min[1] } else { max[1] },
            if bits & 4 == 0 { min[2] } else { max[2] },
        ]
    };
    let vertices = (0..8).map(v).collect();
    let quads: [[usize; 4]; 6] = [
        [0b000, 0b100, 0b110, 0b010],
        [0b001, 0b011, 0b111, 0b101],
        [0b000, 0b001, 0b101, 0b100],
        [0b010, 0b110, 0b111, 0b011],
        [0b000, 0b010, 0b011, 0b001],
        [0b100, 0b101, 0b111, 0b110],
    ];
    let mut faces = Vec::with_capacity(12);
    for q in quads {
        faces.push([q[0], q[1], q[2]]);
        faces.push([q[0], q[2], q[3]]);
    }
    SurfaceMesh { vertices, faces }
}

/// Corner tetrahedron `(0,0,0), (1,0,0), (0,1,0), (0,0,1)`.
pub fn tetrahedron() -> SurfaceMesh {
    SurfaceMesh {
        vertices: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        faces: vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
    }
}

pub fn octahedron(radius: f64) -> SurfaceMesh {
    let r = radius;
    SurfaceMesh {
        vertices: vec![[r, 0.0, 0.0], [-r, 0.0, 0.0], [0.0, r, 0.0], [0.0, -r, 0.0], [0.0, 0.0, r], [0.0, 0.0, -r]],
        faces: vec![[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]],
    }
}

/// Subdivided icosahedron projected onto a sphere.
pub fn icosphere(subdivisions: usize, radius: f64) -> SurfaceMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0]);
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    for p in &mut vertices {
        let n = super::norm(*p);
        *p = [p[0] / n * radius, p[1] / n * radius, p[2] / n * radius];
    }
    SurfaceMesh { vertices, faces }
}

/// Ring torus around the z axis.
pub fn torus(major: f64, minor: f64, n_major: usize, n_minor: usize) -> SurfaceMesh {
    let mut vertices = Vec::with_capacity(n_major * n_minor);
    for i in 0..n_major {
        let u = 2.0 * PI * i as f64 / n_major as f64;
        for j in 0..n_minor {
            let v = 2.0 * PI * j as f64 / n_minor as f64;
            let r = major + minor * v.cos();
            vertices.push([r * u.cos(), r * u.sin(), minor * v.sin()]);
        }
    }
    let id = |i: usize, j: usize| (i % n_major) * n_minor + (j % n_minor);
    let mut faces = Vec::with_capacity(2 * n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    SurfaceMesh { vertices, faces }
}

/// Closed cylinder along z with fan-triangulated caps.
pub fn cylinder(radius: f64, half_height: f64, segments: usize) -> SurfaceMesh {
    frustum(radius, radius, half_height, segments)
}

/// Closed cone along z, apex at `+half_height`.
pub fn cone(radius: f64, half_height: f64, segments: usize) -> SurfaceMesh {
    let mut vertices = Vec::with_capacity(segments + 2);
    for s in 0..segments {
        let a = 2.0 * PI * s as f64 / segments as f64;
        vertices.push([radius * a.cos(), radius * a.sin(), -half_height]);
    }
    let apex = vertices.len();
    vertices.push([0.0, 0.0, half_height]);
    let base = vertices.len();
    vertices.push([0.0, 0.0, -half_height]);
    let mut faces = Vec::with_capacity(2 * segments);
    for s in 0..segments {
        let (a, b) = (s, (s + 1) % segments);
        faces.push([a, b, apex]);
        faces.push([b, a, base]);
    }
    SurfaceMesh { vertices, faces }
}

fn frustum(bottom: f64, top: f64, half_height: f64, segments: usize) -> SurfaceMesh {
    let mut vertices = Vec::with_capacity(2 * segments + 2);
    for (r, z) in [(bottom, -half_height), (top, half_height)] {
        for s in 0..segments {
            let a = 2.0 * PI * s as f64 / segments as f64;
            vertices.push([r * a.cos(), r * a.sin(), z]);
        }
    }
    let bc = vertices.len();
    vertices.push([0.0, 0.0, -half_height]);
    let tc = vertices.len();
    vertices.push([0.0, 0.0, half_height]);
    let mut faces = Vec::with_capacity(4 * segments);
    for s in 0..segments {
        let (a, b) = (s, (s + 1) % segments);
        let (c, d) = (a + segments, b + segments);
        faces.push([a, b, d]);
        faces.push([a, d, c]);
        faces.push([b, a, bc]);
        faces.push([c, d, tc]);
    }
    SurfaceMesh { vertices, faces }
}

/// Boundary surface of the cells of an `nx × ny × nz` block (unit cells,
/// origin at zero) for which `keep(i, j, k)` holds.
pub fn voxel_solid(dims: [usize; 3], keep: impl Fn(usize, usize, usize) -> bool) -> SurfaceMesh {
    let n = dims[0].max(dims[1]).max(dims[2]);
    let lattice = Lattice { origin: [0.5; 3], spacing: 1.0, resolution: n };
    let mut grid = VoxelGrid::empty(lattice);
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                if keep(i, j, k) {
                    grid.set(i, j, k, true);
                }
            }
        }
    }
    grid.boundary_surface()
}

/// One-cell-thick slab `(2h+1) × 3 × 1` cells with `h` square holes; genus `h`.
pub fn holed_slab(holes: usize) -> SurfaceMesh {
    let nx = 2 * holes + 1;
    voxel_solid([nx, 3, 1], |i, j, _| !(j == 1 && i % 2 == 1))
}

/// L-shaped bracket of unit cells.
pub fn l_bracket() -> SurfaceMesh {
    voxel_solid([4, 4, 2], |i, j, _| i == 0 || j == 0 || (i == 1 && j < 3) || (j == 1 && i < 3))
}

/// Two blocks joined by a rod one cell thick on a `scale`-times refined
/// lattice.
pub fn barbell(scale: usize) -> SurfaceMesh {
    let s = scale;
    let (nx, ny) = (12 * s, 3 * s);
    let mid = ny / 2;
    voxel_solid([nx, ny, ny], |i, j, k| {
        let block = i < 3 * s || i >= nx - 3 * s;
        let rod = j == mid && k == mid;
        block || rod
    })
}
