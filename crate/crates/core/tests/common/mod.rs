#![allow(dead_code)]

pub mod oracles;

use modalforge::geometry::{shapes, voxel_to_tet, voxelize, Lattice, TetMesh, VoxelGrid};
use modalforge::{MaterialBank, MaterialSpec};

/// Solid `n × n × n` block of unit-spacing voxel cells.
pub fn block(n: usize) -> TetMesh {
    let lattice = Lattice::new([0.5; 3], 1.0, n).unwrap();
    voxel_to_tet(&VoxelGrid::from_fn(lattice, |_| true)).unwrap()
}

pub fn single_tet() -> TetMesh {
    TetMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], vec![[0, 1, 2, 3]]).unwrap()
}

pub fn voxel_sphere(resolution: usize) -> TetMesh {
    voxel_to_tet(&voxelize(&shapes::icosphere(3, 1.0), resolution).unwrap()).unwrap()
}

pub fn voxel_torus(resolution: usize) -> TetMesh {
    voxel_to_tet(&voxelize(&shapes::torus(0.7, 0.3, 32, 16), resolution).unwrap()).unwrap()
}

/// Named fixtures small enough for the dense reference.
pub fn oracle_fixtures() -> Vec<(&'static str, TetMesh)> {
    vec![
        ("single tet", single_tet()),
        ("2x2x2 block", block(2)),
        ("3x3x3 block", block(3)),
        ("voxel sphere", voxel_sphere(6)),
        ("voxel torus", voxel_torus(8)),
    ]
}

pub fn material(name: &str) -> MaterialSpec {
    MaterialBank::builtin().get(name).unwrap().clone()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
