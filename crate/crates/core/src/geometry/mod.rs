//! Mesh representations, file formats, voxel lattices, signed distance fields
//! and the geometric comparison metrics.

mod bvh;
pub mod io;
mod mesh;
pub mod metrics;
pub mod sdf;
pub mod shapes;
pub mod voxel;

pub use bvh::TriangleBvh;
pub use io::{load_surface_mesh, MeshFormat};
pub use mesh::{normalize, Aabb, NormalizationTransform, SurfaceMesh, TetMesh};
pub use metrics::{chamfer_distance, surface_samples, voxel_iou};
pub use sdf::{signed_distance, SdfGrid};
pub use voxel::{voxel_to_tet, voxelize, voxelize_in, Lattice, VoxelGrid};

pub type Point3 = [f64; 3];

#[inline]
pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn add(a: Point3, b: Point3) -> Point3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub(crate) fn scale(a: Point3, s: f64) -> Point3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub(crate) fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: Point3, b: Point3) -> Point3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub(crate) fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn dist2(a: Point3, b: Point3) -> f64 {
    let d = sub(a, b);
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}
