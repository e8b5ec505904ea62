use serde::{Deserialize, Serialize};

use super::{cross, dot, norm, sub, Point3};
use crate::error::{Error, Result};

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut bb = Aabb { min: first, max: first };
        for p in it {
            bb.grow(*p);
        }
        Some(bb)
    }

    pub fn grow(&mut self, p: Point3) {
        for a in 0..3 {
            self.min[a] = self.min[a].min(p[a]);
            self.max[a] = self.max[a].max(p[a]);
        }
    }

    pub fn merge(&self, other: &Aabb) -> Aabb {
        let mut out = *self;
        out.grow(other.min);
        out.grow(other.max);
        out
    }

    pub fn center(&self) -> Point3 {
        [0.5 * (self.min[0] + self.max[0]), 0.5 * (self.min[1] + self.max[1]), 0.5 * (self.min[2] + self.max[2])]
    }

    pub fn extent(&self) -> Point3 {
        sub(self.max, self.min)
    }

    /// Half the longest side.
    pub fn half_extent(&self) -> f64 {
        let e = self.extent();
        0.5 * e[0].max(e[1]).max(e[2])
    }

    /// Squared distance from `p` to the box (zero inside).
    pub fn dist2(&self, p: Point3) -> f64 {
        let mut d2 = 0.0;
        for a in 0..3 {
            let d = if p[a] < self.min[a] {
                self.min[a] - p[a]
            } else if p[a] > self.max[a] {
                p[a] - self.max[a]
            } else {
                0.0
            };
            d2 += d * d;
        }
        d2
    }
}

/// Closed or open triangle surface. Faces are vertex-index triples wound
/// counterclockwise when seen from outside.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<Point3>,
    pub faces: Vec<[usize; 3]>,
}

impl SurfaceMesh {
    /// Builds a mesh after checking that every index is in range and no face
    /// repeats a vertex.
    pub fn new(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let count = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &index in f {
                if index >= count {
                    return Err(Error::IndexOutOfRange { face: fi, index, count });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Degenerate(format!("face {fi} repeats a vertex: {f:?}")));
            }
        }
        Ok(SurfaceMesh { vertices, faces })
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn bounding_box(&self) -> Option<Aabb> {
        Aabb::from_points(&self.vertices)
    }

    pub fn triangle(&self, f: usize) -> [Point3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.triangle(f);
        0.5 * norm(cross(sub(b, a), sub(c, a)))
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.triangle_area(f)).sum()
    }

    /// Enclosed volume by the divergence theorem; positive for outward
    /// winding on a closed surface.
    pub fn signed_volume(&self) -> f64 {
        self.faces.iter().map(|&[a, b, c]| dot(self.vertices[a], cross(self.vertices[b], self.vertices[c])) / 6.0).sum()
    }

    /// Concatenates two meshes without welding.
    pub fn merged(&self, other: &SurfaceMesh) -> SurfaceMesh {
        let offset = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut faces = self.faces.clone();
        faces.extend(other.faces.iter().map(|f| [f[0] + offset, f[1] + offset, f[2] + offset]));
        SurfaceMesh { vertices, faces }
    }

    pub fn transformed(&self, t: &NormalizationTransform) -> SurfaceMesh {
        SurfaceMesh { vertices: self.vertices.iter().map(|&p| t.apply(p)).collect(), faces: self.faces.clone() }
    }
}

/// Translation followed by uniform scaling: `p' = (p + translate) * scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationTransform {
    pub translate: Point3,
    pub scale: f64,
}

impl NormalizationTransform {
    pub const IDENTITY: NormalizationTransform = NormalizationTransform { translate: [0.0; 3], scale: 1.0 };

    pub fn apply(&self, p: Point3) -> Point3 {
        [
            (p[0] + self.translate[0]) * self.scale,
            (p[1] + self.translate[1]) * self.scale,
            (p[2] + self.translate[2]) * self.scale,
        ]
    }

    pub fn invert(&self, p: Point3) -> Point3 {
        [
            p[0] / self.scale - self.translate[0],
            p[1] / self.scale - self.translate[1],
            p[2] / self.scale - self.translate[2],
        ]
    }
}

/// Centers the bounding box at the origin and scales uniformly so the longest
/// axis spans `[-1, 1]`.
pub fn normalize(mesh: &SurfaceMesh) -> Result<(SurfaceMesh, NormalizationTransform)> {
    let bb = mesh.bounding_box().ok_or_else(|| Error::Degenerate("cannot normalize an empty mesh".into()))?;
    let half = bb.half_extent();
    if !(half > 0.0) || !half.is_finite() {
        return Err(Error::Degenerate(format!("bounding box has zero extent ({half})")));
    }
    let c = bb.center();
    let transform = NormalizationTransform { translate: [-c[0], -c[1], -c[2]], scale: 1.0 / half };
    Ok((mesh.transformed(&transform), transform))
}

/// Volumetric mesh of linear tetrahedra.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TetMesh {
    pub vertices: Vec<Point3>,
    pub tets: Vec<[usize; 4]>,
}

impl TetMesh {
    /// Builds a tet mesh, enforcing index range, distinct corners and strictly
    /// positive orientation of every element.
    pub fn new(vertices: Vec<Point3>, tets: Vec<[usize; 4]>) -> Result<Self> {
        let count = vertices.len();
        for (ti, t) in tets.iter().enumerate() {
            for &index in t {
                if index >= count {
                    return Err(Error::IndexOutOfRange { face: ti, index, count });
                }
            }
            for i in 0..4 {
                for j in i + 1..4 {
                    if t[i] == t[j] {
                        return Err(Error::Degenerate(format!("tet {ti} repeats a vertex: {t:?}")));
                    }
                }
            }
        }
        let mesh = TetMesh { vertices, tets };
        for ti in 0..mesh.tets.len() {
            let volume = mesh.tet_volume(ti);
            if !(volume > 0.0) {
                return Err(Error::DegenerateElement { element: ti, volume });
            }
        }
        if mesh.tets.is_empty() {
            return Err(Error::Degenerate("tet mesh has no elements".into()));
        }
        Ok(mesh)
    }

    pub fn corners(&self, t: usize) -> [Point3; 4] {
        let [a, b, c, d] = self.tets[t];
        [self.vertices[a], self.vertices[b], self.vertices[c], self.vertices[d]]
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        tet_signed_volume(&self.corners(t))
    }

    pub fn volume(&self) -> f64 {
        (0..self.tets.len()).map(|t| self.tet_volume(t)).sum()
    }

    /// Uniformly scales every vertex about the origin.
    pub fn scaled(&self, s: f64) -> TetMesh {
        TetMesh {
            vertices: self.vertices.iter().map(|p| [p[0] * s, p[1] * s, p[2] * s]).collect(),
            tets: self.tets.clone(),
        }
    }
}

pub(crate) fn tet_signed_volume(p: &[Point3; 4]) -> f64 {
    dot(sub(p[1], p[0]), cross(sub(p[2], p[0]), sub(p[3], p[0]))) / 6.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;

    #[test]
    fn normalize_offset_cube() {
        let cube = shapes::cuboid([2.0; 3], [4.0; 3]);
        let (n, t) = normalize(&cube).unwrap();
        assert_eq!(t.translate, [-3.0; 3]);
        assert_eq!(t.scale, 1.0);
        let bb = n.bounding_box().unwrap();
        assert_eq!(bb.min, [-1.0; 3]);
        assert_eq!(bb.max, [1.0; 3]);
    }

    #[test]
    fn normalize_is_idempotent() {
        let m =
            shapes::icosphere(2, 0.7).transformed(&NormalizationTransform { translate: [0.3, -1.2, 5.0], scale: 3.0 });
        let (once, _) = normalize(&m).unwrap();
        let (twice, t) = normalize(&once).unwrap();
        assert!((t.scale - 1.0).abs() < 1e-12);
        assert!(t.translate.iter().all(|v| v.abs() < 1e-12));
        for (a, b) in once.vertices.iter().zip(&twice.vertices) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normalize_elongated_box() {
        let b = shapes::cuboid([-1.0, -0.5, -0.5], [1.0, 0.5, 0.5])
            .transformed(&NormalizationTransform { translate: [0.0; 3], scale: 4.0 });
        let (n, t) = normalize(&b).unwrap();
        assert!((t.scale - 0.25).abs() < 1e-15);
        let bb = n.bounding_box().unwrap();
        assert_eq!(bb.min, [-1.0, -0.5, -0.5]);
        assert_eq!(bb.max, [1.0, 0.5, 0.5]);
    }

    #[test]
    fn normalize_rejects_point_cloud() {
        let m = SurfaceMesh::new(vec![[1.0; 3]; 3], vec![]).unwrap();
        assert!(matches!(normalize(&m), Err(Error::Degenerate(_))));
        assert!(normalize(&SurfaceMesh::default()).is_err());
    }

    #[test]
    fn face_index_validation() {
        let err = SurfaceMesh::new(vec![[0.0; 3]; 4], vec![[0, 1, 9]]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { index: 9, .. }));
        assert!(SurfaceMesh::new(vec![[0.0; 3]; 4], vec![[0, 1, 1]]).is_err());
    }

    #[test]
    fn tet_orientation_is_enforced() {
        let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let ok = TetMesh::new(v.clone(), vec![[0, 1, 2, 3]]).unwrap();
        assert!((ok.volume() - 1.0 / 6.0).abs() < 1e-15);
        assert!(matches!(TetMesh::new(v, vec![[0, 2, 1, 3]]), Err(Error::DegenerateElement { element: 0, .. })));
    }
}
