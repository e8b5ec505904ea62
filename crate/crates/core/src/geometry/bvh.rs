use super::{add, cross, dot, scale, sub, Aabb, Point3, SurfaceMesh};

const LEAF_SIZE: usize = 4;

/// Barycentric band treated as an edge or vertex hit.
const TIE_EPS: f64 = 1e-10;

/// Ray directions tried in order by the parity test; every entry after the
/// first is a fixed irrational-looking tilt so ties from axis-aligned
/// geometry do not repeat.
const RAY_DIRECTIONS: [Point3; 5] = [
    [1.0, 0.0, 0.0],
    [1.0, 0.001_414_213_562_373_1, 0.001_732_050_807_568_9],
    [0.002_236_067_977_499_8, 1.0, -0.002_645_751_311_064_6],
    [-0.003_162_277_660_168_4, 0.003_605_551_275_463_9, 1.0],
    [-1.0, -0.004_123_105_625_617_7, 0.004_358_898_943_540_7],
];

#[derive(Clone, Debug)]
enum Node {
    Leaf { bbox: Aabb, start: usize, end: usize },
    Inner { bbox: Aabb, left: usize, right: usize },
}

impl Node {
    fn bbox(&self) -> &Aabb {
        match self {
            Node::Leaf { bbox, .. } | Node::Inner { bbox, .. } => bbox,
        }
    }
}

/// Median-split bounding volume hierarchy over the triangles of a surface.
#[derive(Clone, Debug)]
pub struct TriangleBvh {
    tris: Vec<[Point3; 3]>,
    nodes: Vec<Node>,
}

impl TriangleBvh {
    pub fn new(mesh: &SurfaceMesh) -> Self {
        let mut tris: Vec<[Point3; 3]> = (0..mesh.faces.len()).map(|f| mesh.triangle(f)).collect();
        let mut nodes = Vec::new();
        if !tris.is_empty() {
            let n = tris.len();
            build(&mut tris, 0, n, &mut nodes);
        }
        TriangleBvh { tris, nodes }
    }

    pub fn is_empty(&self) -> bool {
        self.tris.is_empty()
    }

    /// Squared distance from `p` to the closest triangle.
    pub fn closest_dist2(&self, p: Point3) -> f64 {
        let mut best = f64::INFINITY;
        if self.nodes.is_empty() {
            return best;
        }
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bbox().dist2(p) >= best {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for tri in &self.tris[start..end] {
                        let d = super::dist2(p, closest_point_on_triangle(p, tri));
                        if d < best {
                            best = d;
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[left].bbox().dist2(p);
                    let dr = self.nodes[right].bbox().dist2(p);
                    if dl < dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        best
    }

    /// Ray-parity inside test. A crossing that lands within a tie band of a
    /// triangle edge or vertex makes the count ambiguous; the query is then
    /// retried with the next perturbed direction.
    pub fn contains(&self, p: Point3) -> bool {
        let mut last = false;
        for dir in RAY_DIRECTIONS {
            match self.crossing_parity(p, dir) {
                Some(odd) => return odd,
                None => last = self.crossing_parity_lenient(p, dir),
            }
        }
        last
    }

    /// `None` when any crossing is a tie.
    fn crossing_parity(&self, origin: Point3, dir: Point3) -> Option<bool> {
        let mut count = 0usize;
        let mut tie = false;
        self.visit_ray(origin, dir, |tri| match ray_triangle(origin, dir, tri) {
            RayHit::Miss => {}
            RayHit::Hit => count += 1,
            RayHit::Tie => tie = true,
        });
        if tie {
            None
        } else {
            Some(count % 2 == 1)
        }
    }

    fn crossing_parity_lenient(&self, origin: Point3, dir: Point3) -> bool {
        let mut count = 0usize;
        self.visit_ray(origin, dir, |tri| {
            if !matches!(ray_triangle(origin, dir, tri), RayHit::Miss) {
                count += 1;
            }
        });
        count % 2 == 1
    }

    fn visit_ray(&self, origin: Point3, dir: Point3, mut f: impl FnMut(&[Point3; 3])) {
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if !ray_hits_box(origin, dir, node.bbox()) {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => self.tris[start..end].iter().for_each(&mut f),
                Node::Inner { left, right, .. } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
    }
}

fn tri_bbox(t: &[Point3; 3]) -> Aabb {
    Aabb::from_points(t.iter()).unwrap()
}

fn build(tris: &mut [[Point3; 3]], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let slice = &mut tris[start..end];
    let bbox = slice.iter().map(tri_bbox).reduce(|a, b| a.merge(&b)).unwrap();
    let me = nodes.len();
    if slice.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf { bbox, start, end });
        return me;
    }
    let e = bbox.extent();
    let axis = if e[0] >= e[1] && e[0] >= e[2] {
        0
    } else if e[1] >= e[2] {
        1
    } else {
        2
    };
    let centroid = |t: &[Point3; 3]| t[0][axis] + t[1][axis] + t[2][axis];
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |a, b| centroid(a).total_cmp(&centroid(b)));
    nodes.push(Node::Leaf { bbox, start, end });
    let left = build(tris, start, start + mid, nodes);
    let right = build(tris, start + mid, end, nodes);
    nodes[me] = Node::Inner { bbox, left, right };
    me
}

fn ray_hits_box(o: Point3, d: Point3, b: &Aabb) -> bool {
    let mut tmin: f64 = 0.0;
    let mut tmax = f64::INFINITY;
    for a in 0..3 {
        if d[a] == 0.0 {
            if o[a] < b.min[a] || o[a] > b.max[a] {
                return false;
            }
            continue;
        }
        let inv = 1.0 / d[a];
        let (mut t0, mut t1) = ((b.min[a] - o[a]) * inv, (b.max[a] - o[a]) * inv);
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        tmin = tmin.max(t0);
        tmax = tmax.min(t1);
        if tmin > tmax {
            return false;
        }
    }
    true
}

enum RayHit {
    Miss,
    Hit,
    Tie,
}

/// Möller–Trumbore with a tie band on the barycentric coordinates.
fn ray_triangle(o: Point3, d: Point3, tri: &[Point3; 3]) -> RayHit {
    let e1 = sub(tri[1], tri[0]);
    let e2 = sub(tri[2], tri[0]);
    let pvec = cross(d, e2);
    let det = dot(e1, pvec);
    let scale_ref = super::norm(cross(e1, e2)) * super::norm(d);
    if scale_ref == 0.0 || det.abs() <= 1e-14 * scale_ref {
        // Parallel to the plane: edge-on grazing is resolved by neighbours.
        return RayHit::Miss;
    }
    let inv = 1.0 / det;
    let tvec = sub(o, tri[0]);
    let u = dot(tvec, pvec) * inv;
    let qvec = cross(tvec, e1);
    let v = dot(d, qvec) * inv;
    let t = dot(e2, qvec) * inv;
    let w = 1.0 - u - v;
    if t <= 0.0 || u < -TIE_EPS || v < -TIE_EPS || w < -TIE_EPS {
        return RayHit::Miss;
    }
    if u <= TIE_EPS || v <= TIE_EPS || w <= TIE_EPS {
        return RayHit::Tie;
    }
    RayHit::Hit
}

/// Closest point on a triangle (Voronoi-region walk).
pub(crate) fn closest_point_on_triangle(p: Point3, t: &[Point3; 3]) -> Point3 {
    let (a, b, c) = (t[0], t[1], t[2]);
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(ab, ap);
    let d2 = dot(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = sub(p, b);
    let d3 = dot(ab, bp);
    let d4 = dot(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return add(a, scale(ab, v));
    }
    let cp = sub(p, c);
    let d5 = dot(ab, cp);
    let d6 = dot(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return add(a, scale(ac, w));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return add(b, scale(sub(c, b), w));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    add(a, add(scale(ab, v), scale(ac, w)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;

    #[test]
    fn closest_point_regions() {
        let t = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert_eq!(closest_point_on_triangle([-1.0, -1.0, 0.0], &t), [0.0, 0.0, 0.0]);
        assert_eq!(closest_point_on_triangle([0.25, 0.25, 2.0], &t), [0.25, 0.25, 0.0]);
        assert_eq!(closest_point_on_triangle([0.5, -3.0, 0.0], &t), [0.5, 0.0, 0.0]);
        let p = closest_point_on_triangle([1.0, 1.0, 0.0], &t);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn closest_matches_brute_force() {
        let m = shapes::icosphere(2, 1.0);
        let bvh = TriangleBvh::new(&m);
        for p in [[0.1, 0.2, 0.3], [2.0, -1.0, 0.5], [0.0, 0.0, 0.99], [-0.7, 0.7, 0.1]] {
            let brute = (0..m.faces.len())
                .map(|f| crate::geometry::dist2(p, closest_point_on_triangle(p, &m.triangle(f))))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(bvh.closest_dist2(p), brute);
        }
    }

    #[test]
    fn parity_on_cube_with_diagonal_ties() {
        // Cell centers of a 4^3 lattice hit the face diagonals head-on.
        let cube = shapes::cuboid([-1.0; 3], [1.0; 3]);
        let bvh = TriangleBvh::new(&cube);
        for c in [-0.75, -0.25, 0.25, 0.75] {
            assert!(bvh.contains([c, c, c]));
            assert!(bvh.contains([c, -c, c]));
        }
        assert!(!bvh.contains([1.5, 0.0, 0.0]));
        assert!(!bvh.contains([-1.5, -1.5, -1.5]));
    }
}
