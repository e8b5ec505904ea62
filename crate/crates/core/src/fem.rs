//! Linear-elastic FEM on 4-node tetrahedra: element matrices and global
//! sparse assembly of the mass and stiffness matrices.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, TetMesh};
use crate::material::MaterialSpec;

/// Lamé parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElasticityModuli {
    pub lambda: f64,
    pub mu: f64,
}

pub fn lame_parameters(youngs_modulus: f64, poisson_ratio: f64) -> Result<ElasticityModuli> {
    let (e, nu) = (youngs_modulus, poisson_ratio);
    if !(e > 0.0 && e.is_finite()) {
        return Err(Error::InvalidArgument(format!("Young's modulus must be positive, got {e}")));
    }
    if !(nu > 0.0 && nu < 0.5) {
        return Err(Error::InvalidArgument(format!("Poisson ratio must lie in (0, 0.5), got {nu}")));
    }
    Ok(ElasticityModuli { lambda: e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), mu: e / (2.0 * (1.0 + nu)) })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassMode {
    #[default]
    Consistent,
    Lumped,
}

/// 12×12 row-major element block; DOF `3a + i` is axis `i` of corner `a`.
pub type ElementMatrix = [[f64; 12]; 12];

/// Volume and shape-function gradients of a linear tet.
fn shape_gradients(x: &[Point3; 4]) -> Result<(f64, [[f64; 3]; 4])> {
    let j = [0, 1, 2].map(|c| [0, 1, 2].map(|r| x[c + 1][r] - x[0][r]));
    // j[c] is column c: edge from corner 0 to corner c+1
    let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) - j[1][0] * (j[0][1] * j[2][2] - j[0][2] * j[2][1])
        + j[2][0] * (j[0][1] * j[1][2] - j[0][2] * j[1][1]);
    let volume = det / 6.0;
    if !(volume > 0.0) || !volume.is_finite() {
        return Err(Error::DegenerateElement { element: 0, volume });
    }
    // Rows of J⁻¹ are the gradients of N1..N3: cofactor rows = cross products of columns.
    let cross =
        |a: [f64; 3], b: [f64; 3]| [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let g1 = cross(j[1], j[2]).map(|v| v / det);
    let g2 = cross(j[2], j[0]).map(|v| v / det);
    let g3 = cross(j[0], j[1]).map(|v| v / det);
    let g0 = [0, 1, 2].map(|i| -(g1[i] + g2[i] + g3[i]));
    Ok((volume, [g0, g1, g2, g3]))
}

/// `K_e = V Bᵀ D B` written out per block:
/// `K[(a,i),(b,j)] = V (λ g_a,i g_b,j + μ g_a,j g_b,i + μ δ_ij g_a·g_b)`.
pub fn element_stiffness(x: &[Point3; 4], moduli: ElasticityModuli) -> Result<ElementMatrix> {
    let (v, g) = shape_gradients(x)?;
    let ElasticityModuli { lambda, mu } = moduli;
    let mut k = [[0.0; 12]; 12];
    for a in 0..4 {
        for b in 0..4 {
            let gab = g[a][0] * g[b][0] + g[a][1] * g[b][1] + g[a][2] * g[b][2];
            for i in 0..3 {
                for j in 0..3 {
                    let mut s = lambda * g[a][i] * g[b][j] + mu * g[a][j] * g[b][i];
                    if i == j {
                        s += mu * gab;
                    }
                    k[3 * a + i][3 * b + j] = v * s;
                }
            }
        }
    }
    // exact symmetry
    for r in 0..12 {
        for c in 0..r {
            let s = 0.5 * (k[r][c] + k[c][r]);
            k[r][c] = s;
            k[c][r] = s;
        }
    }
    Ok(k)
}

pub fn element_mass(x: &[Point3; 4], density: f64, mode: MassMode) -> Result<ElementMatrix> {
    let (v, _) = shape_gradients(x)?;
    let mut m = [[0.0; 12]; 12];
    for a in 0..4 {
        for b in 0..4 {
            let w = match mode {
                MassMode::Consistent => density * v / 20.0 * if a == b { 2.0 } else { 1.0 },
                MassMode::Lumped if a == b => density * v / 4.0,
                MassMode::Lumped => continue,
            };
            for i in 0..3 {
                m[3 * a + i][3 * b + i] = w;
            }
        }
    }
    Ok(m)
}

/// Symmetric sparse matrix; only the lower triangle (`col <= row`) is stored,
/// rows compressed, columns ascending within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct SymCsr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SymCsr {
    /// Builds from lower-triangle triplets; duplicates are summed in input
    /// order, so the result depends only on the triplet sequence.
    pub fn from_lower_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(c <= r && r < n);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        SymCsr { n, row_ptr, col_idx, values }
    }

    pub fn nnz_stored(&self) -> usize {
        self.values.len()
    }

    pub fn lower_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |p| (r, self.col_idx[p], self.values[p]))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let cols = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match cols.binary_search(&c) {
            Ok(p) => self.values[self.row_ptr[r] + p],
            Err(_) => 0.0,
        }
    }

    /// `y = A x` using both triangles.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.n {
            let mut acc = 0.0;
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let (c, v) = (self.col_idx[p], self.values[p]);
                acc += v * x[c];
                if c != r {
                    y[c] += v * x[r];
                }
            }
            y[r] += acc;
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Maximum absolute column sum of the full symmetric matrix.
    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for (r, c, v) in self.lower_entries() {
            col[c] += v.abs();
            if r != c {
                col[r] += v.abs();
            }
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.n, self.n);
        for (r, c, v) in self.lower_entries() {
            d[(r, c)] = v;
            d[(c, r)] = v;
        }
        d
    }

    /// Matrix Market coordinate format, `real symmetric`, 1-based.
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
        let _ = writeln!(s, "{} {} {}", self.n, self.n, self.nnz_stored());
        for (r, c, v) in self.lower_entries() {
            let _ = writeln!(s, "{} {} {:e}", r + 1, c + 1, v);
        }
        s
    }

    pub fn write_matrix_market(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_matrix_market()).map_err(|e| Error::io(path, e))
    }
}

/// Global free-free system for one tet mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct AssembledSystem {
    pub n_dof: usize,
    pub mass: SymCsr,
    pub stiffness: SymCsr,
    /// DOF block `v` belongs to tet-mesh vertex `vertex_map[v]`.
    pub vertex_map: Vec<usize>,
}

/// The six rigid-body fields of a point set: three translations and three
/// infinitesimal rotations about the centroid.
pub fn rigid_body_vectors(vertices: &[Point3]) -> [Vec<f64>; 6] {
    let n = vertices.len() as f64;
    let mut c = [0.0; 3];
    for p in vertices {
        for a in 0..3 {
            c[a] += p[a] / n;
        }
    }
    let mut out: [Vec<f64>; 6] = Default::default();
    for (k, r) in out.iter_mut().enumerate() {
        *r = vertices
            .iter()
            .flat_map(|p| {
                let d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
                match k {
                    0..=2 => {
                        let mut t = [0.0; 3];
                        t[k] = 1.0;
                        t
                    }
                    // ω × d for ω = e_x, e_y, e_z
                    3 => [0.0, -d[2], d[1]],
                    4 => [d[2], 0.0, -d[0]],
                    _ => [-d[1], d[0], 0.0],
                }
            })
            .collect();
    }
    out
}

pub fn assemble(mesh: &TetMesh, material: &MaterialSpec, mass_mode: MassMode) -> Result<AssembledSystem> {
    material.check()?;
    let moduli = lame_parameters(material.youngs_modulus, material.poisson_ratio)?;
    let blocks: Vec<(ElementMatrix, ElementMatrix)> = (0..mesh.tets.len())
        .into_par_iter()
        .map(|e| {
            let x = mesh.corners(e);
            let tag = |err: Error| match err {
                Error::DegenerateElement { volume, .. } => Error::DegenerateElement { element: e, volume },
                other => other,
            };
            let k = element_stiffness(&x, moduli).map_err(tag)?;
            let m = element_mass(&x, material.density, mass_mode).map_err(tag)?;
            Ok((k, m))
        })
        .collect::<Result<_>>()?;

    let n_dof = 3 * mesh.vertices.len();
    let mut kt = Vec::with_capacity(blocks.len() * 78);
    let mut mt = Vec::with_capacity(blocks.len() * 78);
    for (e, (ke, me)) in blocks.iter().enumerate() {
        let tet = mesh.tets[e];
        for r in 0..12 {
            let gr = 3 * tet[r / 3] + r % 3;
            for c in 0..12 {
                let gc = 3 * tet[c / 3] + c % 3;
                if gc > gr {
                    continue;
                }
                kt.push((gr, gc, ke[r][c]));
                if me[r][c] != 0.0 {
                    mt.push((gr, gc, me[r][c]));
                }
            }
        }
    }
    Ok(AssembledSystem {
        n_dof,
        mass: SymCsr::from_lower_triplets(n_dof, mt),
        stiffness: SymCsr::from_lower_triplets(n_dof, kt),
        vertex_map: (0..mesh.vertices.len()).collect(),
    })
}
