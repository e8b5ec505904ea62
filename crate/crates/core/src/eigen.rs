//! Generalized symmetric eigenproblem `K u = λ M u` for the smallest
//! vibration modes.
//!
//! The sparse solver is a thick-restart block Lanczos iteration on the
//! shift-inverted operator `(K - σM)⁻¹ M` with full M-orthogonalization.
//! A dense Cholesky-reduced solve serves as the reference for small systems.

use std::f64::consts::PI;

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Accum, Mat, MatMut, MatRef, Par, Side};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{AssembledSystem, SymCsr};

/// Solved modes with the rigid-body modes removed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalModel {
    /// (rad/s)², ascending.
    pub eigenvalues: Vec<f64>,
    pub frequencies_hz: Vec<f64>,
    pub rigid_count: usize,
    pub converged: bool,
    pub residuals: Vec<f64>,
    /// Mass-normalized mode shapes, only when requested.
    #[serde(skip)]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
}

impl ModalModel {
    pub fn from_parts(
        eigenvalues: Vec<f64>,
        eigenvectors: Option<Vec<Vec<f64>>>,
        rigid_count: usize,
        converged: bool,
        residuals: Vec<f64>,
    ) -> Self {
        let frequencies_hz = eigenvalues.iter().map(|&l| frequency_hz(l).unwrap_or(0.0)).collect();
        ModalModel { eigenvalues, frequencies_hz, rigid_count, converged, residuals, eigenvectors }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenOptions {
    /// Krylov basis size as a multiple of the number of wanted pairs.
    pub krylov_factor: usize,
    pub block_size: usize,
    pub max_restarts: usize,
    pub residual_tol: f64,
    /// Eigenvalues below `rigid_tol · λ_max` count as rigid-body modes.
    pub rigid_tol: f64,
    /// Explicit negative shift; default is `-shift_factor · tr(K)/tr(M)`.
    pub shift: Option<f64>,
    pub shift_factor: f64,
    pub keep_vectors: bool,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            krylov_factor: 4,
            block_size: 8,
            max_restarts: 200,
            residual_tol: 1e-8,
            rigid_tol: 1e-6,
            shift: None,
            shift_factor: 1e-3,
            keep_vectors: false,
            seed: 0x5eed,
        }
    }
}

pub fn frequency_hz(lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("eigenvalue {lambda} is negative")));
    }
    Ok(lambda.sqrt() / (2.0 * PI))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scales each vector to unit M-norm, then flips it so its largest-magnitude
/// component (first one on ties) is positive.
pub fn mass_normalize(vectors: &[Vec<f64>], mass: &SymCsr) -> Result<Vec<Vec<f64>>> {
    vectors
        .iter()
        .map(|u| {
            let q = dot(u, &mass.mul_vec(u));
            if !(q > 0.0) {
                return Err(Error::InvalidArgument("vector has zero mass norm".into()));
            }
            let mut s = 1.0 / q.sqrt();
            let mut big = 0.0f64;
            let mut sign = 1.0;
            for &v in u {
                if v.abs() > big {
                    big = v.abs();
                    sign = v.signum();
                }
            }
            s *= sign;
            Ok(u.iter().map(|v| v * s).collect())
        })
        .collect()
}

/// `‖Ku - λMu‖ / ((‖K‖₁ + |λ|‖M‖₁) ‖u‖)`.
pub fn relative_residual(system: &AssembledSystem, lambda: f64, u: &[f64]) -> f64 {
    residual_with_norms(system, (system.stiffness.norm1(), system.mass.norm1()), lambda, u)
}

fn residual_with_norms(system: &AssembledSystem, (k_norm, m_norm): (f64, f64), lambda: f64, u: &[f64]) -> f64 {
    let ku = system.stiffness.mul_vec(u);
    let mu = system.mass.mul_vec(u);
    let r: f64 = ku.iter().zip(&mu).map(|(k, m)| (k - lambda * m).powi(2)).sum::<f64>().sqrt();
    let denom = (k_norm + lambda.abs() * m_norm) * norm2(u);
    if denom > 0.0 {
        r / denom
    } else {
        r
    }
}

/// Mean over modes of the squared difference of mel-scaled frequencies, each
/// mel value divided by `mel(16 kHz)`.
pub fn mel_frequency_error(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "frequency lists must be non-empty and equal length ({} vs {})",
            pred.len(),
            truth.len()
        )));
    }
    let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
    let top = mel(16000.0);
    let sum: f64 = pred.iter().zip(truth).map(|(&p, &t)| ((mel(p) - mel(t)) / top).powi(2)).sum();
    Ok(sum / pred.len() as f64)
}

/// Splits `(λ, vector)` pairs sorted ascending into rigid and retained parts.
/// The scale is the largest computed eigenvalue, floored by `tr(K)/tr(M)`
/// so that a window holding only rigid modes is still classified.
fn split_rigid(system: &AssembledSystem, pairs: Vec<(f64, Vec<f64>)>, rigid_tol: f64) -> (usize, Vec<(f64, Vec<f64>)>) {
    let floor = system.stiffness.trace() / system.mass.trace();
    let lambda_max = pairs.iter().map(|p| p.0).fold(floor, f64::max);
    let cut = rigid_tol * lambda_max;
    let rigid = pairs.iter().filter(|p| p.0 < cut).count();
    (rigid, pairs.into_iter().filter(|p| p.0 >= cut).collect())
}

fn finish(
    system: &AssembledSystem,
    mut retained: Vec<(f64, Vec<f64>)>,
    rigid_count: usize,
    k: usize,
    opts: &EigenOptions,
    solver_converged: bool,
) -> Result<ModalModel> {
    retained.truncate(k);
    let vectors: Vec<Vec<f64>> = retained.iter().map(|p| p.1.clone()).collect();
    let vectors = mass_normalize(&vectors, &system.mass)?;
    let eigenvalues: Vec<f64> = retained.iter().map(|p| p.0).collect();
    let norms = (system.stiffness.norm1(), system.mass.norm1());
    let residuals: Vec<f64> =
        eigenvalues.iter().zip(&vectors).map(|(&l, u)| residual_with_norms(system, norms, l, u)).collect();
    let converged = solver_converged && residuals.iter().all(|&r| r <= opts.residual_tol);
    Ok(ModalModel::from_parts(eigenvalues, opts.keep_vectors.then_some(vectors), rigid_count, converged, residuals))
}

/// Largest problem the dense reference accepts.
pub const DENSE_MAX_DOF: usize = 1500;

/// Full dense solve: `M = LLᵀ`, eigendecomposition of `L⁻¹ K L⁻ᵀ`.
pub fn dense_reference_modes(system: &AssembledSystem, k: usize, opts: &EigenOptions) -> Result<ModalModel> {
    let n = system.n_dof;
    if n > DENSE_MAX_DOF {
        return Err(Error::InvalidArgument(format!("{n} DOF exceeds the dense cap of {DENSE_MAX_DOF}")));
    }
    let m = system.mass.to_dense();
    let kd = system.stiffness.to_dense();
    let chol = m.cholesky().ok_or_else(|| Error::Factorization("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv_k = l.solve_lower_triangular(&kd).expect("nonsingular factor");
    let c = l.solve_lower_triangular(&linv_k.transpose()).expect("nonsingular factor");
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let lt = l.transpose();
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|i| {
            let y = eig.eigenvectors.column(i).into_owned();
            let x = lt.solve_upper_triangular(&y).expect("nonsingular factor");
            (eig.eigenvalues[i], x.iter().copied().collect())
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (rigid, retained) = split_rigid(system, pairs, opts.rigid_tol);
    finish(system, retained, rigid, k, opts, true)
}

fn default_shift(system: &AssembledSystem, opts: &EigenOptions) -> Result<f64> {
    let sigma = match opts.shift {
        Some(s) => s,
        None => -opts.shift_factor * system.stiffness.trace() / system.mass.trace(),
    };
    if !(sigma < 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("shift must be negative, got {sigma}")));
    }
    Ok(sigma)
}

/// Sparse `LLᵀ` of `K - σM`.
struct ShiftInvert {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl ShiftInvert {
    fn new(system: &AssembledSystem, sigma: f64) -> Result<Self> {
        let n = system.n_dof;
        let mut trip: Vec<Triplet<usize, usize, f64>> =
            Vec::with_capacity(system.stiffness.nnz_stored() + system.mass.nnz_stored());
        for (r, c, v) in system.stiffness.lower_entries() {
            trip.push(Triplet::new(r, c, v));
        }
        for (r, c, v) in system.mass.lower_entries() {
            trip.push(Triplet::new(r, c, -sigma * v));
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let llt = a.sp_cholesky(Side::Lower).map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(ShiftInvert { llt })
    }

    /// Solves `(K - σM) X = B` for the columns of `B` in place.
    fn solve(&self, b: &mut Mat<f64>) {
        if b.ncols() > 0 {
            self.llt.solve_in_place(b.as_mut());
        }
    }
}

/// `M X` column by column.
fn mass_block(mass: &SymCsr, x: &Mat<f64>) -> Mat<f64> {
    let mut out = Mat::zeros(x.nrows(), x.ncols());
    for j in 0..x.ncols() {
        mass.mul_vec_into(x.col_as_slice(j), out.col_as_slice_mut(j));
    }
    out
}

fn gemm(dst: MatMut<'_, f64>, accum: Accum, lhs: MatRef<'_, f64>, rhs: MatRef<'_, f64>, alpha: f64) {
    matmul(dst, accum, lhs, rhs, alpha, Par::Seq);
}

/// Basis state of the block iteration on `T = (K - σM)⁻¹ M`.
struct Subspace<'a> {
    mass: &'a SymCsr,
    op: &'a ShiftInvert,
    n: usize,
    /// M-orthonormal basis in the first `len` columns.
    v: Mat<f64>,
    /// `T v`.
    tv: Mat<f64>,
    len: usize,
    /// `hᵢⱼ = vᵢᵀ M T vⱼ`.
    h: DMatrix<f64>,
    rng: ChaCha8Rng,
}

impl<'a> Subspace<'a> {
    fn new(system: &'a AssembledSystem, op: &'a ShiftInvert, capacity: usize, seed: u64) -> Self {
        let n = system.n_dof;
        Subspace {
            mass: &system.mass,
            op,
            n,
            v: Mat::zeros(n, capacity),
            tv: Mat::zeros(n, capacity),
            len: 0,
            h: DMatrix::zeros(0, 0),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn random_block(&mut self, b: usize) -> Mat<f64> {
        let mut out = Mat::zeros(self.n, b);
        for j in 0..b {
            for x in out.col_as_slice_mut(j) {
                *x = self.rng.random::<f64>() - 0.5;
            }
        }
        out
    }

    fn basis(&self) -> MatRef<'_, f64> {
        self.v.as_ref().subcols(0, self.len)
    }

    fn m_norm(&self, x: &[f64]) -> f64 {
        dot(x, &self.mass.mul_vec(x)).sqrt()
    }

    /// Two passes of block classical Gram-Schmidt against basis columns
    /// `from..len` in the M inner product.
    fn orthogonalize(&self, c: &mut Mat<f64>, from: usize) {
        if self.len == from {
            return;
        }
        let basis = self.v.as_ref().subcols(from, self.len - from);
        for _ in 0..2 {
            let mc = mass_block(self.mass, c);
            let mut coefs = Mat::zeros(basis.ncols(), c.ncols());
            gemm(coefs.as_mut(), Accum::Replace, basis.transpose(), mc.as_ref(), 1.0);
            gemm(c.as_mut(), Accum::Add, basis, coefs.as_ref(), -1.0);
        }
    }

    /// Appends the M-orthonormalized, independent candidates (at most `room`)
    /// and returns how many were added.
    fn extend(&mut self, mut candidates: Mat<f64>, room: usize) -> usize {
        let start = self.len;
        let limit = (start + room).min(self.n).min(self.v.ncols());
        let before: Vec<f64> = (0..candidates.ncols()).map(|j| self.m_norm(candidates.col_as_slice(j))).collect();
        self.orthogonalize(&mut candidates, 0);
        for j in 0..candidates.ncols() {
            if self.len >= limit {
                break;
            }
            let mut c = Mat::zeros(self.n, 1);
            c.col_as_slice_mut(0).copy_from_slice(candidates.col_as_slice(j));
            let mut reference = before[j];
            let mut from = start;
            for attempt in 0..4 {
                self.orthogonalize(&mut c, from);
                let after = self.m_norm(c.col_as_slice(0));
                if after > 1e-10 * reference && after > 0.0 {
                    let s = 1.0 / after;
                    let dst = self.v.col_as_slice_mut(self.len);
                    for (d, x) in dst.iter_mut().zip(c.col_as_slice(0)) {
                        *d = x * s;
                    }
                    self.len += 1;
                    break;
                }
                if attempt == 3 {
                    break;
                }
                c = self.random_block(1);
                reference = self.m_norm(c.col_as_slice(0));
                from = 0;
            }
        }
        let added = self.len - start;
        if added == 0 {
            return 0;
        }
        let fresh = self.v.as_ref().subcols(start, added).to_owned();
        let mut t = mass_block(self.mass, &fresh);
        self.op.solve(&mut t);
        self.tv.as_mut().subcols_mut(start, added).copy_from(&t);
        let mtv = mass_block(self.mass, &t);
        let mut cols = Mat::zeros(self.len, added);
        gemm(cols.as_mut(), Accum::Replace, self.basis().transpose(), mtv.as_ref(), 1.0);
        let m = self.len;
        let mut h = DMatrix::zeros(m, m);
        h.view_mut((0, 0), (start, start)).copy_from(&self.h.view((0, 0), (start, start)));
        for jj in 0..added {
            let j = start + jj;
            for i in 0..=j {
                // symmetric part of the two computed entries when both exist
                let x = if i >= start && i < j { 0.5 * (cols[(i, jj)] + cols[(j, i - start)]) } else { cols[(i, jj)] };
                h[(i, j)] = x;
                h[(j, i)] = x;
            }
        }
        self.h = h;
        added
    }

    /// Ritz pairs `(θ, y)` sorted by descending θ.
    fn ritz(&self) -> Vec<(f64, Vec<f64>)> {
        let eig = SymmetricEigen::new(self.h.clone());
        let mut out: Vec<(f64, Vec<f64>)> = (0..self.h.nrows())
            .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).iter().copied().collect()))
            .collect();
        out.sort_by(|a, b| b.0.total_cmp(&a.0));
        out
    }

    fn coefficient_matrix(&self, ritz: &[(f64, Vec<f64>)]) -> Mat<f64> {
        Mat::from_fn(self.len, ritz.len(), |i, j| ritz[j].1[i])
    }

    /// `V Y` for the given Ritz coefficient vectors.
    fn ritz_vectors(&self, ritz: &[(f64, Vec<f64>)]) -> Mat<f64> {
        let y = self.coefficient_matrix(ritz);
        let mut x = Mat::zeros(self.n, ritz.len());
        gemm(x.as_mut(), Accum::Replace, self.basis(), y.as_ref(), 1.0);
        x
    }

    /// Replaces the basis by the given Ritz vectors.
    fn restart(&mut self, ritz: &[(f64, Vec<f64>)]) {
        let p = ritz.len();
        let y = self.coefficient_matrix(ritz);
        let mut v = Mat::zeros(self.n, p);
        let mut tv = Mat::zeros(self.n, p);
        gemm(v.as_mut(), Accum::Replace, self.basis(), y.as_ref(), 1.0);
        gemm(tv.as_mut(), Accum::Replace, self.tv.as_ref().subcols(0, self.len), y.as_ref(), 1.0);
        self.v.as_mut().subcols_mut(0, p).copy_from(&v);
        self.tv.as_mut().subcols_mut(0, p).copy_from(&tv);
        self.len = p;
        let mtv = mass_block(self.mass, &tv);
        let mut hh = Mat::zeros(p, p);
        gemm(hh.as_mut(), Accum::Replace, v.as_ref().transpose(), mtv.as_ref(), 1.0);
        self.h = DMatrix::from_fn(p, p, |i, j| 0.5 * (hh[(i, j)] + hh[(j, i)]));
    }

    fn columns(&self, from: &Mat<f64>, idx: &[usize]) -> Mat<f64> {
        let mut out = Mat::zeros(self.n, idx.len());
        for (k, &i) in idx.iter().enumerate() {
            out.col_as_slice_mut(k).copy_from_slice(from.col_as_slice(i));
        }
        out
    }
}

/// Outcome of one block iteration for a fixed number of wanted pairs.
struct IterationResult {
    /// `(λ, u)` ascending in λ.
    pairs: Vec<(f64, Vec<f64>)>,
    converged: bool,
}

fn block_iteration(
    system: &AssembledSystem,
    op: &ShiftInvert,
    sigma: f64,
    nev: usize,
    opts: &EigenOptions,
) -> IterationResult {
    let n = system.n_dof;
    let b = opts.block_size.clamp(1, nev.max(1));
    let m = (opts.krylov_factor.max(2) * nev).max(nev + b).min(n);
    let mut sub = Subspace::new(system, op, m, opts.seed);
    let mut candidates = sub.random_block(b);
    let mut pairs = Vec::new();
    let mut converged = false;
    let norms = (system.stiffness.norm1(), system.mass.norm1());

    for _restart in 0..=opts.max_restarts {
        while sub.len < m {
            let before = sub.len;
            let added = sub.extend(candidates, m - before);
            if added == 0 {
                break;
            }
            candidates = sub.tv.as_ref().subcols(before, added).to_owned();
        }
        let ritz = sub.ritz();
        let want = nev.min(ritz.len());
        let x = sub.ritz_vectors(&ritz[..want]);
        pairs.clear();
        let mut unconverged = Vec::new();
        for (idx, (theta, _)) in ritz.iter().take(want).enumerate() {
            let u = x.col_as_slice(idx).to_vec();
            let lambda = sigma + 1.0 / theta;
            let res = residual_with_norms(system, norms, lambda, &u);
            if !(res <= opts.residual_tol) {
                unconverged.push(idx);
            }
            pairs.push((lambda, u));
        }
        let full = sub.len >= n;
        if unconverged.is_empty() || full {
            converged = unconverged.is_empty();
            break;
        }
        let keep = (nev + (m - nev) / 2).min(ritz.len()).max(want);
        sub.restart(&ritz[..keep]);
        let idx: Vec<usize> = unconverged.iter().copied().chain(want..keep).take(b).collect();
        candidates = sub.columns(&sub.tv, &idx);
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    IterationResult { pairs, converged }
}

/// The `k` smallest non-rigid modes by shift-invert block Lanczos.
pub fn smallest_modes(system: &AssembledSystem, k: usize, opts: &EigenOptions) -> Result<ModalModel> {
    let n = system.n_dof;
    if k == 0 || k + crate::topology::RIGID_MODES > n {
        return Err(Error::InvalidArgument(format!(
            "need 1 ≤ k and k + {} ≤ n_dof, got k = {k}, n_dof = {n}",
            crate::topology::RIGID_MODES
        )));
    }
    let sigma = default_shift(system, opts)?;
    let op = ShiftInvert::new(system, sigma)?;
    let mut nev = k + crate::topology::RIGID_MODES;
    loop {
        let result = block_iteration(system, &op, sigma, nev, opts);
        let (rigid, retained) = split_rigid(system, result.pairs, opts.rigid_tol);
        if retained.len() >= k || nev >= n {
            return finish(system, retained, rigid, k, opts, result.converged);
        }
        nev = (k + rigid + 2).min(n).max(nev + 1);
    }
}
