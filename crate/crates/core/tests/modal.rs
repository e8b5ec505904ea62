mod common;

use std::time::{Duration, Instant};

use common::*;
use modalforge::eigen::{dense_reference_modes, relative_residual, smallest_modes, EigenOptions, ModalModel};
use modalforge::fem::{assemble, AssembledSystem, MassMode};
use modalforge::geometry::TetMesh;
use modalforge::MaterialSpec;

fn system(mesh: &TetMesh, m: &MaterialSpec) -> AssembledSystem {
    assemble(mesh, m, MassMode::Consistent).unwrap()
}

fn first_k(sys: &AssembledSystem) -> usize {
    10.min(sys.n_dof - 6)
}

fn assert_close(a: &ModalModel, b: &ModalModel, ratio: f64, tol: f64, what: &str) {
    assert_eq!(a.eigenvalues.len(), b.eigenvalues.len(), "{what}");
    for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
        assert!(rel(*x, ratio * y) <= tol, "{what}: {x} vs {} ({:e})", ratio * y, rel(*x, ratio * y));
    }
}

#[test]
fn sparse_matches_dense_on_fixtures() {
    let opts = EigenOptions::default();
    for name in ["steel", "wood", "glass"] {
        let m = material(name);
        for (fixture, mesh) in oracle_fixtures() {
            let sys = system(&mesh, &m);
            let k = first_k(&sys);
            let t = Instant::now();
            let sparse = smallest_modes(&sys, k, &opts).unwrap();
            assert!(t.elapsed() < Duration::from_secs(30), "{fixture}");
            let dense = dense_reference_modes(&sys, k, &opts).unwrap();
            assert!(sparse.converged, "{fixture}/{name}");
            assert_eq!(sparse.rigid_count, 6, "{fixture}/{name}");
            assert_eq!(dense.rigid_count, 6, "{fixture}/{name}");
            assert_close(&sparse, &dense, 1.0, 1e-8, &format!("{fixture}/{name}"));
        }
    }
}

#[test]
fn geometry_scaling_law() {
    let m = material("steel");
    let opts = EigenOptions::default();
    for (fixture, mesh) in oracle_fixtures() {
        let base = system(&mesh, &m);
        let k = first_k(&base);
        let d0 = dense_reference_modes(&base, k, &opts).unwrap();
        let s0 = smallest_modes(&base, k, &opts).unwrap();
        for s in [0.5, 2.0, 3.0] {
            let scaled = system(&mesh.scaled(s), &m);
            let d = dense_reference_modes(&scaled, k, &opts).unwrap();
            assert_close(&d, &d0, s.powi(-2), 1e-9, &format!("{fixture} dense ×{s}"));
            let sp = smallest_modes(&scaled, k, &opts).unwrap();
            assert_close(&sp, &s0, s.powi(-2), 1e-9, &format!("{fixture} sparse ×{s}"));
        }
    }
}

#[test]
fn modulus_and_density_scaling_laws() {
    let m = material("aluminum");
    let opts = EigenOptions::default();
    for (fixture, mesh) in oracle_fixtures() {
        let d0 = dense_reference_modes(&system(&mesh, &m), first_k(&system(&mesh, &m)), &opts).unwrap();
        for (c, tol) in [(0.5, 1e-12), (2.0, 1e-12), (4.0, 1e-12), (3.7, 1e-10)] {
            let stiff = MaterialSpec { youngs_modulus: m.youngs_modulus * c, ..m.clone() };
            let heavy = MaterialSpec { density: m.density * c, ..m.clone() };
            let k = d0.eigenvalues.len();
            let de = dense_reference_modes(&system(&mesh, &stiff), k, &opts).unwrap();
            assert_close(&de, &d0, c, tol, &format!("{fixture} E×{c}"));
            let dr = dense_reference_modes(&system(&mesh, &heavy), k, &opts).unwrap();
            assert_close(&dr, &d0, 1.0 / c, tol, &format!("{fixture} ρ×{c}"));
        }
    }
}

#[test]
fn spectrum_does_not_depend_on_the_shift() {
    let sys = system(&voxel_sphere(6), &material("steel"));
    let base = smallest_modes(&sys, 12, &EigenOptions::default()).unwrap();
    let lambda1 = base.eigenvalues[0];
    for sigma in [-1e-1 * lambda1, -10.0 * lambda1, -1e3 * lambda1] {
        let opts = EigenOptions { shift: Some(sigma), ..EigenOptions::default() };
        let other = smallest_modes(&sys, 12, &opts).unwrap();
        assert!(other.converged);
        assert_close(&other, &base, 1.0, 1e-8, &format!("σ = {sigma:e}"));
    }
}

#[test]
fn lumped_mass_also_matches_dense() {
    let opts = EigenOptions::default();
    for (fixture, mesh) in oracle_fixtures() {
        let sys = assemble(&mesh, &material("copper"), MassMode::Lumped).unwrap();
        let k = first_k(&sys);
        let sparse = smallest_modes(&sys, k, &opts).unwrap();
        let dense = dense_reference_modes(&sys, k, &opts).unwrap();
        assert_eq!(sparse.rigid_count, 6, "{fixture}");
        assert_close(&sparse, &dense, 1.0, 1e-8, fixture);
    }
}

#[test]
fn returned_vectors_are_mass_orthonormal_eigenvectors() {
    let sys = system(&voxel_torus(8), &material("steel"));
    let opts = EigenOptions { keep_vectors: true, ..EigenOptions::default() };
    let modal = smallest_modes(&sys, 16, &opts).unwrap();
    let vecs = modal.eigenvectors.as_ref().unwrap();
    for (i, u) in vecs.iter().enumerate() {
        assert!(relative_residual(&sys, modal.eigenvalues[i], u) <= 1e-8);
        let mu = sys.mass.mul_vec(u);
        for (j, v) in vecs.iter().enumerate() {
            let dot: f64 = v.iter().zip(&mu).map(|(a, b)| a * b).sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((dot - expect).abs() < 1e-8, "({i}, {j}): {dot}");
        }
    }
}

#[test]
fn larger_problem_converges_with_rigid_modes_intact() {
    let sys = system(&voxel_sphere(12), &material("steel"));
    let modal = smallest_modes(&sys, 64, &EigenOptions::default()).unwrap();
    assert!(modal.converged);
    assert_eq!(modal.rigid_count, 6);
    assert_eq!(modal.eigenvalues.len(), 64);
    assert!(modal.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    assert!(modal.residuals.iter().all(|&r| r <= 1e-8));
}

#[test]
fn two_separate_pieces_expose_twelve_rigid_modes() {
    let a = block(2);
    let shifted: Vec<[f64; 3]> = a.vertices.iter().map(|p| [p[0] + 5.0, p[1], p[2]]).collect();
    let n = a.vertices.len();
    let mut vertices = a.vertices.clone();
    vertices.extend(shifted);
    let mut tets = a.tets.clone();
    tets.extend(a.tets.iter().map(|t| t.map(|v| v + n)));
    let mesh = TetMesh::new(vertices, tets).unwrap();
    let sys = system(&mesh, &material("steel"));
    let modal = smallest_modes(&sys, 6, &EigenOptions::default()).unwrap();
    let dense = dense_reference_modes(&sys, 6, &EigenOptions::default()).unwrap();
    assert_eq!(modal.rigid_count, 12);
    assert_eq!(dense.rigid_count, 12);
}

#[test]
fn invalid_requests_fail() {
    let sys = system(&single_tet(), &material("steel"));
    assert!(smallest_modes(&sys, 0, &EigenOptions::default()).is_err());
    assert!(smallest_modes(&sys, 7, &EigenOptions::default()).is_err());
    let opts = EigenOptions { shift: Some(1.0), ..EigenOptions::default() };
    assert!(smallest_modes(&sys, 3, &opts).is_err());
}
