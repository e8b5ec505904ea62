//! Independent reference computations for the test suites.

use modalforge::geometry::{Point3, SurfaceMesh};
use nalgebra::{DMatrix, Matrix4, SMatrix, Vector4};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Barycentric coefficients from the inverse of `[1 x y z]` rows:
/// `N_a(p) = c_a0 + c_a1 x + c_a2 y + c_a3 z`.
pub fn shape_coefficients(x: &[Point3; 4]) -> (f64, Matrix4<f64>) {
    let a = Matrix4::from_fn(|r, c| if c == 0 { 1.0 } else { x[r][c - 1] });
    let vol = a.determinant() / 6.0;
    (vol.abs(), a.try_inverse().unwrap())
}

/// Engineering-strain B matrix (6 × 12), Voigt order xx yy zz yz xz xy.
pub fn b_matrix(coef: &Matrix4<f64>) -> SMatrix<f64, 6, 12> {
    let mut b = SMatrix::<f64, 6, 12>::zeros();
    for a in 0..4 {
        let (gx, gy, gz) = (coef[(1, a)], coef[(2, a)], coef[(3, a)]);
        let c = 3 * a;
        b[(0, c)] = gx;
        b[(1, c + 1)] = gy;
        b[(2, c + 2)] = gz;
        b[(3, c + 1)] = gz;
        b[(3, c + 2)] = gy;
        b[(4, c)] = gz;
        b[(4, c + 2)] = gx;
        b[(5, c)] = gy;
        b[(5, c + 1)] = gx;
    }
    b
}

pub fn d_matrix(e: f64, nu: f64) -> SMatrix<f64, 6, 6> {
    let f = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mut d = SMatrix::<f64, 6, 6>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            d[(i, j)] = f * if i == j { 1.0 - nu } else { nu };
        }
        d[(i + 3, i + 3)] = f * (1.0 - 2.0 * nu) / 2.0;
    }
    d
}

/// Degree-2 exact 4-point rule on the reference simplex (barycentric
/// points, equal weights).
pub fn quadrature_points() -> [[f64; 4]; 4] {
    let a = 0.585_410_196_624_968_5;
    let b = 0.138_196_601_125_010_5;
    [[a, b, b, b], [b, a, b, b], [b, b, a, b], [b, b, b, a]]
}

pub fn stiffness_oracle(x: &[Point3; 4], e: f64, nu: f64) -> DMatrix<f64> {
    let (vol, coef) = shape_coefficients(x);
    let b = b_matrix(&coef);
    let d = d_matrix(e, nu);
    let mut k = DMatrix::zeros(12, 12);
    for _ in quadrature_points() {
        let integrand = b.transpose() * d * b;
        k += DMatrix::from_column_slice(12, 12, integrand.as_slice()) * (vol / 4.0);
    }
    k
}

pub fn mass_oracle(x: &[Point3; 4], rho: f64) -> DMatrix<f64> {
    let (vol, _) = shape_coefficients(x);
    let mut m = DMatrix::zeros(12, 12);
    for q in quadrature_points() {
        let n = Vector4::from(q);
        for a in 0..4 {
            for b in 0..4 {
                for i in 0..3 {
                    m[(3 * a + i, 3 * b + i)] += rho * n[a] * n[b] * vol / 4.0;
                }
            }
        }
    }
    m
}

pub fn brute_chamfer(a: &[Point3], b: &[Point3]) -> f64 {
    let one_way = |from: &[Point3], to: &[Point3]| {
        let mins: Vec<f64> = from
            .iter()
            .map(|p| {
                to.iter()
                    .map(|q| {
                        let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
                        d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        mins.iter().sum::<f64>() / from.len() as f64
    };
    one_way(a, b) + one_way(b, a)
}

/// Generalized winding number by summed solid angles.
pub fn winding_number(mesh: &SurfaceMesh, p: Point3) -> f64 {
    let mut total = 0.0;
    for f in &mesh.faces {
        let [a, b, c] = f.map(|v| {
            let q = mesh.vertices[v];
            [q[0] - p[0], q[1] - p[1], q[2] - p[2]]
        });
        let la = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        let lb = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
        let lc = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        let det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0]);
        let dot = |x: Point3, y: Point3| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
        let denom = la * lb * lc + dot(a, b) * lc + dot(b, c) * la + dot(c, a) * lb;
        total += 2.0 * det.atan2(denom);
    }
    total / (4.0 * std::f64::consts::PI)
}

pub fn spectrum(samples: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

pub fn peak_bin(samples: &[f64]) -> usize {
    let s = spectrum(samples);
    (1..s.len() / 2).max_by(|&a, &b| s[a].norm().total_cmp(&s[b].norm())).unwrap()
}

/// |analytic signal| via the FFT Hilbert transform.
pub fn envelope(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let mut s = spectrum(samples);
    for (i, v) in s.iter_mut().enumerate() {
        let w = match i {
            0 => 1.0,
            i if 2 * i == n => 1.0,
            i if i < n / 2 + n % 2 => 2.0,
            _ => 0.0,
        };
        *v *= w;
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut s);
    s.iter().map(|c| c.norm() / n as f64).collect()
}

pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
