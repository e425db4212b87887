#![allow(dead_code)]

use blockade_core::fock::{DensityMatrix, HilbertDims, Operator};
use blockade_core::{Mat, C64};

/// `exp(A)` by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &Mat<C64>) -> Mat<C64> {
    let n = a.nrows();
    let norm = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0;
    while norm / f64::powi(2.0, squarings) > 0.25 {
        squarings += 1;
    }
    let scale = C64::new(f64::powi(2.0, -squarings), 0.0);
    let a = Mat::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let mut result = Mat::<C64>::identity(n, n);
    let mut term = Mat::<C64>::identity(n, n);
    for k in 1..=24 {
        term = &term * &a;
        let inv = C64::new(1.0 / k as f64, 0.0);
        term = Mat::from_fn(n, n, |i, j| term[(i, j)] * inv);
        result = &result + &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `G G^dagger / Tr` from a flat list of real and imaginary parts.
pub fn density_from(dims: HilbertDims, raw: &[f64]) -> DensityMatrix {
    let n = dims.total();
    let g = Mat::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        C64::new(raw[k], raw[k + 1])
    });
    let m = &g * g.adjoint();
    let tr: f64 = (0..n).map(|i| m[(i, i)].re).sum();
    let op = Operator::from_fn(dims, |i, j| m[(i, j)] / tr);
    DensityMatrix::from_hermitized(&op).unwrap()
}

/// Unitary `exp(-i H)` for the Hermitian part of a flat complex matrix.
pub fn unitary_from(d: usize, raw: &[f64]) -> Mat<C64> {
    let h = Mat::from_fn(d, d, |i, j| {
        let a = C64::new(raw[2 * (i * d + j)], raw[2 * (i * d + j) + 1]);
        let b = C64::new(raw[2 * (j * d + i)], raw[2 * (j * d + i) + 1]);
        (a + b.conj()) * 0.5
    });
    expm(&Mat::from_fn(d, d, |i, j| h[(i, j)] * C64::new(0.0, -1.0)))
}

pub fn max_abs(m: &Mat<C64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}
