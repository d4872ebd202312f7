//! Complex Hermitian <-> real symmetric embedding.
//!
//! `embed(A) = [[Re A, -Im A], [Im A, Re A]]` is PSD iff `A` is, has trace
//! `2 tr(A)` and repeats every eigenvalue of `A` twice. The inverse used on
//! solver output averages the two copies,
//! `V = ((X11 + X22) + i (X21 - X12)) / 2`, which maps any real PSD matrix to
//! a Hermitian PSD one and satisfies `tr(V A) = tr(X embed(A)) / 2`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_deviation, CMatrix};

pub const HERMITIAN_TOL: f64 = 1e-10;

pub fn embed_hermitian(a: &CMatrix) -> Result<DMatrix<f64>> {
    let scale = a.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
    let dev = hermitian_deviation(a);
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(dev));
    }
    let n = a.nrows();
    let mut x = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            x[(i, j)] = z.re;
            x[(i + n, j + n)] = z.re;
            x[(i, j + n)] = -z.im;
            x[(i + n, j)] = z.im;
        }
    }
    Ok(x)
}

/// Hermitian matrix represented by a real symmetric `2n x 2n` block.
pub fn extract_hermitian(x: &DMatrix<f64>) -> CMatrix {
    let n = x.nrows() / 2;
    let mut v = CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(
            0.5 * (x[(i, j)] + x[(i + n, j + n)]),
            0.5 * (x[(i + n, j)] - x[(i, j + n)]),
        )
    });
    // exact Hermitian symmetry
    for i in 0..n {
        v[(i, i)].im = 0.0;
        for j in 0..i {
            let s = (v[(i, j)] + v[(j, i)].conj()) * 0.5;
            v[(i, j)] = s;
            v[(j, i)] = s.conj();
        }
    }
    v
}
