//! Small dense complex helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// `h h^H`.
pub fn outer(h: &CVector) -> CMatrix {
    h * h.adjoint()
}

/// Largest entrywise deviation `|A - A^H|`.
pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    let mut dev = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

pub fn trace_re(a: &CMatrix) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted in
/// descending order with matching eigenvector columns.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    hermitian_eigen(a).0.last().copied().unwrap_or(0.0)
}

/// `|a^H b|^2`.
pub fn abs_inner_sq(a: &CVector, b: &CVector) -> f64 {
    a.dotc(b).norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending() {
        let i = Complex64::i();
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(1.0, 0.0), i, -i, Complex64::new(1.0, 0.0)],
        );
        let (vals, vecs) = hermitian_eigen(&a);
        assert!((vals[0] - 2.0).abs() < 1e-12);
        assert!(vals[1].abs() < 1e-12);
        let v = vecs.column(0).into_owned();
        let av = &a * &v;
        assert!((av - v.scale(2.0)).norm() < 1e-12);
    }
}
