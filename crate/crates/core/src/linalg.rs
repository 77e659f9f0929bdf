//! Dense linear algebra glue: conversions to `faer`, Gram products and a
//! small pivoted-elimination determinant.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::channel::ComplexMatrix;
use crate::{Error, Result};

pub fn to_faer(m: &ComplexMatrix) -> Mat<Complex64> {
    Mat::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j))
}

/// `M M*`, Hermitian `rows x rows`.
pub fn gram(m: &ComplexMatrix) -> Mat<Complex64> {
    let a = to_faer(m);
    &a * a.adjoint()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &Mat<Complex64>) -> Result<Vec<f64>> {
    let values = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::NoConvergence { dim: a.nrows() })?;
    Ok(values)
}

/// Eigenpairs of a Hermitian matrix, ascending eigenvalues, together with
/// the largest residual `‖A v - λ v‖` over all pairs.
pub fn hermitian_eigen_with_residual(a: &Mat<Complex64>) -> Result<(Vec<f64>, f64)> {
    let n = a.nrows();
    let evd = a.self_adjoint_eigen(Side::Lower).map_err(|_| Error::NoConvergence { dim: n })?;
    let u = evd.U();
    let s = evd.S().column_vector();
    let values: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    let av = a * u;
    let mut max_residual = 0.0f64;
    for (j, &lambda) in values.iter().enumerate() {
        let norm_sq: f64 = (0..n).map(|i| (av[(i, j)] - u[(i, j)] * lambda).norm_sqr()).sum();
        max_residual = max_residual.max(norm_sq.sqrt());
    }
    Ok((values, max_residual))
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &Mat<f64>) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::NoConvergence { dim: a.nrows() })
}

/// Determinant of a square row-major complex matrix by Gaussian elimination
/// with partial pivoting. The slice is used as scratch space.
pub fn det_in_place(a: &mut [Complex64], n: usize) -> Complex64 {
    assert_eq!(a.len(), n * n, "det_in_place: {} entries for n = {n}", a.len());
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| a[p * n + col].norm().total_cmp(&a[q * n + col].norm()))
            .expect("non-empty pivot range");
        if a[pivot * n + col] == Complex64::new(0.0, 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        let d = a[col * n + col];
        det *= d;
        for row in col + 1..n {
            let factor = a[row * n + col] / d;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in col + 1..n {
                let sub = factor * a[col * n + k];
                a[row * n + k] -= sub;
            }
        }
    }
    det
}

pub fn det(a: &[Complex64], n: usize) -> Complex64 {
    let mut scratch = a.to_vec();
    det_in_place(&mut scratch, n)
}
